"""Finite-section analysis: eigenvalue trajectories, essential bounds, counts.

Trajectories follow lambda_k(A_n) for fixed k as n grows (top), and
lambda_{n+1-k}(A_n) (bottom). Interlacing makes the top ones nondecreasing
and the bottom ones nonincreasing. Bound estimates take the limits in the
order "first n, then k": a fixed-k trajectory whose value has stopped
moving and stands apart from the rest is a discrete eigenvalue; the first
group of trajectories that is still crawling (or that closes the list)
marks the essential bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from specgap._parallel import ordered_map
from specgap.eigensolver import eigenvalue_clusters, eigh, eigvalsh, singular_values
from specgap.errors import ContractError, InsufficientDataError, PreconditionError
from specgap.model import (
    DirectSum,
    SymbolOperator,
    as_operator,
    shifted_square,
    truncate,
)

STALL_RTOL = 1e-6
CLUSTER_RTOL = 1e-4
DEFAULT_N_LIST = (200, 400, 800, 1600)
DEFAULT_K = 8
DEFAULT_GROWTH = 1.8

TOP, BOTTOM = "top", "bottom"


@dataclass(frozen=True)
class EigenTrajectory:
    """n -> lambda_k(A_n) (top) or n -> lambda_{n+1-k}(A_n) (bottom)."""

    rank: int
    direction: str
    ns: Tuple[int, ...]
    values: Tuple[float, ...]

    @property
    def samples(self) -> List[Tuple[int, float]]:
        return list(zip(self.ns, self.values))

    @property
    def limit(self) -> float:
        return self.values[-1]

    @property
    def residual(self) -> float:
        """|lambda(n_last) - lambda(n_prev)|; nan with a single sample."""
        if len(self.values) < 2:
            return math.nan
        return abs(self.values[-1] - self.values[-2])

    def monotonicity_defect(self) -> float:
        """Largest step against the interlacing direction (0 when monotone)."""
        v = np.asarray(self.values)
        if len(v) < 2:
            return 0.0
        steps = np.diff(v) if self.direction == TOP else -np.diff(v)
        return float(max(0.0, -np.min(steps)))

    def is_monotone(self, tol: float = 1e-10) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return self.monotonicity_defect() <= tol * scale


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    n_list: Tuple[int, ...]
    k_max: int
    spectra: Dict[int, np.ndarray]  # n -> eigenvalues of A_n, descending
    top: Tuple[EigenTrajectory, ...]
    bottom: Tuple[EigenTrajectory, ...]

    @property
    def final_spectrum(self) -> np.ndarray:
        return self.spectra[self.n_list[-1]]

    def trajectory(self, direction: str, k: int) -> EigenTrajectory:
        group = self.top if direction == TOP else self.bottom
        return group[k - 1]

    def rows(self):
        """(n, k, direction, lambda, residual) rows ordered by n, direction, k."""
        out = []
        prev = None
        for n in self.n_list:
            vals = self.spectra[n]
            for direction in (TOP, BOTTOM):
                for k in range(1, min(self.k_max, len(vals)) + 1):
                    lam = _pick(vals, direction, k)
                    if prev is None or len(prev) < k:
                        res = math.nan
                    else:
                        res = abs(lam - _pick(prev, direction, k))
                    out.append((n, k, direction, lam, res))
            prev = vals
        return out


def _pick(vals, direction, k):
    return float(vals[k - 1] if direction == TOP else vals[len(vals) - k])


def _check_n_list(n_list) -> Tuple[int, ...]:
    ns = tuple(int(n) for n in n_list)
    if not ns:
        raise ContractError("n_list is empty")
    if any(n < 1 for n in ns):
        raise ContractError("truncation orders must be positive")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ContractError("n_list must be strictly increasing")
    return ns


def section_spectra(spec, n_list) -> Dict[int, np.ndarray]:
    """Descending eigenvalues of A_n for every n; solves run in parallel."""
    ns = _check_n_list(n_list)
    op = as_operator(spec)
    spectra = ordered_map(lambda n: eigvalsh(op.section(n)), ns)
    return dict(zip(ns, spectra))


def eigenvalue_trajectories(spec, n_list: Sequence[int], k_max: int) -> TrajectorySet:
    ns = _check_n_list(n_list)
    if k_max < 1:
        raise ContractError("k_max must be at least 1")
    if ns[-1] < k_max:
        raise ContractError(f"largest n ({ns[-1]}) is below k_max ({k_max})")
    return trajectories_from_spectra(section_spectra(spec, ns), k_max)


def trajectories_from_spectra(spectra: Dict[int, np.ndarray], k_max: int) -> TrajectorySet:
    """Assemble trajectories from precomputed descending spectra keyed by n."""
    ns = _check_n_list(sorted(spectra))
    groups = {}
    for direction in (TOP, BOTTOM):
        trajs = []
        for k in range(1, k_max + 1):
            pts = [(n, _pick(spectra[n], direction, k)) for n in ns if n >= k]
            trajs.append(EigenTrajectory(k, direction, tuple(p[0] for p in pts), tuple(p[1] for p in pts)))
        groups[direction] = tuple(trajs)
    return TrajectorySet(ns, int(k_max), spectra, groups[TOP], groups[BOTTOM])


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    mu_hat: float
    nu_hat: float
    mu_residual: float
    nu_residual: float
    discrete_above: List[Tuple[float, float]]
    discrete_below: List[Tuple[float, float]]
    lambda_set_sample: np.ndarray  # descending, largest n only
    stall_tol: float
    cluster_tol: float

    @property
    def has_discrete(self) -> bool:
        return bool(self.discrete_above or self.discrete_below)

    def to_dict(self):
        return {
            "mu_hat": self.mu_hat,
            "mu_residual": self.mu_residual,
            "nu_hat": self.nu_hat,
            "nu_residual": self.nu_residual,
            "discrete_above": [list(v) for v in self.discrete_above],
            "discrete_below": [list(v) for v in self.discrete_below],
            "stall_tol": self.stall_tol,
            "cluster_tol": self.cluster_tol,
        }


def _side_estimate(trajs, stall_tol, cluster_tol):
    """Walk trajectories from the extreme end; returns (bound, residual, discrete)."""
    values = [t.limit for t in trajs]
    resid = [t.residual for t in trajs]
    clusters = [[0]]
    for k in range(1, len(values)):
        if abs(values[k] - values[clusters[-1][-1]]) <= cluster_tol:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    discrete = []
    for ci, members in enumerate(clusters):
        stalled = all(resid[k] <= stall_tol for k in members)  # nan never stalls
        if stalled and ci < len(clusters) - 1:
            discrete.extend((values[k], resid[k]) for k in members)
            continue
        k0 = members[0]
        res = float(np.max([resid[k] for k in members]))
        return values[k0], res, discrete
    raise AssertionError("unreachable: the last cluster always closes the walk")


def estimate_bounds(
    trajs: TrajectorySet,
    stall_tol: Optional[float] = None,
    cluster_tol: Optional[float] = None,
) -> SpectralEstimate:
    """Estimate mu, nu and the discrete spectrum outside [nu, mu].

    Tolerances default to 1e-6 and 1e-4 times max(1, max |lambda|) at the
    largest n. Residuals are those of the trajectory heading each cluster.
    """
    if len(trajs.n_list) < 2:
        raise InsufficientDataError("need at least two truncation orders to measure residuals")
    final = trajs.final_spectrum
    scale = max(1.0, float(np.max(np.abs(final))))
    stall_tol = STALL_RTOL * scale if stall_tol is None else float(stall_tol)
    cluster_tol = CLUSTER_RTOL * scale if cluster_tol is None else float(cluster_tol)
    mu, mu_res, above = _side_estimate(trajs.top, stall_tol, cluster_tol)
    nu, nu_res, below = _side_estimate(trajs.bottom, stall_tol, cluster_tol)
    if nu > mu:
        raise InsufficientDataError(
            f"bottom estimate {nu} exceeds top estimate {mu}; increase n or reduce k_max"
        )
    return SpectralEstimate(mu, nu, mu_res, nu_res, above, below, final.copy(), stall_tol, cluster_tol)


def _count(values: np.ndarray, lo: float, hi: float) -> int:
    return int(np.count_nonzero((values > lo) & (values < hi)))


def count_in_window(spec, n: int, lo: float, hi: float) -> int:
    """Number of eigenvalues of A_n in the open interval (lo, hi)."""
    if not lo < hi:
        raise ContractError("window needs lo < hi")
    return _count(eigvalsh(truncate(spec, n)), lo, hi)


ESSENTIAL, TRANSIENT, UNDETERMINED = "Essential", "Transient", "Undetermined"


@dataclass(frozen=True)
class PointClass:
    kind: str
    window: Tuple[float, float]
    counts: Tuple[Tuple[int, int], ...]
    K: int
    growth_factor: float

    def to_dict(self):
        return {
            "kind": self.kind,
            "window": list(self.window),
            "counts": [list(c) for c in self.counts],
            "K": self.K,
            "growth_factor": self.growth_factor,
        }


def classify_counts(counts, K: int, growth_factor: float) -> str:
    """Empirical verdict on a count sequence [(n, N_n)]."""
    grows = True
    for (n0, c0), (n1, c1) in zip(counts, counts[1:]):
        needed = growth_factor ** math.log2(n1 / n0)
        if not (c1 > c0 and c1 >= needed * c0):
            grows = False
            break
    if grows:
        return ESSENTIAL
    if max(c for _, c in counts) <= K:
        return TRANSIENT
    return UNDETERMINED


def classify_point(
    spec,
    lam0: float,
    delta: float,
    n_list: Sequence[int] = DEFAULT_N_LIST,
    K: int = DEFAULT_K,
    growth_factor: float = DEFAULT_GROWTH,
    spectra: Optional[Dict[int, np.ndarray]] = None,
) -> PointClass:
    """Essential if N_n keeps growing with n, Transient if it stays <= K.

    N_n counts eigenvalues of A_n in (lam0 - delta, lam0 + delta). The
    growth test asks for at least ``growth_factor`` per doubling of n
    between every pair of consecutive orders. This is a heuristic.
    """
    if not delta > 0:
        raise ContractError("delta must be positive")
    ns = _check_n_list(n_list)
    if len(ns) < 3 or ns[-1] < 4 * ns[0]:
        raise ContractError("n_list needs >= 3 orders spanning a factor of at least 4")
    if spectra is None:
        spectra = section_spectra(spec, ns)
    lo, hi = lam0 - delta, lam0 + delta
    counts = tuple((n, _count(spectra[n], lo, hi)) for n in ns)
    kind = classify_counts(counts, K, growth_factor)
    return PointClass(kind, (lo, hi), counts, int(K), float(growth_factor))


def _band_union(spec):
    """Symbol band union when the operator has a periodic symbol part."""
    from specgap.bands import sample_bands

    op = as_operator(spec)
    if isinstance(op, DirectSum):
        op = op.tail
    if isinstance(op, SymbolOperator):
        return sample_bands(op.symbol).union
    return None


@dataclass(frozen=True)
class InGapEigenvalue:
    value: float
    gamma: float
    residual: float
    other_residual: float


def in_gap_report(spec, gap: Tuple[float, float], n: int, k_max: int = 16) -> List[InGapEigenvalue]:
    """Eigenvalues of A inside a gap of the essential spectrum, with diagnostics.

    Works on (A - lam0)^2 with lam0 the gap midpoint: a gap eigenvalue beta
    becomes a discrete value gamma = (beta - lam0)^2 below the essential
    bound ((b - a)/2)^2 of the square. Each gamma eigenspace of the
    truncated square is projected onto A_n (Rayleigh-Ritz), then the sign
    of beta = lam0 +- sqrt(gamma) is picked by the smaller residual
    ||(A - beta) u|| on a longer section that holds A u exactly.
    """
    a, b = (float(v) for v in gap)
    if not a < b:
        raise PreconditionError(f"gap ({a}, {b}) is empty")
    if n < 8:
        raise ContractError("n must be at least 8")
    lam0 = 0.5 * (a + b)
    half_sq = (0.5 * (b - a)) ** 2
    scale = max(1.0, abs(a), abs(b))

    bands = _band_union(spec)
    if bands is not None and bands.meets_open(a, b, tol=1e-9 * scale):
        raise PreconditionError(f"({a}, {b}) meets the symbol bands {bands.to_list()}")

    square = shifted_square(spec, lam0)
    ns = sorted({max(4, n // 4), max(6, n // 2), n})
    est = estimate_bounds(eigenvalue_trajectories(square, ns, min(k_max, ns[0])))
    if est.nu_hat < half_sq - 1e-6 * max(1.0, half_sq):
        raise PreconditionError(
            f"({a}, {b}) is not a gap: the square's essential bound {est.nu_hat:.6g} "
            f"is below {half_sq:.6g}"
        )
    gammas = [g for g, _ in est.discrete_below if g < half_sq]
    if not gammas:
        return []

    op = as_operator(spec)
    dec = eigh(as_operator(square).section(n))
    vals = dec.values
    a_n = op.section(n)
    m = n + 4 * op.bandwidth + 2
    a_m = op.section(m)
    res_tol = 1e-6 * max(1.0, float(np.max(np.abs(a_n))))

    # indices of the truncated square's eigenvalues belonging to each gamma
    picked = sorted({int(np.argmin(np.abs(vals - g))) for g in gammas})
    groups = eigenvalue_clusters(vals[picked], rtol=1e-8)
    found = []
    for group in groups:
        idx = [picked[g] for g in group]
        u = dec.vectors[:, idx]
        ritz = eigh(u.conj().T @ a_n @ u)
        for j in range(ritz.n):
            x = u @ ritz.vectors[:, j]
            x = x / np.linalg.norm(x)
            sq = dec.vectors[:, idx].conj().T @ x
            gamma = max(0.0, float(np.real(np.vdot(sq, vals[idx] * sq))))
            pad = np.zeros(m, dtype=np.complex128)
            pad[:n] = x
            cands = []
            for beta in (lam0 + math.sqrt(gamma), lam0 - math.sqrt(gamma)):
                cands.append((float(np.linalg.norm(a_m @ pad - beta * pad)), beta))
            cands.sort()
            (r_best, beta), (r_other, _) = cands
            if a < beta < b and r_best <= res_tol:
                found.append(InGapEigenvalue(beta, gamma, r_best, r_other))
    found.sort(key=lambda e: e.value)
    return found


def in_gap_eigenvalues(spec, gap: Tuple[float, float], n: int, k_max: int = 16) -> List[float]:
    """Discrete eigenvalues of A inside the gap, recovered through (A - lam0)^2."""
    return [e.value for e in in_gap_report(spec, gap, n, k_max)]


@dataclass(frozen=True)
class NormEstimate:
    value: float
    residual: float
    samples: Tuple[Tuple[int, float], ...]  # (k, s_k(A_nmax))


def essential_norm_estimate(spec, n_list: Sequence[int], k_list: Sequence[int]) -> NormEstimate:
    """Tail of s_k(A_n) at the largest n, as k runs through ``k_list``.

    The residual combines the last step in k with the change in n at the
    last k, so a value that has not settled in either limit says so.
    """
    ns = _check_n_list(n_list)
    ks = tuple(int(k) for k in k_list)
    if len(ns) < 2 or len(ks) < 2:
        raise InsufficientDataError("need at least two orders and two ranks")
    if any(b <= a for a, b in zip(ks, ks[1:])) or ks[0] < 1:
        raise ContractError("k_list must be increasing positive ranks")
    if ks[-1] > ns[0]:
        raise ContractError("largest k must not exceed the smallest n")
    op = as_operator(spec)
    svals = ordered_map(lambda n: singular_values(op.section(n)), ns[-2:])
    last, prev = svals[1], svals[0]
    samples = tuple((k, float(last[k - 1])) for k in ks)
    k_step = abs(samples[-1][1] - samples[-2][1])
    n_step = abs(float(last[ks[-1] - 1]) - float(prev[ks[-1] - 1]))
    return NormEstimate(samples[-1][1], max(k_step, n_step), samples)


def resolvent_convergence_check(spec, z: complex, n_list: Sequence[int]) -> List[Tuple[int, float]]:
    """(n, ||(A_n - z)^{-1}||) = (n, 1 / dist(z, sigma(A_n))) for each n."""
    z = complex(z)
    if z.imag == 0.0:
        raise ContractError("z must be non-real")
    spectra = section_spectra(spec, n_list)
    return [(n, 1.0 / float(np.min(np.abs(vals - z)))) for n, vals in spectra.items()]
