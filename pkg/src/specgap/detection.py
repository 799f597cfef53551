"""Weighted-average gap detection on finite sections.

For weights w_nk (a probability vector over the eigenvalues of A_n) the
statistic c_n = sum_k w_nk lambda_nk is a point of [lambda_n, lambda_1].
If, for some delta and K, fewer than K eigenvalues of A_n fall within
delta of c_n for every n, the essential spectrum cannot fill the region
around the limit points of c_n, so it has a gap (provided sigma(A) and
sigma_ess(A) share their extreme bounds, which is checked and recorded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from specgap._parallel import ordered_map
from specgap.bands import KB1_EVIDENCE, GapCertificate
from specgap.eigensolver import EigenDecomposition, eigh, eigvalsh, spectral_weights
from specgap.errors import ContractError, InsufficientDataError
from specgap.model import as_operator
from specgap.truncation import TrajectorySet, estimate_bounds, trajectories_from_spectra

WEIGHT_TOL = 1e-10
CENTER_RTOL = 1e-3
DEFAULT_K = 8
DEFAULT_DELTAS = (0.05, 0.1, 0.2)

Rank = Union[int, str]


def parse_rank(rank) -> Rank:
    """Normalise a rank: k > 0 counts from the top, -k from the bottom,
    ``"n"`` is the lowest eigenvalue and ``"@x"`` the one nearest to x."""
    if isinstance(rank, (int, np.integer)) and not isinstance(rank, bool):
        if rank == 0:
            raise ContractError("rank 0 is not valid; use k >= 1 or -k")
        return int(rank)
    if isinstance(rank, str):
        text = rank.strip()
        if text == "n":
            return -1
        if text.startswith("@"):
            try:
                float(text[1:])
            except ValueError:
                raise ContractError(f"bad nearest-value rank {rank!r}") from None
            return text
        try:
            return parse_rank(int(text))
        except ValueError:
            raise ContractError(f"bad rank {rank!r}") from None
    raise ContractError(f"bad rank {rank!r}")


def rank_index(rank: Rank, values: np.ndarray) -> int:
    """0-based index into descending ``values`` selected by ``rank``."""
    n = len(values)
    if isinstance(rank, str):
        target = float(rank[1:])
        return int(np.argmin(np.abs(values - target)))
    k = abs(rank)
    if k > n:
        raise ContractError(f"rank {rank} exceeds the section order {n}")
    return k - 1 if rank > 0 else n - k


def _rank_label(rank: Rank) -> str:
    if isinstance(rank, str):
        return rank
    return "n" if rank == -1 else str(rank)


@dataclass(frozen=True, eq=False)
class WeightScheme:
    """How to weight the eigenvalues of A_n.

    kind is ``"uniform"``, ``"entry"`` (weights |<v_k, e_i>|^2),
    ``"twopoint"`` (t on rank l, 1 - t on rank m) or ``"explicit"``
    (a table n -> weight vector).
    """

    kind: str
    basis_index: Optional[int] = None
    t: Optional[float] = None
    rank_l: Optional[Rank] = None
    rank_m: Optional[Rank] = None
    table: Optional[Mapping[int, np.ndarray]] = None
    predicted_limit: Optional[float] = None

    def __post_init__(self):
        if self.kind == "uniform":
            return
        if self.kind == "entry":
            if self.basis_index is None or int(self.basis_index) < 1:
                raise ContractError("entry scheme needs a basis index >= 1")
            return
        if self.kind == "twopoint":
            if self.t is None or not 0.0 < self.t < 1.0:
                raise ContractError("two-point weight t must lie in (0, 1)")
            object.__setattr__(self, "rank_l", parse_rank(self.rank_l))
            object.__setattr__(self, "rank_m", parse_rank(self.rank_m))
            return
        if self.kind == "explicit":
            if not self.table:
                raise ContractError("explicit scheme needs a weight table")
            return
        raise ContractError(f"unknown weight scheme {self.kind!r}")

    @property
    def needs_vectors(self) -> bool:
        return self.kind == "entry"

    @property
    def label(self) -> str:
        if self.kind == "entry":
            return f"entry:{self.basis_index}"
        if self.kind == "twopoint":
            return f"twopoint:{self.t!r}:{_rank_label(self.rank_l)}:{_rank_label(self.rank_m)}"
        return self.kind

    def weights(self, decomp: EigenDecomposition) -> np.ndarray:
        n = decomp.n
        if self.kind == "uniform":
            return np.full(n, 1.0 / n)
        if self.kind == "entry":
            return spectral_weights(decomp, int(self.basis_index))
        if self.kind == "twopoint":
            il = rank_index(self.rank_l, decomp.values)
            im = rank_index(self.rank_m, decomp.values)
            if il == im:
                raise ContractError(f"ranks {self.rank_l} and {self.rank_m} pick the same eigenvalue")
            w = np.zeros(n)
            w[il], w[im] = self.t, 1.0 - self.t
            return w
        row = self.table.get(n)
        if row is None:
            raise ContractError(f"explicit weight table has no row for n = {n}")
        row = np.asarray(row, dtype=float)
        if row.shape != (n,):
            raise ContractError(f"weight row for n = {n} has shape {row.shape}")
        return row


def uniform() -> WeightScheme:
    return WeightScheme("uniform")


def spectral_entry(i: int) -> WeightScheme:
    return WeightScheme("entry", basis_index=int(i))


def parse_scheme(text: str) -> WeightScheme:
    """``uniform``, ``entry:I`` or ``twopoint:T:L:M``."""
    parts = text.split(":")
    try:
        if parts[0] == "uniform" and len(parts) == 1:
            return uniform()
        if parts[0] == "entry" and len(parts) == 2:
            return spectral_entry(int(parts[1]))
        if parts[0] == "twopoint" and len(parts) == 4:
            return WeightScheme("twopoint", t=float(parts[1]), rank_l=parts[2], rank_m=parts[3])
    except ValueError as exc:
        raise ContractError(f"bad scheme {text!r}: {exc}") from None
    raise ContractError(f"bad scheme {text!r}; expected uniform, entry:I or twopoint:T:L:M")


def _check_weights(w: np.ndarray):
    if np.any(w < -WEIGHT_TOL) or np.any(w > 1.0 + WEIGHT_TOL):
        raise ContractError("weights must lie in [0, 1]")
    total = float(np.sum(w))
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ContractError(f"weights sum to {total!r}, not 1")


def weighted_statistic(decomp: EigenDecomposition, scheme: WeightScheme) -> float:
    """c_n = sum_k w_nk lambda_nk, a convex combination of the eigenvalues."""
    w = scheme.weights(decomp)
    _check_weights(w)
    c = float(np.dot(w, decomp.values))
    # rounding can push the convex combination a hair outside the hull
    return min(max(c, float(decomp.values[-1])), float(decomp.values[0]))


def two_point_weights(trajs: TrajectorySet, t: float, rank_l, rank_m) -> WeightScheme:
    """Two-point scheme whose statistic tends to t * lim(l) + (1 - t) * lim(m).

    Integer ranks must lie within the computed trajectories; nearest-value
    ranks ``"@x"`` are read off the largest section.
    """
    if not 0.0 < t < 1.0:
        raise ContractError("two-point weight t must lie in (0, 1)")
    limits = []
    for rank in (parse_rank(rank_l), parse_rank(rank_m)):
        if isinstance(rank, int) and abs(rank) > trajs.k_max:
            raise ContractError(f"rank {rank} beyond the computed k_max = {trajs.k_max}")
        final = trajs.final_spectrum
        limits.append(float(final[rank_index(rank, final)]))
    predicted = t * limits[0] + (1.0 - t) * limits[1]
    return WeightScheme("twopoint", t=float(t), rank_l=rank_l, rank_m=rank_m, predicted_limit=predicted)


EVIDENCE_FOUND, NO_EVIDENCE = "EvidenceFound", "NoEvidence"


@dataclass(frozen=True, eq=False)
class GapEvidence:
    scheme: WeightScheme
    delta: float
    K: int
    statistic: Tuple[Tuple[int, float], ...]
    counts: Tuple[Tuple[int, int], ...]
    verdict: str
    centers: List[float]
    hypothesis_verified: bool
    candidates: List[Tuple[float, float]] = field(default_factory=list)
    mu_hat: float = math.nan
    nu_hat: float = math.nan

    @property
    def found(self) -> bool:
        return self.verdict == EVIDENCE_FOUND

    def certificates(self) -> List[GapCertificate]:
        """Candidate intervals as evidence-grade certificates (never claims no discrete values)."""
        params = {"delta": self.delta, "K": self.K, "scheme": self.scheme.label}
        return [GapCertificate(c, KB1_EVIDENCE, params) for c in self.candidates]

    def to_dict(self):
        return {
            "scheme": self.scheme.label,
            "delta": self.delta,
            "K": self.K,
            "counts": [list(c) for c in self.counts],
            "statistic": [list(s) for s in self.statistic],
            "verdict": self.verdict,
            "centers": list(self.centers),
            "candidates": [list(c) for c in self.candidates],
            "hypothesis_verified": self.hypothesis_verified,
            "mu_hat": self.mu_hat,
            "nu_hat": self.nu_hat,
        }


def limit_points(values: Sequence[float], rtol: float = CENTER_RTOL) -> List[float]:
    """Cluster the tail (last half) of a sequence; one centre per cluster."""
    vals = np.asarray(values, dtype=float)
    if len(vals) == 0:
        return []
    tail = np.sort(vals[len(vals) // 2:])
    tol = rtol * max(1.0, float(np.max(np.abs(tail))))
    groups = [[tail[0]]]
    for v in tail[1:]:
        if v - groups[-1][-1] <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [float(np.mean(g)) for g in groups]


@dataclass(frozen=True, eq=False)
class SectionData:
    """Eigendecompositions of A_n over an n_list, shared across (delta, K) runs."""

    n_list: Tuple[int, ...]
    decomps: Dict[int, EigenDecomposition]

    @property
    def spectra(self) -> Dict[int, np.ndarray]:
        return {n: d.values for n, d in self.decomps.items()}


def section_data(spec, n_list: Sequence[int], vectors: bool = True) -> SectionData:
    ns = tuple(int(n) for n in n_list)
    if len(ns) < 2:
        raise InsufficientDataError("gap detection needs at least two truncation orders")
    if any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise ContractError("n_list must be strictly increasing positive orders")
    op = as_operator(spec)

    def solve(n):
        h = op.section(n)
        if vectors:
            return eigh(h)
        return EigenDecomposition(eigvalsh(h), np.zeros((0, 0)))

    return SectionData(ns, dict(zip(ns, ordered_map(solve, ns))))


def kb1_criterion(
    spec,
    scheme: WeightScheme,
    delta: float,
    K: int,
    n_list: Sequence[int],
    k_max: int = 8,
    data: Optional[SectionData] = None,
) -> GapEvidence:
    """Count eigenvalues within delta of c_n for every n; evidence iff all counts < K."""
    if not delta > 0:
        raise ContractError("delta must be positive")
    if K < 1:
        raise ContractError("K must be at least 1")
    if not isinstance(scheme, WeightScheme):
        raise ContractError("scheme must be a WeightScheme")
    if data is None:
        data = section_data(spec, n_list, vectors=scheme.needs_vectors)
    ns = data.n_list
    statistic, counts = [], []
    for n in ns:
        dec = data.decomps[n]
        c = weighted_statistic(dec, scheme)
        statistic.append((n, c))
        counts.append((n, int(np.count_nonzero(np.abs(dec.values - c) < delta))))

    est = estimate_bounds(trajectories_from_spectra(data.spectra, min(k_max, ns[0])))
    hypothesis = not est.has_discrete
    found = all(c < K for _, c in counts)
    centers = limit_points([c for _, c in statistic])
    candidates = []
    if found:
        for c in centers:
            eps = min(delta / 2.0, c - est.nu_hat, est.mu_hat - c)
            if eps > 0:
                candidates.append((c - eps, c + eps))
    return GapEvidence(
        scheme,
        float(delta),
        int(K),
        tuple(statistic),
        tuple(counts),
        EVIDENCE_FOUND if found else NO_EVIDENCE,
        centers,
        hypothesis,
        candidates,
        est.mu_hat,
        est.nu_hat,
    )


def delta_grid(scale: float) -> List[float]:
    """Default delta values when none is given."""
    return [d * scale for d in DEFAULT_DELTAS]
