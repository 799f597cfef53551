"""One-parameter families A(x): sweeps, bound functions and gap stability.

Families vary the potential polynomially in a real x. Eigenvalues of the
sections move by at most ||A(x) - A(x')||, which for a diagonal family is
max_i |a_i(x) - a_i(x')|; sweeps check that and the interlacing
monotonicity at every grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from specgap._parallel import ordered_map
from specgap.bands import DEFAULT_GRID, sample_bands
from specgap.eigensolver import TOL, eigvalsh
from specgap.errors import ContractError, InsufficientDataError, NumericalError, PreconditionError
from specgap.model import FamilySpec, family_evaluate, horner, truncate
from specgap.truncation import (
    BOTTOM,
    TOP,
    SpectralEstimate,
    TrajectorySet,
    estimate_bounds,
    in_gap_eigenvalues,
    trajectories_from_spectra,
)


@dataclass(frozen=True, eq=False)
class SweepTable:
    x_grid: Tuple[float, ...]
    n_list: Tuple[int, ...]
    k_max: int
    trajectories: Tuple[TrajectorySet, ...]  # one per x, grid order
    lipschitz: float
    violations: List[Dict] = field(default_factory=list)

    def value(self, x_index: int, n: int, k: int, direction: str = TOP) -> float:
        vals = self.trajectories[x_index].spectra[n]
        return float(vals[k - 1] if direction == TOP else vals[len(vals) - k])

    def rows(self):
        """(x, n, k, direction, lambda) ordered by x, n, direction, k."""
        out = []
        for x, ts in zip(self.x_grid, self.trajectories):
            for n in self.n_list:
                vals = ts.spectra[n]
                for direction in (TOP, BOTTOM):
                    for k in range(1, min(self.k_max, n) + 1):
                        lam = vals[k - 1] if direction == TOP else vals[n - k]
                        out.append((x, n, k, direction, float(lam)))
        return out


def _check_grid(family: FamilySpec, x_grid) -> Tuple[float, ...]:
    xs = tuple(float(x) for x in x_grid)
    if not xs:
        raise ContractError("x_grid is empty")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ContractError("x_grid must be strictly increasing")
    for x in xs:
        family_evaluate(family, x)  # raises DomainError outside the domain
    return xs


def _potential_gap(family: FamilySpec, x: float, y: float) -> float:
    """max_i |a_i(x) - a_i(y)|, the operator-norm change of a diagonal family."""
    return max(abs(horner(row, x) - horner(row, y)) for row in family.coeffs)


def sweep(family: FamilySpec, x_grid: Sequence[float], n_list: Sequence[int], k_max: int) -> SweepTable:
    """Truncation eigenvalues of A(x) for every grid x and order n."""
    xs = _check_grid(family, x_grid)
    ns = tuple(int(n) for n in n_list)
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise ContractError("n_list must be strictly increasing positive orders")
    if k_max < 1 or k_max > ns[-1]:
        raise ContractError("k_max must lie in 1..max(n_list)")
    specs = [family_evaluate(family, x) for x in xs]
    jobs = [(i, n) for i in range(len(xs)) for n in ns]

    def solve(job):
        i, n = job
        try:
            return eigvalsh(truncate(specs[i], n))
        except NumericalError as exc:
            raise NumericalError(f"x = {xs[i]!r}, n = {n}: {exc}") from exc

    flat = ordered_map(solve, jobs)
    per_x = []
    for i in range(len(xs)):
        spectra = {n: flat[i * len(ns) + j] for j, n in enumerate(ns)}
        per_x.append(trajectories_from_spectra(spectra, min(k_max, ns[0])))

    violations = []
    for i, ts in enumerate(per_x):
        for t in ts.top + ts.bottom:
            if not t.is_monotone():
                violations.append(
                    {"kind": "monotone", "x": xs[i], "k": t.rank, "direction": t.direction,
                     "defect": t.monotonicity_defect()}
                )
    for i in range(len(xs) - 1):
        bound = _potential_gap(family, xs[i], xs[i + 1])
        for n in ns:
            a, b = per_x[i].spectra[n], per_x[i + 1].spectra[n]
            slack = 2.0 * TOL * max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b)))) * n
            excess = float(np.max(np.abs(a - b))) - bound
            if excess > slack:
                violations.append(
                    {"kind": "equicontinuity", "x": xs[i], "x_next": xs[i + 1], "n": n, "excess": excess}
                )
    return SweepTable(xs, ns, int(k_max), tuple(per_x), family.derivative_bound(), violations)


@dataclass(frozen=True)
class BoundPoint:
    x: float
    nu_hat: float
    mu_hat: float
    nu_residual: float
    mu_residual: float


@dataclass(frozen=True, eq=False)
class BoundFunctions:
    points: List[BoundPoint]
    continuity_violations: List[Dict]
    estimates: List[SpectralEstimate]

    @property
    def continuous(self) -> bool:
        return not self.continuity_violations


def essential_bound_functions(table: SweepTable) -> BoundFunctions:
    """Per-x estimates of (nu(x), mu(x)) plus a Lipschitz continuity diagnostic."""
    if len(table.n_list) < 2:
        raise InsufficientDataError("each x needs at least two truncation orders")
    points, estimates = [], []
    for x, ts in zip(table.x_grid, table.trajectories):
        try:
            est = estimate_bounds(ts)
        except InsufficientDataError as exc:
            raise InsufficientDataError(f"x = {x!r}: {exc}") from exc
        estimates.append(est)
        points.append(BoundPoint(x, est.nu_hat, est.mu_hat, est.nu_residual, est.mu_residual))
    bad = []
    L = table.lipschitz
    for p, q in zip(points, points[1:]):
        room = L * (q.x - p.x)
        if abs(q.mu_hat - p.mu_hat) > room + p.mu_residual + q.mu_residual + 1e-12:
            bad.append({"bound": "mu", "x": p.x, "x_next": q.x, "change": abs(q.mu_hat - p.mu_hat)})
        if abs(q.nu_hat - p.nu_hat) > room + p.nu_residual + q.nu_residual + 1e-12:
            bad.append({"bound": "nu", "x": p.x, "x_next": q.x, "change": abs(q.nu_hat - p.nu_hat)})
    return BoundFunctions(points, bad, estimates)


@dataclass(frozen=True)
class StabilityReport:
    gap: Tuple[float, float]
    eps: float
    distance: float
    M: float
    budget: float
    lipschitz: float
    delta: float  # inf when the family does not move
    persisted: Tuple[float, float]
    hypothesis_verified: bool
    discrete_in_gap: Tuple[float, ...] = ()

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.delta)

    def to_dict(self):
        return {
            "gap": list(self.gap),
            "eps": self.eps,
            "distance": self.distance,
            "M": self.M,
            "budget": self.budget,
            "lipschitz": self.lipschitz,
            "delta": None if self.unbounded else self.delta,
            "unbounded": self.unbounded,
            "persisted": list(self.persisted),
            "hypothesis_verified": self.hypothesis_verified,
            "discrete_in_gap": list(self.discrete_in_gap),
        }


def gap_stability_radius(
    family: FamilySpec,
    gap: Tuple[float, float],
    eps: float,
    grid_size: int = DEFAULT_GRID,
    check_n: Optional[int] = 800,
) -> StabilityReport:
    """Radius delta such that (a + eps, b - eps) stays a gap for |x| < delta.

    M = 1 / dist([a + eps, b - eps], bands of A(0)) bounds the resolvent on
    the shrunk interval; any perturbation of norm below min(1/M, eps)
    keeps it spectrum free, and ||A(x) - A(0)|| <= L |x|. The radius is a
    certified lower bound, not the true stability radius.

    With ``check_n`` set, discrete eigenvalues of A(0) inside the gap are
    searched for and listed; their absence is the hypothesis flag.
    """
    a, b = (float(v) for v in gap)
    if not a < b:
        raise PreconditionError(f"gap ({a}, {b}) is empty")
    if not 0.0 < eps < 0.5 * (b - a):
        raise ContractError(f"eps must lie in (0, {(b - a) / 2!r})")
    base = family_evaluate(family, 0.0)
    bands = sample_bands(base, grid_size).union
    scale = max(1.0, abs(a), abs(b))
    if bands.meets_open(a, b, tol=1e-9 * scale):
        raise PreconditionError(f"({a}, {b}) meets the bands of A(0): {bands.to_list()}")
    lo, hi = a + eps, b - eps
    dist = bands.distance(lo, hi)
    M = 1.0 / dist
    budget = min(1.0 / M, eps)
    L = family.derivative_bound()
    delta = math.inf if L == 0.0 else budget / L
    discrete: Tuple[float, ...] = ()
    if check_n:
        discrete = tuple(in_gap_eigenvalues(base, (a, b), int(check_n)))
    return StabilityReport((a, b), float(eps), dist, M, budget, L, delta, (lo, hi), not discrete, discrete)


def members_avoid(family: FamilySpec, xs: Sequence[float], interval, grid_size: int = DEFAULT_GRID) -> bool:
    """Do the symbol bands of A(x) miss the open interval for every x in ``xs``?"""
    lo, hi = interval
    return all(not sample_bands(family_evaluate(family, x), grid_size).union.meets_open(lo, hi) for x in xs)
