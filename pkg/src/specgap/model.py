"""Operator, symbol and family descriptions and their finite sections.

Every operator acts on l2 of a lattice: ``"half"`` (sites 0, 1, 2, ...) or
``"full"`` (all integers). Finite sections use a fixed, nested basis
enumeration: the natural order on the half line, and the centred order
0, 1, -1, 2, -2, ... on the full line, so that ``truncate(op, n)`` is always
the leading principal submatrix of ``truncate(op, n + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from specgap.errors import DomainError, SpecError
from specgap.eigensolver import check_hermitian, singular_values

LATTICES = ("half", "full")
SYMMETRY_TOL = 1e-12


def enumerate_sites(lattice: str, n: int) -> np.ndarray:
    """Lattice sites of the first ``n`` basis vectors."""
    if lattice == "half":
        return np.arange(n, dtype=np.int64)
    if lattice == "full":
        k = np.arange(n, dtype=np.int64)
        return np.where(k % 2 == 1, (k + 1) // 2, -(k // 2))
    raise SpecError(f"unknown lattice {lattice!r}")


def site_positions(lattice: str, sites: np.ndarray) -> np.ndarray:
    """Inverse of :func:`enumerate_sites`; -1 for sites off the lattice."""
    sites = np.asarray(sites, dtype=np.int64)
    if lattice == "half":
        return np.where(sites >= 0, sites, -1)
    return np.where(sites > 0, 2 * sites - 1, -2 * sites)


def _freeze(arr) -> np.ndarray:
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr


# ----------------------------------------------------------------------------
# matrix-valued symbols
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    """p x p Hermitian-valued trigonometric polynomial sum_k A_k e^{ik theta}.

    ``coeffs`` maps the Fourier index k to the p x p block A_k; missing
    indices are zero. A_{-k} must equal A_k^H.
    """

    block_size: int
    coeffs: Mapping[int, np.ndarray]

    def __post_init__(self):
        p = int(self.block_size)
        if p < 1:
            raise SpecError("block_size must be positive")
        frozen = {}
        for k, block in self.coeffs.items():
            block = np.asarray(block, dtype=np.complex128)
            if block.shape != (p, p):
                raise SpecError(f"coefficient A_{k} has shape {block.shape}, expected {(p, p)}")
            if not np.all(np.isfinite(block)):
                raise SpecError(f"coefficient A_{k} has non-finite entries")
            frozen[int(k)] = _freeze(block)
        zero = np.zeros((p, p), dtype=np.complex128)
        scale = max([1.0] + [float(np.max(np.abs(b))) for b in frozen.values()])
        for k, block in frozen.items():
            partner = frozen.get(-k, zero)
            if np.max(np.abs(partner - block.conj().T)) > SYMMETRY_TOL * scale:
                raise SpecError(f"A_{-k} is not the conjugate transpose of A_{k}")
        object.__setattr__(self, "block_size", p)
        object.__setattr__(self, "coeffs", MappingProxyType(frozen))

    @property
    def bandwidth(self) -> int:
        nonzero = [abs(k) for k, b in self.coeffs.items() if np.any(b)]
        return max(nonzero, default=0)

    def block(self, k: int) -> np.ndarray:
        b = self.coeffs.get(k)
        if b is None:
            return np.zeros((self.block_size, self.block_size), dtype=np.complex128)
        return b

    def dense_blocks(self) -> np.ndarray:
        """Array of shape (2N+1, p, p) holding A_{-N}, ..., A_N."""
        n = self.bandwidth
        return np.stack([self.block(k) for k in range(-n, n + 1)])

    def evaluate(self, theta):
        """f(theta); a (p, p) matrix for scalar theta, else a (G, p, p) stack."""
        th = np.asarray(theta, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        out = np.zeros((len(th), self.block_size, self.block_size), dtype=np.complex128)
        for k in sorted(self.coeffs):
            block = self.coeffs[k]
            if np.any(block):
                out += np.exp(1j * k * th)[:, None, None] * block[None]
        # exact Hermitian symmetry against rounding in the phases
        out = 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))
        return out[0] if scalar else out

    def lipschitz_bound(self) -> float:
        """Upper bound sum_k |k| ||A_k|| on ||f'(theta)||, hence on every branch slope."""
        return float(sum(abs(k) * np.linalg.norm(b, 2) for k, b in self.coeffs.items() if k))


# ----------------------------------------------------------------------------
# structured specs
# ----------------------------------------------------------------------------


def _check_lattice(lattice):
    if lattice not in LATTICES:
        raise SpecError(f"lattice must be one of {LATTICES}, got {lattice!r}")


@dataclass(frozen=True, eq=False)
class SchrodingerSpec:
    """Periodic discrete Schrodinger operator with a corner hopping term.

    ``potential`` holds b_1..b_p; ``corner`` maps k to a_k, the Fourier
    coefficients of the corner entry f(theta) = sum_k a_k e^{ik theta}.
    With ``corner = {1: 1.0}`` this is the plain nearest-neighbour chain.
    ``ordered=True`` asserts b_1 <= ... <= b_p.
    """

    potential: Sequence[float]
    corner: Mapping[int, float] = field(default_factory=dict)
    lattice: str = "half"
    ordered: Optional[bool] = None

    def __post_init__(self):
        b = tuple(float(x) for x in self.potential)
        if len(b) < 2:
            raise SpecError("period p must be at least 2")
        if not all(np.isfinite(b)):
            raise SpecError("potential must be finite")
        corner = {int(k): float(v) for k, v in dict(self.corner).items() if v != 0}
        if not all(np.isfinite(list(corner.values()))):
            raise SpecError("corner coefficients must be finite")
        _check_lattice(self.lattice)
        if self.ordered and any(b[i] > b[i + 1] for i in range(len(b) - 1)):
            raise SpecError("ordered flag set but potential is not nondecreasing")
        object.__setattr__(self, "potential", b)
        object.__setattr__(self, "corner", MappingProxyType(corner))

    @property
    def period(self) -> int:
        return len(self.potential)

    @property
    def is_ordered(self) -> bool:
        b = self.potential
        return all(b[i] <= b[i + 1] for i in range(len(b) - 1))

    def corner_function(self, theta):
        th = np.asarray(theta, dtype=float)
        return sum((a * np.exp(1j * k * th) for k, a in self.corner.items()), np.zeros_like(th, dtype=complex))

    def corner_sup_bound(self, grid_size: int = 2048) -> float:
        """Certified bound on sup |f|: grid maximum plus the modulus-of-continuity slack."""
        if not self.corner:
            return 0.0
        theta = 2.0 * np.pi * np.arange(grid_size) / grid_size
        grid_max = float(np.max(np.abs(self.corner_function(theta))))
        slack = sum(abs(k * a) for k, a in self.corner.items()) * (np.pi / grid_size)
        return grid_max + slack


@dataclass(frozen=True, eq=False)
class JacobiSpec:
    """p-periodic Jacobi operator: J[s, s] = diag[s mod p], J[s, s+1] = offdiag[s mod p].

    Lists are 0-based; ``rotation`` k picks the symbol whose unit cell
    starts at site k.
    """

    offdiag: Sequence[float]
    diag: Sequence[float]
    rotation: int = 0
    lattice: str = "full"

    def __post_init__(self):
        a = tuple(float(x) for x in self.offdiag)
        b = tuple(float(x) for x in self.diag)
        if len(a) < 2 or len(a) != len(b):
            raise SpecError("offdiag and diag must have the same length p >= 2")
        if any(x <= 0 for x in a):
            raise SpecError("Jacobi off-diagonal entries must be positive")
        if not (all(np.isfinite(a)) and all(np.isfinite(b))):
            raise SpecError("Jacobi coefficients must be finite")
        if not 0 <= int(self.rotation) < len(a):
            raise SpecError(f"rotation must lie in 0..{len(a) - 1}")
        _check_lattice(self.lattice)
        object.__setattr__(self, "offdiag", a)
        object.__setattr__(self, "diag", b)
        object.__setattr__(self, "rotation", int(self.rotation))

    @property
    def period(self) -> int:
        return len(self.diag)

    @property
    def corner_coupling(self) -> float:
        """The hopping that crosses the unit cell for this rotation."""
        p = self.period
        return self.offdiag[(self.rotation + p - 1) % p]


@dataclass(frozen=True, eq=False)
class FamilySpec:
    """Schrodinger operators whose potential entries are polynomials in x.

    ``coeffs[i]`` lists the coefficients of a_i(x) in ascending powers.
    """

    base: SchrodingerSpec
    coeffs: Sequence[Sequence[float]]
    domain: tuple
    lipschitz_bound: Optional[float] = None

    def __post_init__(self):
        coeffs = tuple(tuple(float(c) for c in row) or (0.0,) for row in self.coeffs)
        if len(coeffs) != self.base.period:
            raise SpecError(f"need {self.base.period} coefficient lists, got {len(coeffs)}")
        lo, hi = (float(v) for v in self.domain)
        if not lo <= 0.0 <= hi:
            raise SpecError("family domain must contain 0")
        at_zero = tuple(row[0] for row in coeffs)
        if not np.allclose(at_zero, self.base.potential, rtol=0, atol=1e-12):
            raise SpecError("base potential must equal the coefficient polynomials at x = 0")
        if self.lipschitz_bound is not None and not self.lipschitz_bound >= 0:
            raise SpecError("lipschitz_bound must be nonnegative")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "domain", (lo, hi))

    @property
    def period(self) -> int:
        return self.base.period

    def derivative_bound(self) -> float:
        """Certified sup over the domain of max_i |a_i'(x)|."""
        if self.lipschitz_bound is not None:
            return float(self.lipschitz_bound)
        radius = max(abs(self.domain[0]), abs(self.domain[1]))
        best = 0.0
        for row in self.coeffs:
            bound = sum(k * abs(c) * radius ** (k - 1) for k, c in enumerate(row) if k >= 1)
            best = max(best, bound)
        return best

    def is_constant(self) -> bool:
        return all(not any(row[1:]) for row in self.coeffs)


def horner(coeffs: Sequence[float], x: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def family_evaluate(family: FamilySpec, x: float) -> SchrodingerSpec:
    """The member A(x): potential (a_1(x), ..., a_p(x)), same corner and lattice."""
    lo, hi = family.domain
    if not lo <= x <= hi:
        raise DomainError(f"x = {x} outside family domain [{lo}, {hi}]")
    b = tuple(horner(row, x) for row in family.coeffs)
    base = family.base
    return SchrodingerSpec(b, dict(base.corner), base.lattice)


# ----------------------------------------------------------------------------
# symbols of the structured specs
# ----------------------------------------------------------------------------


def _tridiagonal(diag, off) -> np.ndarray:
    p = len(diag)
    t = np.diag(np.asarray(diag, dtype=np.complex128))
    for i in range(p - 1):
        t[i, i + 1] = t[i + 1, i] = off[i]
    return t


def schrodinger_symbol(spec: SchrodingerSpec) -> MatrixSymbol:
    """Tridiagonal (unit hopping) block plus f(theta) in the (1, p) corner."""
    p = spec.period
    if p < 2:
        raise SpecError("period p must be at least 2")
    ks = set(spec.corner) | {-k for k in spec.corner} | {0}
    coeffs = {}
    for k in ks:
        block = np.zeros((p, p), dtype=np.complex128)
        if k == 0:
            block += _tridiagonal(spec.potential, [1.0] * (p - 1))
        block[0, p - 1] += spec.corner.get(k, 0.0)
        block[p - 1, 0] += np.conj(spec.corner.get(-k, 0.0))
        coeffs[k] = block
    return MatrixSymbol(p, coeffs)


def jacobi_symbol(spec: JacobiSpec) -> MatrixSymbol:
    """f_k(theta): the unit cell starting at site k, corner e^{i theta} times the crossing hop."""
    p, k = spec.period, spec.rotation
    b = [spec.diag[(k + i) % p] for i in range(p)]
    a = [spec.offdiag[(k + i) % p] for i in range(p)]
    a0 = _tridiagonal(b, a[: p - 1])
    a1 = np.zeros((p, p), dtype=np.complex128)
    a1[0, p - 1] = a[p - 1]
    return MatrixSymbol(p, {0: a0, 1: a1, -1: a1.conj().T})


def unperturbed_block(spec) -> np.ndarray:
    """The constant tridiagonal matrix obtained by deleting the corner term."""
    if isinstance(spec, SchrodingerSpec):
        return _tridiagonal(spec.potential, [1.0] * (spec.period - 1)).real
    if isinstance(spec, JacobiSpec):
        p, k = spec.period, spec.rotation
        b = [spec.diag[(k + i) % p] for i in range(p)]
        a = [spec.offdiag[(k + i) % p] for i in range(p - 1)]
        return _tridiagonal(b, a).real
    raise SpecError("unperturbed block needs a Schrodinger or Jacobi spec")


# ----------------------------------------------------------------------------
# operator realisations
# ----------------------------------------------------------------------------


class BandOperator:
    """Banded self-adjoint operator on a lattice.

    Subclasses implement ``band_values(sites, d)``: the entries
    A[s, s + d] for an array of sites, ``|d| <= bandwidth``.
    """

    lattice: str = "half"
    bandwidth: int = 0
    period: Optional[int] = None
    norm_bound: Optional[float] = None

    def band_values(self, sites: np.ndarray, d: int) -> np.ndarray:
        raise NotImplementedError

    def entry(self, i: int, j: int) -> complex:
        d = j - i
        if abs(d) > self.bandwidth:
            return 0.0
        return complex(self.band_values(np.array([i]), d)[0])

    def section(self, n: int) -> np.ndarray:
        if n < 1:
            raise SpecError("truncation order must be >= 1")
        sites = enumerate_sites(self.lattice, n)
        rows = np.arange(n)
        h = np.zeros((n, n), dtype=np.complex128)
        for d in range(-self.bandwidth, self.bandwidth + 1):
            target = sites + d
            pos = site_positions(self.lattice, target)
            mask = (pos >= 0) & (pos < n)
            if np.any(mask):
                h[rows[mask], pos[mask]] = self.band_values(sites[mask], d)
        return h

    def interior_rows(self) -> np.ndarray:
        """Sites whose rows represent every row type of a periodic operator."""
        start = self.bandwidth if self.lattice == "half" else 0
        return np.arange(start, start + (self.period or 1), dtype=np.int64)

    def gershgorin(self) -> tuple:
        """Certified enclosure [m, M] of the spectrum."""
        if self.period is None:
            if self.norm_bound is None:
                raise SpecError("non-periodic band operator needs a declared norm_bound")
            return (-float(self.norm_bound), float(self.norm_bound))
        sites = self.interior_rows()
        centre = np.real(self.band_values(sites, 0))
        radius = np.zeros(len(sites))
        for d in range(-self.bandwidth, self.bandwidth + 1):
            if d:
                radius += np.abs(self.band_values(sites, d))
        return (float(np.min(centre - radius)), float(np.max(centre + radius)))


class SymbolOperator(BandOperator):
    """Block Toeplitz (half line) or Laurent (full line) operator of a symbol.

    Block row i, block column j holds A_{i-j}; scalar site s sits in block
    s // p at offset s % p.
    """

    def __init__(self, symbol: MatrixSymbol, lattice: str = "full"):
        _check_lattice(lattice)
        self.symbol = symbol
        self.lattice = lattice
        self.period = symbol.block_size
        self._n = symbol.bandwidth
        self._blocks = symbol.dense_blocks()
        p = self.period
        reach = 0
        for k in range(-self._n, self._n + 1):
            r, c = np.nonzero(self._blocks[k + self._n])
            if len(r):
                reach = max(reach, int(np.max(np.abs(k * p + r - c))))
        self.bandwidth = reach
        self.norm_bound = None

    def band_values(self, sites, d):
        p = self.period
        i, r = np.divmod(sites, p)
        j, c = np.divmod(sites + d, p)
        k = i - j
        ok = np.abs(k) <= self._n
        out = np.zeros(len(sites), dtype=np.complex128)
        out[ok] = self._blocks[k[ok] + self._n, r[ok], c[ok]]
        return out

    def __repr__(self):
        return f"SymbolOperator(p={self.period}, lattice={self.lattice!r})"


class ExplicitBand(BandOperator):
    """Band operator given by an entry rule (i, j) -> value for |i - j| <= bandwidth.

    ``entry`` must be Hermitian: entry(j, i) == conj(entry(i, j)). A
    ``period`` enables Gershgorin bounds from one period of rows; otherwise
    ``norm_bound`` must be declared.
    """

    def __init__(
        self,
        bandwidth: int,
        entry: Callable[[int, int], complex],
        lattice: str = "half",
        norm_bound: Optional[float] = None,
        period: Optional[int] = None,
    ):
        _check_lattice(lattice)
        if bandwidth < 0:
            raise SpecError("bandwidth must be nonnegative")
        self.bandwidth = int(bandwidth)
        self._entry = entry
        self.lattice = lattice
        self.norm_bound = None if norm_bound is None else float(norm_bound)
        self.period = period
        self._check_sample()

    def _check_sample(self):
        w = self.bandwidth
        span = 4 * w + 2 * (self.period or 1) + 2
        sites = range(0, span) if self.lattice == "half" else range(-span, span)
        for i in sites:
            for d in range(0, w + 1):
                j = i + d
                if self.lattice == "half" and j < 0:
                    continue
                v, u = complex(self._entry(i, j)), complex(self._entry(j, i))
                if abs(v - u.conjugate()) > SYMMETRY_TOL * max(1.0, abs(v)):
                    raise SpecError(f"entry rule is not Hermitian at ({i}, {j})")
                if self.norm_bound is not None and abs(v) > self.norm_bound * (1 + 1e-12):
                    raise SpecError(f"entry ({i}, {j}) exceeds the declared norm bound")

    def band_values(self, sites, d):
        return np.array([complex(self._entry(int(s), int(s) + d)) for s in sites], dtype=np.complex128)

    @classmethod
    def periodic(cls, diagonals: Mapping[int, Sequence[complex]], lattice: str = "half"):
        """Band with A[s, s+d] = diagonals[d][s mod L] for d >= 0 (Hermitian completion)."""
        diags = {int(d): tuple(complex(v) for v in vals) for d, vals in diagonals.items()}
        if any(d < 0 for d in diags):
            raise SpecError("give only diagonals d >= 0; the lower part is implied")
        if any(not vals for vals in diags.values()):
            raise SpecError("every diagonal needs at least one value")
        if 0 in diags and any(abs(v.imag) > 0 for v in diags[0]):
            raise SpecError("main diagonal must be real")
        period = int(np.lcm.reduce([len(v) for v in diags.values()])) if diags else 1
        width = max(diags, default=0)

        def entry(i, j):
            d = j - i
            if d >= 0:
                vals = diags.get(d)
                return vals[i % len(vals)] if vals else 0.0
            vals = diags.get(-d)
            return vals[j % len(vals)].conjugate() if vals else 0.0

        return cls(width, entry, lattice=lattice, period=period)

    def __repr__(self):
        return f"ExplicitBand(w={self.bandwidth}, lattice={self.lattice!r})"


class ShiftedSquare(BandOperator):
    """(A - shift I)^2 of a band operator, built entrywise by banded multiplication.

    Intermediate sites are summed over the lattice, so this is the
    square of the operator itself, not of its truncation.
    """

    def __init__(self, base: BandOperator, shift: float):
        self.base = base
        self.shift = float(shift)
        self.lattice = base.lattice
        self.period = base.period
        self.bandwidth = 2 * base.bandwidth
        if base.norm_bound is not None:
            self.norm_bound = (base.norm_bound + abs(self.shift)) ** 2
        else:
            self.norm_bound = None

    def band_values(self, sites, d):
        w = self.base.bandwidth
        sites = np.asarray(sites, dtype=np.int64)
        out = np.zeros(len(sites), dtype=np.complex128)
        for e in range(max(-w, d - w), min(w, d + w) + 1):
            mid = sites + e
            ok = mid >= 0 if self.lattice == "half" else np.ones(len(sites), dtype=bool)
            if np.any(ok):
                out[ok] += self.base.band_values(sites[ok], e) * self.base.band_values(mid[ok], d - e)
        if abs(d) <= w:
            out -= 2.0 * self.shift * self.base.band_values(sites, d)
        if d == 0:
            out += self.shift**2
        return out

    def gershgorin(self):
        lo, hi = self.base.gershgorin()
        top = max(abs(lo - self.shift), abs(hi - self.shift)) ** 2
        return (0.0, top)


class DirectSum:
    """Finite Hermitian block (enumerated first) plus a band operator.

    Useful to plant a known discrete eigenvalue next to a periodic operator.
    """

    def __init__(self, head, tail):
        head = check_hermitian(np.atleast_2d(np.asarray(head, dtype=np.complex128)))
        self.head = _freeze(head)
        self.tail = as_operator(tail)
        if isinstance(self.tail, DirectSum):
            raise SpecError("the tail of a direct sum must be a band operator")
        self.lattice = "direct"
        self.bandwidth = self.tail.bandwidth
        self.period = None

    def section(self, n: int) -> np.ndarray:
        if n < 1:
            raise SpecError("truncation order must be >= 1")
        m = self.head.shape[0]
        h = np.zeros((n, n), dtype=np.complex128)
        k = min(n, m)
        h[:k, :k] = self.head[:k, :k]
        if n > m:
            h[m:, m:] = self.tail.section(n - m)
        return h

    def gershgorin(self):
        lo, hi = self.tail.gershgorin()
        head = np.asarray(self.head)
        centre = np.real(np.diag(head))
        radius = np.sum(np.abs(head), axis=1) - np.abs(np.diag(head))
        return (min(lo, float(np.min(centre - radius))), max(hi, float(np.max(centre + radius))))

    def __repr__(self):
        return f"DirectSum(head={self.head.shape[0]}, tail={self.tail!r})"


def as_operator(spec):
    """Realise any accepted spec as an object with ``section(n)``."""
    if isinstance(spec, (BandOperator, DirectSum)):
        return spec
    if isinstance(spec, SchrodingerSpec):
        return SymbolOperator(schrodinger_symbol(spec), spec.lattice)
    if isinstance(spec, JacobiSpec):
        base = JacobiSpec(spec.offdiag, spec.diag, 0, spec.lattice)
        return SymbolOperator(jacobi_symbol(base), spec.lattice)
    if isinstance(spec, MatrixSymbol):
        raise SpecError("a bare MatrixSymbol needs a lattice: use SymbolOperator(symbol, lattice)")
    raise SpecError(f"unsupported operator spec {type(spec).__name__}")


def truncate(spec, n: int) -> np.ndarray:
    """The n x n section P_n A P_n in the lattice's basis enumeration."""
    if n < 1:
        raise SpecError("truncation order must be >= 1")
    return as_operator(spec).section(int(n))


def shifted_square(spec, shift: float):
    op = as_operator(spec)
    if isinstance(op, DirectSum):
        head = np.asarray(op.head) - shift * np.eye(op.head.shape[0])
        return DirectSum(head @ head, ShiftedSquare(op.tail, shift))
    return ShiftedSquare(op, shift)


def gershgorin_bounds(spec) -> tuple:
    return as_operator(spec).gershgorin()


def commutator_section(spec, n: int) -> np.ndarray:
    """P_n A - A P_n on enough basis vectors to hold every nonzero entry."""
    op = as_operator(spec)
    m = n + 2 * op.bandwidth + 2
    a = op.section(m)
    mask = (np.arange(m) < n).astype(float)
    return mask[:, None] * a - a * mask[None, :]


def degree_rank(spec, n: int, rtol: float = 1e-10) -> int:
    """Numerical rank of P_n A - A P_n (the finite-n degree)."""
    if n < 1:
        raise SpecError("n must be >= 1")
    c = commutator_section(spec, n)
    # the commutator is skew-Hermitian; i*C is Hermitian with the same singular values
    s = singular_values(1j * c)
    if len(s) == 0 or s[0] == 0.0:
        return 0
    scale = max(1.0, float(np.max(np.abs(as_operator(spec).section(n + 1)))))
    return int(np.sum(s > rtol * scale))
