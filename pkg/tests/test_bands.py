import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BANDS_123
from specgap.bands import (
    PERTURBATION_BOUND,
    SYMBOL_EXACT,
    GapCertificate,
    borg_check,
    gaps,
    interlace_submatrices,
    perturbation_certificate,
    sample_bands,
    symbol_exact_certificates,
)
from specgap.errors import SpecError
from specgap.intervals import IntervalUnion
from specgap.model import JacobiSpec, MatrixSymbol, SchrodingerSpec, schrodinger_symbol

S123 = SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0})
TEN_COS = SchrodingerSpec((1.0, 2.0, 2.0, 1.0), {1: 5.0, -1: 5.0})


def _edges_at_zero_and_pi(spec):
    """Oracle for nearest-neighbour chains: branch extrema sit at theta = 0 and pi."""
    sym = schrodinger_symbol(spec)
    ends = np.stack([np.linalg.eigvalsh(sym.evaluate(t))[::-1] for t in (0.0, np.pi)])
    return np.sort(ends, axis=0)[::-1].T  # branch j: (value at one end, other end)


def test_three_band_example():
    bands = sample_bands(S123, 2048)
    assert len(bands.union) == 3
    for (lo, hi), (plo, phi) in zip(bands.union, BANDS_123):
        assert abs(lo - plo) < 1e-3 and abs(hi - phi) < 1e-3
    # frozen oracle: eigenvalues of the symbol at theta = 0 and pi
    oracle = sorted(tuple(sorted(e)) for e in _edges_at_zero_and_pi(S123))
    assert np.allclose(sorted(map(tuple, bands.union.to_list())), oracle, atol=1e-9)
    assert np.allclose(gaps(bands), [(0.3248691, 1.4608111), (2.5391889, 3.6751309)], atol=1e-6)


def test_nonnegative_corner_opens_gap():
    b = 0.5
    # [[b, 1 + f], [1 + f, b]] with f = 1 + cos(theta) >= 0
    a0 = np.array([[b, 2.0], [2.0, b]])
    a1 = np.array([[0.0, 0.5], [0.5, 0.0]])
    bands = sample_bands(MatrixSymbol(2, {0: a0, 1: a1, -1: a1}), 512)
    assert np.allclose(bands.union.to_list(), [[b - 3, b - 1], [b + 1, b + 3]], atol=1e-9)
    (g,) = bands.gaps()
    assert g[0] < b < g[1]


def test_ten_cos_counterexample_is_connected():
    bands = sample_bands(TEN_COS, 2048)
    assert bands.connected
    at = {0.0: [11.123, 2.877, 1.099, -9.099], np.pi: [11.099, 3.083, 0.901, -9.083]}
    for th, expect in at.items():
        i = int(np.argmin(np.abs(bands.theta - th)))
        assert np.allclose(bands.values[i], expect, atol=1e-3)


def test_ten_cos_closed_forms():
    bands = sample_bands(TEN_COS, 256)
    c = np.cos(bands.theta)
    r1 = np.sqrt(25 * c**2 - 10 * c + 2)
    r2 = np.sqrt(25 * c**2 + 1)
    closed = np.stack([2 + 5 * c + r1, 2 + 5 * c - r1, 1 - 5 * c + r2, 1 - 5 * c - r2], axis=1)
    assert np.allclose(np.sort(closed, axis=1)[:, ::-1], bands.values, atol=1e-9)


def test_jacobi_rotations_share_bands():
    spec = dict(offdiag=(1.0, 2.0, 0.5), diag=(0.0, 1.0, -1.0))
    u0 = sample_bands(JacobiSpec(**spec, rotation=0), 1024).union
    u1 = sample_bands(JacobiSpec(**spec, rotation=1), 1024).union
    assert np.allclose(u0.to_list(), u1.to_list(), atol=1e-10)


def test_gaps_of_simple_unions():
    assert gaps(IntervalUnion([(0, 1)])) == []
    assert gaps(IntervalUnion([(0, 1), (1, 2)])) == []
    with pytest.raises(SpecError):
        gaps(IntervalUnion())


def test_symbol_exact_certificates_cover_gaps():
    bands = sample_bands(S123, 1024)
    certs = symbol_exact_certificates(bands)
    assert [c.interval for c in certs] == bands.gaps()
    assert all(c.method == SYMBOL_EXACT for c in certs)
    with pytest.raises(SpecError):
        GapCertificate((1.0, 1.0), SYMBOL_EXACT)


def test_small_grid_rejected():
    with pytest.raises(SpecError):
        sample_bands(S123, 8)


@pytest.mark.parametrize(
    "spec, connected, constant",
    [
        (SchrodingerSpec((2.0, 2.0, 2.0), {1: 1.0}), True, True),
        (SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0}, ordered=True), False, False),
        (TEN_COS, True, False),
    ],
)
def test_borg_examples(spec, connected, constant):
    r = borg_check(spec, 1024)
    assert (r.connected, r.diagonal_constant, r.consistent) == (connected, constant, True)


def test_interlace_examples():
    r = interlace_submatrices(SchrodingerSpec((2.0, 2.0, 2.0), {1: 1.0}))
    assert r.all_equal and np.allclose(r.eigs_p1, [3, 1]) and r.gaps == []
    r = interlace_submatrices(S123)
    assert not r.all_equal
    assert r.eigs_p1.sum() == pytest.approx(3) and r.eigs_p2.sum() == pytest.approx(5)
    bands = sample_bands(S123, 2048).union
    for a, b in r.gaps:
        assert not bands.meets_open(a, b, tol=1e-9)


def test_interlace_rejects_wide_symbols():
    a1 = np.zeros((3, 3))
    a1[0, 1] = 1.0
    with pytest.raises(SpecError):
        interlace_submatrices(MatrixSymbol(3, {0: np.eye(3), 1: a1, -1: a1.T}))


def test_constant_diagonal_interlace_is_equal(rng):
    for _ in range(100):
        p = int(rng.integers(2, 8))
        c = float(rng.uniform(-5, 5))
        corner = {int(k): float(rng.uniform(-2, 2)) for k in rng.integers(-3, 4, size=2)}
        assert interlace_submatrices(SchrodingerSpec([c] * p, corner)).all_equal


def test_certificate_two_site_example():
    rep = perturbation_certificate(SchrodingerSpec((0.0, 10.0), {1: 1.0}), 2048)
    assert np.allclose(rep.eigenvalues, [5 + np.sqrt(26), 5 - np.sqrt(26)])
    # the sup bound carries the grid slack: rho slightly above the true 1
    assert 1.0 <= rep.rho <= 1.0 + np.pi / 2048 + 1e-12
    (cert,) = rep.certificates
    assert cert.method == PERTURBATION_BOUND
    lo, hi = cert.interval
    assert 0.901 <= lo < 0.91 and 9.09 < hi <= 9.099
    assert not sample_bands(SchrodingerSpec((0.0, 10.0), {1: 1.0}), 2048).union.meets_open(lo, hi)


def test_certificate_none_for_large_or_constant_corner():
    assert perturbation_certificate(TEN_COS).certificates == []
    for p in range(2, 7):
        assert perturbation_certificate(SchrodingerSpec([0.5] * p, {1: 1.0})).certificates == []


def test_jacobi_certificate_uses_crossing_hop():
    spec = JacobiSpec((1.0, 0.2), (0.0, 5.0))
    rep = perturbation_certificate(spec)
    assert rep.rho == 0.2
    bands = sample_bands(spec).union
    for c in rep.certificates:
        assert not bands.meets_open(*c.interval)


specs = st.builds(
    lambda b, corner: SchrodingerSpec(sorted(b), corner),
    st.lists(st.floats(-4, 4, allow_nan=False), min_size=2, max_size=5),
    st.dictionaries(st.integers(-3, 3), st.floats(-1.5, 1.5, allow_nan=False), max_size=3),
)


@given(specs)
@settings(max_examples=40, deadline=None)
def test_bands_inside_inclusion_and_certificates_sound(spec):
    bands = sample_bands(spec, 1024)
    rep = perturbation_certificate(spec, 1024)
    assert bands.union.is_subset_of(rep.inclusion, tol=1e-9)
    for c in rep.certificates:
        assert not bands.union.meets_open(*c.interval)
    assert borg_check(spec, 512).consistent


@given(specs, st.floats(0, 2 * np.pi))
@settings(max_examples=40, deadline=None)
def test_pointwise_eigenvalues_lie_in_bands(spec, th):
    bands = sample_bands(spec, 512)
    for lam in np.linalg.eigvalsh(schrodinger_symbol(spec).evaluate(th)):
        assert bands.union.contains(lam, tol=1e-9 * max(1.0, abs(lam)))
