import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgap.errors import DomainError, SpecError
from specgap.model import (
    DirectSum,
    ExplicitBand,
    FamilySpec,
    JacobiSpec,
    MatrixSymbol,
    SchrodingerSpec,
    ShiftedSquare,
    SymbolOperator,
    degree_rank,
    enumerate_sites,
    family_evaluate,
    gershgorin_bounds,
    horner,
    jacobi_symbol,
    schrodinger_symbol,
    site_positions,
    truncate,
)

potentials = st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=6)
corners = st.dictionaries(st.integers(-3, 3), st.floats(-2, 2, allow_nan=False), max_size=3)


def test_centred_enumeration_and_inverse():
    sites = enumerate_sites("full", 7)
    assert sites.tolist() == [0, 1, -1, 2, -2, 3, -3]
    assert site_positions("full", sites).tolist() == list(range(7))
    assert site_positions("half", np.array([-1, 0, 4])).tolist() == [-1, 0, 4]
    with pytest.raises(SpecError):
        enumerate_sites("ring", 3)


def test_schrodinger_symbol_example():
    sym = schrodinger_symbol(SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0}))
    th = 0.7
    e = np.exp(1j * th)
    expect = np.array([[1, 1, e], [1, 2, 1], [np.conj(e), 1, 3]])
    assert np.allclose(sym.evaluate(th), expect, atol=1e-15)


def test_free_symbol_without_corner():
    sym = schrodinger_symbol(SchrodingerSpec((0.0, 0.0), {}))
    assert np.allclose(sym.evaluate(1.3), [[0, 1], [1, 0]])
    assert sym.bandwidth == 0


def test_ten_cos_symbol():
    sym = schrodinger_symbol(SchrodingerSpec((1.0, 2.0, 2.0, 1.0), {1: 5.0, -1: 5.0}))
    for th in (0.0, 1.1, np.pi):
        f = sym.evaluate(th)
        assert abs(f[0, 3] - 10 * np.cos(th)) < 1e-13
        assert np.allclose(np.diag(f).real, [1, 2, 2, 1])


def test_symbol_rejects_bad_input():
    with pytest.raises(SpecError):
        SchrodingerSpec((1.0,), {1: 1.0})
    with pytest.raises(SpecError):
        MatrixSymbol(2, {1: np.eye(2)})  # A_{-1} missing
    with pytest.raises(SpecError):
        MatrixSymbol(2, {0: np.ones((3, 3))})
    with pytest.raises(SpecError):
        SchrodingerSpec((3.0, 1.0), {1: 1.0}, ordered=True)


def test_jacobi_symbol_examples():
    free = jacobi_symbol(JacobiSpec((1.0, 1.0, 1.0), (0.0, 0.0, 0.0)))
    same = schrodinger_symbol(SchrodingerSpec((0.0, 0.0, 0.0), {1: 1.0}))
    for th in np.linspace(0, 2 * np.pi, 9):
        assert np.allclose(free.evaluate(th), same.evaluate(th))
    sym = jacobi_symbol(JacobiSpec((1.0, 2.0, 3.0), (4.0, 5.0, 6.0)))
    f = sym.evaluate(0.4)
    assert np.allclose(np.diag(f).real, [4, 5, 6])
    assert np.isclose(f[0, 1], 1) and np.isclose(f[1, 2], 2)
    assert np.isclose(f[0, 2], 3 * np.exp(0.4j))
    with pytest.raises(SpecError):
        JacobiSpec((1.0, -1.0), (0.0, 0.0))


def test_jacobi_period_two_symbol():
    sym = jacobi_symbol(JacobiSpec((1.5, 0.5), (1.0, -1.0)))
    th = 0.9
    expect = np.array([[1.0, 1.5 + 0.5 * np.exp(1j * th)], [1.5 + 0.5 * np.exp(-1j * th), -1.0]])
    assert np.allclose(sym.evaluate(th), expect)


def test_half_line_section_example():
    h = truncate(SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0}), 3)
    assert np.allclose(h, [[1, 1, 0], [1, 2, 1], [0, 1, 3]])
    assert truncate(SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0}), 1).shape == (1, 1)


def test_full_line_laplacian_section():
    h = truncate(SchrodingerSpec((0.0, 0.0), {1: 1.0}, lattice="full"), 5)
    expect = 2 * np.cos(np.pi * np.arange(1, 6) / 6)
    assert np.allclose(np.sort(np.linalg.eigvalsh(h)), np.sort(expect), atol=1e-12)


def test_section_equals_laurent_matrix_entries():
    # oracle: assemble the block Laurent matrix on sites -6..5 directly from the symbol blocks
    spec = SchrodingerSpec((1.0, -0.5, 2.0), {1: 0.7, -2: 0.3}, lattice="full")
    sym = schrodinger_symbol(spec)
    p = 3
    sites = np.arange(-6, 6)
    dense = np.zeros((len(sites), len(sites)), dtype=complex)
    for a, s in enumerate(sites):
        for b, t in enumerate(sites):
            dense[a, b] = sym.block(s // p - t // p)[s % p, t % p]
    n = 9
    order = enumerate_sites("full", n)
    idx = order - sites[0]
    assert np.allclose(truncate(spec, n), dense[np.ix_(idx, idx)])


@given(potentials, corners, st.sampled_from(["half", "full"]), st.integers(1, 25))
@settings(max_examples=60, deadline=None)
def test_sections_are_nested_and_hermitian(b, corner, lattice, n):
    spec = SchrodingerSpec(b, corner, lattice=lattice)
    big = truncate(spec, n + 1)
    assert np.allclose(big, big.conj().T)
    assert np.array_equal(truncate(spec, n), big[:n, :n])


@given(potentials, corners, st.floats(0, 2 * np.pi))
@settings(max_examples=60, deadline=None)
def test_symbol_values_are_hermitian(b, corner, th):
    f = schrodinger_symbol(SchrodingerSpec(b, corner)).evaluate(th)
    assert np.max(np.abs(f - f.conj().T)) <= 1e-14


def test_family_evaluation():
    base = SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0})
    fam = FamilySpec(base, [[1, 1], [2], [3, -1]], (-1.0, 1.0))
    assert family_evaluate(fam, 0.0).potential == (1.0, 2.0, 3.0)
    assert family_evaluate(fam, 0.5).potential == (1.5, 2.0, 2.5)
    const = FamilySpec(base, [[1], [2], [3]], (-1.0, 1.0))
    assert family_evaluate(const, 0.9).potential == family_evaluate(const, -0.3).potential
    assert const.is_constant() and const.derivative_bound() == 0.0
    with pytest.raises(DomainError):
        family_evaluate(fam, 1.5)
    with pytest.raises(SpecError):
        FamilySpec(base, [[1], [2]], (-1.0, 1.0))
    with pytest.raises(SpecError):
        FamilySpec(base, [[0], [2], [3]], (-1.0, 1.0))


@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=6), st.floats(-2, 2))
def test_horner_matches_power_sum(coeffs, x):
    direct = sum(c * x**k for k, c in enumerate(coeffs))
    assert horner(coeffs, x) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_family_derivative_bound():
    base = SchrodingerSpec((0.0, 0.0), {1: 1.0})
    fam = FamilySpec(base, [[0, 1, -2], [0, 0, 0, 1]], (-0.5, 2.0))
    # |1 - 4x| <= 1 + 4*2 on the row-one side, |3x^2| <= 12 on row two
    assert fam.derivative_bound() == pytest.approx(12.0)
    assert FamilySpec(base, [[0, 1], [0]], (-1, 1), lipschitz_bound=0.5).derivative_bound() == 0.5


def test_degree_rank_examples(diag5):
    assert degree_rank(diag5, 7) == 0
    lap = ExplicitBand.periodic({1: [1.0]})
    for n in (1, 2, 5, 12):
        assert degree_rank(lap, n) == 2
    spec = SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0})
    w = SymbolOperator(schrodinger_symbol(spec), "half").bandwidth
    for n in range(1, 10):
        assert degree_rank(spec, n) <= 2 * w


def test_explicit_band_checks():
    with pytest.raises(SpecError):
        ExplicitBand(1, lambda i, j: 1.0 if j == i + 1 else (2.0 if j == i - 1 else 0.0))
    with pytest.raises(SpecError):
        ExplicitBand.periodic({-1: [1.0]})
    with pytest.raises(SpecError):
        ExplicitBand(0, lambda i, j: 1.0).gershgorin()


def test_shifted_square_is_square_of_operator():
    spec = SchrodingerSpec((1.0, 2.0, 3.0), {1: 1.0}, lattice="full")
    op = SymbolOperator(schrodinger_symbol(spec), "full")
    sq = ShiftedSquare(op, 0.8)
    n, pad = 15, 40
    big = op.section(n + pad) - 0.8 * np.eye(n + pad)
    assert np.allclose(sq.section(n), (big @ big)[:n, :n])


def test_direct_sum_layout_and_bounds(laplacian):
    ds = DirectSum([[1.0]], laplacian)
    h = ds.section(4)
    assert h[0, 0] == 1.0 and np.allclose(h[1:, 1:], laplacian.section(3)) and h[0, 1] == 0
    lo, hi = gershgorin_bounds(ds)
    assert lo <= -2 and hi >= 2
