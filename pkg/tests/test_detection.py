import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BANDS_123, random_hermitian
from specgap.bands import KB1_EVIDENCE, sample_bands
from specgap.detection import (
    EVIDENCE_FOUND,
    NO_EVIDENCE,
    WeightScheme,
    delta_grid,
    kb1_criterion,
    limit_points,
    parse_rank,
    parse_scheme,
    rank_index,
    section_data,
    spectral_entry,
    two_point_weights,
    uniform,
    weighted_statistic,
)
from specgap.eigensolver import eigh
from specgap.errors import ContractError
from specgap.truncation import eigenvalue_trajectories


def test_statistic_examples(rng):
    assert weighted_statistic(eigh(np.diag([1.0, 2.0, 3.0])), uniform()) == pytest.approx(2.0)
    h = random_hermitian(rng, 9)
    assert weighted_statistic(eigh(h), spectral_entry(1)) == pytest.approx(h[0, 0].real, abs=1e-12)
    d = eigh(np.diag(np.linspace(4, 0, 6)))
    assert weighted_statistic(d, WeightScheme("twopoint", t=0.5, rank_l=1, rank_m="n")) == pytest.approx(2.0)


@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_entry_statistic_is_diagonal_entry(n, i, seed):
    if i > n:
        return
    h = random_hermitian(np.random.default_rng(seed), n)
    c = weighted_statistic(eigh(h), spectral_entry(i))
    assert abs(c - h[i - 1, i - 1].real) <= 1e-10 * max(1.0, np.abs(h).max())


def test_rank_parsing():
    assert parse_rank(3) == 3 and parse_rank("n") == -1 and parse_rank("-2") == -2
    assert parse_rank("@0.5") == "@0.5"
    vals = np.array([5.0, 3.0, 1.0, -1.0])
    assert rank_index(1, vals) == 0 and rank_index(-1, vals) == 3 and rank_index("@0.8", vals) == 2
    for bad in (0, "x", "@a", 1.5):
        with pytest.raises(ContractError):
            parse_rank(bad)
    with pytest.raises(ContractError):
        rank_index(7, vals)


def test_scheme_parsing_and_labels():
    assert parse_scheme("uniform").label == "uniform"
    assert parse_scheme("entry:3").label == "entry:3"
    s = parse_scheme("twopoint:0.25:1:n")
    assert s.t == 0.25 and s.rank_l == 1 and s.rank_m == -1
    for bad in ("entry", "entry:0", "twopoint:0:1:2", "twopoint:1.5:1:2", "box"):
        with pytest.raises(ContractError):
            parse_scheme(bad)


def test_explicit_weights_checked():
    d = eigh(np.diag([1.0, 0.0]))
    good = WeightScheme("explicit", table={2: np.array([0.25, 0.75])})
    assert weighted_statistic(d, good) == pytest.approx(0.25)
    with pytest.raises(ContractError):
        weighted_statistic(d, WeightScheme("explicit", table={2: np.array([0.5, 0.6])}))
    with pytest.raises(ContractError):
        weighted_statistic(d, WeightScheme("explicit", table={3: np.ones(3) / 3}))


def test_same_rank_twice_rejected():
    d = eigh(np.diag([2.0, 1.0]))
    with pytest.raises(ContractError):
        weighted_statistic(d, WeightScheme("twopoint", t=0.5, rank_l=2, rank_m="n"))


def test_limit_points():
    assert limit_points([]) == []
    assert limit_points([5, 1.0, 1.0000001, 2.0, 2.0]) == pytest.approx([1.0000000333, 2.0])


def test_kb1_fires_on_three_band_operator(s123):
    ev = kb1_criterion(s123, spectral_entry(1), 0.1, 8, (200, 400, 800, 1600))
    assert ev.verdict == EVIDENCE_FOUND and ev.found
    assert len(ev.centers) == 1 and abs(ev.centers[0] - 1.0) < 0.05
    counts = [c for _, c in ev.counts]
    assert all(b <= a for a, b in zip(counts, counts[1:]))
    (lo, hi), = ev.candidates
    assert lo < 1.0 < hi and hi - lo <= 0.1 + 1e-12
    bands = sample_bands(s123).union
    assert not bands.meets_open(lo, hi)
    (cert,) = ev.certificates()
    assert cert.method == KB1_EVIDENCE


def test_kb1_silent_on_laplacian(laplacian):
    ev = kb1_criterion(laplacian, uniform(), 0.1, 8, (200, 400, 800))
    assert ev.verdict == NO_EVIDENCE and ev.candidates == []
    counts = [c for _, c in ev.counts]
    assert counts[-1] > counts[0] and counts[-1] >= 8


def test_kb1_identity(identity):
    for scheme in (uniform(), spectral_entry(1), WeightScheme("twopoint", t=0.5, rank_l=1, rank_m="n")):
        ev = kb1_criterion(identity, scheme, 0.5, 3, (10, 20))
        assert ev.verdict == NO_EVIDENCE
        assert [c for _, c in ev.counts] == [10, 20]


def test_two_point_converse_check(s123_full):
    ns = (200, 400, 800, 1600)
    data = section_data(s123_full, ns, vectors=False)
    trajs = eigenvalue_trajectories(s123_full, ns, 4)
    a, b = BANDS_123[0][1], BANDS_123[1][0]
    scheme = two_point_weights(trajs, 0.5, f"@{a}", f"@{b}")
    assert abs(scheme.predicted_limit - 0.89285) < 1e-3
    ev = kb1_criterion(s123_full, scheme, 0.2, 8, ns, data=data)
    assert ev.found and abs(ev.centers[0] - 0.89285) < 1e-3
    with pytest.raises(ContractError):
        two_point_weights(trajs, 0.0, 1, 2)
    with pytest.raises(ContractError):
        two_point_weights(trajs, 0.5, 1, 9)


def test_contracts(s123):
    with pytest.raises(ContractError):
        kb1_criterion(s123, uniform(), 0.0, 8, (10, 20))
    with pytest.raises(ContractError):
        kb1_criterion(s123, uniform(), 0.1, 0, (10, 20))
    with pytest.raises(ContractError):
        kb1_criterion(s123, "uniform", 0.1, 8, (10, 20))
    assert delta_grid(2.0) == [0.1, 0.2, 0.4]
