from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from twinrecover.estimators import (
    DiscreteTable,
    EstimationError,
    GaussianSpec,
    Grid,
    GriddedDensity,
    UnsupportedStratum,
    auto_bins,
    biased_continuous,
    biased_discrete,
    density_of_gaussian,
    kde_on_grid,
    quantile_edges,
    recover_continuous,
    recover_discrete,
    relative_error,
    silverman_bandwidth,
    theoretical_gaussian,
)
from twinrecover.fixtures import TRIAL_COUNTS, trial_table

HALF = DiscreteTable.from_rows(("z",), [(0, 1), (1, 1)])


def oracle_recovery(counts, x):
    """P(Y=1|do(x)) by hand: average over z of the stratum success rate."""
    total = Fraction(0)
    for z in (0, 1):
        ones = sum(c for (xx, w, zz, y, c) in counts if xx == x and zz == z and y == 1)
        alls = sum(c for (xx, w, zz, y, c) in counts if xx == x and zz == z)
        total += Fraction(ones, alls) / 2
    return total


@pytest.mark.parametrize("x", [0, 1])
def test_discrete_matches_oracle(x):
    rec = recover_discrete(trial_table(), HALF, x)
    assert rec[(1,)] == oracle_recovery(TRIAL_COUNTS, x)
    assert rec[(0,)] + rec[(1,)] == 1


def test_discrete_stratum_values():
    assert recover_discrete(trial_table(), HALF, 1)[(1,)] == Fraction(1, 2) * (Fraction(304, 322) + Fraction(484, 703))
    assert recover_discrete(trial_table(), HALF, 0)[(1,)] == Fraction(1, 2) * (Fraction(241, 295) + Fraction(290, 709))


def test_biased_discrete_exact():
    assert biased_discrete(trial_table(), 1)[(1,)] == Fraction(788, 1025)
    assert biased_discrete(trial_table(), 0)[(1,)] == Fraction(531, 1004)


def test_missing_stratum():
    t = DiscreteTable.from_rows(("x", "z", "y"), [(1, 0, 1, 3), (1, 0, 0, 1), (0, 1, 1, 2)])
    with pytest.raises(UnsupportedStratum, match="z"):
        recover_discrete(t, HALF, 1)


def test_strata_must_be_in_biased_table():
    ext = DiscreteTable.from_rows(("q",), [(0, 1)])
    with pytest.raises(EstimationError):
        recover_discrete(trial_table(), ext, 1)


def test_relative_error():
    assert relative_error(0.5, 0.4) == pytest.approx(0.25)
    with pytest.raises(ZeroDivisionError):
        relative_error(0.1, 0)


def test_table_csv_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("x,z,y,count\n" + "".join(f"{x},{z},{y},{c}\n" for x, w, z, y, c in TRIAL_COUNTS))
    t = DiscreteTable.read_csv(path)
    assert t.variables == ("x", "z", "y")
    assert t.total == sum(c for *_, c in TRIAL_COUNTS)
    assert recover_discrete(t, HALF, 1)[(1,)] == oracle_recovery(TRIAL_COUNTS, 1)
    ext = tmp_path / "e.csv"
    ext.write_text("z,p\n0,0.5\n1,0.5\n")
    assert DiscreteTable.read_csv(ext).weights == {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}


def test_table_rejects_negative():
    with pytest.raises(ValueError):
        DiscreteTable.from_rows(("a",), [(0, -1)])


@given(st.lists(st.integers(1, 50), min_size=8, max_size=8), st.fractions(min_value=Fraction(1, 20), max_value=Fraction(19, 20)))
def test_uniform_selection_gives_plain_conditional(counts, pz):
    # when S does not depend on z, adjustment with the cohort's own P(z) is the biased estimate
    rows = [(x, z, y, c) for (x, z, y), c in zip([(a, b, d) for a in (0, 1) for b in (0, 1) for d in (0, 1)], counts)]
    t = DiscreteTable.from_rows(("x", "z", "y"), rows)
    own = t.select(x=1).marginal(["z"])
    assert recover_discrete(t, own, 1) == biased_discrete(t, 1)
    ext = DiscreteTable.from_rows(("z",), [(0, 1 - pz), (1, pz)])
    rec = recover_discrete(t, ext, 1)
    assert rec.total == 1
    lo = min(Fraction(sum(c for xx, zz, y, c in rows if xx == 1 and zz == z and y == 1),
                      sum(c for xx, zz, y, c in rows if xx == 1 and zz == z)) for z in (0, 1))
    hi = max(Fraction(sum(c for xx, zz, y, c in rows if xx == 1 and zz == z and y == 1),
                      sum(c for xx, zz, y, c in rows if xx == 1 and zz == z)) for z in (0, 1))
    assert lo <= rec[(1,)] <= hi


# -- continuous ----------------------------------------------------------------


def test_theoretical_gaussian():
    truth = theoretical_gaussian(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1)
    assert truth.mean == 2.0 and truth.variance == 3.0
    assert theoretical_gaussian(2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0).mean == 0.0


def test_density_of_gaussian():
    truth = GaussianSpec(1.0, 4.0)
    d = density_of_gaussian(truth, truth.default_grid())
    assert d.mass == pytest.approx(1.0, abs=1e-6)
    assert d.mean() == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        density_of_gaussian(truth, Grid(-1, 3, 64))


def test_silverman():
    x = np.random.default_rng(0).standard_normal(1000)
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    assert silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 1000 ** -0.2)
    with pytest.raises(EstimationError):
        silverman_bandwidth(np.ones(5))
    with pytest.raises(EstimationError):
        silverman_bandwidth(np.ones(1))


def test_kde_matches_scipy():
    x = np.random.default_rng(1).normal(size=200)
    grid = Grid(-5, 5, 101)
    h = silverman_bandwidth(x)
    ours = kde_on_grid(x, grid, h)
    ref = stats.gaussian_kde(x, bw_method=h / np.std(x, ddof=1))(grid.points)
    np.testing.assert_allclose(ours, ref, rtol=1e-10, atol=1e-12)


def test_quantile_cells_have_equal_external_mass():
    ext = np.random.default_rng(2).standard_normal((10000, 1))
    edges = quantile_edges(ext, [10])
    counts = np.bincount(np.searchsorted(edges[0], ext[:, 0], side="right"), minlength=10)
    assert counts.min() >= 999 and counts.max() <= 1001


def test_auto_bins():
    assert auto_bins(50, 2) == (2, 2)
    assert auto_bins(2000, 2) == (10, 10)
    assert auto_bins(500, 2) == (5, 5)
    assert auto_bins(10, 1) == (2,)


def _selected_sample(rng, n, strength=1.5):
    # y depends on z, selection favours large z
    z = rng.standard_normal(6 * n)
    x = rng.integers(0, 2, 6 * n)
    y = 2 * x + z + rng.standard_normal(6 * n)
    keep = rng.random(6 * n) < 1 / (1 + np.exp(-strength * z))
    idx = np.flatnonzero(keep)[:n]
    return x[idx], z[idx, None], y[idx]


def test_recovery_removes_selection_shift():
    rng = np.random.default_rng(3)
    x, z, y = _selected_sample(rng, 4000)
    ext = rng.standard_normal((20000, 1))
    grid = Grid(-6, 10, 400)
    rec = recover_continuous(x, z, y, ext, 1, grid)
    bias = biased_continuous(y, x, 1, grid)
    assert abs(rec.mean() - 2.0) < 0.1
    assert bias.mean() > 2.3
    assert rec.mass == pytest.approx(1.0)
    meta = rec.meta
    assert meta["bins"] == [10]
    assert sum(meta["cell_weights"].values()) == pytest.approx(1.0)
    assert meta["bandwidth_rule"] == "silverman"
    assert "mass_before_normalization" in meta


def test_under_populated_cells_borrow():
    rng = np.random.default_rng(4)
    x, z, y = _selected_sample(rng, 60, strength=4.0)
    ext = rng.standard_normal((5000, 1))
    rec = recover_continuous(x, z, y, ext, 1, Grid(-6, 10, 200), bins=10, min_cell=5)
    assert rec.meta["borrowed"]
    for cell, source in rec.meta["borrowed"].items():
        assert rec.meta["cell_counts"][source] >= 5
        assert rec.meta["cell_counts"][cell] < 5
    assert rec.mass == pytest.approx(1.0)


def test_two_covariates_and_auto():
    rng = np.random.default_rng(5)
    n = 800
    w, z = rng.standard_normal((2, n))
    x = rng.integers(0, 2, n)
    y = x + w + z + rng.standard_normal(n)
    ext = rng.standard_normal((4000, 2))
    rec = recover_continuous(x, np.column_stack([w, z]), y, ext, 0, Grid(-8, 8, 128), bins="auto")
    assert rec.meta["bins"] == list(auto_bins(int((x == 0).sum()), 2))
    with pytest.raises(ValueError):
        recover_continuous(x, np.column_stack([w, z]), y, ext, 0, Grid(-8, 8, 128), bins=(3,))
    with pytest.raises(ValueError):
        recover_continuous(x, np.column_stack([w, z]), y, ext, 0, Grid(-8, 8, 128), bins="many")


def test_continuous_errors():
    grid = Grid(-3, 3, 32)
    with pytest.raises(EstimationError):
        biased_continuous(np.array([1.0, 2.0]), np.array([0, 0]), 1, grid)
    with pytest.raises(EstimationError):
        recover_continuous(np.zeros(4), np.zeros((4, 1)), np.arange(4.0), np.zeros((0, 1)), 0, grid)
    with pytest.raises(EstimationError):
        recover_continuous(np.zeros(6), np.arange(6.0)[:, None], np.arange(6.0), np.arange(100.0)[:, None], 0, grid, bins=3, min_cell=7)


def test_density_csv_round_trip(tmp_path):
    truth = GaussianSpec(0.0, 1.0)
    d = density_of_gaussian(truth, truth.default_grid(64))
    d.write_csv(tmp_path / "d.csv")
    back = GriddedDensity.read_csv(tmp_path / "d.csv")
    assert back.grid == d.grid
    np.testing.assert_array_equal(back.values, d.values)


def test_density_validation():
    with pytest.raises(ValueError):
        GriddedDensity(Grid(0, 1, 4), np.ones(3))
    with pytest.raises(ValueError):
        GriddedDensity(Grid(0, 1, 3), np.array([1.0, -1.0, 0.0]))
    with pytest.raises(EstimationError):
        GriddedDensity(Grid(0, 1, 3), np.zeros(3)).normalized()
    with pytest.raises(ValueError):
        Grid(1, 0)
