import numpy as np
import pytest

from potential_regions.construction import (ConstructionConfig, build, choose_next_level,
                                            choose_start, disjointness_margins, level_residuals)
from potential_regions.errors import (GaugeNotTangentialError, InvalidParameterError,
                                      TableExhaustedError)
from potential_regions.kernels import GaugeFunction


def test_default_trace(built):
    trace, omega, _ = built
    assert trace.counts == [2, 3, 4, 5, 6, 7]
    assert trace.heights[0] == 1e-4
    assert all(b < a for a, b in zip(trace.heights, trace.heights[1:]))
    for lv in trace.levels:
        assert lv.min_residual > 0
        assert set(lv.residuals) == ({"eq_cond", "start"} if lv.k == 1
                                     else {"eq_cond", "con", "slow_growth"})
        # rows x_i = gamma - i r, i = 0..N-1
        np.testing.assert_allclose(lv.points, lv.gamma - lv.r * np.arange(lv.N))
    assert all(m > 0 for m in disjointness_margins(trace, omega))


def test_levels_are_dyadic_steps(built):
    trace, _, _ = built
    for a, b in zip(trace.heights, trace.heights[1:]):
        m = np.log2(a / b)
        assert m == pytest.approx(round(m)) and m >= 1


def test_level_is_largest_admissible(run, built):
    # the height one halving above each chosen level must violate something
    trace, _, _ = built
    cfg = run.construction
    for prev, lv in zip(trace.levels, trace.levels[1:]):
        if 2 * lv.t < prev.t:
            res = level_residuals(cfg, 2 * lv.t, lv.N, prev)
            assert min(res.values()) <= 0


def test_single_level(run):
    cfg = ConstructionConfig(run.kernel, run.gauge, k_max=1)
    trace, omega = build(cfg)
    assert trace.counts == [2] and len(omega.vertices) == 2


def test_constant_schedule(run):
    cfg = ConstructionConfig(run.kernel, run.gauge, n_schedule="constant")
    trace, _ = build(cfg)
    assert trace.counts == [2] * 6


def test_start_respects_nonstrict_gauge(run):
    g = GaugeFunction.power_law(0.75, 1.0, 1e-200, 10.0, 401)
    cfg = ConstructionConfig(run.kernel, g, t1_initial=1.0)
    # t^(3/4) > 3 t first holds at t < 3^-4; dyadic search gives 2^-7
    assert choose_start(cfg) == 2.0 ** -7


def test_nontangential_gauge_rejected(run):
    cfg = ConstructionConfig(run.kernel, GaugeFunction.identity(1e-200, 10.0, 401))
    with pytest.raises(GaugeNotTangentialError):
        choose_start(cfg)


def test_table_exhausted(run, built):
    trace, _, _ = built
    cfg = run.construction
    with pytest.raises(TableExhaustedError):
        choose_next_level(cfg, type(trace)(trace.levels[:1]), 10**120)


def test_short_gauge_table_exhausts(run):
    g = GaugeFunction.from_dict({**run.gauge.to_dict(), "t_min": 1e-30, "size": 63})
    with pytest.raises(TableExhaustedError):
        build(ConstructionConfig(run.kernel, g))


@pytest.mark.parametrize("kw", [dict(k_max=0), dict(N_cap_constant=0.0), dict(t1_initial=-1.0),
                                dict(N1=0), dict(n_schedule="cubic")])
def test_config_validation(run, kw):
    with pytest.raises(InvalidParameterError):
        ConstructionConfig(run.kernel, run.gauge, **kw)


def test_trace_csv(tmp_path, built):
    trace, _, _ = built
    p = tmp_path / "trace.csv"
    trace.write_csv(p, "abc")
    lines = p.read_text().splitlines()
    assert lines[0] == "# config_hash=abc" and len(lines) == 2 + len(trace)
