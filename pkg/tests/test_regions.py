import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from potential_regions.errors import DominationError, OutOfRangeError
from potential_regions.kernels import GaugeFunction
from potential_regions.regions import (ApproachRegion, Vertex, check_domination, check_r_condition,
                                       cone_section, section_profile)

ident = GaugeFunction.identity(1e-12, 10.0, 131)
sqrt_g = GaugeFunction.power_law(0.5, 1.0, 1e-12, 10.0, 131)


def test_cone_section():
    v = Vertex(0.5, 0.1)
    assert cone_section(v, ident, 0.05).measure() == 0.0
    np.testing.assert_allclose(cone_section(v, ident, 0.3).intervals, [(0.3, 0.7)])


def test_vertex_needs_positive_height():
    with pytest.raises(Exception):
        Vertex(0.0, 0.0)


def test_seed_region_sections():
    R = ApproachRegion(ident, [Vertex(1.0, 0.1), Vertex(-1.0, 0.2)], 3.0)
    s = R.cross_section(0.15)
    np.testing.assert_allclose(s.intervals, [(-0.45, 0.45), (0.95, 1.05)])
    assert R.contains(1.04, 0.15) and not R.contains(1.06, 0.15)
    assert not R.contains(0.0, 0.0)
    with pytest.raises(OutOfRangeError):
        R.cross_section(20.0)


def test_empty_region_has_zero_sections():
    R = ApproachRegion(ident, (), None)
    rows = section_profile(R, [1e-3, 1.0], ident)
    assert [m for _, m, _ in rows] == [0.0, 0.0]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(1e-9, 0.25)), min_size=1, max_size=5),
       st.floats(1e-9, 0.25))
def test_completion_contains_region(verts, t):
    # sqrt(t) - t is increasing on (0, 1/4], so the domination check holds there
    R = ApproachRegion(ident, [Vertex(x, s) for x, s in verts], 3.0)
    probe = np.geomspace(1e-12, 0.25, 200)
    C = R.complete(sqrt_g, probe)
    assert C.cross_section(t).covers(R.cross_section(t))


def test_completion_is_rk_closed():
    R = ApproachRegion(ident, [Vertex(0.3, 1e-6), Vertex(-0.2, 1e-4), Vertex(0.0, 1e-2)], 3.0)
    probe = np.geomspace(1e-8, 0.25, 120)
    C = R.complete(sqrt_g, probe)
    assert check_r_condition(C, sqrt_g, probe).worst_violation == 0.0
    # the seed region is identity-closed but not sqrt-closed
    assert check_r_condition(R, ident, probe).worst_violation == 0.0
    assert check_r_condition(R, sqrt_g, probe).worst_violation > 0.0


def test_completion_of_single_vertex_is_the_sqrt_cone():
    v = Vertex(0.0, 1e-4)
    C = ApproachRegion(ident, [v], None).complete(sqrt_g)
    t = 0.25
    # g - G is decreasing here, so the closure is the plain sqrt cone
    assert C.cross_section(t).measure() == pytest.approx(2 * (sqrt_g(t) - sqrt_g(v.t)))


def test_domination_failure():
    probe = np.geomspace(1e-6, 1.0, 50)
    with pytest.raises(DominationError):
        check_domination(sqrt_g, ident, probe)
    check_domination(ident, sqrt_g, np.geomspace(1e-6, 0.25, 50))


def test_roundtrip():
    R = ApproachRegion(ident, [Vertex(0.1, 0.01)], 3.0).complete(sqrt_g)
    d = json.loads(json.dumps(R.to_dict()))
    R2 = ApproachRegion.from_dict(d)
    hs = np.geomspace(0.01, 1.0, 9)
    assert [s.intervals for s in R2.sections(hs)] == [s.intervals for s in R.sections(hs)]


def test_built_region_cone_condition(built):
    trace, omega, completed = built
    probe = np.geomspace(trace.levels[-1].t, 1.0, 300)
    assert check_r_condition(omega, omega.seed_gauge, probe).worst_violation == 0.0


def test_completed_region_rk_closed_near_levels(run, built):
    trace, _, completed = built
    probe = np.geomspace(trace.levels[-1].t, 2 * trace.levels[0].t, 300)
    assert check_r_condition(completed, run.gauge, probe).worst_violation == 0.0
