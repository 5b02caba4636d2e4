from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from bergerflow.curvature import curvature_field
from bergerflow.initial_data import construct_initial, family_functions, validate_class
from bergerflow.mesh import build_grid

from conftest import flat_state


@pytest.fixture(scope="module")
def grid():
    return build_grid(1024, 8.0)


# ---------------------------------------------------------------------------
# closed-form families
# ---------------------------------------------------------------------------


class TestFamilies:
    def test_cap_cylinder_round(self, grid):
        st = construct_initial("cap_cylinder", {"B": 1.0, "a": 0.0}, grid)
        assert_allclose(st.b, st.c)
        assert st.b.max() == pytest.approx(1.0, abs=1e-6)
        assert_allclose(st.xi, 1.0)

    def test_taubnut_like_q0(self, grid):
        st = construct_initial("taubnut_like", {"q": 0.0, "mu0": 1.0}, grid)
        x = grid.nodes
        assert_allclose(st.b, x)
        assert_allclose(st.c, np.tanh(x))
        assert np.all(st.c <= st.b)

    @settings(max_examples=30, deadline=None)
    @given(B=st.floats(0.2, 5.0), a=st.floats(0.0, 0.5))
    def test_cap_cylinder_odd_and_ordered(self, B, a):
        bf, cf = family_functions("cap_cylinder", {"B": B, "a": a})
        x = np.linspace(0.01, 10, 50)
        assert_allclose(bf(-x), -bf(x))
        assert_allclose(cf(-x), -cf(x))
        assert np.all(cf(x) <= bf(x))

    @pytest.mark.parametrize("family,params", [
        ("cap_cylinder", {"a": 0.9}),
        ("taubnut_like", {"q": 0.5}),
        ("neck", {"d": 1.2}),
        ("cylinder", {"r0": -1.0}),
        ("sphere", {}),
    ])
    def test_invalid_parameters(self, family, params, grid):
        with pytest.raises(ValueError):
            construct_initial(family, params, grid)


# ---------------------------------------------------------------------------
# class validation
# ---------------------------------------------------------------------------


class TestValidateClass:
    def test_cap_round_is_G(self, grid):
        v = validate_class(construct_initial("cap_cylinder", {"B": 1.0, "a": 0.0}, grid))
        assert v.verdict == "G"
        assert v.smooth_at_origin
        assert v.sup_b == pytest.approx(1.0, abs=1e-6)
        assert v.ratio_floor == pytest.approx(1.0)

    def test_cap_squashed_ratio_floor(self, grid):
        v = validate_class(construct_initial("cap_cylinder", {"B": 1.0, "a": 0.3}, grid))
        assert v.verdict == "G"
        assert v.ratio_floor == pytest.approx(0.7, abs=1e-5)
        assert v.min_bs >= 0 and v.min_H >= 0

    def test_taubnut_is_G_inf(self):
        g = build_grid(1024, 20.0)
        st = construct_initial("taubnut_like", {"q": 0.0, "mu0": 1.0}, g)
        v = validate_class(st)
        assert v.verdict == "G_inf"
        assert not v.sup_b_finite and v.sup_b == np.inf
        assert v.curvature_decay_ok
        assert v.fiber_floor == pytest.approx(np.tanh(5.0), rel=1e-3)
        # b_s = 1 everywhere
        assert_allclose(curvature_field(st).bs[:-1], 1.0, atol=1e-10)
        assert v.injectivity_proxy

    def test_taubnut_curvature_decays_quadratically(self):
        g = build_grid(2048, 40.0)
        cf = curvature_field(construct_initial("taubnut_like", {"q": 0.0, "mu0": 1.0}, g))
        x = g.nodes
        i10, i20 = np.searchsorted(x, 10.0), np.searchsorted(x, 20.0)
        ratio = cf.rm_max_node[i10] / cf.rm_max_node[i20]
        assert ratio == pytest.approx(4.0, rel=0.05)

    def test_neck(self, grid):
        v = validate_class(construct_initial("neck", {"r_n": 0.2, "d": 0.6, "x0": 3.0, "w": 1.0}, grid))
        assert v.verdict == "neck"
        assert v.min_H < 0
        assert abs(v.min_H_x - 3.0) < 1.0

    def test_flat_is_G_inf(self):
        v = validate_class(flat_state(512, 8.0))
        assert v.verdict == "G_inf"
        assert v.smooth_at_origin
        assert v.ratio_floor == pytest.approx(1.0)

    def test_cylinder(self):
        g = build_grid(64, 4.0, inner="mirror")
        v = validate_class(construct_initial("cylinder", {"r0": 1.0}, g))
        assert v.smooth_at_origin
        assert v.verdict == "G"
