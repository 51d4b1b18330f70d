"""Polynomial and flow-map core: evaluation, composition, iteration,
differentiation, truncation."""

import math
from fractions import Fraction

import numpy as np
import pytest

from flowmap.errors import (
    CompositionOverflowError,
    ProbabilityRangeError,
    VariableBindingError,
)
from flowmap.maps import one_parameter_map
from flowmap.poly import FailureVector, FlowMap, Monomial, Polynomial

from conftest import WIRE_MAP_TERMS


def _poly_from_named(named, variables):
    monos = [Monomial(Fraction(c), dict(key)) for key, c in named.items()]
    return Polynomial.from_monomials(variables, monos)


class TestEvaluate:
    def test_voter_component_at_zero(self, tmr):
        assert tmr.components["v"].evaluate({"v": Fraction(0)}) == 0

    def test_voter_component_at_half_is_half(self, tmr):
        value = tmr.components["v"].evaluate({"v": Fraction(1, 2)})
        assert value == Fraction(1, 2)

    def test_wire_component_matches_term_by_term_sum(self, tmr):
        # independent oracle: sum the thirteen reference terms one by one
        x = Fraction(1, 10)
        expected = Fraction(0)
        for key, c in WIRE_MAP_TERMS.items():
            term = Fraction(c)
            for name, e in key:
                term *= x**e
            expected += term
        got = tmr.components["w"].evaluate({"w": x, "v": x})
        assert got == expected

    def test_missing_variable_raises(self, tmr):
        with pytest.raises(VariableBindingError):
            tmr.components["w"].evaluate({"w": 0.1})

    def test_evaluate_float_matches_exact(self, tmr):
        exact = tmr.components["w"].evaluate({"w": Fraction(1, 8), "v": Fraction(1, 16)})
        fast = tmr.components["w"].evaluate_float({"w": 0.125, "v": 0.0625})
        assert math.isclose(fast, float(exact), rel_tol=1e-14)

    def test_evaluate_array_matches_scalar(self, tmr):
        rng = np.random.default_rng(3)
        ws, vs = rng.random(50) * 0.4, rng.random(50) * 0.4
        vals = tmr.components["w"].evaluate_array({"w": ws, "v": vs})
        for i in range(50):
            scalar = tmr.components["w"].evaluate({"w": ws[i], "v": vs[i]})
            assert math.isclose(vals[i], scalar, rel_tol=1e-12)


class TestEvalMap:
    def test_uv_example_point(self, uv):
        out = uv.evaluate(FailureVector({"u": 0.0, "v": 0.2}))
        assert abs(out["u"] - 0.04) < 1e-12
        assert abs(out["v"] - 0.104) < 1e-12

    def test_uv_against_direct_formula(self, uv):
        # independent recomputation from the closed form
        rng = np.random.default_rng(11)
        for _ in range(40):
            gu, gv = rng.random() * 0.9, rng.random() * 0.9
            exp_u = (
                1
                - (1 - gu) ** 2 * (1 - gv) ** 2
                - 2 * gu * (1 - gu) * (1 - gv) ** 2
                - 2 * gv * (1 - gv) * (1 - gu) ** 2
            )
            exp_v = (
                1
                - (1 - gu) ** 3 * (1 - gv) ** 3
                - 3 * gu * (1 - gu) ** 2 * (1 - gv) ** 3
                - 3 * gv * (1 - gv) ** 2 * (1 - gu) ** 3
            )
            out = uv.evaluate(FailureVector({"u": gu, "v": gv}))
            assert math.isclose(out["u"], exp_u, rel_tol=0, abs_tol=1e-12)
            assert math.isclose(out["v"], exp_v, rel_tol=0, abs_tol=1e-12)

    def test_origin_fixed(self, tmr, uv):
        for f in (tmr, uv):
            zero = FailureVector({v: 0.0 for v in f.variables})
            out = f.evaluate(zero)
            assert all(out[v] == 0 for v in f.variables)

    def test_tmr_half_half_fixed(self, tmr):
        out = tmr.evaluate(FailureVector({"w": 0.5, "v": 0.5}))
        assert out["w"] == 0.5 and out["v"] == 0.5

    def test_small_negative_clamped(self):
        f = FlowMap(("a",), {"a": Polynomial(("a",), {(1,): 1.0, (0,): -1e-16})})
        assert f.evaluate(FailureVector({"a": 0.0}))["a"] == 0.0

    def test_large_negative_raises(self):
        f = FlowMap(("a",), {"a": Polynomial(("a",), {(1,): 1.0, (0,): -1e-9})})
        with pytest.raises(ProbabilityRangeError):
            f.evaluate(FailureVector({"a": 0.0}))


class TestCompose:
    def test_identity_left_identity(self, tmr):
        ident = FlowMap.identity(tmr.variables)
        assert ident.compose(tmr) == tmr
        assert tmr.compose(ident) == tmr

    def test_one_parameter_self_composition(self):
        c = Fraction(5)
        f = one_parameter_map(c, 2)
        ff = f.compose(f)
        assert ff.components["g"] == Polynomial(("g",), {(4,): c**3})

    def test_compose_matches_iterate_at_random_points(self, tmr):
        ff = tmr.compose(tmr)
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = FailureVector({"w": rng.random() * 0.3, "v": rng.random() * 0.3})
            once = ff.evaluate(x)
            twice = tmr.iterate(x, 2)
            assert abs(once["w"] - twice["w"]) < 1e-12
            assert abs(once["v"] - twice["v"]) < 1e-12

    def test_term_cap_overflow(self, tmr):
        with pytest.raises(CompositionOverflowError):
            tmr.compose(tmr, term_cap=5)

    def test_variable_mismatch(self, tmr, uv):
        with pytest.raises(VariableBindingError):
            tmr.compose(uv)


class TestIterate:
    def test_zero_levels_returns_input(self, tmr):
        x = FailureVector({"w": 0.3, "v": 0.1})
        assert tmr.iterate(x, 0) == x

    def test_uv_converges_from_inside(self, uv):
        out = uv.iterate(FailureVector({"u": 0.0, "v": 0.2}), 8)
        assert out["u"] < 1e-3 and out["v"] < 1e-3

    def test_uv_escape_near_seven_levels(self, uv):
        x = FailureVector({"u": 0.28, "v": 0.0})
        exit_level = None
        for level in range(1, 20):
            x = uv.evaluate(x)
            if max(x["u"], x["v"]) > 0.3:
                exit_level = level
                break
        assert exit_level is not None and 6 <= exit_level <= 9

    def test_negative_levels_rejected(self, tmr):
        with pytest.raises(ValueError):
            tmr.iterate(FailureVector({"w": 0.1, "v": 0.1}), -1)


class TestJacobian:
    def test_zero_at_origin_for_enumeration_maps(self, tmr):
        jac = tmr.jacobian(FailureVector({"w": 0.0, "v": 0.0}))
        assert np.all(jac == 0.0)

    def test_matches_central_differences(self, tmr):
        h = 1e-6
        point = {"w": 0.1, "v": 0.1}
        jac = tmr.jacobian(FailureVector(point))
        for i, row in enumerate(tmr.variables):
            for j, col in enumerate(tmr.variables):
                hi = dict(point)
                lo = dict(point)
                hi[col] += h
                lo[col] -= h
                fd = (
                    tmr.components[row].evaluate(hi) - tmr.components[row].evaluate(lo)
                ) / (2 * h)
                assert math.isclose(jac[i, j], fd, rel_tol=1e-6, abs_tol=1e-9)

    def test_one_parameter_derivative(self):
        f = one_parameter_map(Fraction(12), 2)
        d = f.components["g"].differentiate("g")
        assert d == Polynomial(("g",), {(1,): 24})


class TestTruncate:
    def test_wire_low_order_terms(self, tmr):
        low = tmr.truncate(2).components["w"]
        expected = _poly_from_named(
            {(("w", 2),): 3, (("v", 2),): 3, (("v", 1), ("w", 1)): 6}, ("w", "v")
        )
        assert low == expected

    def test_voter_low_order_terms(self, tmr):
        low = tmr.truncate(3).components["v"]
        expected = _poly_from_named({(("v", 2),): 3, (("v", 3),): 16}, ("v",))
        assert low == expected

    def test_infinite_degree_is_identity(self, tmr):
        assert tmr.truncate(None) == tmr
        assert tmr.truncate(math.inf) == tmr

    def test_round_up_mode_upper_bounds_on_unit_box(self, tmr):
        rounded = tmr.truncate(2, mode="round-up-coefficients")
        rng = np.random.default_rng(17)
        for _ in range(200):
            x = {"w": rng.random(), "v": rng.random()}
            for name in tmr.variables:
                assert rounded.components[name].evaluate(x) >= tmr.components[name].evaluate(x) - 1e-12


class TestOneParameterFixedPoint:
    def test_fixed_point_of_every_iterate(self):
        for c, t in ((Fraction(12), 1), (Fraction(8), 2), (Fraction(100), 1)):
            f = one_parameter_map(c, t + 1)
            star = (Fraction(1) / c) ** Fraction(1, t) if t == 1 else float((1 / c) ** (1 / t))
            x = FailureVector({"g": star})
            for level in range(1, 6):
                out = f.iterate(x, level)
                assert math.isclose(float(out["g"]), float(star), rel_tol=1e-12)


class TestInvariants:
    def test_polynomial_drops_zero_terms(self):
        p = Polynomial(("a",), {(1,): 1, (2,): 0})
        assert (2,) not in p.terms

    def test_monomial_rejects_zero_coefficient(self):
        with pytest.raises(ValueError):
            Monomial(0, {"a": 1})

    def test_failure_vector_range_checked(self):
        with pytest.raises(ProbabilityRangeError):
            FailureVector({"a": 1.5})
        with pytest.raises(ProbabilityRangeError):
            FailureVector({"a": -0.1})

    def test_component_variables_subset_enforced(self):
        poly = Polynomial(("a", "b"), {(1, 1): 1})
        with pytest.raises(VariableBindingError):
            FlowMap(("a",), {"a": poly})
