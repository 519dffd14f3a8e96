import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from subtail.errors import AtomError, DomainError, RangeError
from subtail.kernels import (
    DistributedOrder,
    Power,
    Subexp,
    Tabulated,
    Truncated,
    caputo,
    check_conditions,
    eval_w,
    inverse_w,
    inverse_w_vec,
    kernel_from_config,
    levy_density,
)


class TestEvalW:
    def test_caputo_at_one(self):
        # Gamma(1/2) = sqrt(pi)
        assert eval_w(caputo(0.5), 1.0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-12)

    def test_truncated_vanishes_at_endpoint(self):
        assert eval_w(Truncated(beta=0.5, delta=1.0, scale=1.0), 1.0) == 0.0
        assert eval_w(Truncated(beta=0.5, delta=1.0, scale=1.0), 2.0) == 0.0

    def test_subexp_huge_argument_underflows_to_zero(self):
        k = Subexp(beta=1.0, theta=1.0, c0=1.0, smallBeta=0.5)
        assert eval_w(k, 1e9) == 0.0  # underflow, not an error

    def test_nonpositive_argument_is_domain_error(self):
        for s in (0.0, -1.0):
            with pytest.raises(DomainError):
                eval_w(caputo(0.5), s)


class TestLevyDensity:
    def test_power_density(self):
        assert levy_density(caputo(0.5), 1.0) == pytest.approx(0.5 / math.sqrt(math.pi), rel=1e-12)

    def test_truncated_density_inside_and_outside(self):
        k = Truncated(beta=0.5, delta=1.0, scale=1.0)
        assert levy_density(k, 0.25) == pytest.approx(0.5 * 0.25**-1.5, rel=1e-12)  # = 4
        assert levy_density(k, 2.0) == 0.0

    def test_tabulated_knot_signals_atom(self):
        k = Tabulated(knots=((0.5, 1.8), (1.0, 1.0), (2.0, 0.55)))
        with pytest.raises(AtomError):
            levy_density(k, 1.0)
        assert levy_density(k, 0.7) > 0.0

    def test_tabulated_zero_tail_lists_atom(self):
        k = Tabulated(knots=((0.5, 1.8), (1.0, 1.0)), tail="zero")
        assert k.atoms() == ((1.0, 1.0),)
        assert eval_w(k, 1.5) == 0.0


class TestInverseW:
    def test_power_closed_form(self):
        assert inverse_w(Power(beta=0.5, scale=1.0), 2.0) == pytest.approx(0.25, rel=1e-12)

    def test_truncated_closed_form(self):
        assert inverse_w(Truncated(beta=0.5, delta=1.0, scale=1.0), 1.0) == pytest.approx(
            0.25, rel=1e-12
        )

    def test_round_trip_all_variants(self, kernels):
        for name, k in kernels.items():
            end = k.support_end
            hi = min(end * 0.999, 1e3) if math.isfinite(end) else 1e3
            for s0 in np.geomspace(1e-3, hi, 17):
                y = eval_w(k, s0)
                if y <= 0.0:
                    continue
                s = inverse_w(k, y)
                assert s == pytest.approx(s0, rel=1e-10), (name, s0)

    def test_vectorized_matches_scalar(self, kernels):
        for name, k in kernels.items():
            end = k.support_end
            hi = min(end * 0.9, 50.0) if math.isfinite(end) else 50.0
            s0 = np.geomspace(1e-3, hi, 9)
            y = k.w(s0)
            got = inverse_w_vec(k, y)
            assert np.allclose(got, s0, rtol=1e-9), name

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            inverse_w(caputo(0.5), -1.0)
        # below the infimum of w on the support of a truncated-table kernel
        k = Tabulated(knots=((0.5, 1.8), (1.0, 1.0)), tail="zero")
        with pytest.raises(RangeError):
            inverse_w(k, 0.5)


class TestMomentsAndKerIntegral:
    def test_moment_matches_quadrature(self, kernels):
        for name, k in kernels.items():
            for a in (0.01, 0.5, 2.0):
                if math.isfinite(k.support_end):
                    a = min(a, k.support_end)
                want, _ = quad(lambda u: k.w(u), 0.0, a, points=[min(a, b) for b in k.breakpoints()] or None, limit=200)
                assert k.moment(0, a) == pytest.approx(want, rel=1e-8), (name, a)

    def test_ker_integral_equals_small_mass(self, kernels):
        # int_0^inf min{1,s}(-dw) = int_0^1 w(s) ds when w(inf) = 0
        for name, k in kernels.items():
            hi = min(k.support_end, 60.0) * 0.999999
            edges = sorted({0.0, hi, 1.0, *(b for b in k.breakpoints() if 0.0 < b < hi)})
            direct = 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                piece, _ = quad(lambda s: min(1.0, s) * k.nu(s), a, b, limit=200)
                direct += piece
            direct += sum(min(1.0, s) * j for s, j in k.atoms())
            direct += eval_w(k, hi)  # analytic remainder: int_hi^inf nu = w(hi)
            rep = check_conditions(k, points_per_decade=16)
            assert rep.ker_integral == pytest.approx(direct, rel=1e-5), name
            assert rep.ker_ok, name

    def test_density_consistency(self, kernels):
        # int_a^b nu = w(a) - w(b) inside an absolutely continuous piece
        for name, k in kernels.items():
            a, b = 0.011, 0.77
            got, _ = quad(lambda s: k.nu(s), a, b, limit=200, epsrel=1e-11)
            want = eval_w(k, a) - eval_w(k, b)
            assert got == pytest.approx(want, rel=1e-8), name


@settings(max_examples=40, deadline=None)
@given(
    beta=st.floats(0.05, 0.95),
    s1=st.floats(1e-5, 1e4),
    ratio=st.floats(1.0, 1e3),
)
def test_monotone_property(beta, s1, ratio):
    k = Power(beta=beta, scale=1.0)
    assert eval_w(k, s1) >= eval_w(k, s1 * ratio)


@settings(max_examples=40, deadline=None)
@given(beta=st.floats(0.1, 0.9), y=st.floats(1e-6, 1e6))
def test_power_round_trip_property(beta, y):
    k = Power(beta=beta, scale=1.0)
    s = inverse_w(k, y)
    assert eval_w(k, s) == pytest.approx(y, rel=1e-9)


class TestCheckConditions:
    def test_power(self):
        rep = check_conditions(caputo(0.5))
        assert rep.spoly is not None and rep.spoly["delta1"] == pytest.approx(0.5)
        assert rep.lpoly is not None and rep.lpoly["delta2"] == pytest.approx(0.5, abs=1e-6)
        assert rep.sub is None and rep.trunc is None

    def test_truncated(self):
        rep = check_conditions(Truncated(beta=0.5, delta=1.0, scale=1.0))
        assert rep.trunc is not None
        assert rep.trunc["t_f"] == 1.0
        assert 0.5 <= rep.trunc["K_lo"] <= rep.trunc["K_hi"] <= 1.5
        assert rep.spoly["t_s"] == pytest.approx(0.5)
        assert rep.spoly["delta1"] == pytest.approx(0.5)
        assert rep.lpoly is None

    def test_subexp(self):
        rep = check_conditions(Subexp(beta=0.5, theta=1.0))
        assert rep.sub == {"beta": 0.5, "theta": 1.0, "c0": 1.0}
        assert rep.lpoly is None

    def test_distributed(self):
        rep = check_conditions(DistributedOrder(weights=((0.3, 1.0), (0.7, 1.0))))
        assert rep.spoly["delta1"] == pytest.approx(0.7)
        assert rep.lpoly is not None
        assert rep.sub is None

    def test_sparse_table_diagnostic(self):
        rep = check_conditions(Tabulated(knots=((0.5, 1.8), (1.0, 1.0), (2.0, 0.55))))
        assert any("insufficient resolution" in d for d in rep.diagnostics)


class TestConfig:
    def test_round_trip(self):
        cfgs = [
            {"kind": "power", "beta": 0.5, "scale": 1.0},
            {"kind": "truncated", "beta": 0.5, "delta": 1.0, "scale": 1.0},
            {"kind": "subexp", "beta": 0.5, "theta": 1.0, "c0": 1.0, "smallBeta": 0.5},
            {"kind": "distributed", "weights": [[0.3, 1.0], [0.7, 1.0]]},
            {"kind": "tabulated", "knots": [[0.5, 1.8], [1.0, 1.0], [2.0, 0.55]], "tail": "power"},
        ]
        for cfg in cfgs:
            k = kernel_from_config(cfg)
            assert eval_w(k, 0.3) > 0.0

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            kernel_from_config({"kind": "gaussian"})
