import math

import numpy as np
import pytest
from scipy.special import erfinv

from subtail.errors import DomainError
from subtail.kernels import Truncated, caputo
from subtail.simulate import (
    PathEnsemble,
    SimConfig,
    TailEstimate,
    eps_refinement,
    exact_stable_sampler,
    lower_tail_prob,
    sample_E_t,
    sample_S_at,
    stable_half_lower_cdf,
    stable_half_upper_cdf,
    upper_tail_prob,
)

CFG = SimConfig(cutoff_eps=1e-3, n_paths=50_000, seed=20240517)


class TestSampleS:
    def test_truncated_tiny_r_is_drift_only(self):
        # P(no jump) = exp(-r w(eps)) -> 1, so S_r -> r*d_eps
        k = Truncated(beta=0.5, delta=1.0, scale=1.0)
        cfg = SimConfig(cutoff_eps=0.01, n_paths=2000, seed=5)
        r = 1e-7
        ens = sample_S_at(k, cfg, r)
        d_eps = k.moment(0, 0.01) - 0.01 * float(k.w(0.01))
        no_jump = ens.column() == pytest.approx(r * d_eps, rel=1e-12)
        assert np.mean(no_jump) > 1.0 - 2.0 * r * float(k.w(0.01)) - 1e-3

    def test_stable_ks_against_closed_form(self):
        k = caputo(0.5)
        ens = sample_S_at(k, SimConfig(cutoff_eps=1e-4, n_paths=100_000, seed=11), 2.0)
        x = np.sort(ens.column())
        cdf = stable_half_lower_cdf(2.0, x)
        ks = np.max(np.abs(cdf - np.arange(1, len(x) + 1) / len(x)))
        assert ks < 1.628 / math.sqrt(len(x))  # 99% KS band

    def test_truncated_mean(self):
        # E S_r = r * int_0^{t_f} s nu(ds) = r * moment(0, t_f) by parts
        k = Truncated(beta=0.5, delta=1.0, scale=1.0)
        cfg = SimConfig(cutoff_eps=1e-4, n_paths=100_000, seed=3)
        r = 0.7
        ens = sample_S_at(k, cfg, r)
        want = r * k.moment(0, 1.0)
        got = float(np.mean(ens.column()))
        se = float(np.std(ens.column())) / math.sqrt(ens.n_paths)
        assert abs(got - want) < 4.0 * se

    def test_path_monotone_in_r(self):
        k = caputo(0.5)
        ens = sample_S_at(k, CFG, [0.5, 1.0, 2.0, 4.0])
        assert np.all(np.diff(ens.values, axis=1) >= 0.0)

    def test_eps_overflow_guard(self):
        k = caputo(0.9)
        with pytest.raises(DomainError, match="cutoff_eps"):
            sample_S_at(k, SimConfig(cutoff_eps=1e-12, n_paths=100_000, seed=1), 10.0)

    def test_determinism(self):
        k = caputo(0.5)
        a = sample_S_at(k, CFG, 1.0).column()
        b = sample_S_at(k, CFG, 1.0).column()
        assert np.array_equal(a, b)


class TestTailProbs:
    def test_stable_upper_lower(self):
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=1e-4, n_paths=100_000, seed=7)
        up = upper_tail_prob(k, cfg, 2.0, 1.0)
        lo = lower_tail_prob(k, cfg, 2.0, 1.0)
        assert abs(up.p_hat - stable_half_upper_cdf(2.0, 1.0)) < 3.0 * up.se
        assert abs(lo.p_hat - stable_half_lower_cdf(2.0, 1.0)) < 3.0 * lo.se

    def test_upper_plus_lower_is_one(self):
        k = caputo(0.5)
        up = upper_tail_prob(k, CFG, 1.3, 0.9)
        lo = lower_tail_prob(k, CFG, 1.3, 0.9)
        pooled = math.hypot(up.se, lo.se)
        assert abs(up.p_hat + lo.p_hat - 1.0) <= 3.0 * pooled + 1e-12

    def test_tiny_t_gives_probability_one(self):
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=1e-6, n_paths=1000, seed=2)
        assert upper_tail_prob(k, cfg, 1.0, 1e-9).p_hat == 1.0

    def test_insufficient_paths_diagnostic(self):
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=1e-3, n_paths=1000, seed=2)
        est = upper_tail_prob(k, cfg, 1e-7, 50.0)  # expectation ~ r w(50) ~ 8e-9
        assert est.p_hat == 0.0
        assert est.diagnostic is not None and "insufficient paths" in est.diagnostic

    def test_eps_refinement_stable(self):
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=2e-3, n_paths=50_000, seed=9, refine_steps=2)
        rows = eps_refinement(k, cfg, 2.0, 1.0)
        assert len(rows) == 3
        for a, b in zip(rows[:-1], rows[1:]):
            pooled = math.hypot(a["se"], b["se"])
            assert abs(a["p_hat"] - b["p_hat"]) <= 3.0 * pooled


class TestSampleEt:
    def test_consistency_with_upper_tail(self):
        # empirical P(E_t <= r) must match P(S_r >= t) within pooled MC error
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=1e-4, n_paths=50_000, seed=13)
        t = 1.0
        ens = sample_E_t(k, cfg, t)
        for r in np.linspace(0.3, 3.0, 10):
            p_e = float(np.mean(ens.column() <= r))
            up = upper_tail_prob(k, cfg.with_paths(50_000), r, t)
            pooled = math.hypot(math.sqrt(p_e * (1 - p_e) / ens.n_paths) + 1e-12, up.se)
            assert abs(p_e - up.p_hat) <= 3.5 * pooled, r

    def test_stable_median(self):
        # P(E_t <= r) = erf(r/(2 sqrt t)); median of E_1 is 2 erfinv(1/2)
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=1e-4, n_paths=100_000, seed=21)
        ens = sample_E_t(k, cfg, 1.0)
        med = float(ens.quantiles([0.5])[0])
        want = 2.0 * float(erfinv(0.5))
        assert med == pytest.approx(want, rel=0.02)
        assert want == pytest.approx(0.95387, rel=1e-4)

    def test_stable_level_scaling(self):
        # E_{ct} =d c^beta E_t: quantiles scale by c^{1/2} for beta = 1/2
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=1e-4, n_paths=100_000, seed=23)
        ens = sample_E_t(k, cfg, [1.0, 16.0])
        q = ens.quantiles([0.25, 0.5, 0.75], j=0)
        q16 = ens.quantiles([0.25, 0.5, 0.75], j=1)
        assert np.allclose(q16 / q, 4.0, rtol=0.02)

    def test_path_monotone_in_t(self):
        k = caputo(0.5)
        ens = sample_E_t(k, CFG, [0.5, 1.0, 2.0])
        assert np.all(np.diff(ens.values, axis=1) >= 0.0)

    def test_overshoot_nonnegative(self):
        k = Truncated(beta=0.5, delta=1.0, scale=1.0)
        ens = sample_E_t(k, CFG, 0.8)
        assert np.all(ens.overshoot >= 0.0)

    def test_determinism(self):
        k = caputo(0.5)
        a = sample_E_t(k, CFG, 1.0).column()
        b = sample_E_t(k, CFG, 1.0).column()
        assert np.array_equal(a, b)


class TestMassSpreadsOverWindow:
    def test_quarter_mass_moves_across_the_phi_window(self):
        # searching dyadic multiples c in {2^k}: some eps1 < N have
        # P(S_{N/phi(1/t)} >= t) - P(S_{eps1/phi(1/t)} >= t) >= 1/4
        from subtail.bernstein import BernsteinTable
        from subtail.kernels import Truncated

        for kern in (caputo(0.5), Truncated(beta=0.5, delta=1.0, scale=1.0)):
            tab = BernsteinTable(kern, points_per_decade=8)
            for t in (0.1, 0.25):
                base = 1.0 / tab.phi(1.0 / t)
                probs = {}
                for k in range(-4, 5):
                    r = 2.0**k * base
                    cfg = SimConfig(cutoff_eps=t * 1e-3, n_paths=20_000, seed=500 + k)
                    probs[k] = upper_tail_prob(kern, cfg, r, t).p_hat
                found = any(
                    probs[kN] - probs[ke] >= 0.25
                    for ke in probs
                    for kN in probs
                    if kN > ke
                )
                assert found, (type(kern).__name__, t, probs)


class TestExactStable:
    def test_ks_against_levy_cdf(self):
        x = exact_stable_sampler(0.5, 2.0, 100_000, seed=31)
        xs = np.sort(x)
        cdf = stable_half_lower_cdf(2.0, xs)
        ks = np.max(np.abs(cdf - np.arange(1, len(xs) + 1) / len(xs)))
        assert ks < 1.628 / math.sqrt(len(xs))

    def test_scaling_identity(self):
        # S_r =d r^2 S_1 for beta = 1/2: check both against the closed-form
        # quantiles x_q = (r / (2 erfcinv(q)))^2
        from scipy.special import erfcinv

        qs = np.array([0.25, 0.5, 0.75])
        for r, seed in ((3.0, 37), (1.0, 41)):
            x = exact_stable_sampler(0.5, r, 200_000, seed=seed)
            want = (r / (2.0 * erfcinv(qs))) ** 2
            assert np.allclose(np.quantile(x, qs), want, rtol=0.03)

    def test_cross_validates_compound_poisson_beta09(self):
        # KS distance sampler-vs-sampler < 0.01 at beta = 0.9
        # (eps = 1e-4 keeps the jump count desk-scale; compensated bias ~2e-3)
        beta, r = 0.9, 1.0
        exact = np.sort(exact_stable_sampler(beta, r, 100_000, seed=43))
        ens = sample_S_at(
            caputo(beta), SimConfig(cutoff_eps=1e-4, n_paths=100_000, seed=47), r
        )
        approx = np.sort(ens.column())
        grid = np.concatenate([exact, approx])
        f1 = np.searchsorted(exact, grid, side="right") / len(exact)
        f2 = np.searchsorted(approx, grid, side="right") / len(approx)
        assert np.max(np.abs(f1 - f2)) < 0.01


class TestEnsembleExport:
    def test_csv_and_json(self, tmp_path):
        k = caputo(0.5)
        cfg = SimConfig(cutoff_eps=1e-3, n_paths=200, seed=1)
        ens = sample_S_at(k, cfg, 1.0)
        csv = tmp_path / "ens.csv"
        ens.to_csv(csv)
        lines = csv.read_text().splitlines()
        assert lines[0] == "path_index,value"
        assert len(lines) == 201
        js = tmp_path / "ens.json"
        ens.to_json(js)
        import json

        data = json.loads(js.read_text())
        assert data[0]["n_paths"] == 200 and data[0]["seed"] == 1

    def test_tail_estimate_band_invariant(self):
        with pytest.raises(DomainError):
            TailEstimate(p_hat=1.5, se=0.0, n_paths=100)
