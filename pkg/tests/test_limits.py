import math

import numpy as np
import pytest

from phylonetsim import ModelParams, RngStream
from phylonetsim.analytics import nu_circ_pmf, zeta_tilt
from phylonetsim.limits import (
    brownian_excursion_max,
    crt_constants,
    gw_size_probability,
    prob_N,
    prob_N_table,
    reversal_mark_factor,
    sample_focal_network,
    sample_local_ball,
    sample_spinal_network,
    verify_crt_scaling,
)
from phylonetsim.network import tilted_offspring_cached
from phylonetsim.rng import BufferedRng
import phylonetsim.verify as V

P111 = ModelParams(1.0, 1.0, 1.0)
P222 = ModelParams(0.2, 0.2, 0.2)


class TestGwSizeProbability:
    def test_small_n_identities(self):
        _, probs = tilted_offspring_cached(P111)
        v1, e1 = gw_size_probability(probs, 1)
        assert v1 == pytest.approx(float(probs[0]), rel=1e-12) and e1 <= 1e-12
        v2, _ = gw_size_probability(probs, 2)
        assert v2 == pytest.approx(float(probs[0] * probs[1]), rel=1e-12)

    def test_asymptotic_ratio(self):
        tilt, probs = tilted_offspring_cached(P111)
        ratios = []
        for n in (250, 500, 1000, 2000):
            v, err = gw_size_probability(probs, n)
            assert err <= 1e-10
            ratios.append(v / (n**-1.5 / math.sqrt(2 * math.pi * tilt.sigma_hat_sq)))
        assert abs(ratios[-1] - 1.0) <= 0.10
        assert all(abs(b - 1.0) <= abs(a - 1.0) for a, b in zip(ratios, ratios[1:]))

    def test_input_validation(self):
        _, probs = tilted_offspring_cached(P111)
        with pytest.raises(ValueError):
            gw_size_probability(probs, 0)


class TestExcursionOracle:
    def test_matches_brownian_value(self):
        est = brownian_excursion_max(RngStream(500), n_steps=100_001, replicates=150)
        # true E[sup e] = sqrt(pi/2)
        assert abs(est.value - math.sqrt(math.pi / 2.0)) <= 4.0 * est.std_error


class TestCrtConstants:
    def test_dual_estimators_agree(self):
        cc = crt_constants(P111, RngStream(501), n_samples=40_000)
        assert cc.EUstar.overlaps(cc.EUstar_formula)
        assert cc.ell.overlaps(cc.ell_crosscheck)
        assert cc.C.value * 2.0 * cc.EUstar.value == pytest.approx(
            math.sqrt(cc.sigma_hat_sq), abs=1e-12
        )

    def test_supercritical_params_too(self):
        cc = crt_constants(P222, RngStream(502), n_samples=20_000)
        assert cc.EUstar.overlaps(cc.EUstar_formula)
        assert cc.ell.overlaps(cc.ell_crosscheck)
        assert not cc.EUstar.flags  # zeta < 1: exact rejection regime, no ESS flag

    def test_size_check_at_small_n(self):
        cc = crt_constants(P111, RngStream(503), n_samples=30_000)
        report = verify_crt_scaling(P111, 150, 80, RngStream(504), constants=cc)
        assert report["size_check_passed"], report["mean_size_per_color"]
        assert 0.9 <= report["mean_height_correlation"] <= 1.0

    def test_critical_params_collapse_the_bias(self):
        # at zeta = 1 the importance weights degenerate to 1 and the two
        # EUstar estimators remain consistent
        from phylonetsim.analytics import critical_mu

        p = ModelParams(0.2, 0.2, critical_mu(0.2, 0.2))
        cc = crt_constants(p, RngStream(514), n_samples=15_000)
        assert abs(cc.zeta - 1.0) <= 1e-6
        assert cc.EUstar.overlaps(cc.EUstar_formula)
        assert reversal_mark_factor(p, cc.zeta, 5) == pytest.approx(1.0, abs=1e-5)


class TestReversalFactor:
    def test_identity_at_one(self):
        for k in (1, 3, 7):
            assert reversal_mark_factor(P111, 1.0, k) == 1.0

    def test_explicit_product(self):
        z = 1.5
        expect = (1 + 0.5 * 1 / 2) * (1 + 0.5 * 1 / 3)
        assert reversal_mark_factor(P111, z, 2) == pytest.approx(expect, rel=1e-14)


class TestProbN:
    def test_basics(self):
        for c in V.check_prob_N_basics(P111):
            assert c.passed, c.name

    def test_single_value_accessor(self):
        zeta = zeta_tilt(P111).zeta
        tab = prob_N_table(P111, zeta)
        assert prob_N(P111, zeta, 1) == pytest.approx(float(tab[0]), rel=1e-12)
        assert prob_N(P111, zeta, 10_000) == 0.0
        with pytest.raises(ValueError):
            prob_N(P111, zeta, 0)

    def test_zeta_one_reduces_to_nu(self):
        tab = prob_N_table(P222, 1.0)
        nu = nu_circ_pmf(P222)
        k = min(tab.size, nu.probs.size)
        assert np.allclose(tab[:k], nu.probs[:k], atol=1e-9)


class TestFocalSpinal:
    def test_focal_checks(self):
        for c in V.check_focal_sampler(P111, seed=505, n=12_000):
            assert c.passed, (c.name, c.statistic, c.threshold)

    def test_spinal_checks(self):
        for c in V.check_spinal_sampler(P111, seed=506, n=12_000):
            assert c.passed, (c.name, c.statistic, c.threshold)

    def test_rejection_mode_weight_is_one(self):
        # zeta < 1: exact rejection, unit weights
        zeta = zeta_tilt(P222).zeta
        buf = BufferedRng(RngStream(507))
        for _ in range(50):
            net, w = sample_focal_network(P222, zeta, buf)
            assert w == 1.0
            assert net.focal_point is not None and net.focal_point[1] == 0.0

    def test_focal_alive_count_is_K(self):
        buf = BufferedRng(RngStream(508))
        for _ in range(100):
            net, _ = sample_focal_network(P111, 1.0, buf)
            assert len(net.alive_at(0.0)) == net.trajectory.pre_zero_state()


class TestLocalBall:
    def test_structure_checks(self):
        for c in V.check_local_ball(P111, seed=509, n=600):
            assert c.passed, c.name

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            sample_local_ball(P111, 1.0, -1, RngStream(510))

    def test_truncation_depths(self):
        zeta = zeta_tilt(P111).zeta
        ball = sample_local_ball(P111, zeta, 2, RngStream(511))
        for v in ball.vertices:
            assert v.depth <= 2
            if v.depth == 2 and v.role == "offspring":
                assert all(c == -1 for c in v.children)


class TestFiniteN:
    def test_local_laws_small(self):
        checks = V.check_finite_n_local(
            P111, seed=512, n=400, n_networks=150, ball_samples=8000
        )
        for c in checks:
            assert c.passed, (c.name, c.statistic, c.threshold)

    def test_time_since_mutation_small(self):
        c = V.check_time_since_mutation(P111, seed=513, n_networks=150, n=400, n_mc=15_000)
        assert c.passed, (c.statistic, c.threshold)
