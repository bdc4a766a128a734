import math

import numpy as np
import pytest
from scipy import integrate, stats

from idealvoronoi import hyperbolic as hyp
from idealvoronoi.harness import poisson_chisquare
from idealvoronoi.ipvt import (
    CONVERGENCE_FLOORS,
    DEFAULT_MIXING_EVENT,
    BoxEvent,
    IdealConfiguration,
    act_on_ideal,
    agreement_fraction,
    convergence_experiment,
    extend_ideal,
    format_ideal,
    ipvt_family,
    mixing_experiment,
    normalization_offset,
    normalize_pvt,
    parse_ideal,
    s0_law_test,
    sample_ipvt,
    sample_pvt,
    truncation_soundness,
    unboundedness_experiment,
    winners_in_ball,
)
from idealvoronoi.measure import Configuration, HyperbolicDisk, SeedStream
from idealvoronoi.tessellation import assign


class TestSampler:
    def test_truncation_invariant(self):
        for i in range(200):
            ic = sample_ipvt(1.5, SeedStream(1, (i,)))
            assert ic.s[0] == ic.s_min
            assert np.all(np.diff(ic.s) >= 0)
            assert ic.s[-1] <= ic.s_min + 3.0 + 1e-12
            assert len(ic) >= 1

    def test_s0_law(self):
        rep = s0_law_test(n=10_000, seed=2)
        assert rep.passed

    def test_extra_count_given_s0(self):
        # N - 1 given s0 is Pois(e^{s0 + 2R} - e^{s0}); the probability integral
        # transform of the conditional Poisson CDF is checked for uniformity
        r = 0.5
        u = []
        rng = np.random.default_rng(3)
        for i in range(10_000):
            ic = sample_ipvt(r, SeedStream(3, (i,)))
            lam = math.exp(ic.s_min + 2 * r) - math.exp(ic.s_min)
            k = len(ic) - 1
            lo, hi = stats.poisson.cdf(k - 1, lam), stats.poisson.cdf(k, lam)
            u.append(lo + rng.random() * (hi - lo))
        assert stats.kstest(u, "uniform").pvalue > 0.01

    def test_angles_uniform(self):
        xi = np.concatenate([sample_ipvt(2.0, SeedStream(4, (i,))).xi for i in range(500)])
        assert stats.kstest(xi, stats.uniform(0, 2 * math.pi).cdf).pvalue > 0.01

    def test_min_cutoff(self):
        ic = sample_ipvt(0.5, SeedStream(5), min_cutoff=10.0)
        assert ic.cutoff == pytest.approx(max(10.0, ic.s_min + 1.0))

    def test_extend_keeps_original_atoms(self):
        ic = sample_ipvt(1.0, SeedStream(6))
        big = extend_ideal(ic, ic.cutoff + 2, SeedStream(7))
        assert big.cutoff == pytest.approx(ic.cutoff + 2)
        assert set(ic.ids) <= set(big.ids)
        orig = np.isin(big.ids, ic.ids)
        assert np.array_equal(big.s[orig], ic.s)

    def test_invalid(self):
        with pytest.raises(ValueError):
            sample_ipvt(0.0, 1)
        with pytest.raises(ValueError):
            IdealConfiguration([0.0, 1.0], [0.0, 5.0], 1.0)


class TestFamily:
    def test_single_atom_normalised(self):
        fam = ipvt_family(IdealConfiguration([1.0], [0.0], 1.0))
        assert fam.values([0j])[0, 0] == 0.0

    def test_lower_bound_in_ball(self):
        for i in range(50):
            ic = sample_ipvt(1.0, SeedStream(8, (i,)))
            pts, _ = winners_in_ball(ic, 1.0, 0.1)
            vals = ipvt_family(ic).values(pts)
            assert np.all(vals >= ic.s[None, :] - 1.0 - 1e-12)

    def test_winner_at_origin_is_lowest(self):
        for i in range(200):
            ic = sample_ipvt(1.0, SeedStream(9, (i,)))
            assert assign(ipvt_family(ic), [0j]).winner[0] == 0

    def test_winners_outside_validity(self):
        ic = sample_ipvt(1.0, SeedStream(10))
        with pytest.raises(ValueError):
            winners_in_ball(ic, ic.r_valid + 0.5, 0.1)

    def test_truncation_soundness(self):
        rep = truncation_soundness(n_draws=100, seed=11)
        assert rep.passed, rep.extra


class TestAction:
    def test_identity(self):
        ic = sample_ipvt(2.0, SeedStream(12))
        out = act_on_ideal(hyp.Isometry.identity(), ic)
        assert np.array_equal(out.xi, ic.xi) and np.array_equal(out.s, ic.s)
        assert out.r_valid == ic.r_valid

    def test_rotation(self):
        ic = sample_ipvt(2.0, SeedStream(13))
        out = act_on_ideal(hyp.Isometry.rotation(0.7), ic)
        assert np.allclose(out.s, ic.s, atol=1e-15)
        assert np.allclose(np.angle(np.exp(1j * (out.xi - ic.xi - 0.7))), 0.0, atol=1e-12)
        assert out.r_valid == pytest.approx(ic.r_valid)

    def test_assignment_equivariance(self):
        rng = np.random.default_rng(14)
        for i in range(30):
            g = hyp.random_isometry(rng, 1.0)
            ic = sample_ipvt(3.0, SeedStream(14, (i,)))
            out = act_on_ideal(g, ic)
            assert out.r_valid >= 2.0 - 1e-12
            y = hyp.from_polar(rng.random(100) * 0.5, rng.random(100) * 6.3)
            before = ic.ids[assign(ipvt_family(ic), y).winner]
            after = out.ids[assign(ipvt_family(out), hyp.apply_isometry(g, y)).winner]
            assert np.array_equal(before, after)

    def test_long_translation_warns(self):
        ic = sample_ipvt(0.5, SeedStream(15))
        out = act_on_ideal(hyp.Isometry.translation(10.0), ic)
        assert out.r_valid >= 0.0
        if out.r_valid == 0.0:
            assert out.warning


class TestNormalization:
    def test_offset(self):
        assert normalization_offset(1e-3) == pytest.approx(5.763025393132737, abs=1e-14)
        with pytest.raises(ValueError):
            normalization_offset(0.0)

    def test_value_at_origin_is_height(self):
        cfg = sample_pvt(1e-2, 1.0, SeedStream(16))
        ic, r_t = normalize_pvt(cfg, 1e-2)
        pts = cfg.points[ic.ids]
        d = hyp.distance_from_origin(hyp.as_complex(pts))
        assert np.allclose(d - r_t, ic.s, atol=1e-12)

    def test_coupling_error_vanishes_far_away(self):
        y = hyp.from_polar(0.8, 1.0)
        errs = []
        for rho in (5.0, 10.0, 15.0):
            x = hyp.from_polar(rho, 0.3)
            errs.append(abs(hyp.hyperbolic_distance(x, y) - rho - hyp.busemann(0.3, y)))
        assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-5

    def test_height_counts_at_small_intensity(self):
        t = 1e-3
        r_t = normalization_offset(t)
        # exact mean: polar integral of t sinh(rho) over rho <= r_t
        exact, _ = integrate.quad(lambda rho: 2 * math.pi * t * math.sinh(rho), 0, r_t)
        assert exact == pytest.approx(0.9937266842972212, rel=1e-12)
        counts = []
        for i in range(10_000):
            cfg = sample_pvt(t, 0.1, SeedStream(17, (i,)))
            ic, _ = normalize_pvt(cfg, t)
            counts.append(int(np.sum(ic.s <= 0.0)))
        counts = np.array(counts)
        se = counts.std(ddof=1) / math.sqrt(len(counts))
        assert abs(counts.mean() - exact) < 3 * se
        assert poisson_chisquare(counts, exact)[1] > 0.01

    def test_window_overflow(self):
        with pytest.raises(OverflowError, match="t=1e-09"):
            sample_pvt(1e-9, 1.0, 0)

    def test_single_point_agrees(self):
        cfg = Configuration([(0.5, 0.0)], HyperbolicDisk(1.2))
        q = hyp.as_real_pairs(hyp.from_polar(np.linspace(0, 1, 10), np.linspace(0, 6, 10)))
        assert agreement_fraction(cfg, 0.1, q) == 1.0

    def test_agreement_rotation_invariant(self):
        t = 1e-2
        cfg = sample_pvt(t, 1.0, SeedStream(18))
        rng = np.random.default_rng(18)
        q = hyp.from_polar(rng.random(64), rng.random(64) * 6.3)
        rot = np.exp(0.9j)
        cfg_rot = Configuration(hyp.as_real_pairs(hyp.as_complex(cfg.points) * rot), cfg.window, check=False)
        a = agreement_fraction(cfg, t, hyp.as_real_pairs(q))
        b = agreement_fraction(cfg_rot, t, hyp.as_real_pairs(q * rot))
        assert a == b

    def test_convergence_small(self):
        rep = convergence_experiment(n=500, seed=19, n_queries=16, floor=None)
        assert rep.extra["trend_ok"]
        assert rep.estimate[0] < rep.estimate[-1]

    def test_convergence_floor_registered(self):
        assert CONVERGENCE_FLOORS[(1e-3, 1.0, 64)] < 1.0
        with pytest.raises(ValueError):
            convergence_experiment(intensities=(1e-3, 1e-2), n=1)


class TestMixing:
    def test_event_probability(self):
        ev = DEFAULT_MIXING_EVENT
        assert ev.mass() == pytest.approx((1 - math.exp(-1)) / 8)
        assert ev.probability() == pytest.approx(1 - math.exp(-ev.mass()))

    def test_identity_case_is_variance(self):
        rep = mixing_experiment(lengths=(0.0,), n=10_000, seed=20)
        p = DEFAULT_MIXING_EVENT.probability()
        assert abs(rep.estimate[0] - p * (1 - p)) < 3 * rep.se[0]
        assert abs(rep.extra["mu_B_z"]) < 3

    def test_decay(self):
        rep = mixing_experiment(lengths=(0.0, 20.0), n=10_000, seed=21)
        assert rep.passed
        assert abs(rep.estimate[1]) < abs(rep.estimate[0])

    def test_distinct_events(self):
        b = BoxEvent(math.pi, 1.5 * math.pi, -0.5, 0.5)
        rep = mixing_experiment(DEFAULT_MIXING_EVENT, b, lengths=(0.0,), n=5_000, seed=22)
        # disjoint boxes: independent already at L = 0
        assert abs(rep.estimate[0]) < 3 * rep.se[0]


class TestUnboundedness:
    def test_small_run(self):
        rep = unboundedness_experiment(n_draws=30, seed=23)
        assert rep.estimate >= 0.95
        assert rep.extra["atoms_probed"] >= 30


class TestSerialisation:
    def test_round_trip(self):
        ic = sample_ipvt(2.0, SeedStream(24, (3,)))
        text = format_ideal(ic)
        back = parse_ideal(text)
        assert np.array_equal(back.xi, ic.xi) and np.array_equal(back.s, ic.s)
        assert back.r_valid == ic.r_valid and back.seed == ic.seed
        assert text.startswith("# R_valid=")
        assert all(ln.startswith("xi=") for ln in text.splitlines()[1:])

    def test_missing_header(self):
        with pytest.raises(ValueError):
            parse_ideal("xi=0 s=0\n")
