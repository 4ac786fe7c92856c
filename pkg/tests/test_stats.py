import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mcvd.channel import ChannelParams, hit_fraction, hit_rate
from mcvd.errors import ConfigError
from mcvd.stats import (DetectionWindow, LinkConfig, ReusableWindow, TapStats,
                        reuse_adjusted_stats, validate_link, window_stats)
from conftest import make_absorbing_link


class TestLinkConfig:
    def test_defaults_sampling_interval(self):
        cfg = LinkConfig(Q=100, Ts=1.0, L=2, N=20)
        assert cfg.t_s == pytest.approx(0.05)

    def test_rejects_bad_fields(self):
        with pytest.raises(ConfigError) as err:
            LinkConfig(Q=-1, Ts=0.0, L=-2)
        assert len(err.value.violations) == 3

    def test_symbol_must_clear_peak(self, absorbing):
        cfg = LinkConfig(Q=100, Ts=0.01, L=1)  # peak is ~0.021 s
        with pytest.raises(ConfigError):
            validate_link(cfg, absorbing)
        with pytest.warns(UserWarning):
            validate_link(cfg, absorbing, allow_slow_channel=True)


class TestWindows:
    def test_detection_window_forms(self):
        with pytest.raises(ValueError):
            DetectionWindow()
        with pytest.raises(ValueError):
            DetectionWindow(t1=0.1, t2=0.2, n1=0, n2=3)
        with pytest.raises(ValueError):
            DetectionWindow(t1=0.2, t2=0.1)
        assert DetectionWindow(n1=2, n2=2).sampled

    def test_reuse_pairing(self):
        w = DetectionWindow(t1=0.05, t2=0.2)
        ReusableWindow(t_u=0.04).check_pairing(w)
        with pytest.raises(ValueError):
            ReusableWindow(t_u=0.05).check_pairing(w)
        with pytest.raises(ValueError):
            ReusableWindow(n_u=1).check_pairing(w)

    def test_tap_stats_invariants(self):
        with pytest.raises(ValueError):
            TapStats(np.array([0.1, -0.2]), np.array([0.1, 0.1]), "absorbing")
        ts = TapStats(np.array([0.1, -0.2]), np.array([0.1, 0.1]), "absorbing",
                      adjusted=True)
        assert ts.taps == 1
        with pytest.raises(ValueError):
            TapStats(np.array([0.1]), np.array([-0.1]), "absorbing", adjusted=True)


class TestWindowStats:
    def test_absorbing_variance_identity(self, absorbing):
        cfg = make_absorbing_link(L=4)
        ts = window_stats(DetectionWindow(t1=0.013, t2=0.17), cfg, absorbing)
        assert np.array_equal(ts.var, ts.mean * (1.0 - ts.mean))

    def test_passive_single_sample(self, passive, passive_link):
        from mcvd.channel import sample_prob

        ts = window_stats(DetectionWindow(n1=5, n2=5), passive_link, passive)
        for i in range(passive_link.L + 1):
            assert ts.mean[i] == pytest.approx(sample_prob(5, i, passive_link, passive),
                                               rel=1e-14)
        assert np.array_equal(ts.var, ts.mean)

    def test_full_window_desired_tap_matches_quadrature(self, absorbing):
        cfg = make_absorbing_link()
        ts = window_stats(DetectionWindow(t1=0.0, t2=cfg.Ts), cfg, absorbing)
        ref, _ = integrate.quad(lambda t: hit_rate(t, absorbing), 1e-12, cfg.Ts, limit=200)
        assert ts.mean[0] == pytest.approx(hit_fraction(0.0, cfg.Ts, absorbing), rel=1e-12)
        assert ts.mean[0] == pytest.approx(ref, abs=1e-9)

    def test_kind_window_mismatch(self, absorbing, passive, passive_link):
        with pytest.raises(ValueError):
            window_stats(DetectionWindow(n1=0, n2=3), make_absorbing_link(), absorbing)
        with pytest.raises(ValueError):
            window_stats(DetectionWindow(t1=0.0, t2=0.5), passive_link, passive)


class TestReuseAdjustedStats:
    def test_empty_reuse_is_identity(self, absorbing):
        cfg = make_absorbing_link()
        w = DetectionWindow(t1=0.01, t2=0.18)
        plain = window_stats(w, cfg, absorbing)
        adj = reuse_adjusted_stats(w, ReusableWindow(t_u=0.0), cfg, absorbing)
        assert np.array_equal(adj.mean, plain.mean)
        assert np.array_equal(adj.var, plain.var)
        assert adj.adjusted

    def test_variances_never_shrink(self, absorbing, passive, passive_link):
        cfg = make_absorbing_link()
        w = DetectionWindow(t1=0.01, t2=0.18)
        plain = window_stats(w, cfg, absorbing)
        adj = reuse_adjusted_stats(w, ReusableWindow(t_u=0.005), cfg, absorbing)
        assert np.all(adj.var >= plain.var)
        wp = DetectionWindow(n1=4, n2=passive_link.N)
        plain_p = window_stats(wp, passive_link, passive)
        adj_p = reuse_adjusted_stats(wp, ReusableWindow(n_u=2), passive_link, passive)
        assert np.all(adj_p.var >= plain_p.var)

    def test_first_tap_drop_equals_prefix_fraction(self, absorbing):
        # the mean removed from tap 1 is exactly the prefix fraction shifted
        # one symbol: hit_fraction(Ts, Ts + t_u)
        cfg = make_absorbing_link(L=1)
        w = DetectionWindow(t1=0.01, t2=0.18)
        t_u = 0.004
        plain = window_stats(w, cfg, absorbing)
        adj = reuse_adjusted_stats(w, ReusableWindow(t_u=t_u), cfg, absorbing)
        drop = plain.mean[1] - adj.mean[1]
        assert drop == pytest.approx(hit_fraction(cfg.Ts, cfg.Ts + t_u, absorbing),
                                     rel=1e-12)

    def test_invalid_pairing_rejected(self, absorbing):
        cfg = make_absorbing_link()
        w = DetectionWindow(t1=0.01, t2=0.18)
        with pytest.raises(ValueError):
            reuse_adjusted_stats(w, ReusableWindow(t_u=0.02), cfg, absorbing)

    @given(st.floats(0.002, 0.19), st.floats(1e-4, 1.0), st.floats(1e-4, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_interference_reduction_mechanism(self, t1, width_frac, tu_frac):
        # whenever the prefix removes at most twice the window tap mass, the
        # adjusted interference magnitude cannot exceed the plain one
        p = ChannelParams(d=3.2e-6, r=4.5e-6, D=79.4e-12)
        cfg = make_absorbing_link(L=3)
        t2 = t1 + width_frac * (cfg.Ts - t1)
        if t2 <= t1 or t2 > cfg.Ts:
            return
        w = DetectionWindow(t1=t1, t2=t2)
        r = ReusableWindow(t_u=tu_frac * t1 * 0.999)
        plain = window_stats(w, cfg, p)
        adj = reuse_adjusted_stats(w, r, cfg, p)
        prefix = plain.mean - adj.mean
        for i in range(1, cfg.L + 1):
            if prefix[i] <= 2 * plain.mean[i]:
                assert abs(adj.mean[i]) <= plain.mean[i] + 1e-18

    def test_construction_deterministic(self, absorbing):
        cfg = make_absorbing_link()
        w = DetectionWindow(t1=0.01, t2=0.18)
        r = ReusableWindow(t_u=0.005)
        a = reuse_adjusted_stats(w, r, cfg, absorbing)
        b = reuse_adjusted_stats(w, r, cfg, absorbing)
        assert a == b
