"""Decoherence chain: loss map, jitter statistics, noise blending."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqzcavity import (
    CavityParams,
    DecoherenceChain,
    ExternalSqueezeSource,
    InputQuadratureState,
    anti_quadrature_noise_spectrum,
    input_state_from_source,
    jitter_mixing_weight,
    jittered_signal_factor,
    measured_anti_noise_with_jitter,
    measured_noise_with_jitter,
    measured_sensitivity,
    quadrature_noise_spectrum,
)


class TestSource:
    def test_beta_relation(self):
        src = ExternalSqueezeSource(10.5)
        assert src.beta == pytest.approx(10**1.05)
        assert math.exp(-2.0 * src.r_ext) == pytest.approx(10**-1.05)
        assert ExternalSqueezeSource(0.0).beta == 1.0

    def test_roundtrip_from_parameter(self):
        src = ExternalSqueezeSource.from_squeeze_parameter(1.2)
        assert src.r_ext == pytest.approx(1.2)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ExternalSqueezeSource(-1.0)


class TestChain:
    def test_validation(self):
        with pytest.raises(ValueError):
            DecoherenceChain(eps_inj=1.0, theta_rms=0.0, eps_read=0.0)
        with pytest.raises(ValueError):
            DecoherenceChain(eps_inj=0.0, theta_rms=-0.1, eps_read=0.0)
        assert DecoherenceChain(0.0, 0.0, 0.1).is_pure
        assert not DecoherenceChain(0.01, 0.0, 0.1).is_pure


class TestLossMap:
    def test_vacuum_unchanged(self):
        state = input_state_from_source(ExternalSqueezeSource(0.0), 0.0)
        assert (state.v_sq, state.v_anti) == (1.0, 1.0)

    def test_frozen_105(self):
        state = input_state_from_source(ExternalSqueezeSource(10.5), 0.08)
        assert state.v_sq == pytest.approx(0.16199508630830456, abs=1e-12)
        assert state.v_anti == pytest.approx(10.402569779578066, abs=1e-10)

    def test_frozen_54(self):
        state = input_state_from_source(ExternalSqueezeSource(5.4), 0.08)
        assert state.v_sq == pytest.approx(0.34533089828764774, abs=1e-12)
        assert state.v_anti == pytest.approx(3.2699790241632916, abs=1e-12)

    @settings(max_examples=200)
    @given(db=st.floats(0.0, 20.0), eps=st.floats(0.0, 0.99))
    def test_uncertainty_bound_preserved(self, db, eps):
        state = input_state_from_source(ExternalSqueezeSource(db), eps)
        product = state.v_sq * state.v_anti
        assert product >= 1.0 - 1e-12
        if eps > 1e-6 and db > 1e-3:
            assert product > 1.0  # strictly impure once lossy

    @settings(max_examples=100)
    @given(db=st.floats(0.1, 20.0), e1=st.floats(0.0, 0.5), de=st.floats(0.01, 0.4))
    def test_monotone_toward_vacuum(self, db, e1, de):
        src = ExternalSqueezeSource(db)
        a = input_state_from_source(src, e1)
        b = input_state_from_source(src, e1 + de)
        assert b.v_sq > a.v_sq
        assert b.v_anti < a.v_anti


class TestJitterStatistics:
    def test_mixing_weight_limits(self):
        assert jitter_mixing_weight(0.0) == 0.0
        assert jitter_mixing_weight(50.0) == pytest.approx(0.5)

    def test_mixing_weight_frozen(self):
        assert jitter_mixing_weight(0.05) == pytest.approx(0.00249376040365884,
                                                           abs=1e-15)

    @given(theta=st.floats(0.0, 0.2))
    def test_small_angle_limit(self, theta):
        assert jitter_mixing_weight(theta) <= theta**2 + 1e-12

    def test_signal_factor(self):
        assert jittered_signal_factor(0.0) == 1.0
        assert jittered_signal_factor(0.05) == pytest.approx(0.9975031223974601,
                                                             abs=1e-15)
        assert jittered_signal_factor(0.015) == pytest.approx(0.9997750253106017,
                                                              abs=1e-15)


class TestNoiseBlend:
    def test_no_jitter_reduces_to_main_channel(self, cav, state_105):
        chain = DecoherenceChain(0.08, 0.0, 0.10)
        blend = measured_noise_with_jitter(cav, 0.03, state_105, chain, 0.0)
        main = quadrature_noise_spectrum(cav, 0.03, state_105.v_sq, 0.10, 0.0)
        assert blend == main

    def test_frozen_blends(self, cav):
        state = InputQuadratureState(0.162, 10.40)
        chain = DecoherenceChain(0.08, 0.05, 0.10)
        assert measured_noise_with_jitter(cav, 0.0, state, chain, 0.0) == \
            pytest.approx(0.5281741454110334, abs=1e-12)
        assert measured_noise_with_jitter(cav, -0.05, state, chain, 0.0) == \
            pytest.approx(1.6311128467876885, abs=1e-12)

    @settings(max_examples=100)
    @given(theta=st.floats(0.0, 1.0), qfrac=st.floats(-0.95, 0.95),
           v=st.floats(0.05, 0.9))
    def test_convex_combination(self, theta, qfrac, v):
        cav = CavityParams(0.11, 0.012)
        q = qfrac * cav.q_threshold
        state = InputQuadratureState(v, 1.0 / v)
        chain = DecoherenceChain(0.0, theta, 0.1)
        blend = measured_noise_with_jitter(cav, q, state, chain, 0.0)
        lo = min(quadrature_noise_spectrum(cav, q, v, 0.1, 0.0),
                 anti_quadrature_noise_spectrum(cav, q, 1.0 / v, 0.1, 0.0))
        hi = max(quadrature_noise_spectrum(cav, q, v, 0.1, 0.0),
                 anti_quadrature_noise_spectrum(cav, q, 1.0 / v, 0.1, 0.0))
        assert lo - 1e-12 <= blend <= hi + 1e-12

    def test_divergence_near_threshold_only_with_jitter(self, cav, state_105):
        quiet = DecoherenceChain(0.08, 0.0, 0.10)
        noisy = DecoherenceChain(0.08, 0.05, 0.10)
        q_near = 0.999999 * cav.q_threshold
        s_quiet = measured_noise_with_jitter(cav, q_near, state_105, quiet, 0.0)
        s_noisy = measured_noise_with_jitter(cav, q_near, state_105, noisy, 0.0)
        assert s_quiet < 2.0          # stays finite without jitter
        assert s_noisy > 1e6          # blows up through the anti channel

    def test_input_frame_alternative(self, cav, state_105):
        chain = DecoherenceChain(0.08, 0.05, 0.10)
        s = jitter_mixing_weight(0.05)
        v_eff = (1.0 - s) * state_105.v_sq + s * state_105.v_anti
        expected = quadrature_noise_spectrum(cav, 0.02, v_eff, 0.10, 0.0)
        got = measured_noise_with_jitter(cav, 0.02, state_105, chain, 0.0,
                                         model="input_frame")
        assert got == pytest.approx(expected, rel=1e-14)
        # input-frame model stays finite at threshold, unlike the default
        assert measured_noise_with_jitter(cav, 0.9999 * cav.q_threshold,
                                          state_105, chain, 0.0,
                                          model="input_frame") < 10.0

    def test_unknown_model_rejected(self, cav, state_105, chain_jitter):
        with pytest.raises(ValueError):
            measured_noise_with_jitter(cav, 0.0, state_105, chain_jitter, 0.0,
                                       model="sideways")

    def test_anti_blend_mirrors(self, cav, state_105):
        chain = DecoherenceChain(0.08, 0.05, 0.10)
        s = jitter_mixing_weight(0.05)
        expected = ((1.0 - s) * anti_quadrature_noise_spectrum(
            cav, 0.02, state_105.v_anti, 0.10, 0.0)
            + s * quadrature_noise_spectrum(cav, 0.02, state_105.v_sq, 0.10, 0.0))
        assert measured_anti_noise_with_jitter(cav, 0.02, state_105, chain, 0.0) \
            == pytest.approx(expected, rel=1e-14)


class TestMeasuredSensitivity:
    def test_composition(self, cav, state_105, chain_jitter):
        from sqzcavity import signal_transfer_power
        q = -0.01
        s_eff = measured_noise_with_jitter(cav, q, state_105, chain_jitter, 0.0)
        t2 = signal_transfer_power(cav, q, 0.10, 0.0)
        expected = s_eff / (t2 * jittered_signal_factor(0.05))
        assert measured_sensitivity(cav, q, state_105, chain_jitter, 0.0) == \
            pytest.approx(expected, rel=1e-14)
