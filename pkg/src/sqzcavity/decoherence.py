"""Decoherence path of the injected squeezed field.

Covers the squeeze source, the injection loss ahead of the cavity, the slow
relative phase jitter between the pump-defined cavity eigenbasis and the
squeeze/LO frame, and the readout loss folded into the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .sensor import (
    CavityParams,
    InputQuadratureState,
    PhysicalScale,
    anti_quadrature_noise_spectrum,
    quadrature_noise_spectrum,
    signal_transfer_power,
)

JITTER_MODELS = ("pump_frame", "input_frame")


@dataclass(frozen=True)
class ExternalSqueezeSource:
    """Squeeze source characterized by its dB level below vacuum."""

    squeeze_db: float

    def __post_init__(self):
        if self.squeeze_db < 0.0:
            raise ValueError(f"squeeze_db must be >= 0, got {self.squeeze_db}")

    @property
    def r_ext(self) -> float:
        """Squeeze parameter, e^(-2 r_ext) = 10^(-squeeze_db/10)."""
        return self.squeeze_db * math.log(10.0) / 20.0

    @property
    def beta(self) -> float:
        """Inverse squeezed-quadrature variance e^(2 r_ext) >= 1."""
        return 10.0 ** (self.squeeze_db / 10.0)

    @classmethod
    def from_squeeze_parameter(cls, r_ext: float) -> "ExternalSqueezeSource":
        return cls(squeeze_db=20.0 * r_ext / math.log(10.0))


@dataclass(frozen=True)
class DecoherenceChain:
    """Injection loss, phase-jitter RMS (rad) and readout loss."""

    eps_inj: float
    theta_rms: float
    eps_read: float

    def __post_init__(self):
        for name in ("eps_inj", "eps_read"):
            val = getattr(self, name)
            if not 0.0 <= val < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {val}")
        if self.theta_rms < 0.0:
            raise ValueError(f"theta_rms must be >= 0, got {self.theta_rms}")

    @property
    def is_pure(self) -> bool:
        """No injection loss and no jitter (readout loss may still be nonzero)."""
        return self.eps_inj == 0.0 and self.theta_rms == 0.0


def input_state_from_source(src: ExternalSqueezeSource, eps_inj: float
                            ) -> InputQuadratureState:
    """Quadrature state at the coupler after the injection loss.

    Standard loss map: V -> (1-eps)V + eps applied to both quadratures.
    """
    if not 0.0 <= eps_inj < 1.0:
        raise ValueError(f"eps_inj must be in [0, 1), got {eps_inj}")
    e2r = math.exp(-2.0 * src.r_ext)
    v_sq = (1.0 - eps_inj) * e2r + eps_inj
    v_anti = (1.0 - eps_inj) / e2r + eps_inj
    return InputQuadratureState(v_sq=v_sq, v_anti=v_anti)


def jitter_mixing_weight(theta_rms: float) -> float:
    """Gaussian-jitter average of sin^2(theta): s = (1 - e^(-2 theta_rms^2))/2.

    Small-angle limit s ~ theta_rms^2; fully dephased limit 1/2.
    """
    if theta_rms < 0.0:
        raise ValueError("theta_rms must be >= 0")
    return 0.5 * (1.0 - math.exp(-2.0 * theta_rms * theta_rms))


def jittered_signal_factor(theta_rms: float) -> float:
    """Multiplicative factor on the signal-transfer power under phase jitter.

    The coherent signal amplitude averages as <cos theta> = e^(-theta^2/2);
    the detected power carries its square.
    """
    if theta_rms < 0.0:
        raise ValueError("theta_rms must be >= 0")
    return math.exp(-theta_rms * theta_rms)


def _check_model(model: str):
    if model not in JITTER_MODELS:
        raise ValueError(f"jitter model must be one of {JITTER_MODELS}, got {model!r}")


def measured_noise_with_jitter(cav: CavityParams, q, input_state: InputQuadratureState,
                               chain: DecoherenceChain, omega,
                               model: str = "pump_frame"):
    """Effective detected noise with phase jitter mixing in the anti-quadrature.

    input_state is the post-injection-loss state at the coupler; only the
    chain's theta_rms and eps_read act here.

    pump_frame (default): the jitter rotates the detected frame relative to the
    cavity eigenbasis, blending the two cavity OUTPUT spectra,
    S_eff = (1-s)*S_readout(q) + s*S_anti(q).  This reproduces the unbounded
    noise growth as q approaches threshold.
    input_frame (alternative): the jitter scrambles the INPUT state only,
    V_eff = (1-s)*v_sq + s*v_anti fed through the readout-quadrature response.
    """
    _check_model(model)
    s = jitter_mixing_weight(chain.theta_rms)
    if model == "input_frame":
        v_eff = (1.0 - s) * input_state.v_sq + s * input_state.v_anti
        return quadrature_noise_spectrum(cav, q, v_eff, chain.eps_read, omega)
    main = quadrature_noise_spectrum(cav, q, input_state.v_sq, chain.eps_read, omega)
    if s == 0.0:
        return main
    anti = anti_quadrature_noise_spectrum(cav, q, input_state.v_anti,
                                          chain.eps_read, omega)
    return (1.0 - s) * main + s * anti


def measured_anti_noise_with_jitter(cav: CavityParams, q,
                                    input_state: InputQuadratureState,
                                    chain: DecoherenceChain, omega,
                                    model: str = "pump_frame"):
    """Detected noise of the orthogonal quadrature; mirror blend of the above."""
    _check_model(model)
    s = jitter_mixing_weight(chain.theta_rms)
    if model == "input_frame":
        v_eff = (1.0 - s) * input_state.v_anti + s * input_state.v_sq
        return anti_quadrature_noise_spectrum(cav, q, v_eff, chain.eps_read, omega)
    anti = anti_quadrature_noise_spectrum(cav, q, input_state.v_anti,
                                          chain.eps_read, omega)
    if s == 0.0:
        return anti
    main = quadrature_noise_spectrum(cav, q, input_state.v_sq, chain.eps_read, omega)
    return (1.0 - s) * anti + s * main


def measured_sensitivity(cav: CavityParams, q, input_state: InputQuadratureState,
                         chain: DecoherenceChain, omega,
                         model: str = "pump_frame",
                         scale: PhysicalScale | None = None):
    """Full-chain noise-to-signal ratio including the jittered signal factor."""
    s_eff = measured_noise_with_jitter(cav, q, input_state, chain, omega, model=model)
    t2 = signal_transfer_power(cav, q, chain.eps_read, omega, scale=scale)
    return s_eff / (t2 * jittered_signal_factor(chain.theta_rms))
