"""Closed-form quantum-noise model of a single-mode cavity force sensor.

A degenerate parametric process inside the cavity acts diagonally on the two
field quadratures: roundtrip power gain ``q > 0`` deamplifies (squeezes) the
signal quadrature, ``q < 0`` amplifies it.  All spectra are vacuum-normalized
(shot noise = 1) and the sideband frequency ``omega`` is dimensionless, in the
units where the cavity response denominator reads
``(t_c + eps_int + q)**2 + omega**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularResponseError

PLANCK_REDUCED = 1.054571817e-34  # J s
SPEED_OF_LIGHT = 299792458.0      # m / s

# roundtrip budget above which the single-mode model becomes questionable
SINGLE_MODE_BUDGET = 0.3


@dataclass(frozen=True)
class CavityParams:
    """Roundtrip-normalized cavity constants.

    t_c:     power transmission of the incoupling mirror per roundtrip
    eps_int: internal power loss per roundtrip
    """

    t_c: float
    eps_int: float

    def __post_init__(self):
        if not 0.0 < self.t_c < 1.0:
            raise ValueError(f"t_c must be in (0, 1), got {self.t_c}")
        if not 0.0 <= self.eps_int < 1.0:
            raise ValueError(f"eps_int must be in [0, 1), got {self.eps_int}")

    @property
    def q_threshold(self) -> float:
        """Parametric oscillation threshold of the roundtrip power gain."""
        return self.t_c + self.eps_int

    @property
    def single_mode_warning(self) -> bool:
        """True when the roundtrip budget is too large for the single-mode model."""
        return self.t_c + self.eps_int > SINGLE_MODE_BUDGET


def gain_validity_warning(cav: CavityParams, q: float) -> bool:
    """Single-mode validity flag including the parametric gain contribution."""
    return cav.t_c + cav.eps_int + abs(q) > SINGLE_MODE_BUDGET


@dataclass(frozen=True)
class InputQuadratureState:
    """Variance pair of the field entering the coupler, vacuum = 1.

    v_sq is the variance of the readout (signal) quadrature, v_anti of the
    orthogonal one.  Physical states satisfy v_sq * v_anti >= 1.
    """

    v_sq: float
    v_anti: float

    def __post_init__(self):
        if self.v_sq <= 0.0 or self.v_anti <= 0.0:
            raise ValueError("quadrature variances must be positive")
        if self.v_sq * self.v_anti < 1.0 - 1e-12:
            raise ValueError(
                f"uncertainty bound violated: v_sq*v_anti = {self.v_sq * self.v_anti}"
            )

    @classmethod
    def vacuum(cls) -> "InputQuadratureState":
        return cls(1.0, 1.0)

    @property
    def is_pure(self) -> bool:
        return abs(self.v_sq * self.v_anti - 1.0) < 1e-12


@dataclass(frozen=True)
class PhysicalScale:
    """Optional physical scale of the sensitivity: carrier wavelength (m) and
    intracavity power (W)."""

    wavelength: float
    intracavity_power: float

    def __post_init__(self):
        if self.wavelength <= 0.0 or self.intracavity_power <= 0.0:
            raise ValueError("wavelength and intracavity_power must be positive")

    @property
    def sensitivity_prefactor(self) -> float:
        """hbar*lambda*c / (8*pi*P_c), converts normalized S_x to physical units."""
        return (PLANCK_REDUCED * self.wavelength * SPEED_OF_LIGHT
                / (8.0 * math.pi * self.intracavity_power))

    @property
    def transfer_prefactor(self) -> float:
        """8*pi*P_c / (hbar*lambda*c), converts normalized |T|^2 to physical units."""
        return 1.0 / self.sensitivity_prefactor


def omega_from_hz(f_hz, fsr_hz: float):
    """Map physical sideband frequency (Hz) to the normalized omega.

    The normalized time unit is the cavity roundtrip time 1/FSR and the
    model's omega is twice the normalized angular frequency:
    omega = 2 * (2*pi*f) / FSR.  Established by the transfer-matrix
    derivation in the oracle module (rates t_c/2, eps_int/2, q/2 per
    normalized time).
    """
    if fsr_hz <= 0.0:
        raise ValueError("fsr_hz must be positive")
    return 4.0 * math.pi * np.asarray(f_hz, dtype=float) / fsr_hz


def _maybe_scalar(x: np.ndarray):
    return x.item() if x.ndim == 0 else x


def _check_eps_read(eps_read: float):
    if not 0.0 <= eps_read < 1.0:
        raise ValueError(f"eps_read must be in [0, 1), got {eps_read}")


def quadrature_noise_spectrum(cav: CavityParams, q, v_in, eps_read: float, omega):
    """Vacuum-normalized noise power of the readout quadrature.

    S = 1 - (1-eps_read)/((t_c+eps_int+q)^2 + omega^2)
          * [4*t_c*q + (1-v_in)*((t_c-eps_int-q)^2 + omega^2)]

    v_in is the input variance in the observed quadrature; v_in = 1 recovers
    shot noise for a passive cavity at any frequency.
    """
    _check_eps_read(eps_read)
    q = np.asarray(q, dtype=float)
    v_in = np.asarray(v_in, dtype=float)
    omega = np.asarray(omega, dtype=float)
    denom = (cav.t_c + cav.eps_int + q) ** 2 + omega**2
    if np.any(denom == 0.0):
        raise SingularResponseError(
            "noise spectrum evaluated at the amplification pole "
            f"(q = {-cav.q_threshold}, omega = 0)"
        )
    numer = (cav.t_c - cav.eps_int - q) ** 2 + omega**2
    s = 1.0 - (1.0 - eps_read) / denom * (4.0 * cav.t_c * q + (1.0 - v_in) * numer)
    return _maybe_scalar(s)


def anti_quadrature_noise_spectrum(cav: CavityParams, q, v_anti, eps_read: float, omega):
    """Noise power of the quadrature orthogonal to the readout.

    The degenerate parametric interaction is quadrature-diagonal with opposite
    gains, so this is the readout-quadrature formula with q -> -q and the
    orthogonal input variance.  Validated against the two-quadrature transfer
    matrices in the oracle module.
    """
    return quadrature_noise_spectrum(cav, -np.asarray(q, dtype=float), v_anti,
                                     eps_read, omega)


def signal_transfer_power(cav: CavityParams, q, eps_read: float, omega,
                          scale: PhysicalScale | None = None):
    """Power of the force-signal transfer function.

    Normalized form t_c*(1-eps_read)/((t_c+eps_int+q)^2 + omega^2); multiplied
    by 8*pi*P_c/(hbar*lambda*c) when a physical scale is supplied.
    """
    _check_eps_read(eps_read)
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    denom = (cav.t_c + cav.eps_int + q) ** 2 + omega**2
    if np.any(denom == 0.0):
        raise SingularResponseError(
            "signal transfer evaluated at the amplification pole"
        )
    t2 = cav.t_c * (1.0 - eps_read) / denom
    if scale is not None:
        t2 = t2 * scale.transfer_prefactor
    return _maybe_scalar(t2)


def sensitivity(cav: CavityParams, q, input_state: InputQuadratureState,
                eps_read: float, omega, scale: PhysicalScale | None = None):
    """Noise-to-signal ratio S_x = S_sn / |T_x|^2 for a jitter-free readout.

    input_state is the state at the coupler, i.e. injection loss must already
    be applied (see decoherence.input_state_from_source).
    """
    s_sn = quadrature_noise_spectrum(cav, q, input_state.v_sq, eps_read, omega)
    t2 = signal_transfer_power(cav, q, eps_read, omega, scale=scale)
    return s_sn / t2


def qcrb(cav: CavityParams, q, beta: float, omega=0.0,
         scale: PhysicalScale | None = None):
    """Lossless quantum Cramer-Rao bound (t_c - q)^2 / (beta * t_c) at omega=0.

    Requires a lossless cavity (eps_int = 0) and pure input squeezing
    beta = v_sq^-1 >= 1.  At nonzero omega the bound generalizes to
    ((t_c - q)^2 + omega^2)/(beta*t_c), which the lossless sensitivity attains
    identically.
    """
    if cav.eps_int != 0.0:
        raise ValueError("qcrb is defined for the lossless cavity (eps_int = 0)")
    if beta < 1.0:
        raise ValueError(f"beta must be >= 1, got {beta}")
    if cav.t_c == 0.0:
        raise ValueError("t_c must be nonzero")
    q = np.asarray(q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    bound = ((cav.t_c - q) ** 2 + omega**2) / (beta * cav.t_c)
    if scale is not None:
        bound = bound * scale.sensitivity_prefactor
    return _maybe_scalar(bound)


def threshold_sensitivity(cav: CavityParams, input_state: InputQuadratureState,
                          eps_read: float, omega,
                          scale: PhysicalScale | None = None):
    """Sensitivity with the internal gain parked at threshold q = t_c + eps_int.

    This is the benchmark operating point of maximal internal squeezing; the
    optimized gain (limits module) is never worse and strictly better for
    nonzero readout loss.
    """
    return sensitivity(cav, cav.q_threshold, input_state, eps_read, omega,
                       scale=scale)


@dataclass(frozen=True)
class SpectrumResult:
    """Per-frequency arrays of noise, signal-transfer power and sensitivity."""

    omega: np.ndarray
    s_sn: np.ndarray
    t2: np.ndarray
    s_x: np.ndarray

    def __post_init__(self):
        n = self.omega.shape
        if not (self.s_sn.shape == n and self.t2.shape == n and self.s_x.shape == n):
            raise ValueError("spectrum arrays must have equal length")
        if not np.allclose(self.s_x * self.t2, self.s_sn, rtol=1e-9, atol=0.0):
            raise ValueError("s_x must equal s_sn / t2 elementwise")


def compute_spectrum(cav: CavityParams, q: float, input_state: InputQuadratureState,
                     eps_read: float, omega, scale: PhysicalScale | None = None
                     ) -> SpectrumResult:
    """Evaluate noise, transfer and sensitivity on a frequency grid."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    s_sn = np.atleast_1d(quadrature_noise_spectrum(cav, q, input_state.v_sq,
                                                   eps_read, omega))
    t2 = np.atleast_1d(signal_transfer_power(cav, q, eps_read, omega, scale=scale))
    return SpectrumResult(omega=omega, s_sn=s_sn, t2=t2, s_x=s_sn / t2)
