"""Parameter recovery from two-quadrature variance measurements.

The measured observables are the detected variances of both quadratures of the
injected squeeze field, recorded at a set of pump amplitudes.  The pump
controls the roundtrip gain through the amplitude-linear law q = q_max * a.
A synthetic-data generator provides round-trip validation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .decoherence import (
    DecoherenceChain,
    ExternalSqueezeSource,
    input_state_from_source,
    measured_anti_noise_with_jitter,
    measured_noise_with_jitter,
)
from .errors import ConvergenceError, IdentifiabilityError
from .sensor import CavityParams

PARAM_NAMES = ("t_c", "eps_int", "eps_inj", "eps_read", "theta_rms", "r_ext", "q_max")

DEFAULT_BOUNDS = {
    "t_c": (1e-4, 0.5),
    "eps_int": (0.0, 0.3),
    "eps_inj": (0.0, 0.9),
    "eps_read": (0.0, 0.9),
    "theta_rms": (0.0, 0.5),
    "r_ext": (0.0, 2.5),
    "q_max": (-0.5, 0.5),
}

RANK_TOLERANCE = 1e-8


@dataclass(frozen=True)
class VariancePair:
    """Detected quadrature variances at one pump setting, vacuum-normalized."""

    pump_setting: float
    v_sq: float
    v_anti: float
    err_sq: float = 1.0
    err_anti: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.pump_setting <= 1.0:
            raise ValueError("pump_setting must be in [0, 1]")
        if self.v_sq <= 0.0 or self.v_anti <= 0.0:
            raise ValueError("measured variances must be positive")
        if self.err_sq <= 0.0 or self.err_anti <= 0.0:
            raise ValueError("standard errors must be positive")


@dataclass(frozen=True)
class FitModel:
    """Free/fixed split of the forward-model parameters.

    free:  names fitted; everything else is pinned to fixed[name].
    bounds: per-parameter boxes for the free names (defaults above).
    omega: sideband frequency of the variance measurement.
    """

    free: tuple[str, ...]
    fixed: dict[str, float]
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    omega: float = 0.0
    jitter_model: str = "pump_frame"

    def __post_init__(self):
        for name in self.free:
            if name not in PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r}")
        if len(set(self.free)) != len(self.free):
            raise ValueError("duplicate free parameter")
        for name in PARAM_NAMES:
            if name not in self.free and name not in self.fixed:
                raise ValueError(f"parameter {name!r} neither free nor fixed")
        merged = dict(DEFAULT_BOUNDS)
        if "t_c" in self.fixed and "eps_int" in self.fixed:
            # the pump scan stays below the parametric threshold; boxes beyond
            # it start the fit in the unstable branch of the model
            q_th = self.fixed["t_c"] + self.fixed["eps_int"]
            merged["q_max"] = (-0.99 * q_th, 0.99 * q_th)
        merged.update(self.bounds)
        object.__setattr__(self, "bounds", merged)

    def full_params(self, x: np.ndarray) -> dict[str, float]:
        params = dict(self.fixed)
        params.update(zip(self.free, np.asarray(x, dtype=float)))
        return params


def forward_variances(params: dict[str, float], pump_settings, omega: float = 0.0,
                      jitter_model: str = "pump_frame") -> np.ndarray:
    """Model variances, shape (n, 2): detected (v_sq, v_anti) per pump setting."""
    cav = CavityParams(t_c=params["t_c"], eps_int=params["eps_int"])
    chain = DecoherenceChain(eps_inj=params["eps_inj"],
                             theta_rms=params["theta_rms"],
                             eps_read=params["eps_read"])
    src = ExternalSqueezeSource.from_squeeze_parameter(params["r_ext"])
    state = input_state_from_source(src, chain.eps_inj)
    out = np.empty((len(pump_settings), 2))
    for i, a in enumerate(pump_settings):
        q = params["q_max"] * a
        out[i, 0] = measured_noise_with_jitter(cav, q, state, chain, omega,
                                               model=jitter_model)
        out[i, 1] = measured_anti_noise_with_jitter(cav, q, state, chain, omega,
                                                    model=jitter_model)
    return out


def synthesize_measurements(true_params: dict[str, float], pump_grid,
                            noise_level: float, seed: int, omega: float = 0.0,
                            jitter_model: str = "pump_frame") -> list[VariancePair]:
    """Forward-model variance pairs, optionally perturbed with relative
    Gaussian noise of the given level.  Deterministic under seed."""
    pump_grid = list(pump_grid)
    model = forward_variances(true_params, pump_grid, omega=omega,
                              jitter_model=jitter_model)
    rng = np.random.default_rng(seed)
    rows = []
    for i, a in enumerate(pump_grid):
        v = model[i].copy()
        if noise_level > 0.0:
            v = v * (1.0 + noise_level * rng.standard_normal(2))
            err = noise_level * model[i]
        else:
            err = np.ones(2)
        rows.append(VariancePair(pump_setting=float(a), v_sq=float(v[0]),
                                 v_anti=float(v[1]), err_sq=float(err[0]),
                                 err_anti=float(err[1])))
    return rows


@dataclass(frozen=True)
class FitResult:
    params: dict[str, float]
    stderr: dict[str, float]
    covariance: np.ndarray
    residuals: np.ndarray
    objective: float
    n_starts_converged: int
    jacobian_condition: float


def _starts(model: FitModel, n_max: int = 8) -> list[np.ndarray]:
    """Deterministic multi-start points: corners of the bounds box (all of
    them for up to 3 free parameters, a fixed lexicographic subsample of 8
    otherwise)."""
    boxes = [model.bounds[name] for name in model.free]
    corners = list(itertools.product(*boxes))
    if len(corners) > n_max:
        stride = len(corners) // n_max
        corners = corners[::stride][:n_max]
    # nudge off the exact edges so every start is strictly feasible
    starts = []
    for c in corners:
        pt = [lo + 0.05 * (hi - lo) if v == lo else
              (hi - 0.05 * (hi - lo) if v == hi else v)
              for v, (lo, hi) in zip(c, boxes)]
        starts.append(np.array(pt))
    return starts


def fit_parameters(data: list[VariancePair], model: FitModel,
                   max_nfev: int = 2000) -> FitResult:
    """Weighted nonlinear least squares over the free parameters.

    Residuals are in variance space with inverse-standard-error weights,
    solved with damped least squares (bounded trust-region) from the
    deterministic multi-start set.  Raises IdentifiabilityError when the
    Jacobian at the best fit is rank-deficient beyond tolerance and
    ConvergenceError when no start converges.
    """
    if len(model.free) == 0:
        raise ValueError("at least one free parameter required")
    if len(model.free) > len(data) - 2:
        raise ValueError(
            f"{len(model.free)} free parameters need at least "
            f"{len(model.free) + 2} data points, got {len(data)}"
        )
    pumps = [d.pump_setting for d in data]
    meas = np.array([[d.v_sq, d.v_anti] for d in data])
    errs = np.array([[d.err_sq, d.err_anti] for d in data])

    def residual(x: np.ndarray) -> np.ndarray:
        params = model.full_params(x)
        try:
            pred = forward_variances(params, pumps, omega=model.omega,
                                     jitter_model=model.jitter_model)
        except (ValueError, ZeroDivisionError):
            return np.full(meas.size, 1e6)
        r = (pred - meas) / errs
        r = np.where(np.isfinite(r), r, 1e6)
        return r.ravel()

    lo = np.array([model.bounds[name][0] for name in model.free])
    hi = np.array([model.bounds[name][1] for name in model.free])
    best = None
    n_ok = 0
    for x0 in _starts(model):
        res = least_squares(residual, x0, bounds=(lo, hi), method="trf",
                            max_nfev=max_nfev)
        if res.status > 0:
            n_ok += 1
            if best is None or res.cost < best.cost:
                best = res
    if best is None:
        raise ConvergenceError("no start point converged within the iteration cap")

    jac = best.jac
    svals = np.linalg.svd(jac, compute_uv=False)
    cond = float(svals[0] / svals[-1]) if svals[-1] > 0.0 else math.inf
    if svals[-1] <= RANK_TOLERANCE * svals[0]:
        raise IdentifiabilityError(
            "Jacobian at the best fit is rank-deficient "
            f"(singular values {svals}); the free parameters "
            f"{model.free} are not separable from this data"
        )
    cov = np.linalg.inv(jac.T @ jac)
    stderr = np.sqrt(np.diag(cov))
    params = model.full_params(best.x)
    return FitResult(
        params=params,
        stderr=dict(zip(model.free, stderr)),
        covariance=cov,
        residuals=best.fun,
        objective=float(2.0 * best.cost),   # sum of squared weighted residuals
        n_starts_converged=n_ok,
        jacobian_condition=cond,
    )
