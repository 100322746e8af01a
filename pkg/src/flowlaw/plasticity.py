"""J2 radial-return update of a single material point with adiabatic heating.

Any hardening law can be plugged in as long as it is callable as
``law(eps_p, rate, T) -> (sigma_y, d_eps, d_rate, d_T)``; both
:class:`~flowlaw.johnson_cook.JohnsonCookLaw` and a trained
:class:`~flowlaw.mlp.MlpModel` qualify.

Small-strain, hypo-elastic kinematics; tensors are 3x3 numpy arrays.
"""

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

SQRT_2_3 = np.sqrt(2.0 / 3.0)
SQRT_3_2 = np.sqrt(1.5)
MPA = 1e6


class HardeningLaw(Protocol):
    def __call__(self, eps_p, rate, T): ...


class IntegrationError(RuntimeError):
    """Return mapping failed to converge."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass(frozen=True, eq=False)
class MaterialPointState:
    stress: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    eps_p_bar: float = 0.0
    rate_bar: float = 0.0
    T: float = 20.0

    def __post_init__(self):
        stress = np.array(self.stress, dtype=float)
        if stress.shape != (3, 3):
            raise ValueError(f"stress must be 3x3, got {stress.shape}")
        stress.setflags(write=False)
        object.__setattr__(self, "stress", stress)

    @property
    def von_mises(self):
        return von_mises(self.stress)


@dataclass(frozen=True, eq=False)
class StepResult:
    state: MaterialPointState
    gamma: float = 0.0
    iterations: int = 0
    sigma_y: float = float("nan")
    delta_T: float = 0.0
    residuals: tuple = ()

    @property
    def plastic(self):
        return self.gamma > 0.0


def deviator(t):
    t = np.asarray(t, dtype=float)
    return t - np.trace(t) / 3.0 * np.eye(3)


def von_mises(stress):
    s = deviator(stress)
    return float(SQRT_3_2 * np.sqrt(np.sum(s * s)))


def trial_state(state, d_eps, elastic):
    """Elastic predictor: ``stress + lambda tr(d_eps) I + 2 G d_eps``."""
    d_eps = np.asarray(d_eps, dtype=float)
    if d_eps.shape != (3, 3) or not np.all(np.isfinite(d_eps)):
        raise ValueError("strain increment must be a finite 3x3 tensor")
    lam, G = elastic.lame_lambda, elastic.shear_modulus
    return state.stress + lam * np.trace(d_eps) * np.eye(3) + 2.0 * G * d_eps


def adiabatic_temperature_update(sigma_y, d_eps_p, mat):
    """Temperature rise [C] from plastic work ``eta * sigma_y * d_eps_p / (rho Cp)``."""
    if d_eps_p < 0:
        raise ValueError("plastic strain increment must be non-negative")
    return mat.eta * sigma_y * MPA * d_eps_p / (mat.rho * mat.Cp)


def _evaluate(law, eps_p, rate, T):
    return tuple(float(v) for v in law(eps_p, rate, T))


def radial_return_step(state, d_eps, dt, law, mat, max_iter=50, tol=1e-8, adiabatic=True):
    """Advance one material point by a strain increment ``d_eps`` over ``dt``.

    The consistency parameter ``gamma`` (with ``d eps_p = sqrt(2/3) gamma``)
    solves ``|s_trial| - 2 G gamma - sqrt(2/3) sigma_y = 0`` by Newton
    iteration, kept inside a bisection bracket. Temperature is frozen during
    the solve and updated once from the converged increment.
    Convergence means ``|von_mises - sigma_y| <= tol * sigma_y``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    trial = trial_state(state, d_eps, mat)
    s_trial = deviator(trial)
    norm_trial = float(np.sqrt(np.sum(s_trial * s_trial)))
    sigma_y0 = _evaluate(law, state.eps_p_bar, state.rate_bar, state.T)[0]
    if SQRT_3_2 * norm_trial <= sigma_y0:
        new = MaterialPointState(trial, state.eps_p_bar, 0.0, state.T)
        return StepResult(new, sigma_y=sigma_y0)

    G = mat.shear_modulus
    heat = mat.eta * MPA / (mat.rho * mat.Cp)
    lo, hi = 0.0, norm_trial / (2.0 * G)
    gamma, residuals = 0.0, []
    for it in range(1, max_iter + 1):
        dep = SQRT_2_3 * gamma
        sy, d_e, d_r, d_T = _evaluate(law, state.eps_p_bar + dep, dep / dt, state.T)
        g = norm_trial - 2.0 * G * gamma - SQRT_2_3 * sy
        residuals.append(g)
        if abs(g) <= tol * SQRT_2_3 * sy:
            break
        if g > 0:
            lo = gamma
        else:
            hi = gamma
        dsy = SQRT_2_3 * (d_e + d_r / dt + heat * sy * d_T)
        step = gamma + g / (2.0 * G + SQRT_2_3 * dsy)
        gamma = step if lo < step < hi else 0.5 * (lo + hi)
    else:
        raise IntegrationError(
            f"return mapping did not converge in {max_iter} iterations "
            f"(residual {residuals[-1]:.3e})", residuals,
        )

    direction = s_trial / norm_trial
    stress = trial - 2.0 * G * gamma * direction
    dep = SQRT_2_3 * gamma
    dT = adiabatic_temperature_update(sy, dep, mat) if adiabatic else 0.0
    new = MaterialPointState(stress, state.eps_p_bar + dep, dep / dt, state.T + dT)
    return StepResult(new, gamma, it, sy, dT, tuple(residuals))
