"""Johnson-Cook flow law and its closed-form partial derivatives.

    sigma_y = (A + B eps_p^n) [1 + C ln(rate / rate_0)] [1 - ((T - T_0) / (T_m - T_0))^m]

Units are MPa, 1/s and degrees Celsius throughout. All functions broadcast
over numpy arrays.

Inputs outside the physical domain are clamped before evaluation:

* ``rate`` below the reference rate is raised to the reference rate,
* ``T`` is clipped to ``[T_ref, T_melt]``,
* ``eps_p`` is floored at :data:`EPS_P_FLOOR` for the strain derivative only,
  since ``d sigma / d eps_p`` diverges at zero strain when ``n < 1``.
"""

from dataclasses import dataclass

import numpy as np

EPS_P_FLOOR = 1e-8


class DomainError(ValueError):
    """Raised when a flow law receives non-finite or non-physical input."""


@dataclass(frozen=True)
class JohnsonCookParams:
    """Johnson-Cook constants.

    Attributes:
        A: initial yield stress [MPa]
        B: hardening modulus [MPa]
        C: strain rate sensitivity [-]
        n: hardening exponent [-]
        m: thermal softening exponent [-]
        eps_dot_ref: reference strain rate [1/s]
        T_ref: reference (room) temperature [C]
        T_melt: melting temperature [C]
    """

    A: float
    B: float
    C: float
    n: float
    m: float
    eps_dot_ref: float = 1.0
    T_ref: float = 20.0
    T_melt: float = 1540.0

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if not self.B >= 0:
            raise ValueError(f"B must be non-negative, got {self.B}")
        if not self.C >= 0:
            raise ValueError(f"C must be non-negative, got {self.C}")
        if not 0 < self.n <= 1:
            raise ValueError(f"n must lie in (0, 1], got {self.n}")
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if not self.eps_dot_ref > 0:
            raise ValueError(f"eps_dot_ref must be positive, got {self.eps_dot_ref}")
        if not self.T_melt > self.T_ref:
            raise ValueError(
                f"T_melt ({self.T_melt}) must be greater than T_ref ({self.T_ref})"
            )


@dataclass(frozen=True)
class ThermalElasticParams:
    """Elastic and thermal constants of the material point.

    ``alpha`` is carried for completeness; thermal expansion is not modelled.
    """

    E: float  # GPa
    nu: float
    rho: float  # kg/m^3
    Cp: float  # J/(kg C)
    alpha: float  # 1/C
    eta: float  # Taylor-Quinney coefficient

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"E must be positive, got {self.E}")
        if not 0 < self.nu < 0.5:
            raise ValueError(f"nu must lie in (0, 0.5), got {self.nu}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.Cp > 0:
            raise ValueError(f"Cp must be positive, got {self.Cp}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def shear_modulus(self):
        """Shear modulus in MPa."""
        return 1e3 * self.E / (2.0 * (1.0 + self.nu))

    @property
    def lame_lambda(self):
        """First Lame parameter in MPa."""
        return 1e3 * self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))


# 42CrMo4 steel
STEEL_42CRMO4 = JohnsonCookParams(
    A=806.0, B=614.0, C=0.0089, n=0.168, m=1.1,
    eps_dot_ref=1.0, T_ref=20.0, T_melt=1540.0,
)
STEEL_42CRMO4_THERMAL = ThermalElasticParams(
    E=206.9, nu=0.29, rho=7830.0, Cp=460.0, alpha=12.3e-6, eta=0.9,
)


def _check_finite(**arrays):
    for name, value in arrays.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} must be finite")


def _brackets(p, eps_p, rate, T):
    eps_p = np.asarray(eps_p, dtype=float)
    rate = np.asarray(rate, dtype=float)
    T = np.asarray(T, dtype=float)
    _check_finite(eps_p=eps_p, rate=rate, T=T)
    if np.any(eps_p < 0):
        raise DomainError("eps_p must be non-negative")
    rate = np.maximum(rate, p.eps_dot_ref)
    T = np.clip(T, p.T_ref, p.T_melt)
    homologous = (T - p.T_ref) / (p.T_melt - p.T_ref)
    rate_term = 1.0 + p.C * np.log(rate / p.eps_dot_ref)
    thermal_term = 1.0 - homologous ** p.m
    return eps_p, rate, homologous, rate_term, thermal_term


def jc_flow_stress(p, eps_p, rate, T):
    """Flow stress [MPa] at plastic strain ``eps_p``, rate [1/s] and T [C]."""
    eps_p, _, _, rate_term, thermal_term = _brackets(p, eps_p, rate, T)
    return (p.A + p.B * eps_p ** p.n) * rate_term * thermal_term


def jc_derivatives(p, eps_p, rate, T):
    """Return ``(d sigma/d eps_p, d sigma/d rate, d sigma/d T)``.

    The temperature derivative is written as
    ``-m / (T_m - T_0) * theta^(m - 1) * ...`` which is the same expression as
    ``-m / (T - T_0) * theta^m * ...`` but stays finite at ``T = T_0``.
    """
    eps_p, rate, homologous, rate_term, thermal_term = _brackets(p, eps_p, rate, T)
    eps_safe = np.maximum(eps_p, EPS_P_FLOOR)
    hardening = p.A + p.B * eps_p ** p.n
    d_eps = p.n * p.B * eps_safe ** (p.n - 1.0) * rate_term * thermal_term
    d_rate = p.C / rate * hardening * thermal_term
    with np.errstate(divide="ignore"):
        theta_pow = homologous ** (p.m - 1.0)
    d_T = -p.m / (p.T_melt - p.T_ref) * hardening * rate_term * theta_pow
    return d_eps, d_rate, d_T


class JohnsonCookLaw:
    """Hardening-law adapter: ``law(eps_p, rate, T) -> (sigma, d_eps, d_rate, d_T)``."""

    name = "jc"

    def __init__(self, params=STEEL_42CRMO4):
        self.params = params

    def __call__(self, eps_p, rate, T):
        sigma = jc_flow_stress(self.params, eps_p, rate, T)
        return (sigma, *jc_derivatives(self.params, eps_p, rate, T))

    def __repr__(self):
        return f"JohnsonCookLaw({self.params!r})"
