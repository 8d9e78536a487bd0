"""Microscopic coupling parameters for one light pass through a spin ensemble.

Translates experimental inputs (wavelength, geometry, density, detuning, decay
rates, photon and atom numbers) into the three coefficients of the collective
pass channel,

    x_p' = sqrt(1 - eps_p) (x_p - kappa * p_a) + sqrt(eps_p) * x_noise
    x_a' = sqrt(1 - eps_a) (x_a - kappa * p_p) + sqrt(eps_a) * x_noise
    p'   = sqrt(1 - eps)   p                   + sqrt(eps)   * p_noise

and applies that channel to a :class:`~spinlight.gaussian.GaussianState`.

All quantities are SI.  Photon/atom number accounting: ``Np`` is HALF the
total pulse photon number (the pulse carries ``2 * Np`` photons split over the
two circular polarizations, and ``Np`` is the classical Stokes normalization
used to build the canonical light quadratures).  Likewise the sample holds
``2 * Na`` atoms with ``2 * Na = rho * A * L``.  Keep this factor of two in
mind when comparing against photon-counting conventions.
"""

import dataclasses
import math

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import epsilon_0 as EPSILON_0
from scipy.constants import hbar as HBAR

import numpy as np

from .gaussian import SymplecticMap, loss_channel, _apply_matrix, _mode_of

__all__ = [
    "PhysicalParams",
    "ChannelParams",
    "RegimeThresholds",
    "RegimeReport",
    "dipole_from_linewidth",
    "coupling_from_dipole",
    "derive_channel",
    "kappa_from_density",
    "validate_regime",
    "qnd_pass_map",
    "apply_pass",
]


def dipole_from_linewidth(gamma, omega0):
    """Transition dipole moment that reproduces a given decay rate.

    Inverts gamma = omega0^3 d^2 / (3 pi eps0 hbar c^3).
    """
    if gamma < 0 or omega0 <= 0:
        raise ValueError("gamma must be non-negative and omega0 positive")
    return math.sqrt(3.0 * math.pi * EPSILON_0 * HBAR * SPEED_OF_LIGHT**3 * gamma / omega0**3)


def coupling_from_dipole(dipole, omega0, area):
    """Single-pass coupling |g| of a dipole to the focused continuum mode.

    Normalization constant fixed by requiring the (Np, Na, g) route of
    :func:`derive_channel` to match the column-density form of
    :func:`kappa_from_density`; do not change one without the other.
    """
    if dipole <= 0 or omega0 <= 0 or area <= 0:
        raise ValueError("dipole, omega0 and area must be positive")
    return dipole * math.sqrt(omega0 / (2.0 * math.pi * HBAR * EPSILON_0 * area))


@dataclasses.dataclass(frozen=True)
class PhysicalParams:
    """Microscopic inputs for one ensemble-light interface.

    Parameters
    ----------
    lambda0 : float
        Optical wavelength (m).
    L : float
        Ensemble length along the beam (m).
    rho : float
        Atomic number density (m^-3).
    Delta : float
        Detuning from the excited states (rad/s).
    gamma : float
        Decay rate to the directly coupled ground state (rad/s).  Zero is
        allowed as the explicit lossless idealization.
    gamma_prime : float
        Cross decay rate to the other ground state (rad/s); zero allowed.
    T : float
        Pulse duration (s).  Enters only through the photon-number budget
        2 * Np = 2 c * integral |alpha_t|^2 dt; Np itself is what matters here.
    A : float, optional
        Beam / ensemble cross section (m^2).  Defaults to lambda0 * L, the
        unit-Fresnel-number pencil geometry.
    Na : float, optional
        Half the atom number.  Defaults to rho * A * L / 2 and must satisfy
        2 * Na = rho * A * L (1e-6 relative) when supplied.
    Np : float, optional
        Half the pulse photon number.  Defaults to Na (number matching).
    g_coupling : float, optional
        Coupling |g|.  Defaults to coupling_from_dipole(dipole, ...).
    dipole : float, optional
        Transition dipole (C m).  Defaults to dipole_from_linewidth(gamma),
        which requires gamma > 0.
    """

    lambda0: float
    L: float
    rho: float
    Delta: float
    gamma: float
    gamma_prime: float
    T: float = 1e-6
    A: float = None
    Na: float = None
    Np: float = None
    g_coupling: float = None
    dipole: float = None

    def __post_init__(self):
        for name in ("lambda0", "L", "rho", "Delta", "T"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")
        for name in ("gamma", "gamma_prime"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.A is None:
            object.__setattr__(self, "A", self.lambda0 * self.L)
        if self.A <= 0:
            raise ValueError("A must be positive")
        column = self.rho * self.A * self.L
        if self.Na is None:
            object.__setattr__(self, "Na", 0.5 * column)
        elif abs(2.0 * self.Na - column) > 1e-6 * column:
            raise ValueError(
                f"inconsistent atom number: 2*Na = {2 * self.Na:.6e} but "
                f"rho*A*L = {column:.6e}"
            )
        if self.Np is None:
            object.__setattr__(self, "Np", self.Na)
        if self.Na <= 0 or self.Np <= 0:
            raise ValueError("Na and Np must be positive")
        if self.dipole is None and self.g_coupling is None:
            if self.gamma <= 0:
                raise ValueError(
                    "g_coupling (or dipole) must be supplied when gamma is zero"
                )
            object.__setattr__(
                self, "dipole", dipole_from_linewidth(self.gamma, self.omega0)
            )
        if self.g_coupling is None:
            object.__setattr__(
                self,
                "g_coupling",
                coupling_from_dipole(self.dipole, self.omega0, self.A),
            )
        if self.g_coupling <= 0:
            raise ValueError("g_coupling must be positive")

    @property
    def omega0(self):
        """Carrier frequency 2 pi c / lambda0 (rad/s)."""
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.lambda0


@dataclasses.dataclass(frozen=True)
class ChannelParams:
    """The (kappa, eps_p, eps_a) triple defining one collective pass."""

    kappa: float
    eps_p: float
    eps_a: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa is stored as a magnitude, got {self.kappa}")
        for name in ("eps_p", "eps_a"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {value}")


@dataclasses.dataclass(frozen=True)
class RegimeThresholds:
    """Cutoffs for the validity checks; the defaults encode 'much less than'."""

    eps_max: float = 0.05
    kappa_over_sqrt_n_max: float = 0.01
    detuning_ratio_min: float = 50.0
    fresnel_tolerance: float = 0.5


@dataclasses.dataclass(frozen=True)
class RegimeReport:
    """Outcome of the regime-of-validity checks (report only, never raises)."""

    fresnel: float
    fresnel_ok: bool
    eps_small: bool
    kappa_vs_sqrt_n: bool
    detuning_large: bool
    jump_count_estimate: float

    @property
    def all_pass(self):
        return (
            self.fresnel_ok
            and self.eps_small
            and self.kappa_vs_sqrt_n
            and self.detuning_large
        )


def derive_channel(params):
    """Channel coefficients from microscopic inputs.

    kappa = 2 sqrt(Np Na) |g|^2 / (Delta c)       (stored as a magnitude)
    eps_p = Na |g|^2 gamma / (Delta^2 c)
    eps_a = Np |g|^2 gamma' / (Delta^2 c)

    The sign of the interaction is a phase-space reflection with no effect on
    variances, squeezing or fidelities, so only |kappa| is kept.
    """
    g2 = params.g_coupling**2
    kappa = 2.0 * math.sqrt(params.Np * params.Na) * g2 / (params.Delta * SPEED_OF_LIGHT)
    eps_p = params.Na * g2 * params.gamma / (params.Delta**2 * SPEED_OF_LIGHT)
    eps_a = params.Np * g2 * params.gamma_prime / (params.Delta**2 * SPEED_OF_LIGHT)
    if not (eps_p < 1.0 and eps_a < 1.0):
        raise ValueError(
            f"damping out of range (eps_p={eps_p:.3e}, eps_a={eps_a:.3e}); "
            "inputs are outside the perturbative regime"
        )
    return ChannelParams(kappa=kappa, eps_p=eps_p, eps_a=eps_a)


def kappa_from_density(params):
    """Interaction strength in column-density form, 3 rho lambda0^2 L gamma / (8 pi^2 Delta).

    Valid only under number matching Np = Na; agrees with
    ``derive_channel(params).kappa`` when g is derived from the dipole moment
    and gamma from that same dipole.
    """
    if abs(params.Np - params.Na) > 1e-9 * max(params.Np, params.Na):
        raise ValueError(
            f"density form requires Np = Na, got Np={params.Np:.6e}, Na={params.Na:.6e}"
        )
    return (
        3.0
        * params.rho
        * params.lambda0**2
        * params.L
        * params.gamma
        / (8.0 * math.pi**2 * params.Delta)
    )


def validate_regime(params, channel, thresholds=RegimeThresholds()):
    """Evaluate the validity conditions behind the linearized pass channel.

    Checks eps << 1, kappa << sqrt(N), Delta >> gamma and Fresnel number near
    one, against the configurable thresholds.  Also reports the expected
    number of spontaneous-emission jump events, Np Na |g|^2 gamma / (Delta^2 c),
    which equals eps_p * Np; collective observables tolerate a large value.
    """
    fresnel = params.A / (params.lambda0 * params.L)
    jump = (
        params.Np
        * params.Na
        * params.g_coupling**2
        * params.gamma
        / (params.Delta**2 * SPEED_OF_LIGHT)
    )
    detuning_large = (
        params.gamma == 0.0 or params.Delta / params.gamma > thresholds.detuning_ratio_min
    )
    return RegimeReport(
        fresnel=fresnel,
        fresnel_ok=abs(fresnel - 1.0) < thresholds.fresnel_tolerance,
        eps_small=max(channel.eps_p, channel.eps_a) < thresholds.eps_max,
        kappa_vs_sqrt_n=channel.kappa
        < thresholds.kappa_over_sqrt_n_max * math.sqrt(min(params.Np, params.Na)),
        detuning_large=detuning_large,
        jump_count_estimate=jump,
    )


def qnd_pass_map(kappa, light, atom, n_modes):
    """Symplectic matrix of the lossless pass: x_p -= kappa p_a, x_a -= kappa p_p."""
    if light == atom:
        raise ValueError("light and atom must be distinct modes")
    matrix = np.eye(2 * n_modes)
    matrix[2 * light, 2 * atom + 1] = -kappa
    matrix[2 * atom, 2 * light + 1] = -kappa
    return SymplecticMap(matrix, np.zeros(2 * n_modes))


def apply_pass(state, light, atom, channel):
    """One light-through-ensemble pass on a register state.

    Applies the lossless two-mode kick, then the light damping eps_p and the
    atomic damping eps_a (damping acts on the already-kicked quadratures).
    """
    light_idx = _mode_of(state, light)
    atom_idx = _mode_of(state, atom)
    if light_idx == atom_idx:
        raise ValueError("light and atom must be distinct modes")
    kick = np.eye(state.mean.size)
    kick[2 * light_idx, 2 * atom_idx + 1] = -channel.kappa
    kick[2 * atom_idx, 2 * light_idx + 1] = -channel.kappa
    state = _apply_matrix(state, kick)
    state = loss_channel(state, light_idx, channel.eps_p)
    state = loss_channel(state, atom_idx, channel.eps_a)
    return state
