"""Duct geometry, Poiseuille flow field, and transport-regime classification.

A straight, rigid, impermeable cylindrical duct of radius ``a`` carries a
steady pressure-driven laminar flow of a Newtonian fluid.  Positions are
cylindrical coordinates ``(x, r, phi)`` with ``x`` along the axis,
``0 <= r <= a`` and ``-pi < phi <= pi``.  A wall-mounted transparent
receiver counts particles inside the sensing volume

    |x - d| <= c_x / 2,   a - c_r <= r <= a,   |phi| <= c_phi / 2.

All quantities are SI throughout the package; configuration files may use
unit suffixes, which are resolved once at parse time (see
:mod:`ductflow.config`).

Everything in this module is an immutable value type or a pure function, so
unrestricted concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "DuctChannelConfig",
    "ReceiverVolume",
    "ReleaseKind",
    "ReleaseSpec",
    "Regime",
    "RegimeVerdict",
    "REGIME_THRESHOLD_FACTOR",
    "velocity_at",
    "mean_velocity_from_pressure",
    "peclet_number",
    "classify_regime",
    "rx_area_fraction",
    "point_in_receiver",
    "validate_receiver",
]

TWO_PI = 2.0 * math.pi

#: Default hysteresis factor for regime classification.  With the factor at
#: 1.0 the comparison against the separating line Pe = 4 d / a is strict and
#: ``Regime.BOUNDARY`` is returned only on exact equality.  Callers wanting a
#: safety band around the line can pass a larger factor or apply their own
#: policy using :attr:`RegimeVerdict.margin`.
REGIME_THRESHOLD_FACTOR = 1.0


def mean_velocity_from_pressure(pressure_gradient: float, radius_a: float,
                                viscosity_eta: float) -> float:
    """Cross-sectional mean velocity of pressure-driven Poiseuille flow.

    For a Newtonian fluid of dynamic viscosity ``eta`` in a duct of radius
    ``a``, the mean velocity is ``|grad p| * a**2 / (8 * eta)``.

    Parameters
    ----------
    pressure_gradient : float
        Applied axial pressure gradient [Pa/m].  Only its magnitude matters.
    radius_a : float
        Duct radius [m], must be positive.
    viscosity_eta : float
        Dynamic viscosity [Pa s], must be positive.
    """
    if radius_a <= 0.0:
        raise ValueError(f"duct radius must be positive, got {radius_a!r}")
    if viscosity_eta <= 0.0:
        raise ValueError(f"viscosity must be positive, got {viscosity_eta!r}")
    return abs(pressure_gradient) * radius_a * radius_a / (8.0 * viscosity_eta)


@dataclass(frozen=True)
class DuctChannelConfig:
    """Physical description of the duct channel.

    Exactly one of ``mean_velocity`` or the pair
    ``(pressure_gradient, viscosity_eta)`` must be given; in the latter case
    the mean velocity is derived at construction and stored, so downstream
    code always reads ``mean_velocity``.

    ``diffusion_D = 0`` is a legal configuration and represents flow-only
    transport; it is kept exact rather than replaced by a small epsilon.

    Attributes
    ----------
    radius_a : float
        Duct radius [m], > 0.
    diffusion_D : float
        Particle diffusion coefficient [m^2/s], >= 0.
    mean_velocity : float
        Cross-sectional mean flow velocity [m/s], >= 0.
    pressure_gradient, viscosity_eta : float or None
        Alternative flow specification [Pa/m], [Pa s].
    """

    radius_a: float
    diffusion_D: float
    mean_velocity: float | None = None
    pressure_gradient: float | None = None
    viscosity_eta: float | None = None

    def __post_init__(self):
        if not self.radius_a > 0.0:
            raise ValueError(f"duct radius must be positive, got {self.radius_a!r}")
        if self.diffusion_D < 0.0:
            raise ValueError(
                f"diffusion coefficient must be non-negative, got {self.diffusion_D!r}")
        has_v = self.mean_velocity is not None
        has_p = self.pressure_gradient is not None or self.viscosity_eta is not None
        if has_v and has_p:
            raise ValueError(
                "give either mean_velocity or (pressure_gradient, viscosity_eta), not both")
        if not has_v:
            if self.pressure_gradient is None or self.viscosity_eta is None:
                raise ValueError(
                    "flow specification incomplete: need mean_velocity or both "
                    "pressure_gradient and viscosity_eta")
            v = mean_velocity_from_pressure(
                self.pressure_gradient, self.radius_a, self.viscosity_eta)
            object.__setattr__(self, "mean_velocity", v)
        if self.mean_velocity < 0.0:
            raise ValueError(
                f"mean velocity must be non-negative, got {self.mean_velocity!r}")


@dataclass(frozen=True)
class ReceiverVolume:
    """Wall-mounted sensing region of the transparent receiver.

    The receiver sits fully downstream of the release plane
    (``axial_distance_d > extent_cx / 2``) and spans a radial band reaching
    the wall.  Whether ``extent_cr`` fits inside a particular duct is checked
    against the channel by :func:`validate_receiver`, since the receiver
    itself does not carry the duct radius.
    """

    axial_distance_d: float
    extent_cx: float
    extent_cr: float
    extent_cphi: float

    def __post_init__(self):
        if not self.extent_cx > 0.0:
            raise ValueError(f"axial extent must be positive, got {self.extent_cx!r}")
        if not self.extent_cr > 0.0:
            raise ValueError(f"radial extent must be positive, got {self.extent_cr!r}")
        if not 0.0 < self.extent_cphi <= TWO_PI:
            raise ValueError(
                f"angular extent must lie in (0, 2*pi], got {self.extent_cphi!r}")
        if not self.axial_distance_d > self.extent_cx / 2.0:
            raise ValueError(
                "receiver must be fully downstream of the release plane: "
                f"need d > c_x/2, got d={self.axial_distance_d!r}, c_x={self.extent_cx!r}")


class ReleaseKind(Enum):
    """How transmitted particles are placed on the release plane x = 0."""

    UNIFORM_CROSS_SECTION = "uniform"
    POINT = "point"


@dataclass(frozen=True)
class ReleaseSpec:
    """Instantaneous particle release at the transmitter.

    ``n_tx`` may be zero, which yields an empty ensemble (all observation
    counts zero); that is occasionally useful for dry runs.
    """

    kind: ReleaseKind
    n_tx: int
    r0: float | None = None
    phi0: float | None = None

    def __post_init__(self):
        if self.n_tx < 0:
            raise ValueError(f"particle count must be non-negative, got {self.n_tx!r}")
        if self.kind is ReleaseKind.POINT:
            if self.r0 is None or self.phi0 is None:
                raise ValueError("point release needs r0 and phi0")
            if self.r0 < 0.0:
                raise ValueError(f"release radius must be non-negative, got {self.r0!r}")
            if not -math.pi < self.phi0 <= math.pi:
                raise ValueError(f"release azimuth must lie in (-pi, pi], got {self.phi0!r}")
        elif self.r0 is not None or self.phi0 is not None:
            raise ValueError("uniform release takes no point coordinates")

    @classmethod
    def uniform(cls, n_tx: int) -> "ReleaseSpec":
        return cls(ReleaseKind.UNIFORM_CROSS_SECTION, n_tx)

    @classmethod
    def point(cls, n_tx: int, r0: float, phi0: float = 0.0) -> "ReleaseSpec":
        return cls(ReleaseKind.POINT, n_tx, r0, phi0)


class Regime(Enum):
    """Transport regime of the duct channel."""

    DISPERSION = "dispersion"
    FLOW_DOMINATED = "flow_dominated"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class RegimeVerdict:
    """Outcome of regime classification.

    ``margin`` is the ratio of the Peclet number to the separating value
    ``4 d / a``; values well below / above 1 put the channel firmly in the
    dispersion / flow-dominated regime.  Both raw numbers are included so
    callers can render region plots or apply their own safety factor.
    """

    peclet: float
    distance_ratio: float
    regime: Regime
    margin: float


def velocity_at(config: DuctChannelConfig, r):
    """Poiseuille axial velocity at radial distance ``r``.

    The profile is parabolic, ``v(r) = 2 vbar (1 - r^2/a^2)``: maximum
    ``2 vbar`` on the axis, zero at the no-slip wall.

    Parameters
    ----------
    config : DuctChannelConfig
    r : float or array_like
        Radial position(s) [m]; every element must lie in ``[0, a]``.

    Returns
    -------
    float or ndarray
        Velocity [m/s], same shape as ``r``.
    """
    r_arr = np.asarray(r, dtype=float)
    a = config.radius_a
    if np.any(r_arr < 0.0) or np.any(r_arr > a):
        raise ValueError(f"radial position must lie in [0, {a}]")
    v = 2.0 * config.mean_velocity * (1.0 - (r_arr / a) ** 2)
    return float(v) if np.ndim(r) == 0 else v


def peclet_number(config: DuctChannelConfig) -> float:
    """Peclet number ``vbar * a / D`` of the channel.

    Measures the relative importance of advective and diffusive transport.
    ``D = 0`` (flow-only transport) maps to ``math.inf``, which downstream
    classification treats as firmly flow-dominated.
    """
    if config.diffusion_D == 0.0:
        return math.inf
    return config.mean_velocity * config.radius_a / config.diffusion_D


def validate_receiver(config: DuctChannelConfig, rx: ReceiverVolume) -> None:
    """Check that the receiver band fits inside the duct (``c_r <= a``)."""
    if rx.extent_cr > config.radius_a:
        raise ValueError(
            f"receiver radial extent {rx.extent_cr!r} exceeds duct radius "
            f"{config.radius_a!r}")


def classify_regime(config: DuctChannelConfig, rx: ReceiverVolume,
                    threshold_factor: float = REGIME_THRESHOLD_FACTOR) -> RegimeVerdict:
    """Classify the channel as dispersion-, flow-dominated, or boundary.

    The two closed-form solution families apply when the Peclet number is
    far below respectively far above ``4 d / a``; the verdict compares the
    margin ``Pe / (4 d / a)`` against ``threshold_factor``.  Results for
    parameters close to the separating line should be treated with care, so
    the verdict reports the raw numbers rather than hiding them.
    """
    if threshold_factor < 1.0:
        raise ValueError("threshold factor must be >= 1")
    validate_receiver(config, rx)
    pe = peclet_number(config)
    ratio = rx.axial_distance_d / config.radius_a
    margin = pe / (4.0 * ratio)
    if margin < 1.0 / threshold_factor:
        regime = Regime.DISPERSION
    elif margin > threshold_factor:
        regime = Regime.FLOW_DOMINATED
    else:
        regime = Regime.BOUNDARY
    return RegimeVerdict(peclet=pe, distance_ratio=ratio, regime=regime, margin=margin)


def rx_area_fraction(config: DuctChannelConfig, rx: ReceiverVolume) -> float:
    """Fraction of the duct cross-section covered by the receiver band.

    Equals the probability that a point placed uniformly on the disk of
    radius ``a`` falls inside the receiver's ``(r, phi)`` window:
    ``(c_phi / 2 pi) * (2 a c_r - c_r^2) / a^2``, in ``(0, 1]``.
    """
    validate_receiver(config, rx)
    a = config.radius_a
    cr = rx.extent_cr
    return (rx.extent_cphi / TWO_PI) * (2.0 * a * cr - cr * cr) / (a * a)


def point_in_receiver(rx: ReceiverVolume, x, r, phi, radius_a: float):
    """Whether the point(s) ``(x, r, phi)`` lie inside the receiver volume.

    The duct radius is passed explicitly because the radial band
    ``a - c_r <= r <= a`` is anchored at the wall.  Accepts scalars or
    broadcastable arrays; azimuths must lie in ``[-pi, pi]`` (the closed
    lower end tolerates ``arctan2`` returning exactly ``-pi``).
    """
    x_arr = np.asarray(x, dtype=float)
    r_arr = np.asarray(r, dtype=float)
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(r_arr < 0.0):
        raise ValueError("radial position must be non-negative")
    if np.any(phi_arr < -math.pi) or np.any(phi_arr > math.pi):
        raise ValueError("azimuth must lie in [-pi, pi]")
    inside = (
        (np.abs(x_arr - rx.axial_distance_d) <= rx.extent_cx / 2.0)
        & (r_arr >= radius_a - rx.extent_cr)
        & (r_arr <= radius_a)
        & (np.abs(phi_arr) <= rx.extent_cphi / 2.0)
    )
    if np.ndim(x) == 0 and np.ndim(r) == 0 and np.ndim(phi) == 0:
        return bool(inside)
    return inside
