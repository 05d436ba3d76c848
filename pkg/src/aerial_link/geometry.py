"""Ground footprint of a tilted directional UAV antenna.

A UAV at height ``h_u`` pointing a conical beam (opening angle ``beamwidth``,
tilt ``tilt`` from nadir) at the ground sees an elliptical region. All
distances here are ground distances (meters) measured from the projection of
the UAV on the ground; the ellipse is centered ``center_offset`` meters ahead
of that projection along the boresight azimuth.

The angular extent routines answer: at ground distance ``r``, which azimuths
(folded into the upper half-plane ``[0, pi]``) fall inside the footprint?
The answer is ``[0, phi1] U [phi2, pi]``, so the total subtended angle over
the full circle is ``2 * (pi + phi1 - phi2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometry, OutOfFootprint

HALF_PI = 0.5 * math.pi

# Slack for arccos arguments pushed past +/-1 by rounding. Branch edges are
# exact algebraic roots, so only floating-point noise can land here.
_ARCCOS_SLACK = 1e-12


class AntennaMode(enum.Enum):
    DIRECTIONAL = "directional"
    OMNIDIRECTIONAL = "omni"


@dataclass(frozen=True)
class AntennaConfig:
    """UAV antenna: opening angle and tilt, both in degrees."""

    beamwidth_deg: float = 0.0
    tilt_deg: float = 0.0
    mode: AntennaMode = AntennaMode.OMNIDIRECTIONAL

    def __post_init__(self):
        if self.mode is AntennaMode.DIRECTIONAL:
            if not 0.0 < self.beamwidth_deg < 180.0:
                raise InvalidGeometry(
                    f"directional beamwidth must be in (0, 180) deg, got {self.beamwidth_deg}"
                )
            if self.tilt_deg < 0.0:
                raise InvalidGeometry(f"tilt must be >= 0 deg, got {self.tilt_deg}")
            if self.tilt_deg + 0.5 * self.beamwidth_deg >= 90.0:
                raise InvalidGeometry(
                    "cone edge reaches the horizon: tilt + beamwidth/2 = "
                    f"{self.tilt_deg + 0.5 * self.beamwidth_deg:.3f} deg >= 90 deg"
                )

    @property
    def is_directional(self) -> bool:
        return self.mode is AntennaMode.DIRECTIONAL

    @property
    def gain(self) -> float:
        """Mainlobe gain: 29000 / beamwidth_deg**2 for a directional antenna, 1 otherwise."""
        if self.is_directional:
            return 29000.0 / self.beamwidth_deg**2
        return 1.0


@dataclass(frozen=True)
class AntennaFootprint:
    """Elliptical ground region seen by the antenna.

    ``semi_major`` is along the boresight azimuth, ``semi_minor`` across it,
    and the ellipse center sits ``center_offset`` meters from the UAV ground
    projection. ``inner_radius`` = max(0, center_offset - semi_major) is the
    closest footprint point. An omnidirectional antenna is encoded with
    ``semi_major = inf`` and zero offsets.
    """

    semi_major: float
    semi_minor: float
    center_offset: float
    inner_radius: float
    delta_h: float

    @property
    def is_omni(self) -> bool:
        return math.isinf(self.semi_major)

    @property
    def outer_radius(self) -> float:
        return self.center_offset + self.semi_major

    @property
    def area(self) -> float:
        return math.pi * self.semi_major * self.semi_minor


@dataclass(frozen=True)
class AngularExtent:
    """Azimuth pair (radians) delimiting the in-footprint arcs at one radius."""

    phi1: float
    phi2: float

    @property
    def weight(self) -> float:
        """Half-plane angle subtended by the footprint: pi + phi1 - phi2."""
        return math.pi + self.phi1 - self.phi2


def compute_footprint(delta_h: float, antenna: AntennaConfig) -> AntennaFootprint:
    """Ellipse parameters of the ground footprint for a UAV ``delta_h`` meters
    above the BS height.

    Raises InvalidGeometry when the cone does not intersect the ground in a
    finite ellipse (tilt + beamwidth/2 >= 90 deg) or when ``delta_h <= 0`` for
    a directional antenna.
    """
    if not antenna.is_directional:
        return AntennaFootprint(math.inf, math.inf, 0.0, 0.0, delta_h)
    if delta_h <= 0.0:
        raise InvalidGeometry(
            f"directional footprint needs the UAV above BS height, got delta_h={delta_h}"
        )
    half_beam = math.radians(0.5 * antenna.beamwidth_deg)
    tilt = math.radians(antenna.tilt_deg)
    denom = math.cos(tilt) ** 2 - math.sin(half_beam) ** 2
    if denom <= 0.0:
        raise InvalidGeometry(
            "cone degenerates: cos^2(tilt) <= sin^2(beamwidth/2) "
            f"(tilt={antenna.tilt_deg} deg, beamwidth={antenna.beamwidth_deg} deg)"
        )
    semi_major = delta_h * math.sin(2.0 * half_beam) / (2.0 * denom)
    semi_minor = delta_h * math.sin(half_beam) / math.sqrt(denom)
    center_offset = delta_h * math.tan(tilt - half_beam) + semi_major
    if abs(center_offset) < 1e-9 * semi_major:
        center_offset = 0.0  # untilted cone: snap rounding residue to the exact circle
    inner_radius = max(0.0, center_offset - semi_major)
    return AntennaFootprint(semi_major, semi_minor, center_offset, inner_radius, delta_h)


def _cos_roots(r, fp: AntennaFootprint):
    """Roots of the ellipse/circle intersection as cosines of azimuth.

    Solving |point at (r, phi)| on the ellipse boundary yields a quadratic in
    x = r*cos(phi):

        (rm^2 - rM^2) x^2 - 2 rm^2 re x + (rm^2 re^2 + rM^2 r^2 - rM^2 rm^2) = 0

    Returns (c1, c2) = (x_big, x_small) / r, with c2 <= c1, or None when the
    discriminant is negative (circle of radius r entirely inside).
    """
    r_maj, r_min, r_off = fp.semi_major, fp.semi_minor, fp.center_offset
    a = r_min**2 - r_maj**2
    c = r_min**2 * r_off**2 + r_maj**2 * np.square(r) - r_maj**2 * r_min**2
    disc = r_off**2 * r_min**4 - a * c
    if np.all(disc <= 0.0):
        return None
    sq = np.sqrt(np.maximum(disc, 0.0))
    r_arr = np.asarray(r, dtype=float)
    denom = np.where(r_arr > 0.0, r_arr, 1.0) * a  # a < 0 for a genuine ellipse
    c1 = (r_off * r_min**2 - sq) / denom
    c2 = (r_off * r_min**2 + sq) / denom
    return np.where(disc > 0.0, c1, 0.0), np.where(disc > 0.0, c2, 0.0), disc > 0.0


def angular_extent(r: float, fp: AntennaFootprint, antenna: AntennaConfig | None = None) -> AngularExtent:
    """Azimuth pair (phi1, phi2) bounding the footprint arcs at radius ``r``.

    The omnidirectional footprint returns phi1 = phi2 (weight pi). For a
    directional footprint ``r`` must lie in [inner_radius, outer_radius].
    """
    if fp.is_omni:
        return AngularExtent(HALF_PI, HALF_PI)
    lo, hi = fp.inner_radius, fp.outer_radius
    tol = 1e-9 * max(1.0, hi)
    if r < lo - tol or r > hi + tol:
        raise OutOfFootprint(f"r={r} outside footprint [{lo}, {hi}]")
    phi1, phi2 = _extent_arrays(np.atleast_1d(float(min(max(r, lo), hi))), fp)
    return AngularExtent(float(phi1[0]), float(phi2[0]))


def _extent_arrays(r: np.ndarray, fp: AntennaFootprint):
    """Vectorized (phi1, phi2) over radii already inside the footprint."""
    if fp.is_omni:
        half = np.full_like(r, HALF_PI)
        return half, half.copy()
    r_maj, r_min = fp.semi_major, fp.semi_minor
    if fp.center_offset == 0.0 or r_min == r_maj:
        # Untilted cone: centered circle, every radius <= semi_major is a full ring.
        half = np.full_like(r, HALF_PI)
        return half, half.copy()

    roots = _cos_roots(r, fp)
    phi1 = np.full_like(r, HALF_PI)
    phi2 = np.full_like(r, HALF_PI)
    if roots is None:
        return phi1, phi2
    c1, c2, has_roots = roots

    safe = has_roots & (r > 0.0)
    # c1 <= -1: the crossing band sits entirely behind -r, circle fully inside.
    full = safe & (c1 <= -1.0)
    cross = safe & (c1 > -1.0)
    over = np.where(cross, c1, 0.0) - 1.0
    if np.any(over > _ARCCOS_SLACK):
        raise InvalidGeometry(
            f"arccos argument {float(np.max(c1)):.17g} exceeds 1 beyond rounding slack"
        )
    phi1 = np.where(cross, np.arccos(np.clip(c1, -1.0, 1.0)), phi1)
    # c2 <= -1: the rear arc has left the ellipse, phi2 pins to pi.
    phi2 = np.where(cross, np.where(c2 <= -1.0, np.pi, np.arccos(np.clip(c2, -1.0, 1.0))), phi2)
    phi1 = np.where(full, HALF_PI, phi1)
    phi2 = np.where(full, HALF_PI, phi2)
    return phi1, phi2


def extent_weights(r: np.ndarray, fp: AntennaFootprint) -> np.ndarray:
    """Vectorized integration weight pi + phi1(r) - phi2(r) for in-footprint radii."""
    phi1, phi2 = _extent_arrays(np.asarray(r, dtype=float), fp)
    return np.pi + phi1 - phi2


def boundary_radii(r_s: float, serving_condition: str, channel, fp: AntennaFootprint):
    """Exclusion radii (r_L, r_N) for a serving BS at ``r_s`` in the given condition.

    A BS of condition xi closer than the returned radius would deliver a
    larger mean power than the serving BS does; these radii bound the void
    integrals from above and the interference integrals from below.
    ``channel`` provides the path-loss laws (alpha_l/alpha_n, a_l/a_n linear).
    """
    if serving_condition not in ("L", "N"):
        raise ValueError(f"serving_condition must be 'L' or 'N', got {serving_condition!r}")
    dh2 = fp.delta_h**2
    d2 = r_s**2 + dh2
    r0 = fp.inner_radius
    if serving_condition == "L":
        r_l = r_s
        arg = (channel.a_n / channel.a_l) ** (2.0 / channel.alpha_n) * d2 ** (
            channel.alpha_l / channel.alpha_n
        ) - dh2
        r_n = math.sqrt(max(arg, r0**2))
    else:
        r_n = r_s
        arg = (channel.a_l / channel.a_n) ** (2.0 / channel.alpha_l) * d2 ** (
            channel.alpha_n / channel.alpha_l
        ) - dh2
        r_l = math.sqrt(max(arg, 0.0))
        if not fp.is_omni:
            r_l = min(r_l, fp.outer_radius)
    return r_l, r_n
