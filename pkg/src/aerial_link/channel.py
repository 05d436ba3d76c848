"""Path loss, Nakagami fading and the building-grid LoS probability model.

Link condition is tagged "L" (line of sight) or "N" (blocked); each has its
own power-law path loss ``A_v * d**(-alpha_v)`` over the 3D distance
``d = sqrt(r^2 + delta_h^2)`` and its own integer Nakagami parameter. The LoS
probability against a statistical building grid is a non-increasing step
function of ground distance, constant between the grid breakpoints
``r_k = 1000 (k + 1) / sqrt(a b)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ChannelParams:
    """Radio-link constants, all stored linear (conversions happen at config load).

    a_l / a_n are the reference path gains at d = 1 m, p_tx and n0 are watts,
    g_b is the BS gain seen by this UE (mainlobe or sidelobe) and g_u the UE
    antenna gain.
    """

    alpha_l: float
    alpha_n: float
    a_l: float
    a_n: float
    m_l: int
    m_n: int
    p_tx: float
    g_b: float
    g_u: float
    n0: float

    def __post_init__(self):
        if self.m_l < 1 or self.m_n < 1 or self.m_l != int(self.m_l) or self.m_n != int(self.m_n):
            raise ValidationError(f"Nakagami parameters must be integers >= 1, got ({self.m_l}, {self.m_n})")
        if min(self.alpha_l, self.alpha_n, self.a_l, self.a_n, self.p_tx) <= 0:
            raise ValidationError("path-loss constants and transmit power must be positive")
        if self.m_l <= self.m_n:
            warnings.warn(
                f"m_l={self.m_l} <= m_n={self.m_n}: LoS fading is usually milder than NLoS",
                stacklevel=2,
            )

    @property
    def g_tot(self) -> float:
        return self.g_b * self.g_u


@dataclass(frozen=True)
class Environment:
    """Statistical building grid: built-up area fraction ``a``, buildings per
    km^2 ``b``, Rayleigh scale of building heights ``c`` (meters)."""

    a: float
    b: float
    c: float
    label: str = ""

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValidationError(f"built-up fraction must be in (0, 1), got {self.a}")
        if self.b <= 0 or self.c <= 0:
            raise ValidationError(f"building density and height scale must be positive, got b={self.b}, c={self.c}")

    @property
    def breakpoint_spacing(self) -> float:
        """Distance (m) between consecutive LoS-probability breakpoints."""
        return 1000.0 / math.sqrt(self.a * self.b)


def path_loss(r, delta_h: float, v: str, ch: ChannelParams):
    """Power path gain A_v * (r^2 + delta_h^2)^(-alpha_v / 2). Vectorized in r."""
    if v == "L":
        a, alpha = ch.a_l, ch.alpha_l
    elif v == "N":
        a, alpha = ch.a_n, ch.alpha_n
    else:
        raise ValueError(f"link condition must be 'L' or 'N', got {v!r}")
    d2 = np.square(r) + delta_h * delta_h
    return a * np.power(d2, -0.5 * alpha)


def _plateau_value(k: int, h_u: float, h_b: float, env: Environment) -> float:
    """LoS probability on the k-th breakpoint interval (k = -1 means closer
    than the first breakpoint, where the building grid is never crossed)."""
    if k < 0:
        return 1.0
    n = np.arange(k + 1)
    ray = h_b - (n + 0.5) * (h_b - h_u) / (k + 1)
    return float(np.prod(-np.expm1(-np.square(ray) / (2.0 * env.c**2))))


def los_probability(r: float, h_u: float, h_b: float, env: Environment) -> float:
    """Probability that the link over ground distance ``r`` clears every
    building row it crosses; exactly 1 below the first breakpoint."""
    if h_b <= 0:
        raise ValidationError(f"BS height must be positive, got {h_b}")
    m = math.floor(r * math.sqrt(env.a * env.b) / 1000.0 - 1.0)
    return _plateau_value(m, h_u, h_b, env)


@dataclass(frozen=True)
class LosStepFunction:
    """Piecewise-constant LoS probability: value ``plateaus[i]`` holds on
    [breakpoints[i], breakpoints[i+1]) and 1.0 before the first breakpoint."""

    breakpoints: np.ndarray
    plateaus: np.ndarray
    h_b: float
    h_u: float

    def __call__(self, r):
        if len(self.breakpoints) == 0:
            return np.ones_like(np.asarray(r, dtype=float))
        idx = np.searchsorted(self.breakpoints, r, side="right")
        return np.where(idx == 0, 1.0, self.plateaus[np.maximum(idx - 1, 0)])

    def lookup_squared(self, r2):
        """Same lookup keyed by squared radius (saves a sqrt in hot loops)."""
        if len(self.breakpoints) == 0:
            return np.ones_like(np.asarray(r2, dtype=float))
        idx = np.searchsorted(np.square(self.breakpoints), r2, side="right")
        return np.where(idx == 0, 1.0, self.plateaus[np.maximum(idx - 1, 0)])


def los_step_function(env: Environment, h_u: float, h_b: float, r_max: float) -> LosStepFunction:
    """Materialize the LoS step function up to ``r_max``.

    Lookups past ``r_max`` return the terminal plateau, which is only exact up
    to the next breakpoint; build with the full radius of interest.
    """
    if r_max <= 0:
        raise ValidationError(f"r_max must be positive, got {r_max}")
    spacing = env.breakpoint_spacing
    k_max = math.floor(r_max / spacing - 1.0)
    ks = np.arange(max(k_max + 1, 0))
    breakpoints = spacing * (ks + 1.0)
    plateaus = np.array([_plateau_value(int(k), h_u, h_b, env) for k in ks])
    return LosStepFunction(breakpoints, plateaus, h_b=h_b, h_u=h_u)


def fading_cdf(omega, m: int):
    """CDF of the unit-mean Nakagami-m channel power at ``omega`` (vectorized).

    P[power < omega] = 1 - sum_{k<m} (m omega)^k / k! * exp(-m omega).
    """
    if m < 1 or m != int(m):
        raise ValidationError(f"Nakagami parameter must be an integer >= 1, got {m}")
    x = m * np.asarray(omega, dtype=float)
    total = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(int(m)):
        if k > 0:
            term = term * x / k
        total = total + term
    out = 1.0 - total * np.exp(-x)
    return out if out.ndim else float(out)


def sample_fading(m: int, rng: np.random.Generator, size=None):
    """Unit-mean Nakagami-m power draws: mean of m unit-exponential draws."""
    if m < 1 or m != int(m):
        raise ValidationError(f"Nakagami parameter must be an integer >= 1, got {m}")
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    draws = rng.standard_exponential((int(m),) + shape).sum(axis=0) / m
    return float(draws) if size is None else draws


def received_power(r, delta_h: float, v: str, omega, ch: ChannelParams):
    """Instantaneous received power (watts): p_tx * g_tot * path_loss * fading."""
    return ch.p_tx * ch.g_tot * path_loss(r, delta_h, v, ch) * omega
