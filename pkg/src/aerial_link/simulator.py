"""Monte Carlo oracle for the analytical pipeline.

Realizes Poisson deployments inside the antenna footprint, draws LoS states
and Nakagami fading per BS, associates by SINR and measures empirical
coverage / throughput. Every realization owns a counter-keyed random
substream, so ensembles are reproducible bit-for-bit regardless of execution
order or parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channel as chan
from . import geometry as geom
from .analysis import truncation_radius
from .errors import ValidationError
from .scenario import ScenarioConfig

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for realization ``index`` of ensemble ``seed``."""
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_realizations: int
    seed: int


@dataclass(frozen=True)
class CcdfCurve:
    thresholds: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    n_realizations: int
    seed: int


@dataclass(frozen=True)
class NetworkRealization:
    bs_r: np.ndarray
    bs_azimuth: np.ndarray
    bs_los: np.ndarray
    bs_fading: np.ndarray
    serving_index: int | None
    sinr: float


def sample_bs_positions(lam_per_m2: float, fp: geom.AntennaFootprint,
                        rng: np.random.Generator, r_trunc: float | None = None):
    """Homogeneous PPP restricted to the footprint, as polar (r, azimuth)
    about the UE ground projection. The omni footprint needs ``r_trunc``."""
    if fp.is_omni:
        if r_trunc is None:
            raise ValidationError("sampling the omnidirectional footprint needs r_trunc")
        area = math.pi * r_trunc**2
        n = rng.poisson(lam_per_m2 * area)
        r = r_trunc * np.sqrt(rng.random(n))
        az = 2.0 * math.pi * rng.random(n)
        return r, az
    area = fp.area
    n = rng.poisson(lam_per_m2 * area)
    rho = np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    x = fp.center_offset + fp.semi_major * rho * np.cos(theta)
    y = fp.semi_minor * rho * np.sin(theta)
    return np.hypot(x, y), np.arctan2(y, x)


class _SimContext:
    """Per-scenario constants shared by all realizations of an ensemble.

    The ensemble kernel works in float32: Monte Carlo noise sits far above
    single precision, numpy's pairwise summation keeps the aggregate
    interference accurate, and the narrower dtype roughly halves the cost of
    the dominant power-law evaluations.
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        ch = cfg.channel
        self.fp = cfg.footprint()
        self.r_out = truncation_radius(cfg) if self.fp.is_omni else self.fp.outer_radius
        self.lam = cfg.lambda_per_m2
        self.area = math.pi * self.r_out**2 if self.fp.is_omni else self.fp.area
        self.mean_count = self.lam * self.area
        step = chan.los_step_function(cfg.env, cfg.h_u, cfg.h_b, self.r_out)
        self.edges2 = np.square(step.breakpoints)
        self.p_table = np.concatenate(([1.0], step.plateaus))
        # breakpoints are uniformly spaced, so plateau lookup is a division
        self.inv_spacing = 1.0 / cfg.env.breakpoint_spacing
        self.p_table32 = self.p_table.astype(np.float32)
        self.dh2 = cfg.delta_h**2
        pg = ch.p_tx * ch.g_tot
        self.c_l, self.c_n = pg * ch.a_l, pg * ch.a_n
        self.e_l, self.e_n = -0.5 * ch.alpha_l, -0.5 * ch.alpha_n
        self.m_l, self.m_n = ch.m_l, ch.m_n
        self.n0 = ch.n0

    def draw_squared_radii(self, rng, dtype=np.float64):
        n = rng.poisson(self.mean_count)
        if n == 0:
            return np.empty(0, dtype=dtype)
        if self.fp.is_omni:
            return self.r_out**2 * rng.random(n, dtype=dtype)
        rho = np.sqrt(rng.random(n, dtype=dtype))
        theta = 2.0 * math.pi * rng.random(n, dtype=dtype)
        x = self.fp.center_offset + self.fp.semi_major * rho * np.cos(theta)
        y = self.fp.semi_minor * rho * np.sin(theta)
        return x * x + y * y

    def plateau_index(self, r2):
        idx = (np.sqrt(r2) * self.inv_spacing).astype(np.intp)
        return np.minimum(idx, len(self.p_table) - 1)

    def draw_channel(self, r2, rng):
        """(LoS flags, mean power, fading) per BS at squared radii r2."""
        los = rng.random(len(r2)) < self.p_table[self.plateau_index(r2)]
        d2 = r2 + self.dh2
        z = np.empty(len(r2))
        z[los] = self.c_l * d2[los] ** self.e_l
        z[~los] = self.c_n * d2[~los] ** self.e_n
        omega = np.empty(len(r2))
        n_l = int(np.count_nonzero(los))
        omega[los] = rng.standard_exponential((self.m_l, n_l)).sum(axis=0) / self.m_l
        omega[~los] = rng.standard_exponential((self.m_n, len(r2) - n_l)).sum(axis=0) / self.m_n
        return los, z, omega

    def one_sinr(self, rng, association: str) -> float:
        r2 = self.draw_squared_radii(rng, dtype=np.float32)
        n = len(r2)
        if n == 0:
            return 0.0
        los = rng.random(n, dtype=np.float32) < self.p_table32[self.plateau_index(r2)]
        d2 = r2 + np.float32(self.dh2)
        z_n = np.float32(self.c_n) * d2 ** np.float32(self.e_n)
        n_l = int(np.count_nonzero(los))
        if n_l:
            z_n[los] = np.float32(self.c_l) * d2[los] ** np.float32(self.e_l)
        omega = rng.standard_exponential(n, dtype=np.float32)
        if self.m_n > 1:
            extra = rng.standard_exponential((self.m_n - 1, n), dtype=np.float32)
            omega += extra.sum(axis=0)
            omega /= np.float32(self.m_n)
        if n_l and self.m_l != self.m_n:
            om_l = rng.standard_exponential((self.m_l, n_l), dtype=np.float32)
            omega[los] = om_l.sum(axis=0) / np.float32(self.m_l)
        s = z_n * omega
        i = int(np.argmax(s)) if association == "max-sinr" else int(np.argmax(z_n))
        return float(s[i]) / (self.n0 + (float(s.sum(dtype=np.float64)) - float(s[i])))


def realize_and_measure(cfg: ScenarioConfig, rng: np.random.Generator,
                        association: str = "mean-power") -> NetworkRealization:
    """One network draw with full per-BS bookkeeping.

    Every candidate BS shares the same aggregate, so ranking by SINR is
    ranking by received power. The default ``mean-power`` association serves
    from the BS with the best fading-averaged SINR, which is the association
    the analytical pipeline models (and what its void regions encode);
    ``max-sinr`` instead picks the instantaneous winner including the fading
    draw. The serving BS still need not be the closest one under either rule.
    """
    _check_association(association)
    ctx = _SimContext(cfg)
    r, az = sample_bs_positions(ctx.lam, ctx.fp, rng,
                                r_trunc=ctx.r_out if ctx.fp.is_omni else None)
    if len(r) == 0:
        return NetworkRealization(r, az, np.empty(0, bool), np.empty(0), None, 0.0)
    los, z, omega = ctx.draw_channel(np.square(r), rng)
    s = z * omega
    idx = int(np.argmax(s)) if association == "max-sinr" else int(np.argmax(z))
    sinr = float(s[idx] / (ctx.n0 + (s.sum() - s[idx])))
    return NetworkRealization(r, az, los, omega, idx, sinr)


def _check_association(association: str):
    if association not in ("max-sinr", "mean-power"):
        raise ValidationError(f"association must be 'max-sinr' or 'mean-power', got {association!r}")


def _sinr_ensemble(cfg: ScenarioConfig, n: int, seed: int, association: str) -> np.ndarray:
    _check_association(association)
    ctx = _SimContext(cfg)
    out = np.empty(n)
    for i in range(n):
        out[i] = ctx.one_sinr(substream(seed, i), association)
    return out


def estimate_coverage(cfg: ScenarioConfig, n: int, seed: int,
                      threshold: float | None = None,
                      association: str = "mean-power") -> McEstimate:
    t = cfg.sinr_threshold if threshold is None else threshold
    sinr = _sinr_ensemble(cfg, n, seed, association)
    covered = sinr > t
    p = float(covered.mean())
    se = float(covered.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return McEstimate(p, se, n, seed)


def estimate_ccdf(cfg: ScenarioConfig, thresholds, n: int, seed: int,
                  association: str = "mean-power") -> CcdfCurve:
    """Empirical P[SINR > T] over a threshold grid, one shared ensemble."""
    thresholds = np.asarray(thresholds, dtype=float)
    sinr = _sinr_ensemble(cfg, n, seed, association)
    values = np.empty(len(thresholds))
    errs = np.empty(len(thresholds))
    for k, t in enumerate(thresholds):
        covered = sinr > t
        values[k] = covered.mean()
        errs[k] = covered.std(ddof=1) / math.sqrt(n) if n > 1 else math.nan
    return CcdfCurve(thresholds, values, errs, n, seed)


def estimate_throughput(cfg: ScenarioConfig, n: int, seed: int,
                        association: str = "mean-power") -> McEstimate:
    sinr = _sinr_ensemble(cfg, n, seed, association)
    rate = np.log2(1.0 + sinr)
    return McEstimate(float(rate.mean()),
                      float(rate.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
                      n, seed)


# -- conditional mode: pinned serving BS --------------------------------------

def _conditional_interference_draw(ctx: _SimContext, r_l_excl: float, r_n_excl: float,
                                   rng, los_only: bool) -> float:
    """Aggregate interference with the association void enforced: LoS (NLoS)
    interferers survive only beyond their exclusion radius."""
    r2 = ctx.draw_squared_radii(rng)
    if len(r2) == 0:
        return 0.0
    idx = np.searchsorted(ctx.edges2, r2, side="right")
    los = rng.random(len(r2)) < ctx.p_table[idx]
    keep_l = los & (r2 > r_l_excl**2)
    keep_n = (~los) & (r2 > r_n_excl**2)
    d2 = r2 + ctx.dh2
    total = 0.0
    n_l = int(np.count_nonzero(keep_l))
    if n_l:
        om = rng.standard_exponential((ctx.m_l, n_l)).sum(axis=0) / ctx.m_l
        total += float(np.sum(ctx.c_l * d2[keep_l] ** ctx.e_l * om))
    n_n = int(np.count_nonzero(keep_n))
    if n_n and not los_only:
        om = rng.standard_exponential((ctx.m_n, n_n)).sum(axis=0) / ctx.m_n
        total += float(np.sum(ctx.c_n * d2[keep_n] ** ctx.e_n * om))
    return total


def conditional_interference_mc(cfg: ScenarioConfig, r_s: float, n: int, seed: int,
                                serving: str = "L", los_only: bool = True):
    """Empirical (mean, variance) of the conditional interference, for
    validating the analytical moments; ``los_only`` matches their regime."""
    ctx = _SimContext(cfg)
    r_l, r_n = geom.boundary_radii(r_s, serving, cfg.channel, ctx.fp)
    draws = np.empty(n)
    for i in range(n):
        draws[i] = _conditional_interference_draw(ctx, r_l, r_n, substream(seed, i), los_only)
    mean = float(draws.mean())
    var = float(draws.var(ddof=1))
    return mean, var


def conditional_coverage_mc(cfg: ScenarioConfig, v: str, r_s: float, n: int, seed: int,
                            threshold: float | None = None) -> McEstimate:
    """P[SINR > T] with the serving BS pinned at ``r_s`` in condition ``v``
    and interferers drawn outside the corresponding exclusion radii."""
    t = cfg.sinr_threshold if threshold is None else threshold
    ctx = _SimContext(cfg)
    ch = cfg.channel
    r_l, r_n = geom.boundary_radii(r_s, v, ch, ctx.fp)
    m_v = ch.m_l if v == "L" else ch.m_n
    signal_mean = ch.p_tx * ch.g_tot * float(chan.path_loss(r_s, ctx.fp.delta_h, v, ch))
    covered = np.empty(n, dtype=bool)
    for i in range(n):
        rng = substream(seed, i)
        interference = _conditional_interference_draw(ctx, r_l, r_n, rng, los_only=False)
        omega = rng.standard_exponential(m_v).sum() / m_v
        covered[i] = signal_mean * omega > t * (ctx.n0 + interference)
    p = float(covered.mean())
    se = float(covered.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return McEstimate(p, se, n, seed)
