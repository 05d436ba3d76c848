"""Scenario configuration: one evaluation point of the network model.

A scenario bundles the channel constants, the building environment, the BS
deployment, the UE position/antenna and the radio target. User-facing fields
use the customary units (dB, dBm, BSs per km^2); everything is converted to
linear/SI once here, and the rest of the package only sees linear values.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .channel import ChannelParams, Environment
from .errors import ValidationError
from .geometry import AntennaConfig, AntennaMode, AntennaFootprint, compute_footprint

# Statistical building-grid triples (a, b, c). The urban triple is the
# reference deployment of this model family; the other presets are the
# ITU-R P.1410 parameterizations commonly adopted for those environment
# classes (see README for provenance).
ENVIRONMENT_PRESETS = {
    "suburban": Environment(0.1, 750.0, 8.0, label="suburban"),
    "urban": Environment(0.3, 500.0, 15.0, label="urban"),
    "dense-urban": Environment(0.5, 300.0, 20.0, label="dense-urban"),
    "highrise": Environment(0.5, 300.0, 50.0, label="highrise"),
}

BOLTZMANN_NOISE_DBM_PER_HZ = -173.98  # thermal floor at 290 K


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameter set for one evaluation point (defaults: the reference
    urban deployment)."""

    # Channel
    alpha_l: float = 2.09
    alpha_n: float = 3.75
    a_l_db: float = -41.1
    a_n_db: float = -32.9
    m_l: int = 3
    m_n: int = 1
    p_tx_dbm: float = 46.0
    g_mainlobe: float = 10.0
    g_sidelobe: float = 0.5
    noise_dbm: float | None = None  # None: thermal floor over the user bandwidth
    # Environment and deployment
    env: Environment = ENVIRONMENT_PRESETS["urban"]
    lambda_per_km2: float = 10.0
    h_b: float = 25.0
    h_u: float = 100.0
    # UE antenna
    antenna: AntennaConfig = AntennaConfig()
    # Radio target: exactly one of target_rate_bps / sinr_threshold_db
    bandwidth_hz: float = 200e3
    target_rate_bps: float | None = 100e3
    sinr_threshold_db: float | None = None
    # Aerial-user fraction for area spectral efficiency
    rho: float = 0.5
    # Numerics
    quad_rtol: float = 1e-7
    gcq_nodes: int | None = None  # None: adaptive doubling 64..512
    trunc_tail_fraction: float = 1e-6
    trunc_ceiling_m: float = 30_000.0

    def __post_init__(self):
        if self.lambda_per_km2 <= 0:
            raise ValidationError(f"BS density must be positive, got {self.lambda_per_km2} per km^2")
        if self.h_b <= 0 or self.h_u <= 0:
            raise ValidationError(f"heights must be positive, got h_b={self.h_b}, h_u={self.h_u}")
        if self.h_u == self.h_b:
            # At delta_h = 0 the link distance can reach zero and the
            # interference integrals diverge; the model needs a height offset.
            raise ValidationError("h_u must differ from h_b (zero height offset breaks the path-loss model)")
        if self.bandwidth_hz <= 0:
            raise ValidationError(f"bandwidth must be positive, got {self.bandwidth_hz}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValidationError(f"aerial-user fraction must be in [0, 1], got {self.rho}")
        if (self.target_rate_bps is None) == (self.sinr_threshold_db is None):
            raise ValidationError("exactly one of target_rate_bps / sinr_threshold_db must be set")
        if self.antenna.is_directional and self.h_u <= self.h_b:
            raise ValidationError(
                f"a directional UE antenna needs h_u > h_b, got h_u={self.h_u}, h_b={self.h_b}"
            )
        if not self.antenna.is_directional and self.alpha_l <= 2.0:
            # The LoS interference integral over an unbounded footprint
            # diverges for alpha_l <= 2 without the LoS-probability decay;
            # certified truncation needs alpha_l > 2.
            raise ValidationError(
                f"omnidirectional scenarios need alpha_l > 2, got {self.alpha_l}"
            )

    # -- derived quantities ------------------------------------------------

    @property
    def lambda_per_m2(self) -> float:
        return self.lambda_per_km2 * 1e-6

    @property
    def delta_h(self) -> float:
        """Signed UE height above BS height (negative for ground users)."""
        return self.h_u - self.h_b

    @property
    def is_aerial(self) -> bool:
        return self.delta_h > 0.0

    @property
    def bs_gain(self) -> float:
        """Sidelobe gain above BS height (downtilted BS antennas), mainlobe below."""
        return self.g_sidelobe if self.is_aerial else self.g_mainlobe

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(
            alpha_l=self.alpha_l,
            alpha_n=self.alpha_n,
            a_l=db_to_linear(self.a_l_db),
            a_n=db_to_linear(self.a_n_db),
            m_l=self.m_l,
            m_n=self.m_n,
            p_tx=dbm_to_watts(self.p_tx_dbm),
            g_b=self.bs_gain,
            g_u=self.antenna.gain,
            n0=self.noise_watts,
        )

    @property
    def noise_watts(self) -> float:
        if self.noise_dbm is not None:
            return dbm_to_watts(self.noise_dbm)
        return dbm_to_watts(BOLTZMANN_NOISE_DBM_PER_HZ + 10.0 * math.log10(self.bandwidth_hz))

    @property
    def sinr_threshold(self) -> float:
        """Linear SINR target T, from the explicit threshold or the rate target."""
        if self.sinr_threshold_db is not None:
            return db_to_linear(self.sinr_threshold_db)
        return 2.0 ** (self.target_rate_bps / self.bandwidth_hz) - 1.0

    def footprint(self) -> AntennaFootprint:
        return compute_footprint(self.delta_h, self.antenna)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def ground_variant(self) -> "ScenarioConfig":
        """The companion ground user: 1.5 m altitude, omnidirectional antenna."""
        return self.replace(h_u=1.5, antenna=AntennaConfig())

    def engine_key(self):
        """Hashable key of everything the quadrature grid depends on (the
        SINR threshold and rate target deliberately excluded)."""
        return (
            self.alpha_l, self.alpha_n, self.a_l_db, self.a_n_db,
            self.m_l, self.m_n, self.p_tx_dbm, self.g_mainlobe, self.g_sidelobe,
            self.noise_dbm, self.bandwidth_hz,
            self.env.a, self.env.b, self.env.c,
            self.lambda_per_km2, self.h_b, self.h_u,
            self.antenna.mode.value, self.antenna.beamwidth_deg, self.antenna.tilt_deg,
            self.quad_rtol, self.trunc_tail_fraction, self.trunc_ceiling_m,
        )


def urban_default() -> ScenarioConfig:
    """The built-in reference scenario (omnidirectional aerial UE at 100 m)."""
    return ScenarioConfig()


def directional(beamwidth_deg: float, tilt_deg: float = 0.0) -> AntennaConfig:
    return AntennaConfig(beamwidth_deg, tilt_deg, AntennaMode.DIRECTIONAL)
