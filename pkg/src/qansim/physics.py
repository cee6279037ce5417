"""Optical link-budget and noise-power engine.

Covers fiber attenuation and lumped losses along a quantum channel,
spontaneous Raman scattering (SRS) of classical channels in forward and
backward direction, inter-core crosstalk (IC-XT) in multicore fiber,
rectangular bandpass filtering, and the conversion of an optical noise
power into a photon-count probability per detector gate.

All functions are pure; invalid structures are rejected at construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .units import (
    attenuation_db_per_km_to_linear,
    db_to_linear,
    dbm_to_watts,
    photon_energy_j,
)

MCF_CORE = "mcf_core"
SSMF = "ssmf"

DOWNSTREAM = "downstream"
UPSTREAM = "upstream"

SAME_CORE = "same_core"
ADJACENT_CORE = "adjacent_core"
DROP_FIBER = "drop_fiber"

FORWARD = "forward"
BACKWARD = "backward"

# Relative Raman cross-section vs pump->probe offset, Stokes side
# (probe below pump).  Normalised so the value near 2 THz is 1; the
# absolute scale is the calibration factor rho0 of RamanProfile.
DEFAULT_STOKES_SHAPE = (
    (0.0, 0.60),
    (0.5, 0.80),
    (1.0, 0.90),
    (2.0, 1.00),
    (4.0, 1.05),
    (6.0, 1.10),
    (9.0, 1.30),
    (13.0, 1.60),
    (14.0, 1.00),
    (15.0, 0.50),
)


@dataclass(frozen=True)
class FiberSegment:
    """A span of fiber with uniform attenuation."""

    length_km: float
    attenuation_db_per_km: float
    kind: str = SSMF

    def __post_init__(self):
        if self.length_km < 0:
            raise ValueError("fiber length must be >= 0")
        if self.attenuation_db_per_km < 0:
            raise ValueError("fiber attenuation must be >= 0")
        if self.kind not in (MCF_CORE, SSMF):
            raise ValueError(f"unknown fiber kind {self.kind!r}")

    @property
    def loss_db(self) -> float:
        return self.length_km * self.attenuation_db_per_km

    @property
    def alpha_per_km(self) -> float:
        """Attenuation coefficient in natural units (1/km)."""
        return attenuation_db_per_km_to_linear(self.attenuation_db_per_km)


@dataclass(frozen=True)
class LumpedLoss:
    """A point loss (connector, splitter, attenuator, module)."""

    label: str
    loss_db: float

    def __post_init__(self):
        if self.loss_db < 0:
            raise ValueError(f"lumped loss {self.label!r} must be >= 0 dB")


@dataclass(frozen=True)
class ClassicalChannel:
    """A classical CW channel acting as a noise pump."""

    frequency_thz: float
    launch_power_dbm: float
    direction: str  # downstream | upstream
    location: str  # same_core | adjacent_core | drop_fiber

    def __post_init__(self):
        if self.frequency_thz <= 0:
            raise ValueError("channel frequency must be > 0")
        if self.direction not in (DOWNSTREAM, UPSTREAM):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.location not in (SAME_CORE, ADJACENT_CORE, DROP_FIBER):
            raise ValueError(f"unknown location {self.location!r}")

    @property
    def launch_power_w(self) -> float:
        return dbm_to_watts(self.launch_power_dbm)


@dataclass(frozen=True)
class SpectralFilter:
    """Ideal rectangular bandpass: 0 dB rejection inside the passband
    (edges inclusive), a flat rejection floor outside.  Insertion loss is
    accounted separately as a lumped loss in the path."""

    center_thz: float
    passband_ghz: float
    insertion_loss_db: float = 0.0
    rejection_floor_db: float = 80.0

    def __post_init__(self):
        if self.passband_ghz <= 0:
            raise ValueError("filter passband must be > 0")
        if self.insertion_loss_db < 0:
            raise ValueError("filter insertion loss must be >= 0")
        if self.rejection_floor_db < 0:
            raise ValueError("filter rejection floor must be >= 0")


@dataclass(frozen=True)
class RamanProfile:
    """Scattered-power spectral density per km of fiber and GHz of
    collection bandwidth, as a function of the pump->probe frequency
    offset (positive offset = probe above pump = anti-Stokes side).

    ``rho0`` is the absolute magnitude in 1/(km*GHz); the shape table is
    relative.  The anti-Stokes side is the Stokes side scaled by
    ``anti_stokes_factor`` < 1, which encodes the weaker anti-Stokes
    scattering.
    """

    rho0: float
    anti_stokes_factor: float = 0.4
    stokes_shape: tuple = DEFAULT_STOKES_SHAPE

    def __post_init__(self):
        if self.rho0 < 0:
            raise ValueError("rho0 must be >= 0")
        if not 0.0 < self.anti_stokes_factor < 1.0:
            raise ValueError("anti_stokes_factor must be in (0, 1)")
        offsets = [p[0] for p in self.stokes_shape]
        values = [p[1] for p in self.stokes_shape]
        if sorted(offsets) != offsets or len(set(offsets)) != len(offsets):
            raise ValueError("stokes_shape offsets must be strictly increasing")
        if any(v < 0 for v in values):
            raise ValueError("stokes_shape values must be >= 0")

    def cross_section(self, offset_thz: float) -> float:
        """Cross-section at the given pump->probe offset, 1/(km*GHz).

        Offsets beyond the table range clamp to the edge value.  A zero
        offset counts as the Stokes side.
        """
        offsets = np.array([p[0] for p in self.stokes_shape])
        values = np.array([p[1] for p in self.stokes_shape])
        base = float(np.interp(abs(offset_thz), offsets, values))
        if offset_thz > 0:
            base *= self.anti_stokes_factor
        return self.rho0 * base


@dataclass(frozen=True)
class NoiseSource:
    """A classical channel co- or counter-propagating along one segment
    of a quantum path."""

    label: str
    channel: ClassicalChannel
    segment_index: int
    relative_direction: str  # forward: co-propagates with the quantum signal
    inter_core: bool = False

    def __post_init__(self):
        if self.relative_direction not in (FORWARD, BACKWARD):
            raise ValueError(f"unknown direction {self.relative_direction!r}")


@dataclass(frozen=True)
class OpticalPath:
    """Ordered loss chain from a QKD transmitter to its detector.

    ``entries`` mixes FiberSegment and LumpedLoss in propagation order.
    ``filters`` maps entry indices (of the filter's insertion-loss entry)
    to SpectralFilter instances so out-of-band suppression downstream of
    a noise source can be computed.  ``noise_sources`` lists the
    classical aggressors with the segment where each interacts.
    """

    entries: tuple
    filters: tuple = ()  # of (entry_index, SpectralFilter)
    noise_sources: tuple = ()  # of NoiseSource

    def __post_init__(self):
        if not any(isinstance(e, FiberSegment) for e in self.entries):
            raise ValueError("optical path needs at least one fiber segment")
        for idx, _ in self.filters:
            if not 0 <= idx < len(self.entries):
                raise ValueError(f"filter entry index {idx} out of range")
        for src in self.noise_sources:
            if not 0 <= src.segment_index < len(self.entries):
                raise ValueError(f"noise source {src.label!r} references entry "
                                 f"{src.segment_index}, out of range")
            if not isinstance(self.entries[src.segment_index], FiberSegment):
                raise ValueError(f"noise source {src.label!r} must reference a "
                                 "fiber segment")

    def loss_after_db(self, entry_index: int) -> float:
        """Total loss of all entries strictly after ``entry_index``."""
        return _entries_loss_db(self.entries[entry_index + 1:])

    def filters_after(self, entry_index: int):
        return tuple(f for idx, f in self.filters if idx > entry_index)

    def collection_bandwidth_ghz(self, entry_index: int, probe_thz: float) -> float:
        """Narrowest downstream passband that contains the probe.

        Returns inf when no downstream filter passes the probe; callers
        that integrate broadband noise must ensure a filter is present.
        """
        passbands = [
            f.passband_ghz
            for f in self.filters_after(entry_index)
            if filter_rejection_db(probe_thz, f) == 0.0
        ]
        return min(passbands) if passbands else float("inf")

    def rejection_after_db(self, entry_index: int, frequency_thz: float) -> float:
        """Summed out-of-band rejection of downstream filters at a frequency."""
        return sum(
            filter_rejection_db(frequency_thz, f)
            for f in self.filters_after(entry_index)
        )


def _entries_loss_db(entries) -> float:
    total = 0.0
    for e in entries:
        total += e.loss_db
    return total


def path_loss_db(path: OpticalPath) -> float:
    """Total insertion loss of the path in dB (fiber plus lumped)."""
    return _entries_loss_db(path.entries)


def srs_power(
    pump: ClassicalChannel,
    fiber: FiberSegment,
    profile: RamanProfile,
    probe_frequency_thz: float,
    collection_bandwidth_ghz: float,
    relative_direction: str,
) -> float:
    """Raman-scattered power (W) collected at the probe frequency.

    Forward (pump co-propagating with the collected light) the scattered
    power emerges at the far end of the segment; backward it emerges at
    the pump-input end.  Both include the segment's own attenuation:

        forward:  P * rho * B * L * exp(-alpha*L)
        backward: P * rho * B * (1 - exp(-2*alpha*L)) / (2*alpha)

    with alpha in 1/km.
    """
    if collection_bandwidth_ghz < 0:
        raise ValueError("collection bandwidth must be >= 0")
    if relative_direction not in (FORWARD, BACKWARD):
        raise ValueError(f"unknown direction {relative_direction!r}")
    p_in = pump.launch_power_w
    rho = profile.cross_section(probe_frequency_thz - pump.frequency_thz)
    alpha = fiber.alpha_per_km
    length = fiber.length_km
    if length == 0.0 or p_in == 0.0 or rho == 0.0:
        return 0.0
    if relative_direction == FORWARD:
        geom = length * np.exp(-alpha * length)
    elif alpha == 0.0:
        geom = length  # lossless limit of (1 - e^(-2aL)) / 2a
    else:
        geom = -np.expm1(-2.0 * alpha * length) / (2.0 * alpha)
    return p_in * rho * collection_bandwidth_ghz * float(geom)


def icxt_linear_fraction(coupling_db_per_km: float, length_km: float) -> float:
    """Accumulated inter-core power-coupling fraction over a length,
    treating the quoted dB/km figure as linear per-km accumulation."""
    if coupling_db_per_km > 0:
        raise ValueError("IC-XT coupling must be expressed as negative dB/km")
    return db_to_linear(coupling_db_per_km) * length_km


def icxt_power(
    aggressor: ClassicalChannel,
    coupling_db_per_km: float,
    fiber: FiberSegment,
) -> float:
    """Classical power (W) coupled into the neighbouring core at the far
    end of the segment.  Zero for a same-core aggressor: IC-XT is an
    inter-core effect only."""
    if coupling_db_per_km > 0:
        raise ValueError("IC-XT coupling must be expressed as negative dB/km")
    if aggressor.location == SAME_CORE:
        return 0.0
    fraction = icxt_linear_fraction(coupling_db_per_km, fiber.length_km)
    attenuation = np.exp(-fiber.alpha_per_km * fiber.length_km)
    return aggressor.launch_power_w * fraction * float(attenuation)


def filter_rejection_db(noise_frequency_thz: float, filt: SpectralFilter) -> float:
    """Suppression applied to a frequency: 0 dB inside the passband
    (edges inclusive), the rejection floor outside.  Insertion loss is
    not included here."""
    half_band_thz = filt.passband_ghz * 1e-3 / 2.0
    if abs(noise_frequency_thz - filt.center_thz) <= half_band_thz:
        return 0.0
    return filt.rejection_floor_db


def noise_counts_per_gate(
    noise_power_w: float,
    probe_frequency_thz: float,
    gate_width_ns: float,
    detection_efficiency: float,
) -> float:
    """Probability per detector gate of a noise photon count, clamped to
    [0, 1]:  (P / h*nu) * tau_gate * eta."""
    if noise_power_w < 0:
        raise ValueError("noise power must be >= 0")
    if gate_width_ns < 0:
        raise ValueError("gate width must be >= 0")
    if not 0.0 <= detection_efficiency <= 1.0:
        raise ValueError("detection efficiency must be in [0, 1]")
    flux = noise_power_w / photon_energy_j(probe_frequency_thz)
    prob = flux * gate_width_ns * 1e-9 * detection_efficiency
    return min(prob, 1.0)
