"""Network data model: OLT, ODN, ONUs, multicore feeder, drop fibers,
WDM modules and splitters, plus extraction of each ONU's quantum channel
with its co- and counter-propagating classical aggressors.

Cores are numbered 1..N.  The default layout for a 7-core fiber puts
core 1 at the center of a hexagonal ring 2..7, so the nearest neighbours
of core 3 are cores 1, 2 and 4.  Only nearest-neighbour cores act as
crosstalk/Raman aggressors on the quantum core.
"""

from dataclasses import dataclass, field, replace

from . import physics
from .physics import (
    ClassicalChannel,
    FiberSegment,
    LumpedLoss,
    NoiseSource,
    OpticalPath,
    SpectralFilter,
)

# WDM module placements along the quantum path, in propagation order
# (quantum signals travel ONU -> OLT).
PLACEMENT_ONU = "onu"
PLACEMENT_ODN = "odn"
PLACEMENT_OLT = "olt"
_PLACEMENTS = (PLACEMENT_ONU, PLACEMENT_ODN, PLACEMENT_OLT)


@dataclass(frozen=True)
class QuantumEndpoint:
    """Per-ONU quantum and synchronization wavelengths."""

    onu_id: int
    qs_frequency_thz: float
    ss_frequency_thz: float

    def __post_init__(self):
        if self.qs_frequency_thz == self.ss_frequency_thz:
            raise ValueError("quantum and synchronization frequencies must differ")


@dataclass(frozen=True)
class WdmModule:
    label: str
    placement: str
    filter: SpectralFilter

    def __post_init__(self):
        if self.placement not in _PLACEMENTS:
            raise ValueError(f"unknown WDM placement {self.placement!r}")


@dataclass(frozen=True)
class Splitter:
    ratio: int
    loss_db: float
    onu_ids: tuple

    def __post_init__(self):
        if self.ratio < 1:
            raise ValueError("splitter ratio must be >= 1")
        if self.loss_db < 0:
            raise ValueError("splitter loss must be >= 0")


@dataclass(frozen=True)
class PlacedChannel:
    """A classical channel and the core carrying it (None = drop fiber)."""

    label: str
    frequency_thz: float
    launch_power_dbm: float
    direction: str
    core: int | None = None


def hex_adjacency(num_cores: int) -> dict:
    """Nearest-neighbour map for core 1 at the center of a ring 2..N."""
    if num_cores < 2:
        raise ValueError("need at least 2 cores")
    if num_cores == 2:
        return {1: frozenset({2}), 2: frozenset({1})}
    ring = list(range(2, num_cores + 1))
    adjacency = {1: frozenset(ring)}
    for i, core in enumerate(ring):
        left = ring[(i - 1) % len(ring)]
        right = ring[(i + 1) % len(ring)]
        adjacency[core] = frozenset({1, left, right})
    return adjacency


@dataclass(frozen=True)
class Topology:
    num_cores: int
    num_wavelengths: int
    feeder: FiberSegment
    fanin_fanout_loss_db: float
    drops: tuple  # one FiberSegment per ONU
    endpoints: tuple  # one QuantumEndpoint per ONU
    wdm_modules: tuple = ()
    classical_channels: tuple = ()  # PlacedChannel
    splitters: tuple = ()
    quantum_core: int = 1
    feeder_extra_loss_db: float = 0.0  # attenuator padding the feeder loss
    receiver_loss_db: float = 0.0  # receiver internals ahead of the detector
    icxt_coupling_db_per_km: float = -60.0
    adjacency: dict | None = None

    def __post_init__(self):
        if self.adjacency is None:
            object.__setattr__(self, "adjacency", hex_adjacency(self.num_cores))

    @property
    def num_onus(self) -> int:
        return len(self.drops)

    def adjacent_cores(self, core: int) -> frozenset:
        return self.adjacency.get(core, frozenset())

    def splitter_for(self, onu_id: int):
        for s in self.splitters:
            if onu_id in s.onu_ids:
                return s
        return None

    def channel_location(self, placed: PlacedChannel) -> str:
        if placed.core is None:
            return physics.DROP_FIBER
        if placed.core == self.quantum_core:
            return physics.SAME_CORE
        return physics.ADJACENT_CORE

    def classical_channel(self, placed: PlacedChannel) -> ClassicalChannel:
        return ClassicalChannel(
            frequency_thz=placed.frequency_thz,
            launch_power_dbm=placed.launch_power_dbm,
            direction=placed.direction,
            location=self.channel_location(placed),
        )


@dataclass(frozen=True)
class Violation:
    rule: str
    entity: str
    detail: str

    def __str__(self):
        return f"{self.rule}: {self.entity}: {self.detail}"


def subscriber_capacity(t: Topology) -> int:
    """Subscribers supported by N cores and T wavelength pairs: (N-1)*T."""
    return (t.num_cores - 1) * t.num_wavelengths


def validate(t: Topology) -> list:
    """Check topology invariants; empty list when all hold."""
    violations = []

    def bad(rule, entity, detail):
        violations.append(Violation(rule, entity, detail))

    if t.num_cores < 2:
        bad("core_count", "topology", f"need >= 2 cores, got {t.num_cores}")
    if t.num_wavelengths < 1:
        bad("wavelength_count", "topology",
            f"need >= 1 wavelengths, got {t.num_wavelengths}")
    if not 1 <= t.quantum_core <= t.num_cores:
        bad("core_range", "quantum_core",
            f"core {t.quantum_core} outside 1..{t.num_cores}")
    if t.feeder.kind != physics.MCF_CORE:
        bad("feeder_kind", "feeder", f"feeder must be mcf_core, got {t.feeder.kind}")
    for i, drop in enumerate(t.drops):
        if drop.kind != physics.SSMF:
            bad("drop_kind", f"onu {i}", f"drop must be ssmf, got {drop.kind}")
    if len(t.endpoints) != len(t.drops):
        bad("endpoint_count", "topology",
            f"{len(t.endpoints)} endpoints for {len(t.drops)} ONUs")

    onu_ids = set(range(t.num_onus))
    seen = {}
    for s in t.splitters:
        for onu in s.onu_ids:
            if onu not in onu_ids:
                bad("splitter_onu", f"splitter 1*{s.ratio}", f"unknown ONU {onu}")
            elif onu in seen:
                bad("splitter_multiplicity", f"onu {onu}",
                    "attached to more than one splitter")
            else:
                seen[onu] = s

    for ch in t.classical_channels:
        if ch.core is not None and not 1 <= ch.core <= t.num_cores:
            bad("core_range", f"channel {ch.label}",
                f"core {ch.core} outside 1..{t.num_cores}")

    for core, neighbours in t.adjacency.items():
        if not 1 <= core <= t.num_cores:
            bad("core_range", "adjacency", f"core {core} outside 1..{t.num_cores}")
        for n in neighbours:
            if not 1 <= n <= t.num_cores:
                bad("core_range", "adjacency",
                    f"neighbour {n} of core {core} outside 1..{t.num_cores}")

    if not any(m.placement == PLACEMENT_OLT for m in t.wdm_modules):
        bad("olt_filter", "wdm_modules",
            "need at least one OLT-side module to bound the noise bandwidth")
    return violations


def quantum_path(
    t: Topology,
    onu_id: int,
    splitter_loss_db: float | None = None,
    extra_losses: tuple = (),
    extra_filters: tuple = (),
) -> OpticalPath:
    """Assemble the ONU's quantum channel.

    Order follows the signal: ONU modules, drop fiber, ODN modules,
    splitter, fan-in, feeder core, fan-out, feeder padding, OLT modules,
    receiver internals.  ``splitter_loss_db`` overrides the topology's
    splitter (used by schedule planning); ``extra_losses`` and
    ``extra_filters`` are appended on the OLT side, ahead of the
    detector.

    Noise sources cover the ONU's own drop-fiber channels and every
    classical channel in a core adjacent to the quantum core; upstream
    channels co-propagate with the quantum signal, downstream channels
    counter-propagate.
    """
    if not 0 <= onu_id < t.num_onus:
        raise KeyError(f"unknown ONU id {onu_id}")

    entries = []
    filters = []

    def add_modules(placement):
        for m in t.wdm_modules:
            if m.placement == placement:
                entries.append(LumpedLoss(m.label, m.filter.insertion_loss_db))
                filters.append((len(entries) - 1, m.filter))

    add_modules(PLACEMENT_ONU)
    entries.append(t.drops[onu_id])
    drop_index = len(entries) - 1
    add_modules(PLACEMENT_ODN)

    if splitter_loss_db is not None:
        if splitter_loss_db > 0:
            entries.append(LumpedLoss("splitter", splitter_loss_db))
    else:
        splitter = t.splitter_for(onu_id)
        if splitter is not None and splitter.loss_db > 0:
            entries.append(LumpedLoss(f"splitter 1*{splitter.ratio}", splitter.loss_db))

    half_fan = t.fanin_fanout_loss_db / 2.0
    entries.append(LumpedLoss("fan-in", half_fan))
    entries.append(t.feeder)
    feeder_index = len(entries) - 1
    entries.append(LumpedLoss("fan-out", half_fan))
    if t.feeder_extra_loss_db > 0:
        entries.append(LumpedLoss("feeder padding", t.feeder_extra_loss_db))

    add_modules(PLACEMENT_OLT)
    for loss in extra_losses:
        entries.append(loss)
    for filt in extra_filters:
        entries.append(LumpedLoss("extra filter", filt.insertion_loss_db))
        filters.append((len(entries) - 1, filt))
    if t.receiver_loss_db > 0:
        entries.append(LumpedLoss("receiver", t.receiver_loss_db))

    sources = []
    adjacent = t.adjacent_cores(t.quantum_core)
    for placed in t.classical_channels:
        channel = t.classical_channel(placed)
        direction = (physics.FORWARD if placed.direction == physics.UPSTREAM
                     else physics.BACKWARD)
        if placed.core is None:
            if t.drops[onu_id].length_km > 0:
                sources.append(NoiseSource(placed.label, channel, drop_index,
                                           direction, inter_core=False))
        elif placed.core == t.quantum_core:
            sources.append(NoiseSource(placed.label, channel, feeder_index,
                                       direction, inter_core=False))
        elif placed.core in adjacent:
            sources.append(NoiseSource(placed.label, channel, feeder_index,
                                       direction, inter_core=True))
        # non-adjacent cores contribute no modelled noise

    return OpticalPath(entries=tuple(entries), filters=tuple(filters),
                       noise_sources=tuple(sources))


def replicate_onus(t: Topology, count: int) -> Topology:
    """Topology with ``count`` ONUs cloned from ONU 0 (drops, endpoints
    and drop-fiber channels are shared definitions)."""
    if t.num_onus < 1:
        raise ValueError("topology has no ONU to replicate")
    drop = t.drops[0]
    base = t.endpoints[0]
    endpoints = tuple(replace(base, onu_id=i) for i in range(count))
    return replace(t, drops=(drop,) * count, endpoints=endpoints, splitters=())
