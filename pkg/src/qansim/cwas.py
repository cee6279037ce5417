"""Core and wavelength assignment scheme (CWAS).

Enforces the three placement rules that keep classical noise away from
the quantum channels: a dedicated core for quantum signals, disjoint
quantum/classical wavebands (inter-core crosstalk becomes out-of-band
and is filtered), and upstream frequencies below the quantum-signal
frequency so the drop-fiber Raman noise sits on the weaker anti-Stokes
side.

Also hosts the evaluation pipeline that turns a topology plus a plan
into per-ONU noise counts, QBER budgets and secure key rates.
"""

import math
from dataclasses import dataclass, replace

from . import physics, qkd, topology as topo
from .errors import InfeasibleError
from .physics import OpticalPath, RamanProfile, path_loss_db
from .qkd import ChannelBudget, DetectorParams, MeasuredGains, ProtocolParams, QberBudget
from .topology import PlacedChannel, Topology, Violation
from .units import db_to_linear


@dataclass(frozen=True)
class WavebandGrid:
    """Frequency grid for channel placement (THz bands, GHz spacing)."""

    spacing_ghz: float = 100.0
    upstream_band: tuple = (190.7, 191.9)
    downstream_band: tuple = (194.7, 195.9)
    qs_band: tuple = (193.4, 194.2)
    ss_band: tuple = (193.25, 193.35)

    def slots(self, band) -> list:
        lo, hi = band
        step = self.spacing_ghz * 1e-3
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(count)]


DEFAULT_GRID = WavebandGrid()


@dataclass(frozen=True)
class Demands:
    qs_channels: int
    cs_channel_pairs: int

    def __post_init__(self):
        if self.qs_channels < 1:
            raise ValueError("need at least one quantum channel")
        if self.cs_channel_pairs < 0:
            raise ValueError("classical pair count must be >= 0")


@dataclass(frozen=True)
class AssignmentPlan:
    quantum_core: int
    classical_cores: frozenset
    qs_assignments: dict  # onu_id -> THz
    ss_waveband: tuple  # (lo, hi) THz
    classical_wavebands: tuple  # of (lo, hi) THz bands (upstream, downstream)
    us_frequencies: tuple
    ds_frequencies: tuple
    core_channels: tuple = ()  # PlacedChannel realised by assign()


def _in_band(frequency: float, band) -> bool:
    lo, hi = band
    return lo <= frequency <= hi


def assign(
    t: Topology,
    demands: Demands,
    grid: WavebandGrid = DEFAULT_GRID,
    us_power_dbm: float = 0.0,
    ds_power_dbm: float = -10.0,
) -> AssignmentPlan:
    """Greedy placement satisfying the CWAS rules.

    The quantum core is the core with the fewest adjacent classical
    cores (ties broken by lowest index); classical cores prefer
    non-neighbours of the quantum core.  Channel frequencies go on the
    grid, quantum channels above every upstream channel.
    """
    qs_slots = grid.slots(grid.qs_band)
    if demands.qs_channels > len(qs_slots):
        raise InfeasibleError(
            f"waveband shortage: {demands.qs_channels} quantum channels requested, "
            f"{len(qs_slots)} grid slots in the quantum band")

    pairs_per_core = min(t.num_wavelengths,
                         len(grid.slots(grid.upstream_band)),
                         len(grid.slots(grid.downstream_band)))
    cores_needed = (0 if demands.cs_channel_pairs == 0
                    else math.ceil(demands.cs_channel_pairs / pairs_per_core))
    if cores_needed > t.num_cores - 1:
        raise InfeasibleError(
            f"core shortage: {demands.cs_channel_pairs} classical pairs need "
            f"{cores_needed} cores, {t.num_cores - 1} available beside the quantum core")

    cores = list(range(1, t.num_cores + 1))
    best = None
    for candidate in cores:
        others = [c for c in cores if c != candidate]
        neighbours = t.adjacent_cores(candidate)
        ordered = sorted(others, key=lambda c: (c in neighbours, c))
        chosen = ordered[:cores_needed]
        score = sum(1 for c in chosen if c in neighbours)
        if best is None or score < best[0]:
            best = (score, candidate, frozenset(chosen))
    _, quantum_core, classical_cores = best

    us_freqs = tuple(grid.slots(grid.upstream_band)[:pairs_per_core])
    ds_freqs = tuple(grid.slots(grid.downstream_band)[:pairs_per_core])
    qs_freqs = qs_slots[:demands.qs_channels]

    channels = []
    remaining = demands.cs_channel_pairs
    for core in sorted(classical_cores):
        for k in range(min(pairs_per_core, remaining)):
            channels.append(PlacedChannel(f"us core{core} ch{k}", us_freqs[k],
                                          us_power_dbm, physics.UPSTREAM, core))
            channels.append(PlacedChannel(f"ds core{core} ch{k}", ds_freqs[k],
                                          ds_power_dbm, physics.DOWNSTREAM, core))
        remaining -= min(pairs_per_core, remaining)

    qs_assignments = {onu: qs_freqs[onu % len(qs_freqs)] for onu in range(t.num_onus)}
    return AssignmentPlan(
        quantum_core=quantum_core,
        classical_cores=classical_cores,
        qs_assignments=qs_assignments,
        ss_waveband=grid.ss_band,
        classical_wavebands=(grid.upstream_band, grid.downstream_band),
        us_frequencies=us_freqs,
        ds_frequencies=ds_freqs,
        core_channels=tuple(channels),
    )


def validate_plan(plan: AssignmentPlan, t: Topology) -> list:
    """Check the CWAS rules; empty list when the plan is compliant."""
    violations = []

    def bad(rule, entity, detail):
        violations.append(Violation(rule, entity, detail))

    placed = list(plan.core_channels) + [
        ch for ch in t.classical_channels if ch.core is not None
    ]
    for ch in placed:
        if ch.core == plan.quantum_core:
            bad("dedicated_core", f"channel {ch.label}",
                f"classical channel in quantum core {plan.quantum_core}")
    if plan.quantum_core in plan.classical_cores:
        bad("dedicated_core", "plan",
            f"quantum core {plan.quantum_core} listed as classical")

    for onu, qs in sorted(plan.qs_assignments.items()):
        for band in plan.classical_wavebands:
            if _in_band(qs, band):
                bad("disjoint_wavebands", f"onu {onu}",
                    f"qs {qs} THz inside classical band {band}")
        if _in_band(qs, plan.ss_waveband):
            bad("ss_overlap", f"onu {onu}",
                f"qs {qs} THz inside synchronization band {plan.ss_waveband}")

    upstream = set(plan.us_frequencies)
    upstream.update(ch.frequency_thz for ch in t.classical_channels
                    if ch.direction == physics.UPSTREAM)
    upstream.update(ch.frequency_thz for ch in plan.core_channels
                    if ch.direction == physics.UPSTREAM)
    for onu, qs in sorted(plan.qs_assignments.items()):
        for us in sorted(upstream):
            if us >= qs:
                bad("upstream_below_qs", f"onu {onu}",
                    f"upstream {us} THz >= qs {qs} THz")
    return violations


# --- evaluation pipeline -------------------------------------------------

NOISE_TERMS = ("mcf_ds", "mcf_us", "ssmf_ds", "ssmf_us")


@dataclass(frozen=True)
class OnuEvaluation:
    """Everything the runners need about one ONU's quantum channel."""

    onu_id: int
    path_loss_db: float
    budget: ChannelBudget
    noise_counts: dict  # term -> counts per gate
    signal_counts: float  # detection probability from signal photons at mu
    qber: QberBudget
    decoy: qkd.DecoyEstimate
    skr_bps: float


def _term_of(source: physics.NoiseSource) -> str:
    fiber = "ssmf" if source.channel.location == physics.DROP_FIBER else "mcf"
    side = "us" if source.channel.direction == physics.UPSTREAM else "ds"
    return f"{fiber}_{side}"


def _source_counts(path: OpticalPath, source, qs_thz, detector, raman, coupling_db_per_km):
    """Counts per gate contributed by one noise source, at the detector."""
    segment = path.entries[source.segment_index]
    bandwidth = path.collection_bandwidth_ghz(source.segment_index, qs_thz)
    if math.isinf(bandwidth):
        raise ValueError("no downstream filter bounds the noise bandwidth")
    generated = physics.srs_power(source.channel, segment, raman, qs_thz,
                                  bandwidth, source.relative_direction)
    if source.inter_core:
        generated *= physics.icxt_linear_fraction(coupling_db_per_km,
                                                  segment.length_km)
    suppression = (path.loss_after_db(source.segment_index)
                   + path.rejection_after_db(source.segment_index, qs_thz))
    counts = physics.noise_counts_per_gate(
        generated * db_to_linear(-suppression), qs_thz,
        detector.gate_width_ns, detector.efficiency)
    if source.inter_core:
        # Residual crosstalk at the classical frequency, out of band for
        # the quantum filters.
        leaked = physics.icxt_power(source.channel, coupling_db_per_km, segment)
        oob = (path.loss_after_db(source.segment_index)
               + path.rejection_after_db(source.segment_index,
                                         source.channel.frequency_thz))
        counts += physics.noise_counts_per_gate(
            leaked * db_to_linear(-oob), source.channel.frequency_thz,
            detector.gate_width_ns, detector.efficiency)
    return counts


def evaluate_onu(
    t: Topology,
    plan: AssignmentPlan,
    protocol: ProtocolParams,
    detector: DetectorParams,
    raman: RamanProfile,
    onu_id: int,
    include_sources=None,  # iterable of noise terms, None = all
    launch_powers=None,  # term -> dBm override
    splitter_loss_db: float | None = None,
    mux_loss_db: float = 0.0,
    extra_filters: tuple = (),
    clock_scale: float = 1.0,
    gate_width_ns: float | None = None,
    dark_scale_with_gate: bool = True,
) -> OnuEvaluation:
    """Run the full chain for one ONU: path, noise, QBER budget, decoy
    bounds and secure key rate.

    ``gate_width_ns`` overrides the detector gate; the dark count per
    gate scales with the gate width by default (dark counts are a rate).
    ``include_sources`` restricts which noise terms are active, e.g. to
    reproduce single-aggressor measurements.
    """
    if gate_width_ns is not None and gate_width_ns != detector.gate_width_ns:
        dark = detector.dark_count_per_gate
        if dark_scale_with_gate:
            dark *= gate_width_ns / detector.gate_width_ns
        detector = replace(detector, gate_width_ns=gate_width_ns,
                           dark_count_per_gate=dark)

    extra_losses = ()
    if mux_loss_db > 0:
        extra_losses = (physics.LumpedLoss("wavelength mux", mux_loss_db),)
    path = topo.quantum_path(t, onu_id, splitter_loss_db=splitter_loss_db,
                             extra_losses=extra_losses, extra_filters=extra_filters)
    qs_thz = plan.qs_assignments.get(onu_id, t.endpoints[onu_id].qs_frequency_thz)

    loss_db = path_loss_db(path)
    transmittance = db_to_linear(-loss_db) * detector.efficiency

    include = set(NOISE_TERMS) if include_sources is None else set(include_sources)
    terms = {name: 0.0 for name in NOISE_TERMS}
    for source in path.noise_sources:
        term = _term_of(source)
        if term not in include:
            continue
        if launch_powers and term in launch_powers:
            source = replace(source, channel=replace(
                source.channel, launch_power_dbm=launch_powers[term]))
        terms[term] += _source_counts(path, source, qs_thz, detector, raman,
                                      t.icxt_coupling_db_per_km)

    dark = detector.dark_count_per_gate
    y0 = min(dark + sum(terms.values()), 1.0)
    budget = ChannelBudget(transmittance=transmittance, background_per_gate=y0)
    e_det = detector.misalignment_error

    signal = -math.expm1(-transmittance * protocol.mu_signal)
    inherent_gain = signal + dark
    qber_in = ((0.5 * dark + e_det * signal) / inherent_gain
               if inherent_gain > 0 else 0.5)
    qber = qkd.qber_budget(terms, signal, qber_in, dark_counts=dark)

    q_mu, e_mu = qkd.gain_and_qber(protocol.mu_signal, budget, e_det)
    q_nu, e_nu = qkd.gain_and_qber(protocol.nu_decoy, budget, e_det)
    measured = MeasuredGains(q_mu=q_mu, e_mu=e_mu, q_nu=q_nu, e_nu=e_nu, y0=y0)
    estimate = qkd.decoy_bounds(protocol, measured)
    scaled = replace(protocol, clock_rate_hz=protocol.clock_rate_hz * clock_scale)
    skr = qkd.secure_key_rate(scaled, estimate)

    return OnuEvaluation(
        onu_id=onu_id,
        path_loss_db=loss_db,
        budget=budget,
        noise_counts=terms,
        signal_counts=signal,
        qber=qber,
        decoy=estimate,
        skr_bps=skr,
    )


def predict_plan_qber(
    plan: AssignmentPlan,
    t: Topology,
    protocol: ProtocolParams,
    detector: DetectorParams,
    raman: RamanProfile,
    launch_powers=None,
    include_sources=None,
) -> dict:
    """Per-ONU QBER budget for a plan on a topology."""
    return {
        onu: evaluate_onu(t, plan, protocol, detector, raman, onu,
                          include_sources=include_sources,
                          launch_powers=launch_powers).qber
        for onu in range(t.num_onus)
    }


def with_swapped_upstream(t: Topology, plan: AssignmentPlan, onu_id: int):
    """Exchange an ONU's quantum frequency with the upstream frequency of
    its drop-fiber channel.  Receiver filters that passed the old quantum
    frequency are recentered on the new one (the receiver stays tuned to
    its channel).  Used to probe the anti-Stokes placement rule: the
    swapped layout puts the quantum channel on the Stokes side of the
    upstream pump."""
    drop_us = [ch for ch in t.classical_channels
               if ch.core is None and ch.direction == physics.UPSTREAM]
    if not drop_us:
        raise ValueError("topology has no drop-fiber upstream channel")
    old_us = drop_us[0].frequency_thz
    old_qs = plan.qs_assignments[onu_id]

    channels = tuple(
        replace(ch, frequency_thz=old_qs)
        if ch is drop_us[0] else ch
        for ch in t.classical_channels
    )
    endpoints = tuple(
        replace(ep, qs_frequency_thz=old_us) if ep.onu_id == onu_id else ep
        for ep in t.endpoints
    )
    modules = tuple(
        replace(m, filter=replace(m.filter, center_thz=old_us))
        if physics.filter_rejection_db(old_qs, m.filter) == 0.0 else m
        for m in t.wdm_modules
    )
    swapped_t = replace(t, classical_channels=channels, endpoints=endpoints,
                        wdm_modules=modules)
    assignments = dict(plan.qs_assignments)
    assignments[onu_id] = old_us
    swapped_plan = replace(plan, qs_assignments=assignments)
    return swapped_t, swapped_plan
