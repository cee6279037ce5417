"""Configuration ingestion, calibration and named scenario runners.

Configs are YAML-formatted text files with a fail-closed schema: unknown
keys are errors.  Runners emit plot-ready tables (CSV with a header row,
floats printed with 9 significant digits); every run is deterministic
given the config and seed.
"""

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import yaml

from . import cwas, physics, qkd, wtdm
from . import topology as topo
from .cwas import AssignmentPlan, WavebandGrid
from .errors import CalibrationError, ConfigError, ValidationError
from .physics import FiberSegment, RamanProfile, SpectralFilter
from .qkd import DetectorParams, ProtocolParams
from .topology import PlacedChannel, QuantumEndpoint, Splitter, Topology, WdmModule
from .wtdm import SplitterLossTable

FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7a", "fig7b")

SWEEP_VARIABLES = (
    "drop_length_km",
    "upstream_power_dbm",
    "downstream_power_dbm",
    "num_receivers",
)

# Drop-length grids used by the named figure runners (km).
_LENGTH_GRID_COARSE = [round(0.1 * i, 3) for i in range(26)]  # 0 .. 2.5
_LENGTH_GRID_FINE = [round(0.05 * i, 3) for i in range(61)]  # 0 .. 3.0

_FIG3_CASES = (
    ("case1", ()),
    ("case4", ("ssmf_ds",)),
    ("case5", ("ssmf_us",)),
    ("case6", ("ssmf_ds", "ssmf_us")),
)
_FIG4_CASES = (
    ("case1", ()),
    ("case2", ("mcf_ds",)),
    ("case3", ("mcf_us",)),
    ("case4", ("ssmf_ds",)),
    ("case5", ("ssmf_us",)),
    ("case6", ("mcf_ds", "mcf_us", "ssmf_ds", "ssmf_us")),
)
_FIG4_SPLITTER_RATIOS = (1, 2, 3)

_TERM_FIELDS = {
    "mcf_ds": "qber_mcf_ds",
    "mcf_us": "qber_mcf_us",
    "ssmf_ds": "qber_ssmf_ds",
    "ssmf_us": "qber_ssmf_us",
}


# --- output tables --------------------------------------------------------


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _parse_cell(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class Table:
    columns: tuple
    rows: list

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_format_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    @classmethod
    def from_csv_text(cls, text: str) -> "Table":
        lines = [ln for ln in text.splitlines() if ln]
        columns = tuple(lines[0].split(","))
        rows = [tuple(_parse_cell(c) for c in ln.split(",")) for ln in lines[1:]]
        return cls(columns=columns, rows=rows)


# --- configuration --------------------------------------------------------


class _Node:
    """Mapping wrapper that tracks consumed keys and reports errors with
    their full config path."""

    def __init__(self, path: str, data):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping")
        self.path = path
        self.data = data
        self.seen = set()

    def _fetch(self, key, required, default):
        self.seen.add(key)
        if key not in self.data or self.data[key] is None:
            if required:
                raise ConfigError(f"{self.path}.{key}: required")
            return default
        return self.data[key]

    def value(self, key, kind, required=False, default=None):
        raw = self._fetch(key, required, default)
        if raw is default and key not in self.data:
            return default
        if raw is None:
            return None
        if kind is float and isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
        if kind is int and isinstance(raw, int) and not isinstance(raw, bool):
            return raw
        if kind is str and isinstance(raw, str):
            return raw
        if kind is list and isinstance(raw, list):
            return raw
        if kind is dict and isinstance(raw, dict):
            return raw
        raise ConfigError(f"{self.path}.{key}: expected {kind.__name__}")

    def section(self, key, required=False):
        raw = self._fetch(key, required, None)
        if raw is None:
            return None
        return _Node(f"{self.path}.{key}", raw)

    def sections(self, key):
        raw = self.value(key, list, default=[])
        return [_Node(f"{self.path}.{key}[{i}]", item)
                for i, item in enumerate(raw or [])]

    def finish(self):
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            raise ConfigError(f"{self.path}: unknown keys {unknown}")


def _build(path, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class FilteringSpec:
    """Strict filtering stage used by the fig7 runners: an extra
    bandpass ahead of the detector plus a narrower gate."""

    passband_ghz: float = 30.0
    insertion_loss_db: float = 0.8
    gate_width_ns: float = 0.18


@dataclass(frozen=True)
class CalibrationTargets:
    baseline_qber: float
    upstream_qber_vs_length_km: tuple  # of (length_km, qber)


@dataclass(frozen=True)
class SweepAxis:
    variable: str
    start: float
    stop: float
    steps: int

    def values(self) -> list:
        if self.steps <= 1:
            return [self.start]
        step = (self.stop - self.start) / (self.steps - 1)
        return [self.start + i * step for i in range(self.steps)]


@dataclass(frozen=True)
class McSettings:
    num_gates: int = 1_000_000
    seed: int = 20240501


@dataclass(frozen=True)
class CalibrationResult:
    rho0: float
    e_det: float
    residuals: tuple  # of (label, target, model, residual)


@dataclass
class ScenarioConfig:
    topology: Topology
    plan: AssignmentPlan
    protocol: ProtocolParams
    detector_efficiency: float
    gate_width_ns: float
    dark_count_per_gate: float
    misalignment_error: float | None
    rho0: float | None
    anti_stokes_factor: float
    filtering: FilteringSpec
    calibration: CalibrationTargets | None
    sweep_axes: tuple
    monte_carlo: McSettings
    output: str | None
    _calibrated: CalibrationResult | None = field(default=None, repr=False)

    def detector(self, misalignment: float) -> DetectorParams:
        return DetectorParams(
            efficiency=self.detector_efficiency,
            gate_width_ns=self.gate_width_ns,
            dark_count_per_gate=self.dark_count_per_gate,
            misalignment_error=misalignment,
        )

    def raman(self, rho0: float) -> RamanProfile:
        return RamanProfile(rho0=rho0, anti_stokes_factor=self.anti_stokes_factor)


def bundled_config_path(name: str = "experiment.cfg"):
    """Filesystem path of a config shipped with the package."""
    return resources.files("qansim").joinpath("configs", name)


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigError(f"{path}: parse error{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _config_from_mapping(_Node("config", raw))


def _config_from_mapping(root: _Node) -> ScenarioConfig:
    tnode = root.section("topology", required=True)

    num_cores = tnode.value("num_cores", int, required=True)
    num_wavelengths = tnode.value("num_wavelengths", int, required=True)
    quantum_core = tnode.value("quantum_core", int, required=True)
    num_onus = tnode.value("num_onus", int, default=1)

    fnode = tnode.section("feeder", required=True)
    feeder = _build(fnode.path, FiberSegment,
                    length_km=fnode.value("length_km", float, required=True),
                    attenuation_db_per_km=fnode.value("attenuation_db_per_km",
                                                      float, required=True),
                    kind=physics.MCF_CORE)
    feeder_extra = fnode.value("extra_loss_db", float, default=0.0)
    fnode.finish()

    dnode = tnode.section("drop", required=True)
    drop = _build(dnode.path, FiberSegment,
                  length_km=dnode.value("length_km", float, required=True),
                  attenuation_db_per_km=dnode.value("attenuation_db_per_km",
                                                    float, required=True),
                  kind=physics.SSMF)
    dnode.finish()

    modules = []
    for mnode in tnode.sections("wdm_modules"):
        filt = _build(mnode.path, SpectralFilter,
                      center_thz=mnode.value("center_thz", float, required=True),
                      passband_ghz=mnode.value("passband_ghz", float, required=True),
                      insertion_loss_db=mnode.value("insertion_loss_db", float,
                                                    default=0.8),
                      rejection_floor_db=mnode.value("rejection_floor_db", float,
                                                     default=80.0))
        modules.append(_build(mnode.path, WdmModule,
                              label=mnode.value("label", str, required=True),
                              placement=mnode.value("placement", str, required=True),
                              filter=filt))
        mnode.finish()

    channels = []
    for cnode in tnode.sections("classical_channels"):
        channels.append(_build(cnode.path, PlacedChannel,
                               label=cnode.value("label", str, required=True),
                               frequency_thz=cnode.value("frequency_thz", float,
                                                         required=True),
                               launch_power_dbm=cnode.value("launch_power_dbm",
                                                            float, required=True),
                               direction=cnode.value("direction", str, required=True),
                               core=cnode.value("core", int)))
        cnode.finish()

    splitters = []
    snode = tnode.section("splitter")
    if snode is not None:
        ratio = snode.value("ratio", int, required=True)
        loss = snode.value("loss_db", float)
        if loss is None:
            loss = SplitterLossTable().loss_db(ratio)
        snode.finish()
        if ratio > 1:
            splitters.append(Splitter(ratio=ratio, loss_db=loss,
                                      onu_ids=tuple(range(num_onus))))

    adjacency = None
    adj_raw = tnode.value("adjacency", dict)
    if adj_raw is not None:
        adjacency = {int(k): frozenset(int(v) for v in vs)
                     for k, vs in adj_raw.items()}

    receiver_loss = tnode.value("receiver_loss_db", float, default=0.0)
    fan_loss = tnode.value("fanin_fanout_loss_db", float, required=True)
    icxt = tnode.value("icxt_coupling_db_per_km", float, default=-60.0)
    tnode.finish()

    qnode = root.section("quantum", required=True)
    qs_thz = qnode.value("qs_frequency_thz", float, required=True)
    ss_thz = qnode.value("ss_frequency_thz", float, required=True)
    qnode.finish()
    endpoints = tuple(
        _build("quantum", QuantumEndpoint, onu_id=i,
               qs_frequency_thz=qs_thz, ss_frequency_thz=ss_thz)
        for i in range(num_onus)
    )

    topology = _build("topology", Topology,
                      num_cores=num_cores,
                      num_wavelengths=num_wavelengths,
                      feeder=feeder,
                      fanin_fanout_loss_db=fan_loss,
                      drops=(drop,) * num_onus,
                      endpoints=endpoints,
                      wdm_modules=tuple(modules),
                      classical_channels=tuple(channels),
                      splitters=tuple(splitters),
                      quantum_core=quantum_core,
                      feeder_extra_loss_db=feeder_extra,
                      receiver_loss_db=receiver_loss,
                      icxt_coupling_db_per_km=icxt,
                      adjacency=adjacency)

    pnode = root.section("protocol", required=True)
    ratio_raw = pnode.value("state_ratio", list, default=[14, 1, 1])
    protocol = _build(pnode.path, ProtocolParams,
                      mu_signal=pnode.value("mu_signal", float, required=True),
                      nu_decoy=pnode.value("nu_decoy", float, required=True),
                      vacuum=pnode.value("vacuum", float, default=0.0),
                      state_ratio=tuple(int(x) for x in ratio_raw),
                      clock_rate_hz=pnode.value("clock_rate_hz", float, required=True),
                      error_correction_efficiency=pnode.value(
                          "error_correction_efficiency", float, default=1.16),
                      sifting_factor=pnode.value("sifting_factor", float, default=0.5))
    pnode.finish()

    detnode = root.section("detector", required=True)
    det_eff = detnode.value("efficiency", float, required=True)
    gate_ns = detnode.value("gate_width_ns", float, required=True)
    dark = detnode.value("dark_count_per_gate", float, required=True)
    misalignment = detnode.value("misalignment_error", float)
    detnode.finish()
    if det_eff <= 0 or det_eff > 1:
        raise ConfigError("detector.efficiency: must be in (0, 1]")
    if gate_ns <= 0:
        raise ConfigError("detector.gate_width_ns: must be > 0")
    if not 0 <= dark <= 1:
        raise ConfigError("detector.dark_count_per_gate: must be in [0, 1]")

    rnode = root.section("raman")
    rho0 = rnode.value("rho0", float) if rnode else None
    anti_stokes = rnode.value("anti_stokes_factor", float, default=0.4) if rnode else 0.4
    if rnode:
        rnode.finish()

    filtnode = root.section("filtering")
    if filtnode is not None:
        filtering = _build(filtnode.path, FilteringSpec,
                           passband_ghz=filtnode.value("passband_ghz", float,
                                                       default=30.0),
                           insertion_loss_db=filtnode.value("insertion_loss_db",
                                                            float, default=0.8),
                           gate_width_ns=filtnode.value("gate_width_ns", float,
                                                        default=0.18))
        filtnode.finish()
    else:
        filtering = FilteringSpec()

    calnode = root.section("calibration")
    calibration = None
    if calnode is not None:
        points = calnode.value("upstream_qber_vs_length_km", list, required=True)
        parsed_points = []
        for i, p in enumerate(points):
            if not (isinstance(p, list) and len(p) == 2):
                raise ConfigError(
                    f"calibration.upstream_qber_vs_length_km[{i}]: expected [length, qber]")
            parsed_points.append((float(p[0]), float(p[1])))
        calibration = CalibrationTargets(
            baseline_qber=calnode.value("baseline_qber", float, required=True),
            upstream_qber_vs_length_km=tuple(parsed_points))
        calnode.finish()

    axes = []
    for anode in root.sections("sweep"):
        axes.append(_build(anode.path, SweepAxis,
                           variable=anode.value("variable", str, required=True),
                           start=anode.value("start", float, required=True),
                           stop=anode.value("stop", float, required=True),
                           steps=anode.value("steps", int, required=True)))
        if axes[-1].variable not in SWEEP_VARIABLES:
            raise ConfigError(f"{anode.path}.variable: unknown sweep variable "
                              f"{axes[-1].variable!r} (choose from {SWEEP_VARIABLES})")
        anode.finish()
    if len(axes) > 1:
        raise ConfigError("sweep: exactly one sweep axis per run")

    mcnode = root.section("monte_carlo")
    if mcnode is not None:
        monte_carlo = McSettings(
            num_gates=mcnode.value("num_gates", int, default=1_000_000),
            seed=mcnode.value("seed", int, default=20240501))
        mcnode.finish()
    else:
        monte_carlo = McSettings()

    plan_node = root.section("plan")
    demands_node = root.section("demands")
    if plan_node is not None and demands_node is not None:
        raise ConfigError("config: give either plan or demands, not both")

    output = root.value("output", str)
    root.finish()

    if plan_node is not None:
        def band(key, default):
            raw = plan_node.value(key, list, default=None)
            if raw is None:
                return default
            if len(raw) != 2:
                raise ConfigError(f"plan.{key}: expected [lo, hi]")
            return (float(raw[0]), float(raw[1]))

        grid = WavebandGrid()
        plan_core = plan_node.value("quantum_core", int, default=quantum_core)
        classical_cores = frozenset(
            int(c) for c in plan_node.value("classical_cores", list, default=[]))
        ss_band = band("ss_waveband", grid.ss_band)
        us_band = band("upstream_waveband", grid.upstream_band)
        ds_band = band("downstream_waveband", grid.downstream_band)
        plan_node.finish()
        if not classical_cores:
            classical_cores = frozenset(ch.core for ch in channels
                                        if ch.core is not None)
        us = tuple(sorted({ch.frequency_thz for ch in channels
                           if ch.direction == physics.UPSTREAM}))
        ds = tuple(sorted({ch.frequency_thz for ch in channels
                           if ch.direction == physics.DOWNSTREAM}))
        plan = AssignmentPlan(
            quantum_core=plan_core,
            classical_cores=classical_cores,
            qs_assignments={i: qs_thz for i in range(num_onus)},
            ss_waveband=ss_band,
            classical_wavebands=(us_band, ds_band),
            us_frequencies=us,
            ds_frequencies=ds,
        )
    elif demands_node is not None:
        demands = _build(demands_node.path, cwas.Demands,
                         qs_channels=demands_node.value("qs_channels", int,
                                                        required=True),
                         cs_channel_pairs=demands_node.value("cs_channel_pairs", int,
                                                             required=True))
        demands_node.finish()
        plan = cwas.assign(topology, demands)
        # the assignment owns the core layout in demands mode
        topology = replace(
            topology, quantum_core=plan.quantum_core,
            classical_channels=topology.classical_channels + plan.core_channels)
    else:
        raise ConfigError("config: needs a plan or demands section")

    violations = topo.validate(topology)
    violations += cwas.validate_plan(plan, topology)
    if plan.quantum_core != topology.quantum_core:
        violations.append(topo.Violation(
            "quantum_core_mismatch", "plan",
            f"plan core {plan.quantum_core} != topology core {topology.quantum_core}"))
    if violations:
        raise ValidationError(
            "; ".join(str(v) for v in violations), violations=violations)

    return ScenarioConfig(
        topology=topology,
        plan=plan,
        protocol=protocol,
        detector_efficiency=det_eff,
        gate_width_ns=gate_ns,
        dark_count_per_gate=dark,
        misalignment_error=misalignment,
        rho0=rho0,
        anti_stokes_factor=anti_stokes,
        filtering=filtering,
        calibration=calibration,
        sweep_axes=tuple(axes),
        monte_carlo=monte_carlo,
        output=output,
    )


# --- calibration ----------------------------------------------------------

_BISECT_REL_TOL = 1e-6


def _bisect(fn, target, lo, hi, rel_tol=_BISECT_REL_TOL):
    """Deterministic bisection of a monotone increasing fn."""
    f_lo, f_hi = fn(lo), fn(hi)
    if not f_lo <= target <= f_hi:
        raise CalibrationError(
            f"target {target:.6g} outside reachable range "
            f"[{f_lo:.6g}, {f_hi:.6g}]: no bracket")
    while hi - lo > rel_tol * max(abs(hi), 1e-30):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _with_drop_length(t: Topology, length_km: float) -> Topology:
    drops = tuple(replace(d, length_km=length_km) for d in t.drops)
    return replace(t, drops=drops)


def calibrate(config: ScenarioConfig, targets: CalibrationTargets | None = None) -> CalibrationResult:
    """Fit the two free model parameters from measured-curve targets.

    The intrinsic detection error comes from the no-classical-signal
    baseline QBER; the Raman magnitude from the upstream-only QBER at a
    1 km drop.  Both are 1-D bisections on monotone forward models.
    """
    targets = targets or config.calibration
    if targets is None:
        raise CalibrationError("no calibration targets available")
    if not 0.0 <= targets.baseline_qber <= 0.5:
        raise CalibrationError("baseline QBER target outside [0, 0.5]: no bracket")
    if not targets.upstream_qber_vs_length_km:
        raise CalibrationError("need at least one upstream QBER target point")
    for _, value in targets.upstream_qber_vs_length_km:
        if not 0.0 <= value <= 0.5:
            raise CalibrationError("upstream QBER target outside [0, 0.5]: no bracket")

    t = config.topology
    plan = config.plan
    protocol = config.protocol
    raman_unit = config.raman(rho0=1.0)

    def baseline(e_det):
        detector = config.detector(e_det)
        result = cwas.evaluate_onu(t, plan, protocol, detector, raman_unit, 0,
                                   include_sources=())
        return result.qber.qber_total

    e_det = _bisect(baseline, targets.baseline_qber, 0.0, 0.5)
    detector = config.detector(e_det)

    # Fit rho0 at the target point closest to the 1 km reference length.
    points = sorted(targets.upstream_qber_vs_length_km,
                    key=lambda p: abs(p[0] - 1.0))
    fit_length, fit_target = points[0]
    t_fit = _with_drop_length(t, fit_length)

    def upstream_only(rho0):
        result = cwas.evaluate_onu(t_fit, plan, protocol, detector,
                                   config.raman(rho0=rho0), 0,
                                   include_sources=("ssmf_us",))
        return result.qber.qber_total

    hi = 1e-12
    expansions = 0
    while upstream_only(hi) < fit_target:
        hi *= 10.0
        expansions += 1
        if expansions > 30:
            raise CalibrationError(
                f"upstream QBER target {fit_target:.6g} unreachable: no bracket")
    rho0 = _bisect(upstream_only, fit_target, 0.0, hi)

    residuals = []
    model_base = baseline(e_det)
    residuals.append(("baseline_qber", targets.baseline_qber, model_base,
                      model_base - targets.baseline_qber))
    raman = config.raman(rho0=rho0)
    for length, value in targets.upstream_qber_vs_length_km:
        result = cwas.evaluate_onu(_with_drop_length(t, length), plan, protocol,
                                   detector, raman, 0,
                                   include_sources=("ssmf_us",))
        model = result.qber.qber_total
        residuals.append((f"upstream_qber@{length:g}km", value, model,
                          model - value))
    return CalibrationResult(rho0=rho0, e_det=e_det, residuals=tuple(residuals))


def ensure_calibrated(config: ScenarioConfig):
    """Resolve detector and Raman parameters, calibrating on demand."""
    if config.misalignment_error is not None and config.rho0 is not None:
        return config.detector(config.misalignment_error), config.raman(config.rho0)
    if config._calibrated is None:
        config._calibrated = calibrate(config)
    cal = config._calibrated
    e_det = (config.misalignment_error
             if config.misalignment_error is not None else cal.e_det)
    rho0 = config.rho0 if config.rho0 is not None else cal.rho0
    return config.detector(e_det), config.raman(rho0)


# --- figure runners -------------------------------------------------------


def _decomposed_qber(full_eval, terms):
    value = full_eval.qber.qber_in
    for term in terms:
        value += getattr(full_eval.qber, _TERM_FIELDS[term])
    return value


def _case_rows(config, detector, raman, cases, splitter_loss_db=None,
               mc_gates=None, mc_seed=None):
    """QBER decomposition plus per-case key rates for one splitter setting.

    The QBER column decomposes the all-signals-on budget, so case QBERs
    are exactly additive; key rates re-run the pipeline with only the
    case's aggressors active.
    """
    t, plan, protocol = config.topology, config.plan, config.protocol
    full_terms = cases[-1][1]
    full = cwas.evaluate_onu(t, plan, protocol, detector, raman, 0,
                             include_sources=full_terms,
                             splitter_loss_db=splitter_loss_db)
    rows = []
    for name, terms in cases:
        case_eval = cwas.evaluate_onu(t, plan, protocol, detector, raman, 0,
                                      include_sources=terms,
                                      splitter_loss_db=splitter_loss_db)
        row = [name, _decomposed_qber(full, terms), case_eval.skr_bps]
        if mc_gates:
            mc = qkd.monte_carlo_detect(protocol, case_eval.budget,
                                        detector.misalignment_error,
                                        mc_gates, mc_seed)
            row += [mc["signal"][0], mc["signal"][1]]
        rows.append(tuple(row))
    return rows


def run_fig3(config, detector, raman, mc_gates=None, mc_seed=None) -> Table:
    """Drop-fiber aggressor study: no-signal baseline, downstream only,
    upstream only, both (cases 1, 4, 5, 6)."""
    columns = ["case", "qber", "skr_bps"]
    if mc_gates:
        columns += ["gain_mu_mc", "qber_mu_mc"]
    rows = _case_rows(config, detector, raman, _FIG3_CASES,
                      mc_gates=mc_gates, mc_seed=mc_seed)
    return Table(columns=tuple(columns), rows=rows)


def run_fig4(config, detector, raman) -> Table:
    """All six aggressor cases across 1*1, 1*2 and 1*3 splitters.  The
    transmitter clock is left unchanged across splitters, matching how
    the reference measurements were taken."""
    table = SplitterLossTable()
    rows = []
    for ratio in _FIG4_SPLITTER_RATIOS:
        loss = table.loss_db(ratio)
        for row in _case_rows(config, detector, raman, _FIG4_CASES,
                              splitter_loss_db=loss):
            rows.append((ratio,) + row)
    return Table(columns=("splitter_ratio", "case", "qber", "skr_bps"), rows=rows)


def run_fig5(config, detector, raman) -> Table:
    """QBER against drop length, resolved per aggressor."""
    rows = []
    for length in _LENGTH_GRID_COARSE:
        t = _with_drop_length(config.topology, length)
        cfg = replace_topology(config, t)
        full = cwas.evaluate_onu(t, cfg.plan, cfg.protocol, detector, raman, 0,
                                 include_sources=("ssmf_ds", "ssmf_us"))
        rows.append((
            length,
            _decomposed_qber(full, ()),
            _decomposed_qber(full, ("ssmf_ds",)),
            _decomposed_qber(full, ("ssmf_us",)),
            _decomposed_qber(full, ("ssmf_ds", "ssmf_us")),
        ))
    return Table(columns=("length_km", "qber_no_cs", "qber_ds_only",
                          "qber_us_only", "qber_both"), rows=rows)


def run_fig6(config, detector, raman) -> Table:
    """Key rate and total QBER against drop length with the plain 150 GHz
    passband and full-width gate."""
    rows = []
    for length in _LENGTH_GRID_FINE:
        t = _with_drop_length(config.topology, length)
        result = cwas.evaluate_onu(t, config.plan, config.protocol, detector,
                                   raman, 0)
        rows.append((length, result.qber.qber_total, result.skr_bps))
    return Table(columns=("length_km", "qber", "skr_bps"), rows=rows)


def _strict_filter(config) -> SpectralFilter:
    qs = config.topology.endpoints[0].qs_frequency_thz
    return SpectralFilter(center_thz=qs,
                          passband_ghz=config.filtering.passband_ghz,
                          insertion_loss_db=config.filtering.insertion_loss_db)


def run_fig7a(config, detector, raman) -> Table:
    """Drop-length scan with the strict filtering stage (extra bandpass,
    narrow gate) next to the unfiltered no-classical-signal reference."""
    filt = _strict_filter(config)
    gate = config.filtering.gate_width_ns
    rows = []
    for length in _LENGTH_GRID_FINE:
        t = _with_drop_length(config.topology, length)
        filtered = cwas.evaluate_onu(t, config.plan, config.protocol, detector,
                                     raman, 0, extra_filters=(filt,),
                                     gate_width_ns=gate)
        reference = cwas.evaluate_onu(t, config.plan, config.protocol, detector,
                                      raman, 0, include_sources=())
        rows.append((length, filtered.qber.qber_total, filtered.skr_bps,
                     reference.qber.qber_total, reference.skr_bps))
    return Table(columns=("length_km", "qber", "skr_bps",
                          "qber_no_cs", "skr_no_cs"), rows=rows)


def run_fig7b(config, detector, raman, num_onus: int = 64) -> Table:
    """Per-ONU key rate against the number of receivers for a 64-ONU
    network under the strict filtering stage."""
    t = topo.replicate_onus(config.topology, num_onus)
    plan = replace(config.plan,
                   qs_assignments={i: config.plan.qs_assignments.get(0)
                                   for i in range(num_onus)})
    table = SplitterLossTable()
    filt = _strict_filter(config)
    gate = config.filtering.gate_width_ns
    rows = []
    for receivers in wtdm.receiver_ladder(num_onus):
        plan_r = wtdm.plan_schedule(num_onus, receivers,
                                    config.protocol.clock_rate_hz)
        rates = wtdm.schedule_skr(plan_r, t, plan, table, config.protocol,
                                  detector, raman, extra_filters=(filt,),
                                  gate_width_ns=gate)
        rows.append((num_onus, receivers, plan_r.group_size,
                     table.loss_db(plan_r.group_size),
                     plan_r.per_onu_clock_hz,
                     sum(rates.values()) / len(rates)))
    return Table(columns=("M", "R", "group_size", "splitter_loss_db",
                          "per_onu_clock_hz", "per_onu_skr_bps"), rows=rows)


def replace_topology(config: ScenarioConfig, t: Topology) -> ScenarioConfig:
    return replace(config, topology=t)


def run_figure(name: str, config: ScenarioConfig,
               mc_gates: int | None = None, mc_seed: int | None = None) -> Table:
    """Run one named figure reproduction and return its table."""
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r} (choose from {FIGURES})")
    detector, raman = ensure_calibrated(config)
    seed = mc_seed if mc_seed is not None else config.monte_carlo.seed
    if name == "fig3":
        return run_fig3(config, detector, raman, mc_gates=mc_gates, mc_seed=seed)
    if name == "fig4":
        return run_fig4(config, detector, raman)
    if name == "fig5":
        return run_fig5(config, detector, raman)
    if name == "fig6":
        return run_fig6(config, detector, raman)
    if name == "fig7a":
        return run_fig7a(config, detector, raman)
    return run_fig7b(config, detector, raman)


# --- generic sweep --------------------------------------------------------


def sweep(config: ScenarioConfig) -> Table:
    """Run the configured one-axis sweep.

    Columns are fixed: step, the swept variable, qber, skr_bps.  Length
    and power sweeps use the plain detector stage; the receiver-count
    sweep applies the strict filtering stage (its natural operating
    point) and reports the per-ONU key rate.
    """
    if len(config.sweep_axes) != 1:
        raise ValidationError("sweep requires exactly one configured axis")
    axis = config.sweep_axes[0]
    detector, raman = ensure_calibrated(config)
    rows = []

    if axis.variable == "num_receivers":
        num_onus = config.topology.num_onus
        t = topo.replicate_onus(config.topology, num_onus)
        plan = replace(config.plan,
                       qs_assignments={i: config.plan.qs_assignments.get(0)
                                       for i in range(num_onus)})
        table = SplitterLossTable()
        filt = _strict_filter(config)
        for step, value in enumerate(axis.values()):
            receivers = max(1, int(round(value)))
            plan_r = wtdm.plan_schedule(num_onus, receivers,
                                        config.protocol.clock_rate_hz)
            result = cwas.evaluate_onu(
                t, plan, config.protocol, detector, raman, 0,
                splitter_loss_db=table.loss_db(plan_r.group_size),
                mux_loss_db=wtdm.DEFAULT_MUX_LOSS_DB if receivers >= 2 else 0.0,
                clock_scale=plan_r.per_onu_clock_hz / config.protocol.clock_rate_hz,
                extra_filters=(filt,),
                gate_width_ns=config.filtering.gate_width_ns)
            rows.append((step, receivers, result.qber.qber_total, result.skr_bps))
        return Table(columns=("step", axis.variable, "qber", "skr_bps"), rows=rows)

    for step, value in enumerate(axis.values()):
        t = config.topology
        launch = None
        if axis.variable == "drop_length_km":
            t = _with_drop_length(t, value)
        elif axis.variable == "upstream_power_dbm":
            launch = {"ssmf_us": value}
        elif axis.variable == "downstream_power_dbm":
            launch = {"ssmf_ds": value}
        result = cwas.evaluate_onu(t, config.plan, config.protocol, detector,
                                   raman, 0, launch_powers=launch)
        rows.append((step, value, result.qber.qber_total, result.skr_bps))
    return Table(columns=("step", axis.variable, "qber", "skr_bps"), rows=rows)
