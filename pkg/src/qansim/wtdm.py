"""Wavelength-time-division multiplexing planner.

Maps M quantum transmitters onto R shared receivers through passive
splitters: each receiver serves a group of ONUs that time-share one
wavelength, different groups use different wavelengths.  Larger groups
cost splitter insertion loss and a lower per-ONU clock; more receivers
cost money.  TDM is the R=1 corner, pure WDM the R=M corner.
"""

import math
from dataclasses import dataclass

from . import cwas
from .cwas import AssignmentPlan
from .physics import RamanProfile
from .qkd import DetectorParams, ProtocolParams
from .topology import Topology

DEFAULT_SPLITTER_LOSSES = {
    1: 0.0,
    2: 3.2,
    4: 6.3,
    8: 9.2,
    16: 12.7,
    32: 16.3,
    64: 19.6,
    128: 22.8,
}

# Measured excess above the ideal 10*log10(ratio) splitting loss grows
# roughly per stage; used only for ratios missing from the table.
_EXCESS_DB_PER_STAGE = 0.19

# A multi-channel wavelength multiplexer; flat model anchored at the
# 32-channel figure, applied whenever more than one wavelength group is
# combined.
DEFAULT_MUX_LOSS_DB = 3.0


@dataclass(frozen=True)
class SplitterLossTable:
    losses: dict = None

    def __post_init__(self):
        if self.losses is None:
            object.__setattr__(self, "losses", dict(DEFAULT_SPLITTER_LOSSES))
        ratios = sorted(self.losses)
        values = [self.losses[r] for r in ratios]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("splitter losses must increase with ratio")
        for ratio, loss in self.losses.items():
            if loss < 3.0 * math.log2(ratio):
                raise ValueError(
                    f"1*{ratio} loss {loss} dB below the ideal splitting loss")

    def loss_db(self, ratio: int) -> float:
        if ratio < 1:
            raise ValueError("splitter ratio must be >= 1")
        if ratio in self.losses:
            return self.losses[ratio]
        stages = math.log2(ratio)
        return 10.0 * math.log10(ratio) + _EXCESS_DB_PER_STAGE * stages


@dataclass(frozen=True)
class SchedulePlan:
    num_onus: int
    num_receivers: int
    group_size: int  # power of two, ONUs time-sharing one receiver
    per_onu_clock_hz: float

    @property
    def splitter_ratio(self) -> int:
        return self.group_size


def _next_power_of_two(n: int) -> int:
    return 1 if n <= 1 else 2 ** math.ceil(math.log2(n))


def plan_schedule(num_onus: int, num_receivers: int, clock_rate_hz: float) -> SchedulePlan:
    """Smallest power-of-two group size covering M ONUs with R receivers;
    the transmitter clock divides by the group size."""
    if num_onus < 1 or num_receivers < 1:
        raise ValueError("need at least one ONU and one receiver")
    if clock_rate_hz <= 0:
        raise ValueError("clock rate must be > 0")
    group = _next_power_of_two(math.ceil(num_onus / num_receivers))
    return SchedulePlan(
        num_onus=num_onus,
        num_receivers=num_receivers,
        group_size=group,
        per_onu_clock_hz=clock_rate_hz / group,
    )


def schedule_skr(
    plan: SchedulePlan,
    t: Topology,
    cwas_plan: AssignmentPlan,
    loss_table: SplitterLossTable,
    protocol: ProtocolParams,
    detector: DetectorParams,
    raman: RamanProfile,
    mux_loss_db: float = DEFAULT_MUX_LOSS_DB,
    extra_filters: tuple = (),
    gate_width_ns: float | None = None,
) -> dict:
    """Per-ONU secure key rate under a schedule.

    Injects the group splitter loss (and the wavelength-mux loss when
    more than one group is combined) into every quantum path and scales
    the clock to the per-ONU share.  Infeasible links come back as 0 bps.
    """
    splitter_db = loss_table.loss_db(plan.group_size)
    mux_db = mux_loss_db if plan.num_receivers >= 2 else 0.0
    clock_scale = plan.per_onu_clock_hz / protocol.clock_rate_hz
    rates = {}
    for onu in range(t.num_onus):
        result = cwas.evaluate_onu(
            t, cwas_plan, protocol, detector, raman, onu,
            splitter_loss_db=splitter_db,
            mux_loss_db=mux_db,
            clock_scale=clock_scale,
            extra_filters=extra_filters,
            gate_width_ns=gate_width_ns,
        )
        rates[onu] = result.skr_bps
    return rates


@dataclass(frozen=True)
class MultiplexingReport:
    num_onus: int
    tdm_skr_bps: float
    wdm_skr_bps: float
    wdm_receiver_count: int
    wtdm_skr_bps: dict  # receivers -> per-ONU bps


def receiver_ladder(num_onus: int) -> list:
    """Power-of-two receiver counts from 1 up to one per ONU."""
    ladder = []
    r = 1
    while r < num_onus:
        ladder.append(r)
        r *= 2
    ladder.append(num_onus)
    return ladder


def compare_multiplexing(
    num_onus: int,
    t: Topology,
    cwas_plan: AssignmentPlan,
    protocol: ProtocolParams,
    detector: DetectorParams,
    raman: RamanProfile,
    loss_table: SplitterLossTable | None = None,
    mux_loss_db: float = DEFAULT_MUX_LOSS_DB,
    extra_filters: tuple = (),
    gate_width_ns: float | None = None,
) -> MultiplexingReport:
    """TDM / WDM / W-TDM comparison for M transmitters.

    TDM is the one-receiver schedule (full splitter chain, clock/M);
    WDM gives every ONU its own receiver and wavelength behind the
    multiplexer; W-TDM spans the receiver counts in between.
    """
    if num_onus < 1:
        raise ValueError("need at least one ONU")
    loss_table = loss_table or SplitterLossTable()
    base = t if t.num_onus == num_onus else None
    if base is None:
        from .topology import replicate_onus

        base = replicate_onus(t, num_onus)

    def mean_skr(receivers):
        plan = plan_schedule(num_onus, receivers, protocol.clock_rate_hz)
        rates = schedule_skr(plan, base, cwas_plan, loss_table, protocol,
                             detector, raman, mux_loss_db=mux_loss_db,
                             extra_filters=extra_filters,
                             gate_width_ns=gate_width_ns)
        return sum(rates.values()) / len(rates)

    wtdm = {r: mean_skr(r) for r in receiver_ladder(num_onus)}
    return MultiplexingReport(
        num_onus=num_onus,
        tdm_skr_bps=wtdm[1],
        wdm_skr_bps=wtdm[num_onus],
        wdm_receiver_count=num_onus,
        wtdm_skr_bps=wtdm,
    )
