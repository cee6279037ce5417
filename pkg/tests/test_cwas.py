import math
from dataclasses import replace

import numpy as np
import pytest

from qansim import cwas, physics, topology as topo
from qansim.cwas import Demands, WavebandGrid
from qansim.errors import InfeasibleError
from qansim.physics import RamanProfile
from qansim.qkd import DetectorParams, ProtocolParams

from test_topology import make_topology

PROTOCOL = ProtocolParams(mu_signal=0.6, nu_decoy=0.2)
DETECTOR = DetectorParams(efficiency=0.08, gate_width_ns=1.0,
                          dark_count_per_gate=1e-6, misalignment_error=0.015)
RAMAN = RamanProfile(rho0=3.1e-11)


def brute_force_quantum_core(t, cores_needed):
    """Enumerate every quantum-core choice and its best classical set."""
    cores = list(range(1, t.num_cores + 1))
    best = None
    for q in cores:
        neighbours = t.adjacent_cores(q)
        others = sorted([c for c in cores if c != q],
                        key=lambda c: (c in neighbours, c))
        chosen = others[:cores_needed]
        score = sum(1 for c in chosen if c in neighbours)
        if best is None or score < best[0]:
            best = (score, q)
    return best


class TestAssign:
    def test_crowded_fiber_prefers_least_adjacent(self):
        t = make_topology(channels=())
        demands = Demands(qs_channels=4, cs_channel_pairs=6 * 4)  # 6 cores full
        plan = cwas.assign(t, demands)
        score, q = brute_force_quantum_core(t, 6)
        assert plan.quantum_core == q
        adjacent_classical = plan.classical_cores & t.adjacent_cores(plan.quantum_core)
        assert len(adjacent_classical) == score

    def test_two_cores_forced(self):
        t = make_topology(num_cores=2, quantum_core=2, channels=())
        plan = cwas.assign(t, Demands(qs_channels=1, cs_channel_pairs=1))
        assert plan.classical_cores == frozenset({1}) or \
            plan.classical_cores == frozenset({2})
        assert plan.quantum_core not in plan.classical_cores

    def test_frequencies_follow_the_rules(self):
        t = make_topology(channels=())
        plan = cwas.assign(t, Demands(qs_channels=3, cs_channel_pairs=8))
        assert cwas.validate_plan(plan, t) == []
        assert max(plan.us_frequencies) < min(plan.qs_assignments.values())

    def test_core_shortage(self):
        t = make_topology(num_cores=2, quantum_core=2, channels=())
        with pytest.raises(InfeasibleError, match="core shortage"):
            cwas.assign(t, Demands(qs_channels=1, cs_channel_pairs=50))

    def test_waveband_shortage(self):
        t = make_topology(channels=())
        with pytest.raises(InfeasibleError, match="waveband shortage"):
            cwas.assign(t, Demands(qs_channels=100, cs_channel_pairs=1))

    def test_assign_then_validate_random_instances(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 200:
            cores = int(rng.integers(2, 10))
            wavelengths = int(rng.integers(1, 8))
            onus = int(rng.integers(1, 5))
            t = make_topology(num_cores=cores, num_wavelengths=wavelengths,
                              num_onus=onus, quantum_core=1, channels=())
            grid = WavebandGrid()
            pairs_per_core = min(wavelengths, len(grid.slots(grid.upstream_band)))
            max_pairs = (cores - 1) * pairs_per_core
            demands = Demands(
                qs_channels=int(rng.integers(1, len(grid.slots(grid.qs_band)) + 1)),
                cs_channel_pairs=int(rng.integers(0, max_pairs + 1)))
            plan = cwas.assign(t, demands)
            assert cwas.validate_plan(plan, t) == [], (cores, wavelengths, demands)
            checked += 1


class TestValidatePlan:
    def test_experimental_plan_is_valid(self, experiment_config):
        violations = cwas.validate_plan(experiment_config.plan,
                                        experiment_config.topology)
        assert violations == []

    def test_upstream_above_qs_flagged(self):
        t = make_topology()
        plan = cwas.assign(t, Demands(qs_channels=1, cs_channel_pairs=1))
        bad = replace(plan, us_frequencies=(195.6,))
        rules = {v.rule for v in cwas.validate_plan(bad, t)}
        assert "upstream_below_qs" in rules

    def test_qs_inside_classical_band_flagged(self):
        t = make_topology()
        plan = cwas.assign(t, Demands(qs_channels=1, cs_channel_pairs=1))
        bad = replace(plan, qs_assignments={0: 194.6},
                      classical_wavebands=((190.7, 191.9), (194.0, 195.0)))
        rules = {v.rule for v in cwas.validate_plan(bad, t)}
        assert "disjoint_wavebands" in rules

    def test_channel_in_quantum_core_flagged(self):
        channels = (topo.PlacedChannel("adv", 195.6, 0.0, physics.DOWNSTREAM,
                                       core=3),)
        t = make_topology(channels=channels)
        plan = replace(cwas.assign(t, Demands(qs_channels=1, cs_channel_pairs=0)),
                       quantum_core=3, classical_cores=frozenset())
        rules = {v.rule for v in cwas.validate_plan(plan, t)}
        assert "dedicated_core" in rules


class TestPredictPlanQber:
    def test_dedicated_core_keeps_mcf_terms_negligible(self, experiment_config,
                                                       calibrated):
        detector, raman = calibrated
        budgets = cwas.predict_plan_qber(
            experiment_config.plan, experiment_config.topology,
            experiment_config.protocol, detector, raman,
            launch_powers={"mcf_ds": 20.0, "mcf_us": 20.0})
        qber = budgets[0]
        assert qber.qber_mcf_ds < 1e-3
        assert qber.qber_mcf_us < 1e-3

    def test_upstream_dominates_downstream(self, experiment_config, calibrated):
        detector, raman = calibrated
        budgets = cwas.predict_plan_qber(
            experiment_config.plan, experiment_config.topology,
            experiment_config.protocol, detector, raman)
        assert budgets[0].qber_ssmf_us > budgets[0].qber_ssmf_ds

    def test_no_classical_power_is_inherent_only(self, experiment_config,
                                                 calibrated):
        detector, raman = calibrated
        budgets = cwas.predict_plan_qber(
            experiment_config.plan, experiment_config.topology,
            experiment_config.protocol, detector, raman, include_sources=())
        assert budgets[0].qber_total == budgets[0].qber_in

    def test_icxt_stays_below_1e4_with_default_floor(self, experiment_config,
                                                     calibrated):
        # Direct out-of-band crosstalk leakage alone, after the 80 dB
        # rejection floor, contributes less than 1e-4 to the QBER.
        detector, raman = calibrated
        t = experiment_config.topology
        path = topo.quantum_path(t, 0)
        xt_counts = 0.0
        for source in path.noise_sources:
            if not source.inter_core:
                continue
            segment = path.entries[source.segment_index]
            leaked = physics.icxt_power(source.channel,
                                        t.icxt_coupling_db_per_km, segment)
            suppression = (path.loss_after_db(source.segment_index)
                           + path.rejection_after_db(
                               source.segment_index,
                               source.channel.frequency_thz))
            xt_counts += physics.noise_counts_per_gate(
                leaked * 10 ** (-suppression / 10.0),
                source.channel.frequency_thz,
                detector.gate_width_ns, detector.efficiency)
        full = cwas.evaluate_onu(t, experiment_config.plan,
                                 experiment_config.protocol, detector, raman, 0)
        denom = (full.signal_counts + detector.dark_count_per_gate
                 + sum(full.noise_counts.values()))
        assert 0.5 * xt_counts / denom < 1e-4


class TestSwapExperiment:
    def test_swap_never_decreases_upstream_qber(self, experiment_config,
                                                calibrated):
        detector, raman = calibrated
        t, plan = experiment_config.topology, experiment_config.plan
        base = cwas.evaluate_onu(t, plan, experiment_config.protocol, detector,
                                 raman, 0, include_sources=("ssmf_us",))
        swapped_t, swapped_plan = cwas.with_swapped_upstream(t, plan, 0)
        swapped = cwas.evaluate_onu(swapped_t, swapped_plan,
                                    experiment_config.protocol, detector,
                                    raman, 0, include_sources=("ssmf_us",))
        assert swapped.qber.qber_ssmf_us >= base.qber.qber_ssmf_us

    def test_swap_holds_across_drop_lengths_and_powers(self, experiment_config,
                                                       calibrated):
        detector, raman = calibrated
        protocol = experiment_config.protocol
        rng = np.random.default_rng(7)
        for _ in range(25):
            length = float(rng.uniform(0.2, 2.5))
            power = float(rng.uniform(-10.0, 5.0))
            drops = tuple(replace(d, length_km=length)
                          for d in experiment_config.topology.drops)
            channels = tuple(
                replace(ch, launch_power_dbm=power)
                if ch.label == "us_drop" else ch
                for ch in experiment_config.topology.classical_channels)
            t = replace(experiment_config.topology, drops=drops,
                        classical_channels=channels)
            base = cwas.evaluate_onu(t, experiment_config.plan, protocol,
                                     detector, raman, 0,
                                     include_sources=("ssmf_us",))
            swapped_t, swapped_plan = cwas.with_swapped_upstream(
                t, experiment_config.plan, 0)
            swapped = cwas.evaluate_onu(swapped_t, swapped_plan, protocol,
                                        detector, raman, 0,
                                        include_sources=("ssmf_us",))
            assert swapped.qber.qber_ssmf_us >= base.qber.qber_ssmf_us


class TestEvaluateOnu:
    def test_extra_splitter_stage_lowers_rate(self, experiment_config, calibrated):
        detector, raman = calibrated
        args = (experiment_config.topology, experiment_config.plan,
                experiment_config.protocol, detector, raman, 0)
        base = cwas.evaluate_onu(*args)
        split = cwas.evaluate_onu(*args, splitter_loss_db=3.2)
        assert split.skr_bps < base.skr_bps

    def test_gate_override_scales_dark_counts(self, experiment_config, calibrated):
        detector, raman = calibrated
        args = (experiment_config.topology, experiment_config.plan,
                experiment_config.protocol, detector, raman, 0)
        narrow = cwas.evaluate_onu(*args, include_sources=(),
                                   gate_width_ns=0.18)
        wide = cwas.evaluate_onu(*args, include_sources=())
        ratio = (narrow.budget.background_per_gate
                 / wide.budget.background_per_gate)
        assert ratio == pytest.approx(0.18)
