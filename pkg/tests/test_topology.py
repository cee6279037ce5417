from dataclasses import replace

import pytest

from qansim import physics, topology as topo
from qansim.physics import FiberSegment, LumpedLoss, SpectralFilter
from qansim.topology import (
    PlacedChannel,
    QuantumEndpoint,
    Splitter,
    Topology,
    WdmModule,
    hex_adjacency,
)


def make_topology(num_cores=7, num_wavelengths=4, num_onus=1, quantum_core=3,
                  splitters=(), channels=None, drop_km=1.0):
    if channels is None:
        channels = (
            PlacedChannel("ds_drop", 195.6, -10.0, physics.DOWNSTREAM),
            PlacedChannel("us_drop", 191.6, 0.0, physics.UPSTREAM),
            PlacedChannel("ds_core1", 195.6, 20.0, physics.DOWNSTREAM, core=1),
            PlacedChannel("us_core2", 191.6, 20.0, physics.UPSTREAM, core=2),
            PlacedChannel("ds_core4", 195.6, 20.0, physics.DOWNSTREAM, core=4),
        )
    olt_filter = SpectralFilter(center_thz=193.5, passband_ghz=150.0,
                                insertion_loss_db=0.8)
    wide = SpectralFilter(center_thz=193.5, passband_ghz=2000.0,
                          insertion_loss_db=0.8)
    return Topology(
        num_cores=num_cores,
        num_wavelengths=num_wavelengths,
        feeder=FiberSegment(1.0, 0.23, physics.MCF_CORE),
        fanin_fanout_loss_db=3.6,
        drops=(FiberSegment(drop_km, 0.2),) * num_onus,
        endpoints=tuple(QuantumEndpoint(i, 193.5, 193.3) for i in range(num_onus)),
        wdm_modules=(
            WdmModule("onu_cwdm", topo.PLACEMENT_ONU, wide),
            WdmModule("odn_cwdm", topo.PLACEMENT_ODN, wide),
            WdmModule("olt_dwdm1", topo.PLACEMENT_OLT, olt_filter),
        ),
        classical_channels=channels,
        splitters=splitters,
        quantum_core=quantum_core,
        feeder_extra_loss_db=4.37,
        receiver_loss_db=9.7,
    )


class TestSubscriberCapacity:
    @pytest.mark.parametrize("cores,wavelengths,expected",
                             [(7, 12, 72), (2, 1, 1), (7, 4, 24)])
    def test_formula(self, cores, wavelengths, expected):
        t = make_topology(num_cores=cores, num_wavelengths=wavelengths,
                          quantum_core=min(3, cores), channels=())
        assert topo.subscriber_capacity(t) == expected


class TestAdjacency:
    def test_hex7_neighbours_of_core3(self):
        adjacency = hex_adjacency(7)
        assert adjacency[3] == frozenset({1, 2, 4})
        assert adjacency[1] == frozenset({2, 3, 4, 5, 6, 7})
        assert adjacency[7] == frozenset({1, 6, 2})

    def test_two_core(self):
        assert hex_adjacency(2) == {1: frozenset({2}), 2: frozenset({1})}


class TestQuantumPath:
    def test_loss_matches_component_sum(self):
        t = make_topology()
        path = topo.quantum_path(t, 0)
        # onu cwdm + drop + odn cwdm + fan-in/out + feeder + padding
        # + olt dwdm + receiver
        expected = 0.8 + 0.2 + 0.8 + 3.6 + 0.23 + 4.37 + 0.8 + 9.7
        assert physics.path_loss_db(path) == pytest.approx(expected)

    def test_splitter_adds_its_loss(self):
        t = make_topology(num_onus=32,
                          splitters=(Splitter(32, 16.3, tuple(range(32))),))
        bare = make_topology(num_onus=32)
        with_split = physics.path_loss_db(topo.quantum_path(t, 5))
        without = physics.path_loss_db(topo.quantum_path(bare, 5))
        assert with_split - without == pytest.approx(16.3)

    def test_splitter_override(self):
        t = make_topology()
        base = physics.path_loss_db(topo.quantum_path(t, 0))
        overridden = physics.path_loss_db(
            topo.quantum_path(t, 0, splitter_loss_db=12.7))
        assert overridden - base == pytest.approx(12.7)

    def test_noise_source_directions(self):
        t = make_topology()
        path = topo.quantum_path(t, 0)
        by_label = {s.label: s for s in path.noise_sources}
        # quantum signals travel ONU -> OLT: upstream co-propagates
        assert by_label["us_drop"].relative_direction == physics.FORWARD
        assert by_label["ds_drop"].relative_direction == physics.BACKWARD
        assert not by_label["us_drop"].inter_core
        assert by_label["ds_core1"].inter_core

    def test_adjacent_core_aggressor_count(self):
        channels = tuple(
            PlacedChannel(f"ds_core{c}", 195.6, 20.0, physics.DOWNSTREAM, core=c)
            for c in range(1, 8) if c != 3
        )
        t = make_topology(channels=channels)
        path = topo.quantum_path(t, 0)
        # neighbours of core 3 are {1, 2, 4}: exactly those channels appear
        labels = {s.label for s in path.noise_sources}
        assert labels == {"ds_core1", "ds_core2", "ds_core4"}

    def test_zero_drop_has_no_drop_sources(self):
        t = make_topology(drop_km=0.0)
        path = topo.quantum_path(t, 0)
        assert all(s.label not in ("us_drop", "ds_drop")
                   for s in path.noise_sources)

    def test_unknown_onu(self):
        t = make_topology()
        with pytest.raises(KeyError):
            topo.quantum_path(t, 5)

    def test_extra_filters_appended_at_olt(self):
        t = make_topology()
        narrow = SpectralFilter(center_thz=193.5, passband_ghz=30.0,
                                insertion_loss_db=0.8)
        path = topo.quantum_path(t, 0, extra_filters=(narrow,))
        drop_index = next(i for i, e in enumerate(path.entries)
                          if isinstance(e, FiberSegment))
        assert path.collection_bandwidth_ghz(drop_index, 193.5) == 30.0


class TestValidate:
    def test_well_formed(self):
        assert topo.validate(make_topology()) == []

    def test_double_splitter_attachment(self):
        t = make_topology(num_onus=2,
                          splitters=(Splitter(2, 3.2, (0, 1)),
                                     Splitter(2, 3.2, (0,))))
        rules = {v.rule for v in topo.validate(t)}
        assert "splitter_multiplicity" in rules

    def test_channel_core_out_of_range(self):
        t = make_topology(channels=(
            PlacedChannel("bad", 195.6, 0.0, physics.DOWNSTREAM, core=8),))
        rules = {v.rule for v in topo.validate(t)}
        assert "core_range" in rules

    def test_missing_olt_module_flagged(self):
        t = make_topology()
        t = replace(t, wdm_modules=t.wdm_modules[:2])
        rules = {v.rule for v in topo.validate(t)}
        assert "olt_filter" in rules

    def test_violations_name_entity_and_rule(self):
        t = make_topology(channels=(
            PlacedChannel("bad", 195.6, 0.0, physics.DOWNSTREAM, core=9),))
        violation = topo.validate(t)[0]
        assert "bad" in str(violation) and "core_range" in str(violation)


class TestReplicateOnus:
    def test_replicates_drop_and_endpoints(self):
        t = topo.replicate_onus(make_topology(), 8)
        assert t.num_onus == 8
        assert {e.onu_id for e in t.endpoints} == set(range(8))
        assert topo.validate(t) == []
