import pytest

from manetsim.engine import RngStream
from manetsim.traffic import FlowSpec, emission_times, generate_flows


def test_cbr_packet_count():
    flow = FlowSpec(0, 1, 512, 0.25, 1.0, 120.0)
    times = emission_times(flow)
    assert len(times) == 477
    assert times[0] == 1.0
    assert times[-1] == pytest.approx(120.0)


def test_empty_window():
    assert emission_times(FlowSpec(0, 1, 512, 0.25, 5.0, 5.0)) == []
    assert emission_times(FlowSpec(0, 1, 512, 0.25, 6.0, 5.0)) == []


def test_offered_load_arithmetic():
    flow = FlowSpec(0, 1, 512, 0.25, 1.0, 120.0)
    offered_kbps = flow.payload * 8 / flow.interval / 1000
    assert offered_kbps == pytest.approx(16.384)


def test_emission_spacing_is_exact():
    flow = FlowSpec(0, 1, 512, 0.5, 0.0, 10.0)
    times = emission_times(flow)
    assert len(times) == 21
    for a, b in zip(times, times[1:]):
        assert b - a == pytest.approx(0.5)


def test_generate_flows_distinct_pairs():
    rng = RngStream(4, "traffic")
    flows = generate_flows(20, 10, 512, 0.25, 1.0, 120.0, rng)
    assert len(flows) == 10
    pairs = [(f.src, f.dest) for f in flows]
    assert len(set(pairs)) == 10
    assert all(f.src != f.dest for f in flows)
    assert all(0 <= f.src < 20 and 0 <= f.dest < 20 for f in flows)


def test_generate_flows_reproducible():
    a = generate_flows(20, 5, 512, 0.25, 1.0, 120.0, RngStream(4, "traffic"))
    b = generate_flows(20, 5, 512, 0.25, 1.0, 120.0, RngStream(4, "traffic"))
    assert a == b
    c = generate_flows(20, 5, 512, 0.25, 1.0, 120.0, RngStream(5, "traffic"))
    assert a != c


def test_generate_flows_exhausts_pairs():
    rng = RngStream(1, "traffic")
    flows = generate_flows(3, 6, 512, 0.25, 0.0, 1.0, rng)
    assert sorted((f.src, f.dest) for f in flows) == [
        (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1),
    ]
    with pytest.raises(ValueError):
        generate_flows(3, 7, 512, 0.25, 0.0, 1.0, rng)


def test_flow_validation():
    with pytest.raises(ValueError):
        FlowSpec(0, 0, 512, 0.25, 0.0, 1.0).validate(5)
    with pytest.raises(ValueError):
        FlowSpec(0, 9, 512, 0.25, 0.0, 1.0).validate(5)
    with pytest.raises(ValueError):
        FlowSpec(0, 1, 512, 0.25, 2.0, 1.0).validate(5)
    with pytest.raises(ValueError):
        FlowSpec(0, 1, 512, -0.25, 0.0, 1.0).validate(5)
    FlowSpec(0, 1, 512, 0.25, 0.0, 1.0).validate(5)
