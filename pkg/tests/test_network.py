import pytest

from swarm_sacrifice.core import InteractionEvent
from swarm_sacrifice.errors import PreconditionError
from swarm_sacrifice.network import NETWORK_COLUMNS, build_network, effective_rates, network_stats

EVENTS = [
    InteractionEvent.between(1.0, 0, 1, True),
    InteractionEvent.between(2.0, 1, 0, False),
    InteractionEvent.between(3.0, 1, 2, True),
    InteractionEvent.between(9.0, 0, 2, True),
]


def test_edge_weights_count_every_meeting():
    network = build_network(EVENTS, range(4), window=(0.0, 5.0))
    assert network.weight(0, 1) == 2
    assert network.weight(1, 0) == 2
    assert network.weight(1, 2) == 1
    assert network.weight(0, 2) == 0
    assert network.total_weight() == 3


def test_isolates_include_robots_nobody_met():
    assert build_network(EVENTS, range(4), window=(0.0, 5.0)).isolates() == [3]
    assert build_network(EVENTS, range(4), window=(8.0, 10.0)).isolates() == [1, 3]


def test_window_defaults_to_event_span():
    assert build_network(EVENTS, range(3)).window == (1.0, 9.0)
    assert build_network([], range(2)).window == (0.0, 0.0)


def test_frame_layout():
    frame = build_network(EVENTS, range(4), window=(0.0, 10.0)).to_frame()
    assert list(frame.columns) == NETWORK_COLUMNS
    assert frame[["id_a", "id_b", "count"]].values.tolist() == [[0, 1, 2], [0, 2, 1], [1, 2, 1]]
    assert (frame["window_end"] == 10.0).all()


def test_unsorted_events_are_rejected():
    with pytest.raises(PreconditionError):
        build_network(list(reversed(EVENTS)), range(3))


def test_effective_rates_skip_idle_meetings():
    rates = effective_rates(EVENTS, range(4), (0.0, 10.0))
    assert rates == pytest.approx({0: 0.2, 1: 0.2, 2: 0.2, 3: 0.0})


def test_empty_window_has_zero_rates():
    assert effective_rates(EVENTS, [0, 1], (4.0, 4.0)) == {0: 0.0, 1: 0.0}


def test_stats_bundle_network_and_rates():
    stats = network_stats(EVENTS, range(4), window=(0.0, 10.0))
    assert stats.isolates == [3]
    assert stats.effective_rates[3] == 0.0
