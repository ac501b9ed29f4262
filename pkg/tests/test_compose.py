"""Series composition: shorthand parsing, glue modes, calibration pin."""

from dataclasses import replace

import numpy as np
import pytest

import qgraph as qg


def test_shorthand_plus_means_vertex_merge():
    spec = qg.parse_series_shorthand("c3+c4")
    assert spec.elements == ((3, 1), (4, 1))
    assert spec.glue == qg.GLUE_VERTEX_MERGE


def test_shorthand_minus_means_connecting_edge():
    spec = qg.parse_series_shorthand("C3-C4-C3")
    assert spec.elements == ((3, 1), (4, 1), (3, 1))
    assert spec.glue == qg.GLUE_CONNECTING_EDGE


def test_shorthand_single_element_uses_canonical_glue():
    spec = qg.parse_series_shorthand("c5")
    assert spec.elements == ((5, 1),)
    assert spec.glue == qg.CANONICAL_GLUE


@pytest.mark.parametrize("text", ["c3+c4-c3", "x3", "c3--c4", "", "c3+", "3+4"])
def test_shorthand_rejects_malformed_text(text):
    with pytest.raises(ValueError):
        qg.parse_series_shorthand(text)


def test_series_spec_validation():
    with pytest.raises(ValueError):
        qg.SeriesSpec(elements=())
    with pytest.raises(ValueError):
        qg.SeriesSpec(elements=((2, 1),))
    with pytest.raises(ValueError):
        qg.SeriesSpec(elements=((3, 0),))
    with pytest.raises(ValueError):
        qg.SeriesSpec(elements=((3, 1),), glue="staple")
    with pytest.raises(ValueError):
        qg.SeriesSpec(elements=((3, 1),), glue_multiplier=0)


def test_vertex_merge_shares_a_degree_four_junction():
    graph = qg.compose_series(
        qg.SeriesSpec(elements=((3, 1), (3, 1)), glue=qg.GLUE_VERTEX_MERGE)
    )
    assert graph.num_vertices == 5
    assert graph.num_edges == 6
    degrees = sorted(graph.degree(v) for v in graph.vertex_ids)
    assert degrees == [2, 2, 3, 3, 4]
    assert qg.validate_graph(graph).ok


def test_connecting_edge_keeps_degree_three_junctions():
    graph = qg.compose_series(
        qg.SeriesSpec(elements=((3, 1), (3, 1)), glue=qg.GLUE_CONNECTING_EDGE)
    )
    assert graph.num_vertices == 6
    assert graph.num_edges == 7
    degrees = sorted(graph.degree(v) for v in graph.vertex_ids)
    assert degrees == [2, 2, 3, 3, 3, 3]
    assert qg.validate_graph(graph).ok


def test_single_element_equals_plain_cycle():
    composed = qg.compose_series(qg.SeriesSpec(elements=((5, 1),)))
    plain = qg.make_cycle_graph(5)
    kl = np.linspace(0.1, 6.2, 300)
    t_a, _ = qg.solve_many(composed, kl)
    t_b, _ = qg.solve_many(plain, kl)
    assert np.max(np.abs(np.abs(t_a) ** 2 - np.abs(t_b) ** 2)) < 1e-12


@pytest.mark.parametrize("glue", [qg.GLUE_VERTEX_MERGE, qg.GLUE_CONNECTING_EDGE])
@pytest.mark.parametrize("sizes", [(3, 3), (4, 4), (3, 4, 3), (3, 5, 4)])
def test_compositions_validate(sizes, glue):
    spec = qg.SeriesSpec(elements=tuple((n, 1) for n in sizes), glue=glue)
    graph = qg.compose_series(spec)
    assert qg.validate_graph(graph).ok
    assert graph.leads[0] != graph.leads[1]


def test_palindromic_chain_is_swap_invariant():
    graph = qg.compose_series(qg.parse_series_shorthand("c3-c4-c3"))
    swapped = replace(graph, leads=(graph.leads[1], graph.leads[0]))
    kl = np.linspace(0.05, 6.2, 400)
    t_fwd, _ = qg.solve_many(graph, kl)
    t_bwd, _ = qg.solve_many(swapped, kl)
    assert np.max(np.abs(np.abs(t_fwd) ** 2 - np.abs(t_bwd) ** 2)) < 1e-12


def test_length_multipliers_produce_integral_lengths():
    spec = qg.SeriesSpec(
        elements=((3, 2), (4, 1)), glue=qg.GLUE_CONNECTING_EDGE, glue_multiplier=3
    )
    graph = qg.compose_series(spec)
    assert qg.validate_graph(graph).ok
    lengths = sorted(qg.integral_lengths(graph))
    assert lengths == [1, 1, 1, 1, 2, 2, 2, 3]
    t, r = qg.solve_many(graph, np.linspace(0.2, 6.0, 50))
    assert np.max(np.abs(np.abs(t) ** 2 + np.abs(r) ** 2 - 1.0)) < 1e-10


def test_canonical_glue_reproduces_reference_resonances():
    # Calibration pin: of the two glue modes, only the connecting edge puts
    # the full-transmission doublet of the triangle-triangle chain at
    # pi +- 0.91393.  This fixes CANONICAL_GLUE; do not change one without
    # the other.
    assert qg.CANONICAL_GLUE == qg.GLUE_CONNECTING_EDGE

    samples = int(round((2.0 * np.pi - 0.02) / 2e-4)) + 1
    expected = (np.pi - 0.91393, np.pi + 0.91393)

    graph = qg.compose_series(qg.parse_series_shorthand("c3-c3"))
    sweep = qg.sweep_transmission(graph, 0.01, 2.0 * np.pi - 0.01, samples)
    peaks = qg.detect_peaks(sweep)
    assert len(peaks) == 2
    for peak, target in zip(peaks, expected):
        assert abs(peak.center - target) < 1e-3

    merged = qg.compose_series(qg.parse_series_shorthand("c3+c3"))
    sweep_m = qg.sweep_transmission(merged, 0.01, 2.0 * np.pi - 0.01, samples)
    centers_m = [p.center for p in qg.detect_peaks(sweep_m)]
    assert not any(
        abs(c - target) < 1e-3 for c in centers_m for target in expected
    )
