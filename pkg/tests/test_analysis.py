"""Sweeps, symmetry checks, suppression bands, peak detection, exports."""

import csv
import io
import json

import numpy as np
import pytest

import qgraph as qg
from qgraph.analysis import peaks_to_json, sweep_to_csv

TWO_PI = 2.0 * np.pi


def _peak_sweep(graph, resolution=2e-4):
    samples = int(round((TWO_PI - 0.02) / resolution)) + 1
    return qg.sweep_transmission(graph, 0.01, TWO_PI - 0.01, samples)


def test_sweep_grid_and_arrays():
    sweep = qg.sweep_transmission(qg.make_cycle_graph(3), 0.5, 1.5, 101)
    assert sweep.kl.shape == (101,)
    assert abs(sweep.resolution - 0.01) < 1e-15
    assert np.max(sweep.t2 + sweep.r2 - 1.0) < 1e-10
    assert not sweep.t.flags.writeable


def test_sweep_rejects_bad_ranges():
    graph = qg.make_cycle_graph(3)
    with pytest.raises(ValueError):
        qg.sweep_transmission(graph, 0.0, 1.0, 10)
    with pytest.raises(ValueError):
        qg.sweep_transmission(graph, 2.0, 1.0, 10)
    with pytest.raises(ValueError):
        qg.sweep_transmission(graph, 0.5, 1.0, 1)


def test_sweep_covers_removable_points():
    # kl = pi sits on this grid; the square's 0/0 point must come out as the
    # finite limit, not a spike
    sweep = qg.sweep_transmission(qg.make_cycle_graph(4), np.pi - 0.5, np.pi + 0.5, 201)
    i = np.argmin(np.abs(sweep.kl - np.pi))
    assert abs(sweep.kl[i] - np.pi) < 1e-12
    assert abs(sweep.t2[i] - 1.0) < 1e-9


def test_threaded_sweep_is_bit_identical():
    graph = qg.compose_series(qg.parse_series_shorthand("c3-c4"))
    serial = qg.sweep_transmission(graph, 0.1, 6.2, 500, threads=1)
    threaded = qg.sweep_transmission(graph, 0.1, 6.2, 500, threads=4)
    assert np.array_equal(serial.t, threaded.t)
    assert np.array_equal(serial.r, threaded.r)


@pytest.mark.parametrize("source", ["c3", "c4", "c3-c3"])
def test_transmission_is_symmetric_about_pi(source):
    if "-" in source:
        graph = qg.compose_series(qg.parse_series_shorthand(source))
    else:
        graph = qg.make_cycle_graph(int(source[1:]))
    sweep = qg.sweep_transmission(graph, 0.01, TWO_PI - 0.01, 2000)
    assert qg.check_reflection_symmetry(sweep) < 1e-10


def test_symmetry_check_requires_a_symmetric_grid():
    sweep = qg.sweep_transmission(qg.make_cycle_graph(3), 0.5, 1.5, 100)
    with pytest.raises(ValueError, match="symmetric"):
        qg.check_reflection_symmetry(sweep)


def test_triangle_suppression_bands():
    sweep = qg.sweep_transmission(qg.make_cycle_graph(3), 0.01, TWO_PI - 0.01, 6283)
    bands = qg.detect_suppression_bands(sweep)
    expected = [(2.0708, 2.1207), (2.9452, 3.3380), (4.1625, 4.2124)]
    assert len(bands) == 3
    for (lo, hi), (elo, ehi) in zip(bands, expected):
        assert abs(lo - elo) < 5e-3 and abs(hi - ehi) < 5e-3


def test_chained_triangles_merge_into_one_wide_band():
    graph = qg.compose_series(qg.parse_series_shorthand("c3-c3"))
    sweep = qg.sweep_transmission(graph, 0.01, TWO_PI - 0.01, 6283)
    bands = qg.detect_suppression_bands(sweep)
    assert len(bands) == 1
    lo, hi = bands[0]
    assert abs(lo - 1.9872) < 5e-3 and abs(hi - 4.2960) < 5e-3
    # chaining widens suppression: the merged band dwarfs the single
    # triangle's central band
    assert hi - lo > 2.0


def test_lower_floor_bands_nest_inside_higher_floor_bands():
    for source in ("c3", "c3-c3"):
        if "-" in source:
            graph = qg.compose_series(qg.parse_series_shorthand(source))
        else:
            graph = qg.make_cycle_graph(3)
        sweep = qg.sweep_transmission(graph, 0.01, TWO_PI - 0.01, 6283)
        outer = qg.detect_suppression_bands(sweep, floor=0.01)
        inner = qg.detect_suppression_bands(sweep, floor=0.005)
        for lo, hi in inner:
            assert any(a - 1e-12 <= lo and hi <= b + 1e-12 for a, b in outer)


def test_chained_triangle_peaks():
    graph = qg.compose_series(qg.parse_series_shorthand("c3-c3"))
    peaks = qg.detect_peaks(_peak_sweep(graph))
    assert len(peaks) == 2
    assert all(p.is_full_transmission for p in peaks)
    lo, hi = peaks
    assert abs(lo.center - 2.228643) < 1e-5
    assert abs(hi.center - 4.054542) < 1e-5
    assert abs(lo.width - 0.021206) < 1e-5
    # mirror pair about pi with matching widths
    assert abs((lo.center + hi.center) / 2.0 - np.pi) < 1e-6
    assert abs(lo.width - hi.width) < 1e-6
    # the enclosing band is reported with the peak
    assert lo.band[0] < lo.center < lo.band[1]


def test_peak_heights_hold_up_under_reevaluation():
    graph = qg.compose_series(qg.parse_series_shorthand("c4-c4"))
    peaks = qg.detect_peaks(_peak_sweep(graph, resolution=1e-4))
    assert len(peaks) == 4
    for p in peaks:
        res = qg.scattering_or_limit(graph, p.center)
        assert res.t2 >= 0.999


def test_plain_cycles_have_no_full_transmission_peaks():
    for n in (3, 4):
        peaks = qg.detect_peaks(_peak_sweep(qg.make_cycle_graph(n)))
        assert peaks == []


def test_peak_centers_stable_under_grid_refinement():
    graph = qg.compose_series(qg.parse_series_shorthand("c3-c3"))
    coarse = qg.detect_peaks(_peak_sweep(graph, resolution=2e-4))
    fine = qg.detect_peaks(_peak_sweep(graph, resolution=1e-4))
    assert len(coarse) == len(fine)
    for a, b in zip(coarse, fine):
        assert abs(a.center - b.center) < 1e-6


def test_csv_round_trip():
    sweep = qg.sweep_transmission(qg.make_cycle_graph(3), 0.5, 1.5, 11)
    text = sweep_to_csv(sweep)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["kl", "re_t", "im_t", "t2", "r2"]
    assert len(rows) == 12
    # 17 significant digits round-trip exactly
    for i, row in enumerate(rows[1:]):
        assert float(row[0]) == sweep.kl[i]
        assert float(row[1]) == sweep.t[i].real
        assert float(row[3]) == sweep.t2[i]


def test_peaks_json_schema():
    graph = qg.compose_series(qg.parse_series_shorthand("c3-c3"))
    peaks = qg.detect_peaks(_peak_sweep(graph))
    data = json.loads(peaks_to_json(peaks))
    assert len(data) == 2
    for entry, peak in zip(data, peaks):
        assert set(entry) == {"center", "height", "fwhm", "band"}
        assert entry["center"] == peak.center
        assert entry["fwhm"] == peak.width
        assert entry["band"] == list(peak.band)


def test_export_files_written_atomically(tmp_path):
    sweep = qg.sweep_transmission(qg.make_cycle_graph(3), 0.5, 1.5, 11)
    csv_path = tmp_path / "sweep.csv"
    qg.write_sweep_csv(sweep, str(csv_path))
    assert csv_path.read_text() == sweep_to_csv(sweep)
    assert list(tmp_path.iterdir()) == [csv_path]

    peaks = qg.detect_peaks(_peak_sweep(qg.compose_series(qg.parse_series_shorthand("c3-c3"))))
    json_path = tmp_path / "peaks.json"
    qg.write_peaks_json(peaks, str(json_path))
    assert json.loads(json_path.read_text())
    assert sorted(tmp_path.iterdir()) == sorted([csv_path, json_path])
