import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randrat import sphere as sp

HALF_PI = math.pi / 2


finite_complex = st.complex_numbers(max_magnitude=1e6, allow_nan=False,
                                    allow_infinity=False)


def test_dist_reference_values():
    assert sp.dist_s(0, sp.INF) == pytest.approx(HALF_PI, abs=1e-15)
    assert sp.dist_s(2 + 1j, 2 + 1j) == 0.0
    # tan convention: |x| = 1 sits at distance pi/4 from the origin
    assert sp.dist_s(0, 1) == pytest.approx(math.pi / 4, abs=1e-15)
    assert sp.dist_s(0, 1j) == pytest.approx(math.pi / 4, abs=1e-15)


@given(finite_complex, finite_complex)
@settings(max_examples=200, deadline=None)
def test_dist_symmetric_bounded(x, y):
    d1 = sp.dist_s(x, y)
    d2 = sp.dist_s(y, x)
    assert d1 == pytest.approx(d2, abs=1e-12)
    assert 0 <= d1 <= HALF_PI + 1e-12


@given(finite_complex, finite_complex, finite_complex)
@settings(max_examples=200, deadline=None)
def test_dist_triangle(x, y, z):
    assert sp.dist_s(x, z) <= sp.dist_s(x, y) + sp.dist_s(y, z) + 1e-9


def test_dist_chart_invariance(rng):
    z = rng.normal(size=300) + 1j * rng.normal(size=300)
    w = rng.normal(size=300) + 1j * rng.normal(size=300)
    zeros = np.zeros(300, bool)
    d1 = sp.dist_arrays(z, zeros, w, zeros)
    d2 = sp.dist_arrays(1 / z, zeros, 1 / w, zeros)
    assert np.max(np.abs(d1 - d2)) < 1e-12


def test_chart_flip_roundtrip(rng):
    vals = 10.0 ** rng.uniform(0.0, 6.0, 100) * np.exp(2j * math.pi * rng.random(100))
    for v in vals:
        p = sp.SpherePoint(v)
        back = p.chart_flip().chart_flip()
        assert abs(back.value - v) <= 4 * np.finfo(float).eps * abs(v)


def test_ball_area_values():
    assert sp.ball_area(HALF_PI) == pytest.approx(1.0, abs=1e-15)
    assert sp.ball_area(0.0) == 0.0
    assert sp.ball_area(math.pi / 6) == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(sp.SphereError):
        sp.ball_area(-0.1)
    with pytest.raises(sp.SphereError):
        sp.ball_area(2.0)


def test_ball_area_monte_carlo(rng):
    # independent oracle: area-uniform sampling frequency inside the cap
    delta = 0.7
    vals, inf = sp.uniform_samples(200_000, rng)
    d = sp.dist_arrays(vals, inf, np.zeros(len(vals), complex),
                       np.zeros(len(vals), bool))
    frac = float(np.mean(d < delta))
    assert frac == pytest.approx(sp.ball_area(delta), abs=5e-3)


def test_ball_complement_identity():
    for delta in np.linspace(0.0, HALF_PI, 37):
        assert sp.ball_area(delta) + sp.ball_area(HALF_PI - delta) == pytest.approx(
            1.0, abs=1e-15)


def test_diam_m_examples():
    assert sp.diam_m([0, sp.INF], 2) == pytest.approx(HALF_PI, abs=1e-15)
    assert sp.diam_m([0, sp.INF], 3) == 0.0
    assert sp.diam_m([0, 1, sp.INF], 3) == pytest.approx(math.pi / 4, abs=1e-12)
    with pytest.raises(sp.SphereError):
        sp.diam_m([0, 1], 1)


def test_diam_m_antitone_and_monotone(rng):
    for _ in range(200):
        n = int(rng.integers(4, 16))
        vals = rng.normal(size=n) + 1j * rng.normal(size=n)
        pts = [sp.SpherePoint(v) for v in vals]
        d2 = sp.diam_m(pts, 2)
        d3 = sp.diam_m(pts, 3)
        d4 = sp.diam_m(pts, 4)
        assert d2 >= d3 >= d4  # antitone in m
        subset = pts[: n - 2]
        assert sp.diam_m(subset, 3) <= d3 + 1e-12  # monotone under inclusion


def test_diam_3_matches_bruteforce(rng):
    import itertools

    for _ in range(20):
        n = int(rng.integers(3, 12))
        vals = rng.normal(size=n) + 1j * rng.normal(size=n)
        inf = np.zeros(n, bool)
        fast = sp.diam_m((vals, inf), 3)
        dmat = sp.pairwise_dist(vals, inf)
        brute = max(
            min(dmat[a, b], dmat[a, c], dmat[b, c])
            for a, b, c in itertools.combinations(range(n), 3))
        assert fast == pytest.approx(brute, abs=1e-14)


def test_greedy_net_separation_and_maximality():
    cand = sp.sphere_lattice(5000)
    net = sp.greedy_net(0.2, cand)
    dmat = sp.pairwise_dist(net.values, net.inf)
    np.fill_diagonal(dmat, 10.0)
    assert dmat.min() >= 0.2 - 1e-12
    # maximality: every candidate within 0.2 of some net point
    idx = net.nearest(cand[0], cand[1])
    cover = sp.dist_arrays(cand[0], cand[1], net.values[idx], net.inf[idx])
    assert cover.max() < 0.2


def test_greedy_net_degenerate_separation():
    cand = sp.sphere_lattice(100)
    net = sp.greedy_net(math.pi, cand)
    assert len(net) == 1
    # the first candidate wins (deterministic sweep order)
    assert net.values[0] == cand[0][0]


def test_partition_diameter_and_cover(rng):
    for k in range(0, 4):
        part = sp.partition_Ak(k)
        vals, inf = sp.uniform_samples(2000, rng)
        idx = part.cell_index(vals, inf)  # raises if any point is uncovered
        bound = 2.0 ** (-k)
        for cell in np.unique(idx)[:40]:
            mask = idx == cell
            if np.count_nonzero(mask) >= 2:
                d = sp.pairwise_dist(vals[mask], inf[mask])
                assert d.max() <= bound + 1e-12


def test_partition_local_count_bound(rng):
    part = sp.partition_Ak(3)
    for _ in range(200):
        cv, ci = sp.uniform_samples(1, rng)
        center = sp.SpherePoint.infinity() if ci[0] else sp.SpherePoint(cv[0])
        delta = float(rng.uniform(0.02, HALF_PI))
        count = part.local_count(center, delta, samples=400, rng=rng)
        assert math.log(count) <= sp.partition_count_bound(3, delta) + 1e-12


def test_partition_insufficient_resolution():
    with pytest.raises(sp.SphereError):
        sp.partition_Ak(11)


def test_adaptive_integral_constant():
    val = sp.adaptive_sphere_integral(lambda w, f: np.ones(np.shape(w)), budget=3000)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_net_csv_export(tmp_path, net1k):
    from randrat.iofmt import write_net_csv

    path = tmp_path / "net.csv"
    write_net_csv(str(path), net1k, cell_index=np.arange(len(net1k)))
    lines = path.read_text().splitlines()
    assert lines[0] == "index,re,im,is_infinity,cell_index"
    assert len(lines) == len(net1k) + 1
