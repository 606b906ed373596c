"""Acceptance battery: every release criterion at its stated tolerance.

Run with `pytest -s tests/test_acceptance.py` to see one line per criterion.
"""

import hashlib
import math
import os
import time

import numpy as np
import pytest

from randrat import branches as br
from randrat import cli, rds, thermo, transfer as tr, verify
from randrat import ratmap as rm
from randrat.sphere import (
    SpherePoint,
    normalize_arrays,
    partition_Ak,
    partition_count_bound,
    pairwise_dist,
    uniform_samples,
)

LN2 = math.log(2.0)


def _report(criterion, ok, detail):
    print(f"[criterion {criterion:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def small_potential(net4k):
    return rds.TabulatedPotential.from_function(rds.coordinate_bump(0), net4k,
                                                scale=0.05)


@pytest.fixture(scope="module")
def sys_phi(net4k, small_potential):
    return rds.explicit_system([(rm.power_map(2), small_potential)])


def test_criterion_1_transfer_identity(net10k):
    one = tr.GridFunction.constant(net10k, 1.0)
    phi0 = rds.ConstantPotential(0.0)
    worst_err = 0.0
    worst_time = 0.0
    for t in (rm.power_map(2), rm.power_map(3), rm.q_family(0.3)):
        t0 = time.time()
        out = tr.apply_L(t, phi0, one)
        dt = time.time() - t0
        err = float(np.max(np.abs(out.values - t.degree))) / t.degree
        worst_err = max(worst_err, err)
        worst_time = max(worst_time, dt)
    ok = worst_err < 1e-9 and worst_time < 1.0
    _report(1, ok, f"L[1] = deg*1 on {len(net10k)} points: rel err {worst_err:.2e}, "
                   f"slowest map {worst_time:.2f}s")


def test_criterion_2_entropy_deterministic(net4k):
    t0 = time.time()
    sys_z2 = rds.constant_system(rm.power_map(2))
    mean, _ = thermo.pressure_estimate(sys_z2, 8, 0.02, 1, net=net4k)
    dt = time.time() - t0
    ok = abs(mean - LN2) < 0.05 and dt < 60
    _report(2, ok, f"pressure(z^2, n=8, eps=0.02) = {mean:.5f} "
                   f"(ln 2 = {LN2:.5f}), {dt:.1f}s")


def test_criterion_3_entropy_random(net4k):
    t0 = time.time()
    phi0 = rds.ConstantPotential(0.0)
    mix = rds.BaseSystem([(rm.power_map(2), phi0, 0.5),
                          (rm.power_map(3), phi0, 0.5)], seed=42, mode="iid")
    mean, half = thermo.pressure_estimate(mix, 8, 0.02, 100, net=net4k)
    dt = time.time() - t0
    target = 0.5 * (math.log(2) + math.log(3))
    ok = abs(mean - target) < 0.1 and dt < 300
    _report(3, ok, f"pressure(iid z^2/z^3, 100 omegas) = {mean:.4f} +- {half:.4f} "
                   f"(target {target:.4f}), {dt:.1f}s")


def test_criterion_4_pressure_vs_lambda(net4k, sys_phi):
    rep = thermo.pressure_vs_lambda(sys_phi, 8, 0.02, 1, net=net4k, g_horizon=8)
    ok = rep.gap < 0.1
    _report(4, ok, f"pressure {rep.pressure:.5f} vs lambda-mean {rep.lambda_mean:.5f}: "
                   f"gap {rep.gap:.2e}")


def test_criterion_5_equilibrium_z2(net4k):
    t0 = time.time()
    sys_z2 = rds.constant_system(rm.power_map(2))
    g = tr.GridFunction.constant(net4k, 1.0)
    anchor = tr.julia_anchor(sys_z2.sample_sequence(0, 16), net4k)
    nu = tr.conformal_measure(sys_z2, 12, net4k, g, anchor)
    mu = tr.equilibrium_measure(g, nu)
    dt = time.time() - t0
    radii = np.abs(mu.values[~mu.inf])
    dist_to_circle = float(np.max(np.abs(radii - 1.0)))
    moments = [abs(mu.moment(k)) for k in range(1, 5)]
    ok = (dist_to_circle < 1e-3 and max(moments) < 0.02
          and float(np.sum(mu.weights)) == 1.0 and dt < 30)
    _report(5, ok, f"depth-12 atoms within {dist_to_circle:.1e} of the circle, "
                   f"max moment {max(moments):.1e}, mass = "
                   f"{float(np.sum(mu.weights))!r}, {dt:.1f}s")


def test_criterion_6_eigen_identity(net4k, sys_phi):
    n = 8
    coc, gs, anchors, residual = tr.lambda_cocycle(sys_phi, n, net4k, g_horizon=8)
    seq = sys_phi.sample_sequence(0, n)
    one = tr.GridFunction.constant(net4k, 1.0)
    lhat = tr.normalized_operator(seq, gs, coc, one, n=n)
    unit_dev = float(np.max(np.abs(lhat.values - 1.0)))
    # by construction the unit deviation equals the pointwise-relative defect
    direct = tr.apply_L_iter(seq, n, gs[0]).values / (coc.product() * gs[n].values)
    identity_gap = abs(unit_dev - float(np.max(np.abs(direct - 1.0))))
    ok = residual < 1e-2 and identity_gap < 1e-9 * max(unit_dev, 1e-12)
    _report(6, ok, f"eigen residual {residual:.2e} at n=8; "
                   f"unit-preservation dev {unit_dev:.2e} (identity gap {identity_gap:.1e})")


def test_criterion_7_oscillation(net1k, net4k):
    rng = np.random.default_rng(0xACCE7)
    violations = 0
    for trial in range(1000):
        d = int(rng.integers(1, 5))
        t = rm.random_map(d, rng)
        phi = rds.ConstantPotential(float(rng.uniform(-0.5, 0.5)))
        f = tr.GridFunction(net1k, rng.uniform(-1.0, 1.0, len(net1k)))
        g = tr.GridFunction(net1k, rng.uniform(0.2, 2.0, len(net1k)))
        lf = tr.apply_L(t, phi, f)
        lg = tr.apply_L(t, phi, g)
        k_idx = rng.choice(len(net1k), size=40, replace=False)
        w, fl = normalize_arrays(net1k.values[k_idx], net1k.inf[k_idx])
        rw, rf = t.preimage_fan(w, fl)
        ratio_pre = f.value_nf(rw.ravel(), rf.ravel()) / g.value_nf(rw.ravel(), rf.ravel())
        ratio_img = lf.values[k_idx] / lg.values[k_idx]
        slack = 1e-12 * (1.0 + float(np.max(np.abs(ratio_pre))))
        if ratio_img.max() > ratio_pre.max() + slack:
            violations += 1
        if ratio_img.min() < ratio_pre.min() - slack:
            violations += 1
        osc_img = ratio_img.max() - ratio_img.min()
        osc_pre = ratio_pre.max() - ratio_pre.min()
        if osc_img > osc_pre + 2 * slack:
            violations += 1
    # main convergence on the z^2 perturbation family
    perturbs = [0.0, 0.04 + 0.02j, -0.03 + 0.03j, 0.02 - 0.05j]
    maps = [rm.RationalMap([a, 0, 1], [1]) for a in perturbs]
    phi0 = rds.ConstantPotential(0.0)
    sys_p = rds.BaseSystem([(m, phi0, 0.25) for m in maps], seed=11, mode="iid")
    w, fl = normalize_arrays(net4k.values, net4k.inf)
    f = tr.GridFunction.from_function(
        net4k, lambda w, fl: 0.7 + 0.3 * np.real(w) + 0.2 * np.imag(w))
    g = tr.GridFunction.from_function(net4k, lambda w, fl: 1.0 + 0.4 * np.real(w))
    seq = sys_p.sample_sequence(0, 12)
    lf, lg = f, g
    osc0 = None
    final_ratio = None
    for n in range(13):
        if n > 0:
            t, phi = seq[n - 1]
            lf = tr.apply_L(t, phi, lf)
            lg = tr.apply_L(t, phi, lg)
            scale = 1.0 / float(np.max(np.abs(lg.values)))
            lf = lf * scale
            lg = lg * scale
        stat = rds.julia_statistic_nf(sys_p.shifted(n).sample_sequence(0, 20), 20, w, fl)
        mask = stat >= 30.0
        ratio = lf.values[mask] / lg.values[mask]
        osc = float(ratio.max() - ratio.min())
        if n == 0:
            osc0 = osc
        final_ratio = osc / osc0
        if n >= 1 and final_ratio < 0.1:
            break
    ok = violations == 0 and final_ratio < 0.1 and n <= 12
    _report(7, ok, f"oscillation inequalities: {violations} violations in 1000; "
                   f"main convergence hit {final_ratio:.3f} of initial at n={n}")


def test_criterion_8_divisor_counts():
    rng = np.random.default_rng(0xD1715)
    bad = 0
    for _ in range(200):
        d = int(rng.integers(2, 7))
        t = rm.random_map(d, rng)
        pv, pi = uniform_samples(1, rng)
        p = SpherePoint.infinity() if pi[0] else SpherePoint(pv[0])
        if t.preimages(p).degree != d:
            bad += 1
        if t.ramification_divisor().degree != 2 * d - 2:
            bad += 1
        if t.fixed_divisor().degree != d + 1:
            bad += 1
    _report(8, bad == 0, f"200 random maps of degree <= 6: {bad} divisor-count defects")


def test_criterion_9_branch_census_and_ab():
    rng = np.random.default_rng(0xB4A9C)
    failures = 0
    families = 0
    for t in (rm.power_map(2), rm.power_map(3)):
        for _ in range(25):
            disks = []
            for _ in range(int(rng.integers(1, 4))):
                c = SpherePoint(complex(rng.uniform(0.4, 1.5),
                                        rng.uniform(-0.8, 0.8)))
                disks.append(br.DiskDomain(c, float(rng.uniform(0.02, 0.1))))
            c_level = float(rng.uniform(0.05, 0.8))
            try:
                rep = br.good_branch_census(t, disks, c_level, n_rays=16, n_steps=8)
            except br.BranchError:
                failures += 1
                continue
            families += 1
            if not rep.within_bound:
                failures += 1
    seq = rds.constant_system(rm.power_map(2)).sample_sequence(0, 3)
    disk = br.DiskDomain(SpherePoint(0.25 + 0.1j), 0.12)
    res = br.ab_decomposition(seq, 3, [disk], 0.5,
                              lambda w, fl: np.ones(np.shape(w)))
    leaves = len(res.trees[0][0])
    ok = failures == 0 and families == 50 and leaves == 8 \
        and res.telescoping_residual < 1e-6
    _report(9, ok, f"{families} disk families within the bad-branch bound; "
                   f"AB telescoping residual {res.telescoping_residual:.1e} "
                   f"on the {leaves}-leaf tree")


def test_criterion_10_lemma_battery():
    t0 = time.time()
    reports = verify.run_battery()
    dt = time.time() - t0
    ok = all(r.passed for r in reports)
    ok = ok and all(r.trials >= 1000 for r in reports)
    ok = ok and dt < 600
    detail = ", ".join(f"{r.lemma}:{r.trials}t/{r.violations}v" for r in reports)
    _report(10, ok, f"battery in {dt:.0f}s: {detail}")


def test_criterion_11_partition_lemma():
    rng = np.random.default_rng(0x9A271)
    diameter_defects = 0
    count_defects = 0
    for k in range(6):
        part = partition_Ak(k)
        bound = 2.0 ** (-k)
        # diameter: cell membership keeps every point within the cell radius
        pv, pi = uniform_samples(1000, rng)
        idx = part.cell_index(pv, pi)
        for cell in np.unique(idx):
            mask = idx == cell
            if np.count_nonzero(mask) >= 2:
                d = pairwise_dist(pv[mask], pi[mask])
                if float(d.max()) > bound:
                    diameter_defects += 1
        # local count bound on 1000 probes per level
        for _ in range(1000 // 6 + 1):
            cv, ci = uniform_samples(1, rng)
            center = SpherePoint.infinity() if ci[0] else SpherePoint(cv[0])
            delta = float(rng.uniform(0.02, math.pi / 2))
            count = part.local_count(center, delta, samples=300, rng=rng)
            if math.log(count) > partition_count_bound(k, delta) + 1e-12:
                count_defects += 1
    ok = diameter_defects == 0 and count_defects == 0
    _report(11, ok, f"partition levels 0..5: {diameter_defects} diameter and "
                    f"{count_defects} count-bound defects")


def test_criterion_12_reproducibility(tmp_path):
    system = ("seed 7\nmode iid\n"
              "begin-entry\nweight 0.5\npotential constant 0.0\n"
              "numerator 0.0,0.0 0.0,0.0 1.0,0.0\ndenominator 1.0,0.0\nend-entry\n"
              "begin-entry\nweight 0.5\npotential constant 0.1\n"
              "numerator 0.0,0.0 0.0,0.0 0.0,0.0 1.0,0.0\ndenominator 1.0,0.0\nend-entry\n")
    (tmp_path / "system.rds").write_text(system)
    (tmp_path / "run.ini").write_text(
        "[system]\npath = system.rds\n[net]\nsize = 1200\n"
        "[run]\nseed = 7\nhorizon = 3\ng_horizon = 3\ntree_depth = 6\n"
        "[pressure]\nn_ladder = 4\neps_ladder = 0.1\nsamples = 4\n"
        "[render]\nwidth = 64\nheight = 64\n"
        "[verify]\nscale = 0.05\n")

    def run_all(subdir):
        outs = {}
        for cmd in ("simulate", "julia-render", "pressure", "measure", "verify"):
            code = cli.main([cmd, "--config", str(tmp_path / "run.ini"),
                             "--out", str(tmp_path / subdir)])
            assert code == 0, cmd
        for name in sorted(os.listdir(tmp_path / subdir)):
            data = (tmp_path / subdir / name).read_bytes()
            outs[name] = hashlib.sha256(data).hexdigest()
        return outs

    a = run_all("a")
    b = run_all("b")
    ok = a == b and len(a) >= 10
    _report(12, ok, f"{len(a)} output files byte-identical across two runs")
