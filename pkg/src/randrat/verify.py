"""Numerical verification battery for the quantitative inequalities.

Each check draws a seeded randomized corpus, counts violations beyond the
declared tolerance, and reports the worst margin (positive margins are
violations).  The suite passes iff every report is clean; fixed seeds make
it bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import branches
from .ratmap import RationalMap, mobius_map, poly_roots, random_map
from .sphere import (
    SpherePoint,
    ball_samples,
    denormalize_arrays,
    dist_arrays,
    dist_nf,
    normalize_arrays,
    to_arrays,
    uniform_samples,
)

HALF_PI = math.pi / 2.0


@dataclass
class CheckReport:
    lemma: str
    trials: int
    violations: int
    worst_margin: float
    parameters: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.violations == 0

    def row(self):
        return (self.lemma, self.trials, self.violations, self.worst_margin)


def koebe_bound(area):
    """Lipschitz constant sqrt(A / (1 - A)) for image area A."""
    if not 0 <= area < 1:
        return math.inf
    return math.sqrt(area / (1.0 - area))


def hyperbolic_dist(x, y):
    """Poincare distance on the unit disk, normalized so tanh d(0, x) = |x|."""
    x, y = complex(x), complex(y)
    q = abs(x - y) / abs(1.0 - np.conj(x) * y)
    return math.atanh(min(q, 1.0 - 1e-16))


class _DiskMap:
    """Holomorphic injective test map from the unit disk to the sphere."""

    def __init__(self, fn, dfn, label):
        self.fn = fn
        self.dfn = dfn
        self.label = label

    def __call__(self, z):
        return self.fn(z)

    def deriv_norm(self, z):
        """Operator norm from the hyperbolic metric to the spherical one."""
        z = np.asarray(z, dtype=complex)
        val = self.fn(z)
        return np.abs(self.dfn(z)) * (1.0 - np.abs(z) ** 2) / (1.0 + np.abs(val) ** 2)

    def spherical_area(self, *, n_r=512, n_t=256):
        """Image area by midpoint quadrature of |f'|^2 / (pi (1+|f|^2)^2)."""
        r = (np.arange(n_r) + 0.5) / n_r
        t = 2.0 * math.pi * (np.arange(n_t) + 0.5) / n_t
        rr, tt = np.meshgrid(r, t, indexing="ij")
        z = rr * np.exp(1j * tt)
        val = self.fn(z)
        integrand = np.abs(self.dfn(z)) ** 2 / (1.0 + np.abs(val) ** 2) ** 2
        return float(np.sum(integrand * rr) * (1.0 / n_r) * (2.0 * math.pi / n_t) / math.pi)

    def injective_on_samples(self, rng, pairs=1000):
        z1 = _disk_samples(rng, pairs)
        z2 = _disk_samples(rng, pairs)
        v1, v2 = self.fn(z1), self.fn(z2)
        coincide = np.abs(v1 - v2) < 1e-12
        apart = np.abs(z1 - z2) > 1e-9
        return not np.any(coincide & apart)


def _disk_samples(rng, n, radius=0.995):
    return radius * np.sqrt(rng.random(n)) * np.exp(2j * math.pi * rng.random(n))


def scaling_map(c):
    return _DiskMap(lambda z: c * z, lambda z: c * np.ones_like(z), f"scale {c}")


def random_mobius_diskmap(rng):
    for _ in range(64):
        a, b, c, d = (rng.standard_normal(4) + 1j * rng.standard_normal(4))
        if abs(a * d - b * c) > 1e-6:
            return _DiskMap(
                lambda z, a=a, b=b, c=c, d=d: (a * z + b) / (c * z + d),
                lambda z, a=a, b=b, c=c, d=d: (a * d - b * c) / (c * z + d) ** 2,
                "mobius",
            )
    raise RuntimeError("could not draw a Mobius map")


def root_branch_diskmap(rng):
    """sqrt or cbrt branch over a disk avoiding the origin: injective."""
    k = int(rng.integers(2, 4))
    center = 1.5 + rng.standard_normal() * 0.2 + 1j * rng.standard_normal() * 0.2
    rad = 0.4 * abs(center)
    return _DiskMap(
        lambda z, c=center, r=rad, k=k: np.exp(np.log(c + r * z) / k),
        lambda z, c=center, r=rad, k=k: np.exp(np.log(c + r * z) / k) * r / (k * (c + r * z)),
        f"root {k}",
    )


def check_koebe(samples=200, *, pairs=1000, tol=1e-6, seed=20_01):
    """Hyperbolic-to-spherical difference quotients against the area bound.

    Includes the sharpness audit for the scaling family: derivative norm at
    the origin equals the bound exactly when the image is the Euclidean disk
    of radius c, whose spherical area is c^2/(1+c^2).
    """
    rng = np.random.default_rng(seed)
    trials = violations = 0
    worst = -math.inf
    notes = []
    for trial in range(samples):
        if trial % 3 == 2:
            zeta = root_branch_diskmap(rng)
        else:
            zeta = random_mobius_diskmap(rng)
        if not zeta.injective_on_samples(rng, 200):
            notes.append(f"trial {trial}: sampled collision, skipped")
            continue
        area = zeta.spherical_area()
        bound = koebe_bound(area)
        if not math.isfinite(bound):
            notes.append(f"trial {trial}: full-area image, skipped")
            continue
        z1 = _disk_samples(rng, pairs, radius=0.9)
        z2 = _disk_samples(rng, pairs, radius=0.9)
        v1, v2 = zeta(z1), zeta(z2)
        ds = dist_arrays(v1, np.zeros(pairs, bool), v2, np.zeros(pairs, bool))
        dh = np.array([hyperbolic_dist(a, b) for a, b in zip(z1, z2)])
        ok = dh > 1e-9
        quot = ds[ok] / dh[ok]
        margins = quot - bound * (1.0 + tol)
        worst = max(worst, float(np.max(margins)))
        violations += int(np.sum(margins > 0))
        trials += int(np.count_nonzero(ok))
        # derivative-norm form of the same bound
        dn = zeta.deriv_norm(_disk_samples(rng, 200, radius=0.95))
        margins = dn - bound * (1.0 + tol)
        worst = max(worst, float(np.max(margins)))
        violations += int(np.sum(margins > 0))
        trials += len(dn)
    # sharpness of the scaling family
    for c in (0.5, 1.0, 2.0):
        zeta = scaling_map(c)
        area_exact = c * c / (1.0 + c * c)
        area_quad = zeta.spherical_area(n_r=2048, n_t=64)
        deriv0 = float(zeta.deriv_norm(np.array([0j]))[0])
        gap = abs(deriv0 - koebe_bound(area_exact))
        quad_gap = abs(area_quad - area_exact)
        trials += 1
        if gap > tol or quad_gap > 1e-4:
            violations += 1
        worst = max(worst, gap - tol)
        notes.append(f"sharpness c={c}: deriv0={deriv0:.8f} bound={koebe_bound(area_exact):.8f}")
    return CheckReport("koebe", trials, violations, worst,
                       {"samples": samples, "pairs": pairs, "tol": tol, "seed": seed},
                       notes)


def check_C10(t, samples=10_000, *, tol=1e-9, seed=20_02):
    """The three displayed derivative-increment inequalities for one map."""
    rng = np.random.default_rng(seed)
    sup = t.sup_sph_deriv()
    hbig = 32.0 / math.pi ** 2 * sup * sup
    xv, xi = uniform_samples(samples, rng)
    yv, yi = uniform_samples(samples, rng)
    wx, fx = normalize_arrays(xv, xi)
    wy, fy = normalize_arrays(yv, yi)
    d = dist_nf(wx, fx, wy, fy)
    tx = t.sph_deriv_nf(wx, fx)
    ty = t.sph_deriv_nf(wy, fy)
    ox, ofx = t.eval_nf(wx, fx)
    oy, ofy = t.eval_nf(wy, fy)
    dimg = dist_nf(ox, ofx, oy, ofy)
    # (C10): |T_*(x) - T_*(y)| <= Hbig d(x, y)
    m1 = np.abs(tx - ty) - hbig * d
    # (C11): d(Tx, Ty) <= d(x,y) (T_*(x) + Hbig/2 d(x,y))
    m2 = dimg - d * (tx + 0.5 * hbig * d)
    # (C9) via difference quotients at small separations
    hstep = 1e-5
    off = xv + hstep * (1.0 + np.abs(xv) ** 2) * np.exp(2j * math.pi * rng.random(samples))
    wo, fo = normalize_arrays(off, np.zeros(samples, bool))
    dq = np.abs(t.sph_deriv_nf(wo, fo) - tx) / dist_nf(wo, fo, wx, fx)
    m3 = dq - hbig
    worst = float(max(m1.max(), m2.max(), m3.max()))
    violations = int(np.sum(m1 > tol) + np.sum(m2 > tol) + np.sum(m3 > tol * hbig))
    return CheckReport("C10", 3 * samples, violations, worst,
                       {"sup": sup, "hbig": hbig, "tol": tol, "seed": seed})


def c8_constant(cap_degree):
    """The derivative floor constant solved out of the proof chain:
    1/2 <= 9 (16 pi^8)^D h0^2 H^{8D} / delta^{4D}  =>  C8 = sqrt(18) (4 pi^4)^D."""
    return math.sqrt(18.0) * (4.0 * math.pi ** 4) ** cap_degree


def check_C7C8(cap_degree=3, samples=1000, *, tol=1e-9, seed=20_03):
    """Derivative floor h0 >= delta^{2D} / (C8 H^{4D}) on random maps/points."""
    rng = np.random.default_rng(seed)
    c8 = c8_constant(cap_degree)
    trials = violations = 0
    worst = -math.inf
    while trials < samples:
        d = int(rng.integers(1, cap_degree + 1))
        t = random_map(d, rng)
        xv, xi = uniform_samples(1, rng)
        w, fl = normalize_arrays(xv, xi)
        h0 = float(t.sph_deriv_nf(w, fl)[0])
        rp = t.ramification_divisor()
        if len(rp.entries) == 0:
            delta = HALF_PI
        else:
            pv, pi = to_arrays(rp.points())
            delta = float(np.min(dist_arrays(
                np.repeat(xv, len(pv)), np.repeat(xi, len(pv)), pv, pi)))
        sup = t.sup_sph_deriv()
        floor = delta ** (2 * cap_degree) / (c8 * sup ** (4 * cap_degree))
        margin = floor - h0  # positive = violation
        worst = max(worst, margin)
        violations += int(margin > tol)
        trials += 1
    return CheckReport("C7C8", trials, violations, worst,
                       {"cap_degree": cap_degree, "c8": c8, "tol": tol, "seed": seed})


def check_UVW(t, a, delta, samples=10_000, *, tol=1e-9, seed=20_04):
    """Injectivity on W = B(a, h delta / H) and the expansion lower bound."""
    if delta > math.pi / 4 + 1e-12:
        raise ValueError("UVW check needs delta <= pi/4")
    rng = np.random.default_rng(seed)
    a = SpherePoint.of(a)
    bv, bi = ball_samples(a, delta, 4000, rng)
    av, ai = to_arrays([a])
    bv = np.concatenate([bv, av])
    bi = np.concatenate([bi, ai])
    bw, bf = normalize_arrays(bv, bi)
    derivs = t.sph_deriv_nf(bw, bf)
    h = float(np.min(derivs))
    if h <= 1e-9:
        raise ValueError("derivative floor vanished on the sampled ball")
    sup = t.sup_sph_deriv()
    hbig = 32.0 / math.pi ** 2 * sup * sup
    w_radius = h * delta / sup
    xv, xi = ball_samples(a, w_radius, samples, rng)
    yv, yi = ball_samples(a, w_radius, samples, rng)
    wx, fx = normalize_arrays(xv, xi)
    wy, fy = normalize_arrays(yv, yi)
    d = dist_nf(wx, fx, wy, fy)
    tx = t.sph_deriv_nf(wx, fx)
    ox, ofx = t.eval_nf(wx, fx)
    oy, ofy = t.eval_nf(wy, fy)
    dimg = dist_nf(ox, ofx, oy, ofy)
    lower = d * np.maximum(tx - 0.5 * hbig * d, 0.0)
    margin = lower - dimg  # positive = violation
    distinct = d > 1e-12
    injective = bool(np.all(dimg[distinct] > 0))
    violations = int(np.sum(margin > tol)) + (0 if injective else 1)
    return CheckReport("UVW", samples, violations, float(np.max(margin)),
                       {"h": h, "sup": sup, "w_radius": w_radius, "tol": tol,
                        "seed": seed, "injective": injective})


def check_epsilon_lemma(trials=10_000, *, max_size=20, tol=1e-12, seed=20_05):
    """The two-vector convexity inequality, brute-forced on both sides."""
    rng = np.random.default_rng(seed)
    violations = 0
    worst = -math.inf
    for _ in range(trials):
        s = int(rng.integers(1, max_size + 1))
        a = rng.random(s) + 1e-3
        a /= a.sum()
        b = rng.random(s) + 1e-3
        b /= b.sum()
        c = rng.uniform(-1.0, 1.0, s)
        d = rng.uniform(-1.0, 1.0, s)
        kk = float(np.max(np.abs(np.log(a) - np.log(b))))
        eps = 2.0 / (1.0 + math.exp(kk))
        lhs = float(np.sum(a * c - b * d))
        rhs = (1.0 - eps) * (float(np.max(c)) - float(np.min(d))) + eps * float(np.max(c - d))
        margin = lhs - rhs
        worst = max(worst, margin)
        violations += int(margin > tol)
    # exhaustive two-state grid, step 0.05
    grid = np.arange(0.05, 1.0, 0.05)
    vals = np.arange(-1.0, 1.01, 0.25)
    for a1 in grid:
        a = np.array([a1, 1 - a1])
        for b1 in grid:
            b = np.array([b1, 1 - b1])
            kk = float(np.max(np.abs(np.log(a) - np.log(b))))
            eps = 2.0 / (1.0 + math.exp(kk))
            cc, dd = np.meshgrid(vals, vals, indexing="ij")
            for c2 in vals:
                for d2 in vals:
                    lhs = a[0] * cc + a[1] * c2 - b[0] * dd - b[1] * d2
                    rhs = (1 - eps) * (np.maximum(cc, c2) - np.minimum(dd, d2)) \
                        + eps * np.maximum(cc - dd, c2 - d2)
                    margin = float(np.max(lhs - rhs))
                    worst = max(worst, margin)
                    violations += int(margin > tol)
                    trials += 1
    return CheckReport("epsilon", trials, violations, worst,
                       {"max_size": max_size, "tol": tol, "seed": seed})


def check_spillover(t, delta, n_sets=200, *, probes=24, tol=1e-9, seed=20_06):
    """Covering lemma: small-complement open sets map over the probe set.

    K collects probe points whose preimage triple-diameter clears delta.
    Sampled U are complements of cap unions: unions of at most two caps of
    radius below delta/2 land in the hypothesis class (complement
    triple-diameter below delta) and must cover K; larger families exercise
    the contrapositive, where an uncovered probe forces the complement out
    of the class.  Complement diameters are measured on a net
    discretization.
    """
    rng = np.random.default_rng(seed)
    from .sphere import diam_m, sphere_lattice

    # probe set K with verified preimage spread
    kv, ki = uniform_samples(probes, rng)
    keep = []
    for i in range(probes):
        p = SpherePoint.infinity() if ki[i] else SpherePoint(kv[i])
        spread = diam_m(to_arrays(t.preimages(p).points()), 3)
        if spread >= delta:
            keep.append(i)
    if not keep:
        raise ValueError("no probe point has preimage triple-diameter >= delta")
    kv, ki = kv[keep], ki[keep]
    net_v, net_i = sphere_lattice(3000)
    trials = violations = skipped = 0
    worst = -math.inf
    for trial in range(n_sets):
        if trial % 3 < 2:
            n_caps = int(rng.integers(1, 3))
            radii = rng.uniform(0.1 * delta, 0.45 * delta, n_caps)
        else:
            n_caps = int(rng.integers(3, 6))
            radii = rng.uniform(0.5 * delta, 6.0 * delta, n_caps)
        cv, ci = uniform_samples(n_caps, rng)
        inside_any = np.zeros(len(net_v), dtype=bool)
        for j in range(n_caps):
            d = dist_arrays(net_v, net_i, np.repeat(cv[j], len(net_v)),
                            np.repeat(ci[j], len(net_v)))
            inside_any |= d < radii[j]
        comp_diam3 = diam_m((net_v[inside_any], net_i[inside_any]), 3)
        in_hypothesis = comp_diam3 < delta
        if not in_hypothesis:
            skipped += 1
        uncovered = 0
        for i in range(len(kv)):
            p = SpherePoint.infinity() if ki[i] else SpherePoint(kv[i])
            pv, pi = to_arrays(t.preimages(p).points())
            in_u = np.ones(len(pv), dtype=bool)
            for j in range(n_caps):
                d = dist_arrays(pv, pi, np.repeat(cv[j], len(pv)),
                                np.repeat(ci[j], len(pv)))
                in_u &= ~(d < radii[j])
            covered = bool(np.any(in_u))
            uncovered += int(not covered)
            if in_hypothesis:
                trials += 1
                if not covered:
                    violations += 1
                    worst = max(worst, delta - comp_diam3)
        if not in_hypothesis and uncovered:
            # contrapositive: an uncovered probe requires a spread complement
            trials += 1
            if comp_diam3 < delta:
                violations += 1
                worst = max(worst, delta - comp_diam3)
    return CheckReport("spillover", trials, violations,
                       worst if worst > -math.inf else -delta,
                       {"delta": delta, "kept_probes": len(kv),
                        "out_of_class_sets": skipped, "tol": tol, "seed": seed})


def run_battery(*, seed=0, quick=False):
    """The full corpus with default parameters; returns the report list."""
    from .ratmap import power_map

    scale = 0.2 if quick else 1.0
    n = lambda k: max(10, int(k * scale))
    reports = [
        check_koebe(n(200), pairs=n(1000)),
        check_C10(power_map(2), n(10_000)),
        check_C10(mobius_map(2, 0, 0, 1), n(10_000)),
        check_C7C8(3, n(1000)),
        check_UVW(power_map(2), SpherePoint(1.0), 0.2, n(10_000)),
        check_epsilon_lemma(n(10_000)),
        check_spillover(power_map(3), 0.05, n(200)),
    ]
    return reports
