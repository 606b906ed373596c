"""Inverse-branch formalism over branch-point-free disks.

Branches are analytic lifts materialized on a polar sample grid and built
by Newton continuation along radial rays.  The good/bad census and the A/B
operator split follow the backwards recursion with the exponentially
decaying goodness thresholds; branches with multiplicity greater than one
(self-overlapping base maps) are not constructed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import transfer
from .ratmap import RationalMap
from .sphere import (
    SpherePoint,
    denormalize_arrays,
    dist_arrays,
    dist_nf,
    normalize_arrays,
    to_arrays,
)

DEFAULT_RAYS = 64
DEFAULT_STEPS = 32
MAX_HALVINGS = 10
LIFT_RESIDUAL_TOL = 1e-9
AREA_DECISION_TOL = 1e-3


class BranchError(RuntimeError):
    """Lifting failed or a precondition was violated."""


@dataclass
class DiskDomain:
    """Round spherical disk with the verified-excluded branch points."""

    center: SpherePoint
    radius: float
    excluded: object = None  # Divisor of branch points confirmed outside

    def __post_init__(self):
        self.center = SpherePoint.of(self.center)
        if not 0 < self.radius < math.pi / 2:
            raise BranchError("disk radius must lie in (0, pi/2)")

    def contains(self, vals, inf, margin=0.0):
        cv, ci = to_arrays([self.center])
        d = dist_arrays(np.atleast_1d(vals), np.atleast_1d(inf),
                        np.repeat(cv, len(np.atleast_1d(vals))),
                        np.repeat(ci, len(np.atleast_1d(vals))))
        return d < self.radius + margin


def _project_offsets(z0, rad, theta, iters=4):
    """Points at spherical radius rad, angle theta, around chart point z0."""
    rad = np.asarray(rad, dtype=float)
    theta = np.asarray(theta, dtype=float)
    scale = 1.0 + abs(z0) ** 2
    offs = np.tan(rad) * scale * np.exp(1j * theta)
    zeros = np.zeros(offs.shape, dtype=bool)
    center = np.full(offs.shape, z0)
    for _ in range(iters):
        pts = z0 + offs
        d = dist_arrays(pts, zeros, center, zeros)
        good = d > 1e-15
        ratio = np.ones(offs.shape)
        ratio[good] = rad[good] / d[good]
        offs = offs * ratio
    return z0 + offs


@dataclass
class DiskGrid:
    """Polar sample grid on a disk: nodes[k, i] at radius_k, angle_i."""

    disk: DiskDomain
    radii: np.ndarray      # (n_steps + 1,), radii[0] = 0
    thetas: np.ndarray     # (n_rays,)
    w: np.ndarray          # (n_steps + 1, n_rays) normal-form values
    flip: np.ndarray

    @classmethod
    def build(cls, disk, n_rays=DEFAULT_RAYS, n_steps=DEFAULT_STEPS):
        c = disk.center
        flip_chart = c.is_infinity or abs(c.value) > 1.0
        z0 = c.chart_flip().value if flip_chart else c.value
        radii = disk.radius * np.arange(n_steps + 1) / n_steps
        thetas = 2.0 * math.pi * np.arange(n_rays) / n_rays
        rr, tt = np.meshgrid(radii, thetas, indexing="ij")
        pts = _project_offsets(z0, rr, tt)
        if flip_chart:
            inf = pts == 0
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.where(inf, 0j, 1.0 / np.where(inf, 1.0, pts))
        else:
            vals, inf = pts, np.zeros(pts.shape, dtype=bool)
        w, fl = normalize_arrays(vals, inf)
        return cls(disk, radii, thetas, w, fl)

    @property
    def shape(self):
        return self.w.shape

    def cell_measures(self):
        """Normalized areas of the polar cells (exact for round disks)."""
        ring = np.sin(self.radii[1:]) ** 2 - np.sin(self.radii[:-1]) ** 2
        return ring[:, None] / len(self.thetas)


@dataclass
class InverseBranch:
    """An analytic lift eta with T o eta = base, sampled on a disk grid."""

    grid: DiskGrid
    map: RationalMap
    base_w: np.ndarray     # base map samples (what eta lifts), normal form
    base_f: np.ndarray
    lift_w: np.ndarray     # eta samples
    lift_f: np.ndarray
    parent: object = None  # the branch whose samples base_w came from

    @property
    def domain(self):
        return self.grid.disk

    @property
    def base_value(self):
        vals, inf = denormalize_arrays(self.lift_w[:1, 0], self.lift_f[:1, 0])
        return SpherePoint.infinity() if inf[0] else SpherePoint(vals[0])

    def samples(self):
        dv, di = denormalize_arrays(self.grid.w.ravel(), self.grid.flip.ravel())
        lv, li = denormalize_arrays(self.lift_w.ravel(), self.lift_f.ravel())
        from .sphere import from_arrays

        return list(zip(from_arrays(dv, di), from_arrays(lv, li)))

    def residual(self):
        """sup distance of T(lift) from the base samples."""
        ow, of = self.map.eval_nf(self.lift_w.ravel(), self.lift_f.ravel())
        return float(np.max(dist_nf(ow, of, self.base_w.ravel(), self.base_f.ravel())))

    def step_norms(self):
        """Spherical derivative of eta: 1 / T_*(eta(x)), by the chain rule.

        The identity root (map None) has unit norms.
        """
        if self.map is None:
            return np.ones(self.lift_w.shape)
        tstar = self.map.sph_deriv_nf(self.lift_w, self.lift_f)
        with np.errstate(divide="ignore"):
            return np.where(tstar > 0, 1.0 / tstar, np.inf)

    def chain_norms(self):
        """Derivative norms of the full composed lift down to this level."""
        out = self.step_norms()
        p = self.parent
        while p is not None:
            out = out * p.step_norms()
            p = p.parent
        return out

    def chain_points(self):
        """Sample chains bottom-up: this lift, its base, the base's base, ..."""
        chain = [(self.lift_w, self.lift_f)]
        node = self
        while node is not None:
            chain.append((node.base_w, node.base_f))
            node = node.parent
        return chain


def _newton_refine(t, z, pw, pf, iters=30):
    """Newton for T(z) = p on plain complex iterates, chart-stable targets."""
    pv, pi = denormalize_arrays(pw, pf)
    fpad = t.num
    gpad = t.den
    # q = f - p g, or (1/p) f - g for large p, or g alone for infinity
    big = (~pi) & (np.abs(pv) > 1.0)
    for _ in range(iters):
        f = fpad(z)
        fp = fpad.deriv()(z)
        g = gpad(z)
        gp = gpad.deriv()(z)
        q = np.where(pi, g, np.where(big, f / np.where(big, pv, 1.0) - g, f - pv * g))
        qp = np.where(pi, gp, np.where(big, fp / np.where(big, pv, 1.0) - gp, fp - pv * gp))
        ok = np.abs(qp) > 0
        step = np.where(ok, q / np.where(ok, qp, 1.0), 0.0)
        z = z - step
    return z


def lift_disk(t, disk, x0, *, n_rays=DEFAULT_RAYS, n_steps=DEFAULT_STEPS,
              base=None, check_branch_points=True):
    """The inverse branch of `base` (default: the identity) through x0.

    Newton continuation along radial rays from the disk center.  Requires
    T(x0) = base(center) and the image of the base to avoid the branch
    points of T; diverging continuations halve the radial step up to the
    configured limit.
    """
    grid = base.grid if base is not None else DiskGrid.build(disk, n_rays, n_steps)
    if base is not None:
        base_w, base_f = base.lift_w, base.lift_f
    else:
        base_w, base_f = grid.w, grid.flip
    if check_branch_points:
        bp = t.branch_divisor()
        bvals, binf = to_arrays(bp.points())
        if base is None:
            # exact test for round disks: no branch value inside U
            inside = disk.contains(bvals, binf, margin=1e-9)
            if np.any(inside):
                raise BranchError("branch point inside the disk")
            disk.excluded = bp
        else:
            # sampled base image: flag branch values within the sample spacing
            bw, bf = normalize_arrays(bvals, binf)
            d = dist_nf(base_w.ravel()[:, None], base_f.ravel()[:, None],
                        bw[None, :], bf[None, :])
            spacing = disk.radius / max(1, base_w.shape[0] - 1)
            if np.min(d) <= spacing:
                raise BranchError("branch point inside the lifted image")
    x0 = SpherePoint.of(x0)
    c0v, c0i = denormalize_arrays(base_w[:1, 0], base_f[:1, 0])
    img = t.eval(x0)
    center_pt = SpherePoint.infinity() if c0i[0] else SpherePoint(c0v[0])
    if dist_arrays(*to_arrays([img]), *to_arrays([center_pt]))[0] > 1e-8:
        raise BranchError("x0 is not a preimage of the base center")
    if x0.is_infinity:
        raise BranchError("lift seeds at infinity are not supported")
    # minimal preimage gap at the center sets the branch-jump guard scale
    gap = _min_pair_gap(t.preimages(center_pt))
    n_rad, n_ray = base_w.shape
    lift_w = np.empty_like(base_w)
    lift_f = np.zeros_like(base_f)
    cur = np.full(n_ray, complex(x0.value))
    lift_w[0], lift_f[0] = normalize_arrays(cur, np.zeros(n_ray, bool))
    for k in range(1, n_rad):
        cur = _advance(t, cur, base_w[k - 1], base_f[k - 1], base_w[k], base_f[k], gap)
        lift_w[k], lift_f[k] = normalize_arrays(cur, np.zeros(n_ray, bool))
    branch = InverseBranch(grid, t, base_w, base_f, lift_w, lift_f, parent=base)
    res = branch.residual()
    if res > LIFT_RESIDUAL_TOL:
        raise BranchError(f"continuation residual {res:.2e} beyond tolerance")
    return branch


def _advance(t, prev, pw_prev, pf_prev, pw, pf, gap):
    """One radial continuation step: vectorized Newton, scalar fallback."""
    cur = _newton_refine(t, prev.copy(), pw, pf)
    ow, of = t.eval_nf(*normalize_arrays(cur, np.zeros(len(cur), bool)))
    res = dist_nf(ow, of, pw, pf)
    jump = dist_arrays(cur, np.zeros(len(cur), bool), prev, np.zeros(len(prev), bool))
    bad = (res >= LIFT_RESIDUAL_TOL) | ((gap > 0) & (jump >= 0.5 * gap))
    for i in np.nonzero(bad)[0]:
        cur[i] = _advance_one(t, prev[i], (pw_prev[i], pf_prev[i]),
                              (pw[i], pf[i]), gap)
    return cur


def _advance_one(t, z_prev, p_from, p_to, gap, depth=0):
    pw = np.array([p_to[0]])
    pf = np.array([p_to[1]])
    z = _newton_refine(t, np.array([complex(z_prev)]), pw, pf)[0]
    ow, of = t.eval_nf(*normalize_arrays(np.array([z]), np.array([False])))
    res = dist_nf(ow, of, pw, pf)[0]
    jump = dist_arrays(np.array([z]), np.array([False]),
                       np.array([z_prev]), np.array([False]))[0]
    if res < LIFT_RESIDUAL_TOL and (gap == 0 or jump < 0.5 * gap):
        return z
    if depth >= MAX_HALVINGS:
        raise BranchError("continuation diverged: step size exhausted")
    if p_from[1] != p_to[1]:
        raise BranchError("continuation crossed charts too fast")
    # halve the step through the midpoint of the targets
    mid = (0.5 * (p_from[0] + p_to[0]), p_from[1])
    z_mid = _advance_one(t, z_prev, p_from, mid, gap, depth + 1)
    return _advance_one(t, z_mid, mid, p_to, gap, depth + 1)


def _min_pair_gap(div):
    pts = div.points()
    if len(pts) < 2:
        return 0.0
    vals, inf = to_arrays(pts)
    best = math.inf
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            best = min(best, float(dist_arrays(vals[a: a + 1], inf[a: a + 1],
                                               vals[b: b + 1], inf[b: b + 1])[0]))
    return best if best < math.inf else 0.0


def all_lifts(t, disk, **kw):
    """One branch through each distinct preimage of the disk center."""
    div = t.preimages(disk.center)
    out = []
    for p, _ in div.entries:
        if p.is_infinity or abs(p.value) > 1e6:
            continue
        out.append(lift_disk(t, disk, p, **kw))
    return out


def image_area(branch):
    """Normalized spherical area of the branch image, by grid quadrature.

    Change of variables with the squared composed derivative norms; exact
    sin^2 ring measures, corner-averaged integrand.
    """
    norms = branch.chain_norms() ** 2
    cells = branch.grid.cell_measures()
    n_rad, n_ray = norms.shape
    nxt = np.roll(np.arange(n_ray), -1)
    corner_avg = 0.25 * (norms[:-1, :] + norms[1:, :] +
                         norms[:-1, nxt] + norms[1:, nxt])
    return float(np.sum(corner_avg * cells))


def family_multiplicity(disks, *, probes=4096):
    """Max overlap count of the disk family over a probe lattice + centers."""
    from .sphere import sphere_lattice

    pv, pi = sphere_lattice(probes)
    cv, ci = to_arrays([d.center for d in disks])
    pv = np.concatenate([pv, cv])
    pi = np.concatenate([pi, ci])
    count = np.zeros(len(pv), dtype=int)
    for d in disks:
        count += d.contains(pv, pi)
    return int(np.max(count))


@dataclass
class CensusReport:
    good: int
    bad: int
    multiplicity: int
    bound: float
    skipped: int = 0
    areas: list = field(default_factory=list)

    @property
    def within_bound(self):
        return self.bad <= self.bound


def good_branch_census(t, disks, c, **lift_kw):
    """Classify every branch over every disk as c-good or not.

    Disks meeting the branch points are excluded by precondition (counted
    as skipped).  The bad count is asserted against 2 r deg^2 + r/c with r
    the family overlap multiplicity; borderline areas within the quadrature
    tolerance count as bad.
    """
    if not 0 < c:
        raise BranchError("goodness level must be positive")
    r = family_multiplicity(disks)
    good = bad = skipped = 0
    areas = []
    for disk in disks:
        try:
            lifts = all_lifts(t, disk, **lift_kw)
        except BranchError:
            skipped += 1
            continue
        for branch in lifts:
            a = image_area(branch)
            areas.append(a)
            if a <= c - AREA_DECISION_TOL:
                good += 1
            else:
                bad += 1
    bound = 2.0 * r * t.degree ** 2 + r / c
    report = CensusReport(good, bad, r, bound, skipped, areas)
    if not report.within_bound:
        raise BranchError(
            f"census violated the bad-branch bound: {bad} > {bound}")
    return report


# ---------------------------------------------------------------------------
# the A/B decomposition
# ---------------------------------------------------------------------------

def goodness_threshold(c, n, j):
    """The level-j goodness threshold c^{2(n-j)} / (1 + c^{2(n-j)})."""
    p = c ** (2 * (n - j))
    return p / (1.0 + p)


def _as_value_fn(f):
    if hasattr(f, "value_nf"):
        return f.value_nf
    return f


@dataclass
class ABResult:
    a_values: dict        # j -> per-disk arrays of (A_j^n[f])_i on the grid
    b_values: dict        # j -> per-disk arrays of (B_j^n[L_0^j f])_i
    trees: list           # per-disk branch trees: trees[i][j] = list of branches
    thresholds: dict
    telescoping_residual: float


def ab_decomposition(seq, n, disks, c, f, *, n_rays=16, n_steps=8,
                     branch_cap=100_000):
    """Good-branch trees, the A and B operators, and the telescoping audit.

    Builds the branch trees by backwards recursion with the exponentially
    decaying goodness thresholds, computes A_j^n[f] and the telescoping
    terms B_j^n[L_0^j f], and audits
        A_0^n[f] = L_0^n[f] o zeta - sum_j B_j^n[L_0^j f]
    with the left side from branch continuation and the right side from
    independent preimage-tree descents.
    """
    if not 0 < c < 1:
        raise BranchError("threshold base c must lie in (0, 1)")
    fn = _as_value_fn(f)
    maps = [s[0] if isinstance(s, tuple) else s for s in seq[:n]]
    pots = [s[1] for s in seq[:n]]
    grids = [DiskGrid.build(d, n_rays, n_steps) for d in disks]
    # identity branches at level n
    trees = []
    for grid in grids:
        root = InverseBranch(grid, None, grid.w, grid.flip, grid.w, grid.flip, parent=None)
        trees.append({n: [root]})
    thresholds = {}
    total = len(trees)
    for j in range(n - 1, -1, -1):
        c_j = goodness_threshold(c, n, j)
        thresholds[j] = c_j
        for i, tr in enumerate(trees):
            tr[j] = []
            for eta in tr[j + 1]:
                for xi in _lifts_of_branch(maps[j], disks[i], eta):
                    if image_area(xi) <= c_j:
                        tr[j].append(xi)
                        total += 1
                        if total > branch_cap:
                            raise BranchError("branch tree exceeded the cap")
    a_values = {}
    for j in range(n + 1):
        a_values[j] = [_a_apply(tr.get(j, []), pots, j, n, fn, g.shape)
                       for tr, g in zip(trees, grids)]
    b_values = {}
    for j in range(n):
        b_values[j] = []
        for i, tr in enumerate(trees):
            lower = _l_compose_fn(maps, pots, 0, j, fn)
            upper = _l_compose_fn(maps, pots, 0, j + 1, fn)
            term = (_a_apply(tr.get(j + 1, []), pots, j + 1, n, upper, grids[i].shape)
                    - _a_apply(tr.get(j, []), pots, j, n, lower, grids[i].shape))
            b_values[j].append(term)
    residual = 0.0
    for i, grid in enumerate(grids):
        rhs = _l_compose_fn(maps, pots, 0, n, fn)(grid.w, grid.flip)
        for j in range(n):
            rhs = rhs - b_values[j][i]
        scale = max(1.0, float(np.max(np.abs(rhs))))
        residual = max(residual, float(np.max(np.abs(a_values[0][i] - rhs))) / scale)
    return ABResult(a_values, b_values, trees, thresholds, residual)


def _lifts_of_branch(t, disk, eta):
    """All lifts of a sampled branch under t (one per center preimage)."""
    cvals, cinf = denormalize_arrays(eta.lift_w[:1, 0], eta.lift_f[:1, 0])
    center_val = SpherePoint.infinity() if cinf[0] else SpherePoint(cvals[0])
    div = t.preimages(center_val)
    out = []
    for p, _ in div.entries:
        if p.is_infinity or abs(p.value) > 1e6:
            continue
        out.append(lift_disk(t, disk, p, base=eta, check_branch_points=True))
    return out


def _a_apply(branches, pots, j, n, fn, shape):
    """(A_j^n[f])_i on the grid: sum over branches of e^{phi_j^n(eta x)} f(eta x).

    The Birkhoff sums run along each branch's stored lift chain: chain[k]
    holds the level-(j+k) samples.
    """
    out = np.zeros(shape)
    for eta in branches:
        chain = eta.chain_points()
        logphi = np.zeros(shape)
        for k in range(n - j):
            cw, cf = chain[k]
            logphi = logphi + pots[j + k].value_nf(cw, cf)
        out = out + np.exp(logphi) * fn(eta.lift_w, eta.lift_f)
    return out


def _l_compose_fn(maps, pots, a, b, fn):
    """L_a^b[f] as a pointwise-evaluable function (exact tree descent)."""
    seq = list(zip(maps[a:b], pots[a:b]))
    depth = b - a

    def value(w, flip):
        if depth == 0:
            return fn(w, flip)
        shape = np.shape(w)
        wflat = np.asarray(w, complex).ravel()
        fflat = np.asarray(flip, bool).ravel()
        tree = transfer.preimage_tree(seq, depth, wflat, fflat)
        leaf_vals = fn(tree.orbit_w[0], tree.orbit_f[0])
        acc = np.exp(tree.leaf_logphi) * leaf_vals
        out = np.zeros(len(wflat))
        np.add.at(out, tree.anchor_idx, acc)
        return out.reshape(shape)

    return value


def b_sup_bound_check(seq, n, j, disks, c, f, result):
    """Audit the B-term sup bound for nonnegative f.

    Per-disk sups of B_j^n[L_0^j f] summed over the family are compared with
    r (2 deg^2 + 1 + c^{-2(n-j)}) e^{sup phi_j^n on K_j} sup_{K_j} L_0^j[f],
    where K is the union of the disk grids and K_j its full preimage set at
    level j, enumerated by tree descent.
    """
    fn = _as_value_fn(f)
    maps = [s[0] if isinstance(s, tuple) else s for s in seq[:n]]
    pots = [s[1] for s in seq[:n]]
    r = family_multiplicity(disks)
    lhs = 0.0
    probe_w = []
    probe_f = []
    for i, bv in enumerate(result.b_values[j]):
        lhs += float(np.max(bv))
        g = result.trees[i][n][0].grid
        probe_w.append(g.w.ravel())
        probe_f.append(g.flip.ravel())
    kw = np.concatenate(probe_w)
    kf = np.concatenate(probe_f)
    window = list(zip(maps[j:n], pots[j:n]))
    tree = transfer.preimage_tree(window, n - j, kw, kf)
    sup_phi = float(np.max(tree.leaf_logphi))
    l0j = _l_compose_fn(maps, pots, 0, j, fn)
    sup_f = float(np.max(l0j(tree.orbit_w[0], tree.orbit_f[0])))
    deg = maps[j].degree
    rhs = r * (2.0 * deg ** 2 + 1.0 + c ** (-2.0 * (n - j))) * math.exp(sup_phi) * sup_f
    return lhs, rhs