"""Spherical geometry on the extended complex plane.

Conventions: the sphere has diameter pi/2 and total area 1, so that
tan(dist(0, x)) = |x| for finite x and a ball of radius delta has area
sin(delta)**2.  Infinity is an ordinary point reached through the chart
flip w = 1/z.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

HALF_PI = math.pi / 2.0

# Any modulus beyond this is flipped into the w = 1/z chart before arithmetic.
_FLIP_RADIUS = 1.0

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class SphereError(ValueError):
    """Invalid geometric input."""


class CoverageError(SphereError):
    """A point fell outside every partition cell at the configured resolution."""


class SpherePoint:
    """A point of the extended complex plane: a finite value or infinity."""

    __slots__ = ("value", "is_infinity")

    def __init__(self, value=0j, is_infinity=False):
        self.is_infinity = bool(is_infinity)
        self.value = None if self.is_infinity else complex(value)

    @classmethod
    def infinity(cls):
        return cls(is_infinity=True)

    @classmethod
    def of(cls, value):
        """Coerce a complex number, SpherePoint, or None (= infinity)."""
        if isinstance(value, SpherePoint):
            return value
        if value is None:
            return cls.infinity()
        value = complex(value)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            return cls.infinity()
        return cls(value)

    def chart_flip(self):
        """The image under w = 1/z (an isometry of the sphere)."""
        if self.is_infinity:
            return SpherePoint(0j)
        if self.value == 0:
            return SpherePoint.infinity()
        return SpherePoint(1.0 / self.value)

    def __repr__(self):
        return "SpherePoint(inf)" if self.is_infinity else f"SpherePoint({self.value!r})"

    def __eq__(self, other):
        if not isinstance(other, SpherePoint):
            return NotImplemented
        if self.is_infinity or other.is_infinity:
            return self.is_infinity and other.is_infinity
        return self.value == other.value

    def __hash__(self):
        return hash((self.is_infinity, self.value))


INF = SpherePoint.infinity()


# ---------------------------------------------------------------------------
# array plumbing: points as (w, flip) pairs with |w| <= 1 after normalization
# ---------------------------------------------------------------------------

def to_arrays(points):
    """Pack an iterable of SpherePoints into (values, inf_mask) arrays."""
    pts = [SpherePoint.of(p) for p in points]
    vals = np.array([0j if p.is_infinity else p.value for p in pts], dtype=complex)
    inf = np.array([p.is_infinity for p in pts], dtype=bool)
    return vals, inf


def from_arrays(vals, inf):
    return [SpherePoint.infinity() if i else SpherePoint(v) for v, i in zip(vals, inf)]


def normalize_arrays(vals, inf):
    """Normal form (w, flip): flip marks the 1/z chart; |w| <= 1 throughout."""
    vals = np.asarray(vals, dtype=complex)
    inf = np.broadcast_to(np.asarray(inf, dtype=bool), vals.shape)
    flip = inf | (np.abs(vals) > _FLIP_RADIUS)
    w = np.where(inf, 0j, vals)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = np.where(flip & ~inf, np.where(w == 0, 0j, 1.0 / np.where(w == 0, 1, w)), w)
    return w, flip


def denormalize_arrays(w, flip):
    """Back to (values, inf_mask); w == 0 in the flipped chart means infinity."""
    w = np.asarray(w, dtype=complex)
    flip = np.asarray(flip, dtype=bool)
    inf = flip & (w == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(flip & ~inf, 1.0 / np.where(w == 0, 1, w), w)
    vals = np.where(inf, 0j, vals)
    return vals, inf


def dist_nf(wx, fx, wy, fy):
    """Distance between points in normal form; stable for every chart mix."""
    same = fx == fy
    # same chart: sin d : cos d = |x - y| : |1 + conj(x) y| (flip is an isometry)
    num_same = np.abs(wx - wy)
    den_same = np.abs(1.0 + np.conj(wx) * wy)
    # opposite charts (y = 1/wy in x's chart), cleared of the 1/wy pole
    num_diff = np.abs(wx * wy - 1.0)
    den_diff = np.abs(np.conj(wx) + wy)
    num = np.where(same, num_same, num_diff)
    den = np.where(same, den_same, den_diff)
    return np.arctan2(num, den)


def dist_arrays(vx, ix, vy, iy):
    wx, fx = normalize_arrays(vx, ix)
    wy, fy = normalize_arrays(vy, iy)
    return dist_nf(wx, fx, wy, fy)


def dist_s(x, y):
    """Spherical distance in [0, pi/2]."""
    x = SpherePoint.of(x)
    y = SpherePoint.of(y)
    vx, ix = to_arrays([x])
    vy, iy = to_arrays([y])
    return float(dist_arrays(vx, ix, vy, iy)[0])


def embed3(vals, inf):
    """Embed in R^3 on the unit sphere; chordal norm = 2 sin(dist).

    In the flipped chart the represented point is 1/w, whose embedding
    negates the imaginary part and the height.
    """
    w, flip = normalize_arrays(vals, inf)
    d = 1.0 + np.abs(w) ** 2
    sign = np.where(flip, -1.0, 1.0)
    x = 2.0 * w.real / d
    y = sign * 2.0 * w.imag / d
    z = sign * (1.0 - np.abs(w) ** 2) / d
    return np.stack([x, y, z], axis=-1)


def chord_from_dist(delta):
    """Chordal radius in the R^3 embedding for a spherical radius."""
    return 2.0 * math.sin(min(max(delta, 0.0), HALF_PI))


def ball_area(delta):
    """Normalized area of a spherical ball: sin(delta)**2."""
    if not 0.0 <= delta <= HALF_PI + 1e-12:
        raise SphereError(f"ball radius {delta} outside [0, pi/2]")
    return math.sin(min(delta, HALF_PI)) ** 2


def pairwise_dist(vals, inf):
    w, flip = normalize_arrays(vals, inf)
    return dist_nf(w[:, None], flip[:, None], w[None, :], flip[None, :])


def diam_m(points, m, *, exact_limit=400):
    """m-diameter: best min-pairwise-distance over m-point subsets.

    Exact for m = 2 and for modest inputs; larger inputs are thinned to a
    maximal separated subset first, which perturbs the value by at most
    twice the thinning radius (the m-diameter is 2-Lipschitz in the
    Hausdorff metric).
    """
    if m < 2:
        raise SphereError("m-diameter needs m >= 2")
    vals, inf = points if isinstance(points, tuple) else to_arrays(points)
    vals = np.atleast_1d(np.asarray(vals, dtype=complex))
    inf = np.atleast_1d(np.asarray(inf, dtype=bool))
    n = len(vals)
    if n < m:
        return 0.0
    if m == 2:
        if n > 4000:
            vals, inf = _thin(vals, inf, 2000)
            n = len(vals)
        return float(np.max(pairwise_dist(vals, inf))) if n >= 2 else 0.0
    if n > exact_limit:
        vals, inf = _thin(vals, inf, exact_limit)
        n = len(vals)
    dmat = pairwise_dist(vals, inf)
    if m == 3:
        best = 0.0
        for a in range(n - 2):
            row = dmat[a]
            # min over the triple {a, b, c} vectorized over (b, c)
            tri = np.minimum(np.minimum(row[:, None], row[None, :]), dmat)
            sub = tri[a + 1:, a + 1:]
            if sub.size:
                best = max(best, float(np.max(np.triu(sub, k=1))))
        return best
    best = 0.0
    n_combos = math.comb(n, m)
    if n_combos > 2_000_000:
        raise SphereError(f"diam_m with m={m} over {n} points is too large; thin the input")
    for combo in itertools.combinations(range(n), m):
        idx = np.array(combo)
        sub = dmat[np.ix_(idx, idx)]
        val = float(np.min(sub[np.triu_indices(m, k=1)]))
        if val > best:
            best = val
    return best


def _thin(vals, inf, target):
    """Greedy down-sample to at most `target` points, preserving spread."""
    # bisect on the separation radius of a greedy sweep
    lo, hi = 0.0, HALF_PI
    keep = np.arange(len(vals))
    for _ in range(24):
        mid = 0.5 * (lo + hi)
        idx = _greedy_indices(vals, inf, mid)
        if len(idx) > target:
            lo = mid
        else:
            hi = mid
            keep = idx
    return vals[keep], inf[keep]


def _greedy_indices(vals, inf, delta):
    """Indices of the greedy delta-separated sweep, in input order."""
    if delta <= 0:
        return np.arange(len(vals))
    pts3 = embed3(vals, inf)
    tree = cKDTree(pts3)
    chord = chord_from_dist(delta)
    blocked = np.zeros(len(vals), dtype=bool)
    kept = []
    for i in range(len(vals)):
        if blocked[i]:
            continue
        kept.append(i)
        for j in tree.query_ball_point(pts3[i], chord * (1 - 1e-12)):
            blocked[j] = True
    return np.array(kept, dtype=int)


@dataclass
class SphereNet:
    """A separated net: ordered points with separation and covering radius."""

    values: np.ndarray
    inf: np.ndarray
    separation: float
    covering_radius: float
    _tree: cKDTree = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.values)

    @property
    def points(self):
        return from_arrays(self.values, self.inf)

    @property
    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(embed3(self.values, self.inf))
        return self._tree

    def nearest(self, vals, inf):
        """Indices of the nearest net point for each query point."""
        q = embed3(np.atleast_1d(np.asarray(vals, dtype=complex)),
                   np.atleast_1d(np.asarray(inf, dtype=bool)))
        _, idx = self.tree.query(q)
        return idx

    def nearest_point(self, p):
        p = SpherePoint.of(p)
        v, i = to_arrays([p])
        return int(self.nearest(v, i)[0])


def greedy_net(delta, candidates):
    """Greedy maximal delta-separated subnet of the candidate list.

    Deterministic: candidates are swept in order and kept when at least
    delta away from everything already kept.
    """
    if delta <= 0:
        raise SphereError("net separation must be positive")
    vals, inf = candidates if isinstance(candidates, tuple) else to_arrays(candidates)
    if len(vals) == 0:
        raise SphereError("empty candidate list")
    kept = _greedy_indices(vals, inf, delta)
    kvals, kinf = vals[kept], inf[kept]
    net = SphereNet(kvals, kinf, separation=delta, covering_radius=0.0)
    # covering radius relative to the candidate set
    idx = net.nearest(vals, inf)
    cover = dist_arrays(vals, inf, kvals[idx], kinf[idx])
    net.covering_radius = float(np.max(cover)) if len(cover) else 0.0
    return net


def sphere_lattice(n, include_infinity=True):
    """Deterministic quasi-uniform candidate lattice (golden-angle spiral).

    Returned as (values, inf_mask) arrays, ordered from the 0-end to the
    infinity-end of the sphere.
    """
    if n < 1:
        raise SphereError("lattice size must be positive")
    i = np.arange(n)
    height = 1.0 - 2.0 * (i + 0.5) / n
    colat = np.arccos(np.clip(height, -1.0, 1.0))
    r = np.tan(colat / 2.0)
    theta = i * _GOLDEN_ANGLE
    vals = r * np.exp(1j * theta)
    inf = np.zeros(n, dtype=bool)
    if include_infinity:
        vals = np.concatenate([vals, [0j]])
        inf = np.concatenate([inf, [True]])
    return vals, inf


def standard_net(size=10_000, *, oversample=8.0):
    """Quasi-uniform net with roughly `size` points (for grid functions)."""
    cand = sphere_lattice(int(size * oversample))
    # per-point area 1/size = sin(r)^2; the 1.5 factor calibrates the greedy
    # packing so the resulting net has roughly `size` points
    delta = 1.5 * math.asin(math.sqrt(1.0 / size))
    net = greedy_net(delta, cand)
    return net


def uniform_samples(n, rng):
    """n area-uniform random points as (values, inf_mask)."""
    u = rng.random(n)
    delta = np.arcsin(np.sqrt(u))
    r = np.tan(delta)
    theta = rng.random(n) * 2.0 * math.pi
    return r * np.exp(1j * theta), np.zeros(n, dtype=bool)


def ball_samples(center, delta, n, rng):
    """n points roughly uniform in the spherical ball around `center`."""
    c = SpherePoint.of(center)
    flip = c.is_infinity or abs(c.value) > 1.0
    z0 = c.chart_flip().value if flip else c.value
    u = rng.random(n)
    rad = np.arcsin(np.clip(np.sqrt(u) * math.sin(min(delta, HALF_PI)), 0.0, 1.0))
    theta = rng.random(n) * 2.0 * math.pi
    scale = 1.0 + abs(z0) ** 2
    offs = np.tan(rad) * scale * np.exp(1j * theta)
    # project the first-order offsets onto the metric sphere of radius `rad`
    zeros = np.zeros(n, dtype=bool)
    center = np.full(n, z0)
    for _ in range(4):
        pts = z0 + offs
        d = dist_arrays(pts, zeros, center, zeros)
        good = d > 1e-14
        ratio = np.ones(n)
        ratio[good] = rad[good] / d[good]
        offs = offs * ratio
    pts = z0 + offs
    if flip:
        inf = pts == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(inf, 0j, 1.0 / np.where(inf, 1.0, pts))
        return vals, inf
    return pts, np.zeros(n, dtype=bool)


def adaptive_sphere_integral(fn, *, budget=100_000, init_per_axis=12, batch=256):
    """Integrate fn over the sphere against the normalized area measure.

    `fn(w, flip)` must accept normal-form arrays and return real values.
    Adaptive polar quadrature, one quadtree per chart; splits are spent on
    the cells with the largest refinement discrepancy until the evaluation
    budget runs out.  Deterministic.
    """
    import heapq

    two_pi = 2.0 * math.pi

    def evaluate(cells):
        """Midpoint value times measure for an array of cells."""
        flip, r0, r1, th0, th1 = (np.asarray(a) for a in zip(*cells))
        rc = 0.5 * (r0 + r1)
        tc = 0.5 * (th0 + th1)
        w = rc * np.exp(1j * tc)
        vals = np.asarray(fn(w, flip.astype(bool)), dtype=float)
        measure = ((th1 - th0) / two_pi) * (
            r1 * r1 / (1 + r1 * r1) - r0 * r0 / (1 + r0 * r0))
        return vals * measure

    def children(cell):
        flip, r0, r1, th0, th1 = cell
        rm_, tm = 0.5 * (r0 + r1), 0.5 * (th0 + th1)
        return [
            (flip, r0, rm_, th0, tm), (flip, r0, rm_, tm, th1),
            (flip, rm_, r1, th0, tm), (flip, rm_, r1, tm, th1),
        ]

    cells = [
        (flip, i / init_per_axis, (i + 1) / init_per_axis,
         two_pi * j / init_per_axis, two_pi * (j + 1) / init_per_axis)
        for flip in (0, 1)
        for i in range(init_per_axis)
        for j in range(init_per_axis)
    ]
    spent = 0
    counter = 0
    heap = []
    total = 0.0

    def refine(parent_cells, parent_vals):
        """Split cells, batch-evaluate children, push them on the heap."""
        nonlocal spent, counter, total
        kid_cells = [c for cell in parent_cells for c in children(cell)]
        kid_vals = evaluate(kid_cells)
        spent += len(kid_cells)
        for idx, pval in enumerate(parent_vals):
            fine = float(np.sum(kid_vals[4 * idx: 4 * idx + 4]))
            total += fine - pval
            err = abs(fine - pval)
            for k in range(4):
                heapq.heappush(
                    heap, (-err / 4.0, counter, kid_cells[4 * idx + k],
                           float(kid_vals[4 * idx + k])))
                counter += 1

    root_vals = evaluate(cells)
    spent += len(cells)
    total = float(np.sum(root_vals))
    refine(cells, root_vals)
    while spent + 4 * batch <= budget and heap:
        popped = [heapq.heappop(heap) for _ in range(min(batch, len(heap)))]
        refine([p[2] for p in popped], [p[3] for p in popped])
    return total


@dataclass
class SpherePartition:
    """Partition into 'ball minus earlier balls' cells of radius 2^-(k+1)."""

    level: int
    centers: SphereNet

    @property
    def radius(self):
        return 2.0 ** (-(self.level + 1))

    @property
    def cells(self):
        return [(p, i) for i, p in enumerate(self.centers.points)]

    def cell_index(self, vals, inf):
        """First-center rule: lowest-index center strictly within the radius."""
        vals = np.atleast_1d(np.asarray(vals, dtype=complex))
        inf = np.atleast_1d(np.asarray(inf, dtype=bool))
        q = embed3(vals, inf)
        chord = chord_from_dist(self.radius)
        hits = self.centers.tree.query_ball_point(q, chord * (1 - 1e-12))
        out = np.empty(len(vals), dtype=int)
        for i, h in enumerate(hits):
            if not h:
                raise CoverageError(
                    f"point outside every level-{self.level} cell; "
                    "increase the candidate resolution")
            out[i] = min(h)
        return out

    def local_count(self, center, delta, *, samples=600, rng=None):
        """Number of distinct cells met by a ball, by brute-force sampling."""
        rng = rng or np.random.default_rng(0)
        vals, inf = ball_samples(center, delta, samples, rng)
        cvals, cinf = to_arrays([SpherePoint.of(center)])
        vals = np.concatenate([vals, cvals])
        inf = np.concatenate([inf, cinf])
        return len(np.unique(self.cell_index(vals, inf)))


def partition_count_bound(level, delta):
    """ln of the admissible local cell count for a ball of radius delta."""
    return 6.0 * math.log(2.0) + 2.0 * max(0.0, math.log(delta / 2.0 ** (-(level - 1))))


def partition_Ak(k, *, candidate_factor=64.0, max_candidates=1_500_000):
    """Level-k partition from a maximal 2^-(k+1)-separated net.

    Cells have diameter at most 2^-k by the first-center rule; the local
    cell count obeys partition_count_bound.
    """
    if k < 0:
        raise SphereError("partition level must be nonnegative")
    delta = 2.0 ** (-(k + 1))
    n_cand = int(candidate_factor * 4.0 ** (k + 1)) + 64
    if n_cand > max_candidates:
        raise SphereError(f"resolution insufficient for partition level {k}")
    cand = sphere_lattice(n_cand)
    net = greedy_net(delta, cand)
    return SpherePartition(level=k, centers=net)
