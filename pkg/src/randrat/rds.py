"""Random skew-product driver.

A base system draws a two-sided sequence of (map, potential) pairs; each
index is addressable without materializing the sequence, so windows of the
form [m, n) with m < 0 behave like any other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ratmap import RationalMap
from .sphere import (
    SpherePoint,
    ball_samples,
    denormalize_arrays,
    dist_arrays,
    normalize_arrays,
    to_arrays,
)

WEIGHT_TOL = 1e-12


class SystemError_(ValueError):
    """Invalid base-system specification."""


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

class Potential:
    """Potential function on the sphere; subclasses implement value_nf."""

    holder_alpha = 1.0

    def value_nf(self, w, flip):
        raise NotImplementedError

    def value_at(self, p):
        w, flip = normalize_arrays(*to_arrays([SpherePoint.of(p)]))
        return float(self.value_nf(w, flip)[0])

    def holder_bound(self, *, samples=2000, seed=0):
        """Estimated local Hoelder seminorm sup |phi(x)-phi(y)| / d(x,y)^alpha."""
        from .sphere import uniform_samples

        rng = np.random.default_rng(seed)
        xv, xi = uniform_samples(samples, rng)
        yv, yi = uniform_samples(samples, rng)
        d = dist_arrays(xv, xi, yv, yi)
        wx, fx = normalize_arrays(xv, xi)
        wy, fy = normalize_arrays(yv, yi)
        diff = np.abs(self.value_nf(wx, fx) - self.value_nf(wy, fy))
        ok = d > 1e-9
        return float(np.max(diff[ok] / d[ok] ** self.holder_alpha, initial=0.0))

    def describe(self):
        raise NotImplementedError


class ConstantPotential(Potential):
    def __init__(self, c):
        self.c = float(c)

    def value_nf(self, w, flip):
        return np.full(np.shape(w), self.c)

    def holder_bound(self, **_):
        return 0.0

    def describe(self):
        return f"constant {self.c!r}"

    def __repr__(self):
        return f"ConstantPotential({self.c})"


class LogModulusPotential(Potential):
    """c * ln((1+|z|^2)/(1+|T z|^2)); may diverge to -inf at poles of T."""

    def __init__(self, c, map_):
        self.c = float(c)
        self.map = map_

    def value_nf(self, w, flip):
        w = np.asarray(w, dtype=complex)
        flip = np.asarray(flip, dtype=bool)
        vals, inf = denormalize_arrays(w, flip)
        ow, oflip = self.map.eval_nf(w, flip)
        out_vals, out_inf = denormalize_arrays(ow, oflip)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            num = np.where(inf, np.inf, 1.0 + np.abs(np.where(inf, 0, vals)) ** 2)
            den = np.where(out_inf, np.inf, 1.0 + np.abs(np.where(out_inf, 0, out_vals)) ** 2)
            ratio = np.where(np.isinf(num) & np.isinf(den), 1.0, num / den)
            return self.c * np.log(ratio)

    def describe(self):
        return f"logmod {self.c!r}"


class TabulatedPotential(Potential):
    """Grid-sampled potential with the nearest-center interpolation rule."""

    def __init__(self, net, values, holder_alpha=1.0):
        self.net = net
        self.values = np.asarray(values, dtype=float)
        if len(self.values) != len(net):
            raise SystemError_("one value per net point required")
        self.holder_alpha = holder_alpha

    @classmethod
    def from_function(cls, fn, net, scale=1.0, holder_alpha=1.0):
        w, flip = normalize_arrays(net.values, net.inf)
        return cls(net, scale * np.asarray(fn(w, flip), dtype=float), holder_alpha)

    def value_nf(self, w, flip):
        vals, inf = denormalize_arrays(np.asarray(w, complex), np.asarray(flip, bool))
        idx = self.net.nearest(np.atleast_1d(vals), np.atleast_1d(inf))
        out = self.values[idx]
        return out.reshape(np.shape(w))

    def describe(self):
        return f"tabulated n={len(self.values)}"


def coordinate_bump(axis=0):
    """Smooth sphere coordinate (unit-norm R^3 embedding component)."""
    from .sphere import embed3

    def fn(w, flip):
        vals, inf = denormalize_arrays(w, flip)
        e = embed3(vals, inf)
        return e[..., axis]

    return fn


# ---------------------------------------------------------------------------
# base systems
# ---------------------------------------------------------------------------

def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def index_uniform(seed, index, stream=0):
    """Deterministic uniform in [0,1) addressable by (seed, index, stream)."""
    h = _splitmix64((seed & 0xFFFFFFFFFFFFFFFF) ^ _splitmix64((index & 0xFFFFFFFFFFFFFFFF) ^ (stream << 32)))
    return h / 2.0 ** 64


@dataclass
class BaseSystem:
    """Seedable generator of two-sided (map, potential) sequences."""

    support: list  # of (RationalMap, Potential, weight)
    seed: int = 0
    mode: str = "iid"
    origin: int = 0  # index translation: entry_at(j) reads position j + origin

    def __post_init__(self):
        if not self.support:
            raise SystemError_("empty support")
        if self.mode not in ("iid", "explicit"):
            raise SystemError_(f"unknown mode {self.mode!r}")
        self.weights = np.array([float(w) for _, _, w in self.support])
        if self.mode == "iid":
            if np.any(self.weights <= 0):
                raise SystemError_("weights must be positive")
            if abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
                raise SystemError_("weights must sum to 1")
            self._cum = np.cumsum(self.weights)

    def index_at(self, j, stream=0):
        """Support index drawn at sequence position j (any integer)."""
        j = j + self.origin
        if self.mode == "explicit":
            return j % len(self.support)
        u = index_uniform(self.seed, j, stream)
        return int(np.searchsorted(self._cum, u, side="right").clip(0, len(self.support) - 1))

    def entry_at(self, j, stream=0):
        t, phi, _ = self.support[self.index_at(j, stream)]
        return t, phi

    def sample_sequence(self, m, n, stream=0):
        """The window [m, n) of the two-sided sequence, deterministically."""
        if m > n:
            raise SystemError_("window must satisfy m <= n")
        return [self.entry_at(j, stream) for j in range(m, n)]

    def reseeded(self, seed):
        return BaseSystem(self.support, seed=seed, mode=self.mode, origin=self.origin)

    def shifted(self, k):
        """The system as seen from universe k (indices translated by k)."""
        return BaseSystem(self.support, seed=self.seed, mode=self.mode,
                          origin=self.origin + k)

    def mean_log_degree(self):
        if self.mode == "explicit":
            return float(np.mean([math.log(t.degree) for t, _, _ in self.support]))
        return float(np.sum(self.weights * np.array([math.log(t.degree) for t, _, _ in self.support])))


def explicit_system(maps_and_potentials):
    """A deterministic cyclic sequence (weights ignored)."""
    support = [(t, phi, 1.0) for t, phi in maps_and_potentials]
    return BaseSystem(support, seed=0, mode="explicit")


def constant_system(map_, potential=None):
    return explicit_system([(map_, potential or ConstantPotential(0.0))])


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    start: SpherePoint
    points: list
    derivatives: list  # cumulative spherical derivative products


def pseudo_iterate(seq, n, x):
    """Orbit of length n+1 under T_{n-1} o ... o T_0 with derivative products."""
    x = SpherePoint.of(x)
    pts = [x]
    derivs = [1.0]
    cur = x
    acc = 1.0
    for j in range(n):
        t = seq[j][0] if isinstance(seq[j], tuple) else seq[j]
        acc *= t.sph_deriv(cur)
        cur = t.eval(cur)
        pts.append(cur)
        derivs.append(acc)
    return Trajectory(start=x, points=pts, derivatives=derivs)


def orbit_nf(seq, n, w, flip):
    """Vectorized orbits: lists of (w, flip) and cumulative derivative arrays."""
    w = np.asarray(w, dtype=complex)
    flip = np.asarray(flip, dtype=bool)
    ws = [w]
    fls = [flip]
    der = [np.ones(w.shape)]
    acc = np.ones(w.shape)
    for j in range(n):
        t = seq[j][0] if isinstance(seq[j], tuple) else seq[j]
        acc = acc * t.sph_deriv_nf(ws[-1], fls[-1])
        nw, nf = t.eval_nf(ws[-1], fls[-1])
        ws.append(nw)
        fls.append(nf)
        der.append(acc.copy())
    return ws, fls, der


def birkhoff_sum(seq, n, x):
    """Sum of potentials along the orbit: phi_0^n(x)."""
    x = SpherePoint.of(x)
    w, flip = normalize_arrays(*to_arrays([x]))
    total = 0.0
    for j in range(n):
        t, phi = seq[j]
        total += float(phi.value_nf(w, flip)[0])
        w, flip = t.eval_nf(w, flip)
    return total


def birkhoff_sum_nf(seq, n, w, flip):
    w = np.asarray(w, dtype=complex)
    flip = np.asarray(flip, dtype=bool)
    total = np.zeros(w.shape)
    for j in range(n):
        t, phi = seq[j]
        total = total + phi.value_nf(w, flip)
        w, flip = t.eval_nf(w, flip)
    return total


def julia_flag(seq, x, delta, big, n_max, *, ring=12, seed=0):
    """Derivative-growth Julia test on a sampled closed ball.

    True iff the sampled sup over B(x, delta) of the cumulative spherical
    derivative reaches `big` for some n <= n_max.
    """
    if delta <= 0 or big <= 1 or n_max < 1:
        raise SystemError_("need delta > 0, big > 1, n_max >= 1")
    rng = np.random.default_rng(seed)
    bv, bi = ball_samples(x, delta, ring, rng)
    xv, xi = to_arrays([SpherePoint.of(x)])
    vals = np.concatenate([bv, xv])
    inf = np.concatenate([bi, xi])
    w, flip = normalize_arrays(vals, inf)
    maps = [s[0] if isinstance(s, tuple) else s for s in seq]
    acc = np.ones(len(vals))
    for j in range(n_max):
        acc = acc * maps[j].sph_deriv_nf(w, flip)
        if np.max(acc) >= big:
            return True
        w, flip = maps[j].eval_nf(w, flip)
    return False


def julia_statistic_nf(seq, n_max, w, flip, *, cap=1e12):
    """Peak cumulative derivative per starting point (capped), vectorized."""
    maps = [s[0] if isinstance(s, tuple) else s for s in seq]
    acc = np.ones(w.shape)
    peak = np.ones(w.shape)
    cw, cf = w, flip
    for j in range(min(n_max, len(maps))):
        acc = np.minimum(acc * maps[j].sph_deriv_nf(cw, cf), cap)
        peak = np.maximum(peak, acc)
        cw, cf = maps[j].eval_nf(cw, cf)
    return peak


def exceptional_estimate(seq, n):
    """Forward-tracked estimate of the exceptional set at horizon n.

    Keeps the candidates x whose first n iterates are all totally ramified;
    at most 2 points for non-quasilinear sequences.
    """
    if n < 1:
        raise SystemError_("horizon must be >= 1")
    maps = [s[0] if isinstance(s, tuple) else s for s in seq]
    if maps[0].degree < 2:
        return []
    out = []
    for x in maps[0].totally_ramified():
        cur = x
        good = True
        for j in range(n):
            t = maps[j]
            if t.degree < 2 or not t.is_totally_ramified_at(cur):
                good = False
                break
            cur = t.eval(cur)
        if good:
            out.append(x)
    return out


# ---------------------------------------------------------------------------
# the sudden-jump sampler
# ---------------------------------------------------------------------------

class GrowthFamily:
    """Family f_n: N^n -> N, monotone in n and in each argument."""

    def value(self, n, ks):
        """ks is a sequence of length n (lazy constant sequences allowed)."""
        raise NotImplementedError


class ZeroGrowth(GrowthFamily):
    def value(self, n, ks):
        return 0


class AffineGrowth(GrowthFamily):
    """f_n(ks) = a*n + b*max(ks) + c."""

    def __init__(self, a=1, b=2, c=1):
        self.a, self.b, self.c = int(a), int(b), int(c)

    def value(self, n, ks):
        return self.a * n + self.b * _const_max(ks) + self.c


class _ConstSeq:
    """Lazy constant sequence; lets f_n read arbitrarily long tuples cheaply."""

    __slots__ = ("v", "n")

    def __init__(self, v, n):
        self.v, self.n = v, n

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self.v] * len(range(*i.indices(self.n)))
        if not -self.n <= i < self.n:
            raise IndexError(i)
        return self.v

    def __iter__(self):
        import itertools

        return itertools.repeat(self.v, self.n)


def _const_max(seq):
    if isinstance(seq, _ConstSeq):
        return seq.v if seq.n else 0
    return max(seq) if len(seq) else 0


class SuddenSampler:
    """Pushforward of the geometric law through the jump-height recursion.

    For families monotone in n and in each argument, the max over admissible
    index tuples below level l is attained at the constant tuple filled with
    the previous height, and the max over n <= 3^l at n = 3^l; each level
    therefore needs a single family evaluation.
    """

    def __init__(self, family, *, level_max=16):
        self.family = family
        self.level_max = int(level_max)
        ks = []
        for level in range(self.level_max + 1):
            if level == 0:
                # no admissible index tuples yet: only the nullary term
                val = int(family.value(0, _ConstSeq(0, 0)))
            else:
                prev = ks[-1]
                n_eval = 3 ** level
                val = int(family.value(n_eval, _ConstSeq(prev, n_eval)))
                val = max(val, prev)  # monotone families cannot shrink
            if val > 2 ** 62:
                raise OverflowError("jump heights exceeded the representable range")
            ks.append(val)
        self.k_values = ks
        w = np.array([2.0 ** -(l + 1) for l in range(self.level_max + 1)])
        w[-1] += 2.0 ** -(self.level_max + 1)  # collapse the tail onto l_max
        self.level_weights = w

    def distribution(self):
        """Aggregated (value, probability) pairs of the pushforward."""
        agg = {}
        for k, p in zip(self.k_values, self.level_weights):
            agg[k] = agg.get(k, 0.0) + p
        return sorted(agg.items())

    def sample(self, size, seed=0):
        rng = np.random.default_rng(seed)
        levels = rng.choice(len(self.level_weights), size=size, p=self.level_weights)
        return np.array([self.k_values[l] for l in levels], dtype=np.int64)


def sudden_sampler(family, *, level_max=16):
    return SuddenSampler(family, level_max=level_max)
