"""Perron-Frobenius operator numerics on a fixed spherical net.

Grid functions use the nearest-center interpolation rule, which preserves
positivity and the sup/inf bounds the oscillation arguments rely on.  The
random eigenfunction g, the eigenvalue cocycle, the conformal measure and
the equilibrium measure are produced at finite horizons supplied by the
caller; no extrapolation is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rds
from .ratmap import RationalMap
from .sphere import (
    SpherePoint,
    denormalize_arrays,
    dist_nf,
    embed3,
    normalize_arrays,
    to_arrays,
)

TREE_LEAF_CAP = 1_000_000
TREE_RESAMPLE_TO = 100_000


class TransferError(RuntimeError):
    """Transfer-operator computation failed."""


class GridFunction:
    """Real- or complex-valued samples on a fixed net, nearest interpolation."""

    def __init__(self, net, values):
        self.net = net
        self.values = np.asarray(values)
        if self.values.shape != (len(net),):
            raise TransferError("one value per net point required")

    @classmethod
    def constant(cls, net, c=1.0):
        return cls(net, np.full(len(net), c, dtype=float))

    @classmethod
    def from_function(cls, net, fn):
        w, flip = normalize_arrays(net.values, net.inf)
        return cls(net, np.asarray(fn(w, flip)))

    def value_nf(self, w, flip):
        vals, inf = denormalize_arrays(np.asarray(w, complex), np.asarray(flip, bool))
        idx = self.net.nearest(np.atleast_1d(vals.ravel()), np.atleast_1d(inf.ravel()))
        return self.values[idx].reshape(np.shape(w))

    def value_at(self, p):
        w, flip = normalize_arrays(*to_arrays([SpherePoint.of(p)]))
        return self.value_nf(w, flip)[0]

    @property
    def is_positive(self):
        return bool(np.min(self.values.real) > 0) and not np.iscomplexobj(self.values)

    def oscillation(self, mask=None):
        v = self.values if mask is None else self.values[mask]
        return float(np.max(v.real) - np.min(v.real))

    def _binop(self, other, op):
        if isinstance(other, GridFunction):
            if other.net is not self.net:
                raise TransferError("grid functions live on different nets")
            return GridFunction(self.net, op(self.values, other.values))
        return GridFunction(self.net, op(self.values, other))

    def __add__(self, other):
        return self._binop(other, np.add)

    def __sub__(self, other):
        return self._binop(other, np.subtract)

    def __mul__(self, other):
        return self._binop(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, np.divide)

    def log(self):
        return GridFunction(self.net, np.log(self.values.real))

    def sup(self):
        return float(np.max(self.values.real))

    def inf(self):
        return float(np.min(self.values.real))


@dataclass
class PointMassMeasure:
    """Finite atomic measure: parallel point arrays plus weights."""

    values: np.ndarray
    inf: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.inf = np.asarray(self.inf, dtype=bool)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < 0):
            raise TransferError("weights must be nonnegative")

    @property
    def total(self):
        return float(np.sum(self.weights))

    @property
    def is_probability(self):
        return abs(self.total - 1.0) <= 1e-12

    def normalized(self):
        t = self.total
        if t <= 0:
            raise TransferError("cannot normalize a null measure")
        return PointMassMeasure(self.values, self.inf, self.weights / t)

    def integrate_nf(self, fn):
        w, flip = normalize_arrays(self.values, self.inf)
        return float(np.real(np.sum(np.asarray(fn(w, flip)) * self.weights)))

    def integrate(self, g):
        """Integral of a GridFunction or Potential-like object."""
        return self.integrate_nf(g.value_nf)

    def moment(self, k):
        """Complex moment sum(w_i z_i^k); infinite atoms contribute nothing
        meaningful and are excluded (they carry |z| = inf)."""
        finite = ~self.inf
        return complex(np.sum(self.weights[finite] * self.values[finite] ** k))

    def pushforward(self, t):
        w, flip = normalize_arrays(self.values, self.inf)
        ow, oflip = t.eval_nf(w, flip)
        vals, inf = denormalize_arrays(ow, oflip)
        return PointMassMeasure(vals, inf, self.weights.copy())


@dataclass
class Cocycle:
    """Per-step positive eigenvalue factors."""

    values: list

    def __post_init__(self):
        if any(v <= 0 for v in self.values):
            raise TransferError("cocycle entries must be positive")

    def log_sum(self, n=None):
        vals = self.values if n is None else self.values[:n]
        return float(sum(math.log(v) for v in vals))

    def product(self, n=None):
        return math.exp(self.log_sum(n))


# ---------------------------------------------------------------------------
# the operator
# ---------------------------------------------------------------------------

def apply_L(t, phi, f, *, out_net=None, max_fail_fraction=1e-3):
    """One Perron-Frobenius step: (L f)(p) = sum over preimages of e^phi f.

    Root residuals beyond tolerance are collected; the operation aborts when
    more than a fraction of the net is affected.
    """
    net = out_net or f.net
    w, flip = normalize_arrays(net.values, net.inf)
    rw, rf = t.preimage_fan(w, flip)
    # residual audit: T(root) should land back on the net point
    ow, oflip = t.eval_nf(rw.ravel(), rf.ravel())
    res = dist_nf(ow, oflip, np.repeat(w, t.degree), np.repeat(flip, t.degree))
    bad = res.reshape(rw.shape).max(axis=1) > 1e-6
    if np.count_nonzero(bad) > max_fail_fraction * len(w):
        raise TransferError(
            f"root solve failed at {np.count_nonzero(bad)} of {len(w)} net points")
    weights = np.exp(phi.value_nf(rw, rf))
    vals = f.value_nf(rw, rf)
    return GridFunction(net, np.sum(weights * vals, axis=1))


def apply_L_iter(seq, n, f, *, out_net=None):
    """n-fold composition L_0^n along the sequence window [0, n)."""
    if n < 1:
        raise TransferError("iterated operator needs n >= 1")
    g = f
    for j in range(n):
        t, phi = seq[j]
        g = apply_L(t, phi, g, out_net=out_net)
    return g


def tree_apply_L(seq, n, f, points_w, points_f):
    """L_0^n[f] at arbitrary points by direct depth-n preimage-tree descent.

    Independent of the grid composition path (up to interpolation of f and
    the potentials); used as the consistency oracle for apply_L_iter.
    """
    tree = preimage_tree(seq, n, points_w, points_f)
    leaf_vals = f.value_nf(tree.orbit_w[0], tree.orbit_f[0])
    acc = np.exp(tree.leaf_logphi) * leaf_vals
    out = np.zeros(len(np.atleast_1d(points_w)))
    np.add.at(out, tree.anchor_idx, acc)
    return out


# ---------------------------------------------------------------------------
# preimage trees
# ---------------------------------------------------------------------------

@dataclass
class PreimageTree:
    """Depth-n preimage tree of anchor points under a map window [0, n).

    Each leaf carries its full forward chain: orbit_w[j] are the j-th
    forward iterates of the leaves (row 0 = the leaves themselves, row n =
    their anchors), and leaf_logphi the Birkhoff sums phi_0^n.
    """

    orbit_w: np.ndarray  # (n + 1, leaves)
    orbit_f: np.ndarray
    anchor_idx: np.ndarray
    leaf_logphi: np.ndarray
    resampled: bool = False
    log_leaf_scale: float = 0.0  # per-leaf log weight adjustment after resampling
    sibling_gaps: list = None  # per level, min distance between distinct children

    @property
    def n_leaves(self):
        return self.orbit_w.shape[1]

    def leaves(self):
        return self.orbit_w[0], self.orbit_f[0]

    def min_sibling_gap(self, up_to_level=None):
        gaps = self.sibling_gaps if up_to_level is None else self.sibling_gaps[:up_to_level]
        return min(gaps) if gaps else math.inf


def preimage_tree(seq, n, anchors_w, anchors_f, *, leaf_cap=TREE_LEAF_CAP,
                  resample_to=TREE_RESAMPLE_TO, seed=0):
    """Expand the depth-n preimage tree of the anchors under seq[0..n).

    When the leaf count would exceed `leaf_cap`, weight-proportional
    systematic resampling (deterministic in `seed`) keeps `resample_to`
    representatives; their common log-weight adjustment is recorded on the
    tree.
    """
    anchors_w = np.atleast_1d(np.asarray(anchors_w, dtype=complex))
    anchors_f = np.atleast_1d(np.asarray(anchors_f, dtype=bool))
    orbit_w = anchors_w[None, :].copy()
    orbit_f = anchors_f[None, :].copy()
    anchor_idx = np.arange(len(anchors_w))
    logphi = np.zeros(len(anchors_w))
    resampled = False
    log_scale = 0.0
    gaps = [math.inf] * n
    for j in range(n - 1, -1, -1):
        t, phi = seq[j]
        if orbit_w.shape[1] * t.degree > leaf_cap:
            keep, represented = _systematic_resample(logphi, resample_to, seed + j)
            orbit_w = orbit_w[:, keep]
            orbit_f = orbit_f[:, keep]
            anchor_idx = anchor_idx[keep]
            # each survivor now stands for an equal share of the total mass;
            # from here on leaf_logphi is a log-weight, not a Birkhoff sum
            logphi = np.full(len(keep), represented)
            log_scale += represented
            resampled = True
        cur_w, cur_f = orbit_w[0], orbit_f[0]
        d = t.degree
        rw, rf = t.preimage_fan(cur_w, cur_f)
        if d >= 2:
            gap = math.inf
            for a in range(d):
                for b in range(a + 1, d):
                    gap = min(gap, float(np.min(dist_nf(rw[:, a], rf[:, a],
                                                        rw[:, b], rf[:, b]))))
            gaps[j] = gap
        parent = np.repeat(np.arange(len(cur_w)), d)
        new_w = rw.reshape(-1)
        new_f = rf.reshape(-1)
        orbit_w = np.vstack([new_w[None, :], orbit_w[:, parent]])
        orbit_f = np.vstack([new_f[None, :], orbit_f[:, parent]])
        anchor_idx = anchor_idx[parent]
        logphi = logphi[parent] + phi.value_nf(new_w, new_f)
    return PreimageTree(orbit_w, orbit_f, anchor_idx, logphi, resampled, log_scale, gaps)


def _systematic_resample(logweights, k, seed):
    """Deterministic weight-proportional systematic resampling.

    Returns kept indices and the per-survivor log-weight (an equal share of
    the represented total mass).
    """
    lw = np.asarray(logweights, dtype=float)
    w = np.exp(lw - lw.max())
    total = w.sum()
    u = rds.index_uniform(seed, 0x5E5A, 7)
    positions = (np.arange(k) + u) * (total / k)
    cum = np.cumsum(w)
    idx = np.searchsorted(cum, positions, side="right").clip(0, len(w) - 1)
    return idx, math.log(total / k) + lw.max()


# ---------------------------------------------------------------------------
# eigenfunction, cocycle, measures
# ---------------------------------------------------------------------------

def julia_anchor(seq, net, *, n_max=24, cap=1e12):
    """Deterministic anchor: the net point with the largest derivative-growth
    statistic (ties to the lowest index)."""
    w, flip = normalize_arrays(net.values, net.inf)
    stat = rds.julia_statistic_nf(seq, n_max, w, flip, cap=cap)
    return int(np.argmax(stat))


def backward_density(sys_or_seq, n, p0, net, *, base=0, history=False):
    """g approximated at horizon n: L_{-n}^0[1] normalized to 1 at p0.

    p0 is a net index or a SpherePoint snapped to the net.  With history=True
    also returns the sup-log Cauchy increments between successive horizons.
    """
    if isinstance(sys_or_seq, rds.BaseSystem):
        seq = sys_or_seq.sample_sequence(base - n, base)
    else:
        seq = list(sys_or_seq)
        if len(seq) != n:
            raise TransferError("sequence window must have length n")
    idx0 = p0 if isinstance(p0, (int, np.integer)) else net.nearest_point(p0)
    g = GridFunction.constant(net, 1.0)
    increments = []
    prev = None
    for j in range(n - 1, -1, -1):
        t, phi = seq[j]
        g = apply_L(t, phi, g)
        g = g * (1.0 / g.values[idx0])
        if not np.all(g.values > 0):
            raise TransferError("backward density lost positivity")
        if history:
            cur = np.log(g.values)
            if prev is not None:
                increments.append(float(np.max(np.abs(cur - prev))))
            prev = cur
    if history:
        return g, increments
    return g


def lambda_cocycle(sys, n, net, *, g_horizon=8, anchors=None, gs=None):
    """Per-step eigenvalue factors lambda_j = (L_j g_j)(p_{j+1}).

    Densities are computed at the common horizon g_horizon when not given.
    Returns (cocycle, gs, anchors, eigen_residual) where the residual is
    sup |L_0^n g_0 - prod(lambda) g_n| / prod(lambda).
    """
    seq = sys.sample_sequence(0, n)
    if anchors is None:
        anchors = [julia_anchor(sys.sample_sequence(j, j + 16), net) for j in range(n + 1)]
    if gs is None:
        gs = [backward_density(sys, g_horizon, anchors[j], net, base=j) for j in range(n + 1)]
    lam = []
    for j in range(n):
        t, phi = seq[j]
        lg = apply_L(t, phi, gs[j])
        lam.append(float(lg.values[anchors[j + 1]]))
    coc = Cocycle(lam)
    lhs = apply_L_iter(seq, n, gs[0])
    rhs = coc.product() * gs[n].values
    residual = float(np.max(np.abs(lhs.values - rhs)) / coc.product())
    return coc, gs, anchors, residual


def conformal_measure(sys, n, net, g, anchor, *, leaf_cap=TREE_LEAF_CAP,
                      resample_to=TREE_RESAMPLE_TO, seed=0):
    """Backward-transported conformal measure at horizon n.

    A unit point mass at the anchor (a universe-n net index or point) is
    pulled through the depth-n preimage tree with Birkhoff weights and
    normalized so that the g-integral is exactly 1.
    """
    seq = sys.sample_sequence(0, n)
    if isinstance(anchor, (int, np.integer)):
        aw, af = normalize_arrays(net.values[anchor: anchor + 1],
                                  net.inf[anchor: anchor + 1])
    else:
        aw, af = normalize_arrays(*to_arrays([SpherePoint.of(anchor)]))
    tree = preimage_tree(seq, n, aw, af, leaf_cap=leaf_cap,
                         resample_to=resample_to, seed=seed)
    lw = tree.leaf_logphi
    weights = np.exp(lw - lw.max())
    vals, inf = denormalize_arrays(*tree.leaves())
    nu = PointMassMeasure(vals, inf, weights)
    mass_g = nu.integrate(g)
    if mass_g <= 0:
        raise TransferError("degenerate conformal normalization")
    return PointMassMeasure(vals, inf, weights / mass_g)


def equilibrium_measure(g, nu):
    """mu = g * nu, renormalized to total mass exactly 1.

    The last rounding defect is absorbed into the largest atom so the
    weights sum to 1.0 bit-exactly.
    """
    w, flip = normalize_arrays(nu.values, nu.inf)
    gv = g.value_nf(w, flip)
    weights = nu.weights * gv
    mu = PointMassMeasure(nu.values, nu.inf, weights).normalized()
    weights = mu.weights
    top = int(np.argmax(weights))
    for _ in range(5):
        s = float(np.sum(weights))
        if s == 1.0:
            break
        weights[top] += 1.0 - s
    return PointMassMeasure(mu.values, mu.inf, weights)


def lipschitz_battery():
    """Fixed bounded-Lipschitz test functions for weak-* comparisons."""
    def coord(axis):
        def fn(w, flip):
            vals, inf = denormalize_arrays(w, flip)
            return embed3(vals, inf)[..., axis]
        return fn

    def product(a, b):
        fa, fb = coord(a), coord(b)
        return lambda w, flip: fa(w, flip) * fb(w, flip)

    battery = [lambda w, flip: np.ones(np.shape(w))]
    battery += [coord(a) for a in range(3)]
    battery += [product(0, 1), product(0, 2), product(1, 2)]
    return battery


def bl_discrepancy(mu_a, mu_b, battery=None):
    """Sup over the battery of |int f dmu_a - int f dmu_b|."""
    battery = battery or lipschitz_battery()
    return max(abs(mu_a.integrate_nf(f) - mu_b.integrate_nf(f)) for f in battery)


def pushforward_check(sys, mu0, n, net, gs, *, tree_depth=10, seed=0):
    """Transport mu_0 by T_0^n and compare with the independently built mu_n.

    Returns the bounded-Lipschitz discrepancy over the fixed battery.
    """
    seq = sys.sample_sequence(0, n)
    pushed = mu0
    for j in range(n):
        pushed = pushed.pushforward(seq[j][0])
    shifted = sys.shifted(n)
    anchor_n = anchors_from(shifted, 0, net)
    nu_n = conformal_measure(shifted, tree_depth, net, gs[n], anchor_n, seed=seed)
    mu_n = equilibrium_measure(gs[n], nu_n)
    return bl_discrepancy(pushed, mu_n)


def anchors_from(sys, j, net, horizon=16):
    """Universe-j anchor as a net index."""
    return julia_anchor(sys.sample_sequence(j, j + horizon), net)


def normalized_operator(seq, gs, lam, f, *, n=None):
    """The normalized operator: L'_0^n[f] = L_0^n[f g_0] / (prod lambda * g_n)."""
    n = n if n is not None else len(seq)
    num = apply_L_iter(seq, n, f * gs[0])
    return num * (1.0 / (lam.product(n) * gs[n].values))


def psi_weights(t, phi, g_cur, g_next, lam_step, p):
    """Normalized branch weights e^psi at the preimages of p (one step).

    Weights sum to L'[1](p), which deviates from 1 by the eigen-identity
    residual.
    """
    w, flip = normalize_arrays(*to_arrays([SpherePoint.of(p)]))
    rw, rf = t.preimage_fan(w, flip)
    log_num = phi.value_nf(rw, rf)[0] + np.log(g_cur.value_nf(rw, rf)[0])
    log_den = math.log(lam_step) + math.log(g_next.value_nf(w, flip)[0])
    return np.exp(log_num - log_den)


def duality_gap(seq, gs, lam, n, mu0, mun, battery=None):
    """Sup over the battery of |<L'f, mu_n> - <f, mu_0>|."""
    battery = battery or lipschitz_battery()
    gaps = []
    net = gs[0].net
    for fn in battery:
        f = GridFunction.from_function(net, fn)
        lhat = normalized_operator(seq, gs, lam, f, n=n)
        gaps.append(abs(mun.integrate(lhat) - mu0.integrate(f)))
    return max(gaps)
