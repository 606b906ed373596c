"""Pressure estimation via separated sets.

The double limit in the pressure definition is reported as an (n, epsilon)
table, never extrapolated.  Candidate points for the pressure runs come
from depth-n preimage fans of the derivative-growth anchor: those fans
realize the deg^n orbit complexity the finite-horizon estimator needs,
while net-based candidate sets saturate at the net resolution and bias the
estimate in map-independent ways.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rds, transfer
from .sphere import denormalize_arrays, dist_nf, normalize_arrays

FAN_LEAF_CAP = 60_000
WITNESS_DENSE_LIMIT = 2048


class ThermoError(ValueError):
    """Invalid pressure-estimation input."""


@dataclass
class SeparatedSet:
    """Points pairwise (n, eps)-separated along the sequence.

    Orbits of the kept points are stored; the separating-time witness of a
    pair is the argmax of the orbit distance and is materialized as a dense
    matrix only for small sets.
    """

    values: np.ndarray
    inf: np.ndarray
    n: int
    eps: float
    orbit_w: np.ndarray  # (n, k)
    orbit_f: np.ndarray
    kept_indices: np.ndarray = None  # positions in the candidate sweep
    _witness: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.values)

    def pair_distances(self, i, j):
        return dist_nf(self.orbit_w[:, i], self.orbit_f[:, i],
                       self.orbit_w[:, j], self.orbit_f[:, j])

    def witness_time(self, i, j):
        """A time j < n at which the pair is more than eps apart."""
        d = self.pair_distances(i, j)
        t = int(np.argmax(d))
        return t if d[t] > self.eps else -1

    @property
    def witness(self):
        if self._witness is None:
            k = len(self)
            if k > WITNESS_DENSE_LIMIT:
                raise ThermoError(
                    f"dense witness matrix over {k} points; use witness_time")
            wit = np.full((k, k), -1, dtype=np.int16)
            for i in range(k):
                for j in range(i + 1, k):
                    wit[i, j] = wit[j, i] = self.witness_time(i, j)
            self._witness = wit
        return self._witness

    def verify(self):
        """Exhaustive pair scan: every distinct pair separated at its witness."""
        k = len(self)
        for i in range(k):
            d = dist_nf(self.orbit_w[:, :, None][:, i: i + 1, 0],
                        self.orbit_f[:, i: i + 1],
                        self.orbit_w, self.orbit_f)
            best = d.max(axis=0)
            best[i] = np.inf
            if np.any(best <= self.eps):
                return False
        return True


def _kept_to_set(orb_w, orb_f, kept, n, eps):
    ks = np.asarray(kept, dtype=int)
    vals, inf = denormalize_arrays(orb_w[0, ks], orb_f[0, ks])
    return SeparatedSet(vals, inf, n, eps, orb_w[:, ks].copy(), orb_f[:, ks].copy(),
                        kept_indices=ks)


def separated_set(seq, n, eps, candidates_w, candidates_f, *, orbits=None):
    """Greedy maximal (n, eps)-separated subset of the candidates.

    Candidates are swept in order; one is kept iff against every kept point
    some time j < n pushes the pair more than eps apart.  Every rejected
    candidate therefore has a kept witness pair violating separation.
    """
    if n < 1 or eps <= 0:
        raise ThermoError("need n >= 1 and eps > 0")
    w = np.atleast_1d(np.asarray(candidates_w, dtype=complex))
    fl = np.atleast_1d(np.asarray(candidates_f, dtype=bool))
    if orbits is None:
        ws, fls, _ = rds.orbit_nf(seq, n - 1, w, fl)
    else:
        ws, fls = orbits
    orb_w = np.stack(ws[:n], axis=0)
    orb_f = np.stack(fls[:n], axis=0)
    kept = []
    for i in range(orb_w.shape[1]):
        if kept:
            ks = np.array(kept)
            d = dist_nf(orb_w[:, ks], orb_f[:, ks],
                        orb_w[:, i: i + 1], orb_f[:, i: i + 1])
            if not np.all(d.max(axis=0) > eps):
                continue
        kept.append(i)
    return _kept_to_set(orb_w, orb_f, kept, n, eps)


def _fan_separated(tree, n, eps):
    """Separated subset of a preimage fan, using the tree structure.

    A pair of leaves branching at level l < n inherits the distance of its
    two distinct sibling ancestors at that level, so the per-level sibling
    gaps recorded during the tree build certify separation of every pair at
    once.  Trees with a sibling gap at or below eps fall back to the greedy
    sweep over the flattened candidates.
    """
    orb_w, orb_f = tree.orbit_w, tree.orbit_f
    depth = orb_w.shape[0] - 1
    if tree.min_sibling_gap(n) > eps:
        kept = list(range(orb_w.shape[1]))
        return _kept_to_set(orb_w[:n], orb_f[:n], kept, n, eps)
    ws = [orb_w[j] for j in range(depth + 1)]
    fls = [orb_f[j] for j in range(depth + 1)]
    return separated_set(None, n, eps, orb_w[0], orb_f[0], orbits=(ws, fls))


def fan_candidates(sys, n, net, *, leaf_cap=FAN_LEAF_CAP, seed=0):
    """Depth-n preimage fan of the derivative-growth anchor, with orbits."""
    seq = sys.sample_sequence(0, n)
    anchor = transfer.anchors_from(sys, n, net)
    aw, af = normalize_arrays(net.values[anchor: anchor + 1], net.inf[anchor: anchor + 1])
    tree = transfer.preimage_tree(seq, n, aw, af, leaf_cap=leaf_cap,
                                  resample_to=leaf_cap // 2, seed=seed)
    return seq, tree


def pressure_estimate(sys, n, eps, samples, *, net=None, leaf_cap=FAN_LEAF_CAP,
                      return_values=False):
    """Monte-Carlo pressure estimate with a standard-error half-width.

    Each omega-sample reseeds the base system, builds the separated set from
    the anchor's depth-n preimage fan, and evaluates
    (1/n) ln sum_E exp(phi_0^n).  Deterministic in the system seed.
    """
    if n < 2 or samples < 1:
        raise ThermoError("need n >= 2 and samples >= 1")
    net = net or _default_net()
    values = []
    for s in range(samples):
        draw = sys if sys.mode == "explicit" else sys.reseeded(_omega_seed(sys.seed, s))
        seq, tree = fan_candidates(draw, n, net, leaf_cap=leaf_cap, seed=s)
        sep = _fan_separated(tree, n, eps)
        kw, kf = normalize_arrays(sep.values, sep.inf)
        log_terms = rds.birkhoff_sum_nf(seq, n, kw, kf)
        m = float(np.max(log_terms))
        values.append((m + math.log(float(np.sum(np.exp(log_terms - m))))) / n)
    mean = float(np.mean(values))
    half = float(np.std(values, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    if return_values:
        return mean, half, values
    return mean, half


def _omega_seed(seed, s):
    return (seed * 0x9E3779B97F4A7C15 + 0xABCD + s) & 0xFFFFFFFFFFFFFFFF


def _default_net():
    from .sphere import standard_net

    return standard_net(4000)


@dataclass
class PressureLambdaReport:
    pressure: float
    pressure_half_width: float
    lambda_mean: float
    gap: float


def pressure_vs_lambda(sys, n, eps, samples, *, net=None, g_horizon=8):
    """Compare the separated-set pressure with the eigenvalue-cocycle mean.

    Both estimators run on the same omega draws; the report carries the two
    values and their gap.
    """
    net = net or _default_net()
    pressure, half, _ = pressure_estimate(sys, n, eps, samples, net=net,
                                          return_values=True)
    lambda_logs = []
    for s in range(samples):
        draw = sys if sys.mode == "explicit" else sys.reseeded(_omega_seed(sys.seed, s))
        coc, _, _, _ = transfer.lambda_cocycle(draw, n, net, g_horizon=g_horizon)
        lambda_logs.append(coc.log_sum() / n)
    lambda_mean = float(np.mean(lambda_logs))
    return PressureLambdaReport(pressure, half, lambda_mean, abs(pressure - lambda_mean))


def pressure_ladder(sys, n_values, eps_values, samples, *, net=None):
    """The (n, eps) table: rows (n, eps, estimate, half_width)."""
    net = net or _default_net()
    rows = []
    for n in n_values:
        for eps in eps_values:
            mean, half = pressure_estimate(sys, n, eps, samples, net=net)
            rows.append((n, eps, mean, half))
    return rows
