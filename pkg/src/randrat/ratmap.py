"""Exact rational-map algebra on the sphere.

Polynomials are coefficient lists in ascending powers.  A rational map is a
coprime pair (numerator, denominator); infinity is handled exclusively by
conjugating with the chart flip w = 1/z and reusing the finite code paths.
"""

from __future__ import annotations

import math

import numpy as np

from .sphere import (
    INF,
    SpherePoint,
    denormalize_arrays,
    dist_arrays,
    normalize_arrays,
    to_arrays,
)

TRIM_RTOL = 1e-12
COPRIME_RTOL = 1e-10
CLUSTER_RADIUS = 1e-6
COMPOSE_DEGREE_CAP = 4096


class RatMapError(ValueError):
    """Invalid rational-map input."""


class DegenerateMapError(RatMapError):
    """Numerator and denominator share a root, or the map is constant."""


class RootSolveError(RuntimeError):
    """The polynomial root solver failed to converge."""


class DegreeCapError(RatMapError):
    """A composition exceeded the configured degree cap."""


class Poly:
    """Complex polynomial with ascending coefficients, trailing zeros trimmed."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        if c.ndim != 1:
            raise RatMapError("coefficients must be one-dimensional")
        scale = np.max(np.abs(c)) if c.size else 0.0
        if scale > 0:
            keep = np.abs(c) > TRIM_RTOL * scale
            last = int(np.max(np.nonzero(keep)[0])) if keep.any() else -1
            c = c[: last + 1]
        else:
            c = np.zeros(0, dtype=complex)
        self.coeffs = c

    @property
    def degree(self):
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    @property
    def is_zero(self):
        return len(self.coeffs) == 0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out

    def deriv(self):
        if self.degree < 1:
            return Poly([])
        k = np.arange(1, len(self.coeffs))
        return Poly(self.coeffs[1:] * k)

    def __mul__(self, other):
        if isinstance(other, Poly):
            if self.is_zero or other.is_zero:
                return Poly([])
            return Poly(np.convolve(self.coeffs, other.coeffs))
        return Poly(self.coeffs * other)

    __rmul__ = __mul__

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        out = np.zeros(n, dtype=complex)
        out[: len(a)] += a
        out[: len(b)] += b
        return Poly(out)

    def __sub__(self, other):
        return self + (other * (-1))

    def padded(self, formal_degree):
        out = np.zeros(formal_degree + 1, dtype=complex)
        out[: len(self.coeffs)] = self.coeffs
        return out

    def reversed_to(self, formal_degree):
        """w^formal_degree * p(1/w) as a Poly in w."""
        return Poly(self.padded(formal_degree)[::-1])

    def compose(self, inner):
        """self(inner(z)) by Horner in the polynomial ring."""
        out = Poly([])
        for c in self.coeffs[::-1]:
            out = out * inner + Poly([c])
        return out

    def shifted(self, k):
        """z^k * self."""
        if self.is_zero:
            return Poly([])
        return Poly(np.concatenate([np.zeros(k, dtype=complex), self.coeffs]))

    def norm2(self):
        return float(np.linalg.norm(self.coeffs)) if len(self.coeffs) else 0.0

    def __repr__(self):
        return f"Poly({list(self.coeffs)!r})"


def resultant(p, q, m, n):
    """Sylvester resultant of p, q padded to formal degrees m and n.

    Vanishes iff the padded polynomials share a projective root (including a
    common root at infinity when both leading coefficients vanish).
    """
    if m < 0 or n < 0:
        raise RatMapError("formal degrees must be nonnegative")
    p = p if isinstance(p, Poly) else Poly(p)
    q = q if isinstance(q, Poly) else Poly(q)
    if p.degree > m or q.degree > n:
        raise RatMapError("polynomial degree exceeds its formal degree")
    if m == 0 and n == 0:
        return complex(1.0)
    a = p.padded(m)[::-1]  # descending
    b = q.padded(n)[::-1]
    size = m + n
    s = np.zeros((size, size), dtype=complex)
    for i in range(n):
        s[i, i : i + m + 1] = a
    for i in range(m):
        s[n + i, i : i + n + 1] = b
    return complex(np.linalg.det(s))


def _polish_roots(coeffs_desc, roots, passes=1):
    """One (or more) Newton passes on np.roots output."""
    roots = np.asarray(roots, dtype=complex)
    d = np.polyder(coeffs_desc)
    for _ in range(passes):
        pv = np.polyval(coeffs_desc, roots)
        dv = np.polyval(d, roots)
        ok = np.abs(dv) > 0
        step = np.zeros_like(roots)
        step[ok] = pv[ok] / dv[ok]
        # clamp wild steps from near-multiple roots
        big = np.abs(step) > 0.5 * (1.0 + np.abs(roots))
        step[big] = 0.0
        roots = roots - step
    return roots


def poly_roots(p):
    """All complex roots of p (companion matrix plus one Newton polish)."""
    p = p if isinstance(p, Poly) else Poly(p)
    if p.degree < 1:
        return np.zeros(0, dtype=complex)
    desc = p.coeffs[::-1]
    roots = np.roots(desc)
    roots = _polish_roots(desc, roots)
    if not np.all(np.isfinite(roots)):
        raise RootSolveError("root solve produced non-finite values")
    return roots


def batched_roots(coeffs_desc_rows):
    """Roots of many same-degree polynomials, one row of descending coeffs each.

    Rows must have a nonvanishing leading coefficient.  Returns an array of
    shape (n_rows, degree).
    """
    c = np.asarray(coeffs_desc_rows, dtype=complex)
    n, m = c.shape
    deg = m - 1
    if deg == 0:
        return np.zeros((n, 0), dtype=complex)
    monic = c / c[:, :1]
    comp = np.zeros((n, deg, deg), dtype=complex)
    comp[:, 1:, :-1] = np.broadcast_to(np.eye(deg - 1, dtype=complex), (n, deg - 1, deg - 1))
    comp[:, 0, :] = -monic[:, 1:]
    roots = np.linalg.eigvals(comp)
    # one vectorized Newton polish
    dc = monic[:, :-1] * np.arange(deg, 0, -1)
    pv = np.zeros_like(roots)
    for k in range(m):
        pv = pv * roots + monic[:, k : k + 1]
    dv = np.zeros_like(roots)
    for k in range(deg):
        dv = dv * roots + dc[:, k : k + 1]
    ok = np.abs(dv) > 0
    step = np.where(ok, pv / np.where(ok, dv, 1.0), 0.0)
    big = np.abs(step) > 0.5 * (1.0 + np.abs(roots))
    roots = roots - np.where(big, 0.0, step)
    return roots


class Divisor:
    """Finite multiset of sphere points with positive integer multiplicities."""

    def __init__(self, entries):
        self.entries = [(SpherePoint.of(p), int(m)) for p, m in entries if m > 0]

    @property
    def degree(self):
        return sum(m for _, m in self.entries)

    def points(self):
        return [p for p, _ in self.entries]

    def multiplicity_at(self, p, tol=1e-6):
        p = SpherePoint.of(p)
        for q, m in self.entries:
            if dist_arrays(*to_arrays([p]), *to_arrays([q]))[0] <= tol:
                return m
        return 0

    def support_within(self, p, tol=1e-6):
        return self.multiplicity_at(p, tol) > 0

    def as_multiset_list(self):
        out = []
        for p, m in self.entries:
            out.extend([p] * m)
        return out

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self):
        return f"Divisor({self.entries!r})"


def cluster_points(vals, inf, radius_scale=CLUSTER_RADIUS):
    """Cluster near-coincident roots into (point, multiplicity) entries.

    Cluster radius is radius_scale * (1 + |root|) in the chart of the root;
    entries come out sorted by (re, im) with infinity last.
    """
    vals = np.asarray(vals, dtype=complex)
    inf = np.asarray(inf, dtype=bool)
    n = len(vals)
    used = np.zeros(n, dtype=bool)
    entries = []
    n_inf = int(np.count_nonzero(inf))
    if n_inf:
        entries.append((SpherePoint.infinity(), n_inf))
        used |= inf
    order = np.argsort([(v.real, v.imag) for v in vals], axis=0)[:, 0] if n else []
    for i in order:
        if used[i]:
            continue
        anchor = vals[i]
        tol = radius_scale * (1.0 + abs(anchor))
        mask = ~used & ~inf & (np.abs(vals - anchor) <= tol)
        members = vals[mask]
        used |= mask
        entries.append((SpherePoint(np.mean(members)), int(mask.sum())))
    finite = sorted(
        [e for e in entries if not e[0].is_infinity],
        key=lambda e: (e[0].value.real, e[0].value.imag),
    )
    infs = [e for e in entries if e[0].is_infinity]
    return Divisor(finite + infs)


class RationalMap:
    """Coprime pair of complex polynomials acting on the sphere."""

    def __init__(self, num, den, *, check=True):
        self.num = num if isinstance(num, Poly) else Poly(num)
        self.den = den if isinstance(den, Poly) else Poly(den)
        if self.num.is_zero or self.den.is_zero:
            raise DegenerateMapError("constant maps 0 and infinity are not allowed")
        d = max(self.num.degree, self.den.degree)
        if d < 1:
            raise DegenerateMapError("constant maps are not allowed")
        self.degree = d
        # chart-flip representations: T(1/w) = num_rev(w)/den_rev(w)
        self._num_rev = self.num.reversed_to(d)
        self._den_rev = self.den.reversed_to(d)
        # derivative numerators h = f'g - f g' per chart
        self._h = self.num.deriv() * self.den - self.num * self.den.deriv()
        self._h_rev = self._num_rev.deriv() * self._den_rev - self._num_rev * self._den_rev.deriv()
        self._sup_deriv = None
        self._divisor_cache = {}
        if check and not self._coprime():
            raise DegenerateMapError("numerator and denominator are not coprime")

    def _coprime(self):
        """Scale-invariant resultant test, arbitrated by root separation.

        The normalized Sylvester determinant is the fast path; it can
        under-read for well-conditioned pairs of moderate degree, so a
        sub-threshold value is confirmed against the actual root gap before
        the pair is declared degenerate.  A common root at infinity is
        impossible because one of the two polynomials attains the degree.
        """
        mf, mg = self.num.degree, self.den.degree
        if mf == 0 or mg == 0:
            return True
        res = resultant(self.num, self.den, mf, mg)
        scale = (self.num.norm2() ** mg) * (self.den.norm2() ** mf)
        if scale > 0 and abs(res) > COPRIME_RTOL * scale:
            return True
        if mf + mg > 512:
            return False
        rn = poly_roots(self.num)
        rd = poly_roots(self.den)
        gap = np.min(
            dist_arrays(
                np.repeat(rn, len(rd)), np.zeros(len(rn) * len(rd), bool),
                np.tile(rd, len(rn)), np.zeros(len(rn) * len(rd), bool),
            )
        )
        return gap > 1e-7

    # -- evaluation ---------------------------------------------------------

    def eval_nf(self, w, flip):
        """Evaluate on normal-form arrays, returning normal-form arrays."""
        w = np.asarray(w, dtype=complex)
        flip = np.asarray(flip, dtype=bool)
        f = np.where(flip, self._num_rev(w), self.num(w))
        g = np.where(flip, self._den_rev(w), self.den(w))
        up = np.abs(f) > np.abs(g)
        out_flip = up
        with np.errstate(divide="ignore", invalid="ignore"):
            num = np.where(up, g, f)
            den = np.where(up, f, g)
            out = np.where(den == 0, 0j, num / np.where(den == 0, 1.0, den))
        return out, out_flip

    def eval(self, p):
        p = SpherePoint.of(p)
        w, flip = normalize_arrays(*to_arrays([p]))
        ow, oflip = self.eval_nf(w, flip)
        vals, inf = denormalize_arrays(ow, oflip)
        return SpherePoint.infinity() if inf[0] else SpherePoint(vals[0])

    def __call__(self, p):
        return self.eval(p)

    # -- spherical derivative -----------------------------------------------

    def sph_deriv_nf(self, w, flip):
        """Operator norm of the differential, |h|(1+|z|^2)/(|f|^2+|g|^2)."""
        w = np.asarray(w, dtype=complex)
        flip = np.asarray(flip, dtype=bool)
        f = np.where(flip, self._num_rev(w), self.num(w))
        g = np.where(flip, self._den_rev(w), self.den(w))
        h = np.where(flip, self._h_rev(w), self._h(w))
        return np.abs(h) * (1.0 + np.abs(w) ** 2) / (np.abs(f) ** 2 + np.abs(g) ** 2)

    def sph_deriv(self, p):
        p = SpherePoint.of(p)
        w, flip = normalize_arrays(*to_arrays([p]))
        return float(self.sph_deriv_nf(w, flip)[0])

    def _structural_seeds(self):
        """Chart-normalized points where the derivative tends to spike:
        zeros of numerator and denominator plus ramification points."""
        pts = []
        for poly in (self.num, self.den, self._h):
            if poly.degree >= 1:
                pts.extend(poly_roots(poly))
        vals = np.array(pts + [0j], dtype=complex)
        inf = np.zeros(len(vals), dtype=bool)
        inf[-1] = True
        return normalize_arrays(vals, inf)

    def sup_sph_deriv(self, *, grid=4096, refine_rounds=30, refine_top=32):
        """Upper estimate of sup of the spherical derivative.

        Quasi-uniform grid plus structural seeds (zeros, poles, ramification
        points, where narrow spikes live), then shrinking local refinement;
        guaranteed >= the maximum over the grid.
        """
        if self._sup_deriv is not None:
            return self._sup_deriv
        from .sphere import sphere_lattice

        vals, inf = sphere_lattice(grid)
        w, flip = normalize_arrays(vals, inf)
        sw, sf = self._structural_seeds()
        w = np.concatenate([w, sw])
        flip = np.concatenate([flip, sf])
        d = self.sph_deriv_nf(w, flip)
        order = np.argsort(d)[::-1][:refine_top]
        seeds_w, seeds_f = w[order], flip[order]
        best = float(np.max(d))
        radius = 2.0 / math.sqrt(grid)
        rng = np.random.default_rng(0xD15C)
        for _ in range(refine_rounds):
            offs = radius * (rng.standard_normal((len(seeds_w), 8)) +
                             1j * rng.standard_normal((len(seeds_w), 8)))
            # perturb within the seed's own chart; |w| <= 1 there so the
            # offsets stay metrically comparable across the sphere
            cand_w = (seeds_w[:, None] + offs).ravel()
            cand_f = np.repeat(seeds_f, 8)
            allw = np.concatenate([seeds_w, cand_w])
            allf = np.concatenate([seeds_f, cand_f])
            alld = self.sph_deriv_nf(allw, allf)
            order = np.argsort(alld)[::-1][:refine_top]
            seeds_w, seeds_f = allw[order], allf[order]
            best = max(best, float(np.max(alld)))
            radius *= 0.5
        self._sup_deriv = best
        return best

    # -- preimages and divisors ---------------------------------------------

    def _preimage_poly(self, p):
        """Polynomial whose roots are the finite preimages of p."""
        p = SpherePoint.of(p)
        if p.is_infinity:
            return Poly(self.den.coeffs)
        w = p.value
        if abs(w) <= 1.0:
            return self.num - self.den * w
        # scale by 1/p for stability: (1/p) f - g
        return self.num * (1.0 / w) - self.den

    def preimages(self, p):
        """The preimage divisor of p; its degree always equals deg(T)."""
        q = self._preimage_poly(p)
        finite = poly_roots(q)
        inf_mult = self.degree - q.degree if not q.is_zero else self.degree
        vals = np.concatenate([finite, np.zeros(inf_mult, dtype=complex)])
        inf = np.concatenate([np.zeros(len(finite), bool), np.ones(inf_mult, bool)])
        div = cluster_points(vals, inf)
        assert div.degree == self.degree
        return div

    def preimage_fan(self, w, flip):
        """Preimages of many normal-form points at once.

        Returns (roots_w, roots_flip) of shape (n, degree) in normal form.
        Points where the preimage polynomial degenerates (images of infinity
        and similar leading-coefficient cancellations) fall back to the
        scalar path.
        """
        w = np.asarray(w, dtype=complex)
        flip = np.asarray(flip, dtype=bool)
        n = len(w)
        d = self.degree
        fpad = self.num.padded(d)
        gpad = self.den.padded(d)
        vals, infm = denormalize_arrays(w, flip)
        # coefficient rows of f - p g (or f/p - g in the flipped chart)
        coeffs = np.empty((n, d + 1), dtype=complex)
        lead_ok = np.empty(n, dtype=bool)
        pmat = np.where(infm, 0, vals)[:, None]
        plain = fpad[None, :] - pmat * gpad[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(vals == 0, 0, 1.0 / np.where(vals == 0, 1.0, vals))[:, None]
        scaled = inv * fpad[None, :] - gpad[None, :]
        use_scaled = (np.abs(vals) > 1.0) & ~infm
        coeffs = np.where(use_scaled[:, None], scaled, plain)
        coeffs[infm] = gpad[None, :]
        scale = np.max(np.abs(coeffs), axis=1)
        lead_ok = np.abs(coeffs[:, d]) > 1e-8 * np.maximum(scale, 1e-300)
        roots = np.empty((n, d), dtype=complex)
        roots_inf = np.zeros((n, d), dtype=bool)
        idx_ok = np.nonzero(lead_ok)[0]
        if len(idx_ok):
            rr = batched_roots(coeffs[idx_ok, ::-1])
            roots[idx_ok] = rr
        for i in np.nonzero(~lead_ok)[0]:
            pt = SpherePoint.infinity() if infm[i] else SpherePoint(vals[i])
            div = self.preimages(pt)
            flat = div.as_multiset_list()
            for j, q in enumerate(flat):
                if q.is_infinity:
                    roots[i, j] = 0j
                    roots_inf[i, j] = True
                else:
                    roots[i, j] = q.value
        return normalize_arrays(roots, roots_inf)

    def ramification_divisor(self):
        """Zeros of the derivative, counted with multiplicity; degree 2d-2."""
        if "rp" in self._divisor_cache:
            return self._divisor_cache["rp"]
        if self.degree < 2:
            self._divisor_cache["rp"] = Divisor([])
            return self._divisor_cache["rp"]
        h = self._h
        finite = poly_roots(h)
        inf_mult = (2 * self.degree - 2) - h.degree
        vals = np.concatenate([finite, np.zeros(inf_mult, dtype=complex)])
        inf = np.concatenate([np.zeros(len(finite), bool), np.ones(inf_mult, bool)])
        div = cluster_points(vals, inf)
        assert div.degree == 2 * self.degree - 2
        self._divisor_cache["rp"] = div
        return div

    def branch_divisor(self):
        """Pushforward of the ramification divisor: the branch points."""
        if "bp" in self._divisor_cache:
            return self._divisor_cache["bp"]
        rp = self.ramification_divisor()
        vals, inf, mult = [], [], []
        for p, m in rp:
            img = self.eval(p)
            vals.append(0j if img.is_infinity else img.value)
            inf.append(img.is_infinity)
            mult.append(m)
        expanded_v = np.repeat(np.array(vals, dtype=complex), mult) if mult else np.zeros(0, complex)
        expanded_i = np.repeat(np.array(inf, dtype=bool), mult) if mult else np.zeros(0, bool)
        div = cluster_points(expanded_v, expanded_i)
        assert div.degree == 2 * self.degree - 2
        self._divisor_cache["bp"] = div
        return div

    def fixed_divisor(self):
        """Solutions of T(z) = z with multiplicity; degree d+1."""
        q = self.num - self.den.shifted(1)
        finite = poly_roots(q)
        inf_mult = (self.degree + 1) - q.degree if not q.is_zero else self.degree + 1
        vals = np.concatenate([finite, np.zeros(inf_mult, dtype=complex)])
        inf = np.concatenate([np.zeros(len(finite), bool), np.ones(inf_mult, bool)])
        div = cluster_points(vals, inf)
        assert div.degree == self.degree + 1
        return div

    def totally_ramified(self):
        """Points whose local multiplicity equals the degree (at most 2)."""
        if self.degree < 2:
            raise RatMapError("totally ramified points need degree >= 2")
        out = [p for p, m in self.ramification_divisor() if m >= self.degree - 1]
        assert len(out) <= 2
        return out

    def is_totally_ramified_at(self, p, tol=1e-6):
        if self.degree < 2:
            return False
        return self.ramification_divisor().multiplicity_at(p, tol) >= self.degree - 1

    def has_fixed_ramification(self):
        """True iff Res(f'g - fg', f - id*g) at formal degrees (2d-2, d+1) vanishes."""
        if self.degree < 2:
            raise RatMapError("fixed-ramification test needs degree >= 2")
        d = self.degree
        q = self.num - self.den.shifted(1)
        res = resultant(self._h, q, 2 * d - 2, d + 1)
        scale = (self._h.norm2() ** (d + 1)) * (q.norm2() ** (2 * d - 2))
        if scale == 0:
            return True
        return abs(res) <= COPRIME_RTOL * scale

    def fixed_ramification_witness(self, tol=1e-6):
        """Cross-check oracle: an explicit point in RP intersect FP, if any."""
        if self.degree < 2:
            raise RatMapError("fixed-ramification test needs degree >= 2")
        fixed = self.fixed_divisor()
        for p, _ in self.ramification_divisor():
            if fixed.support_within(p, tol):
                return p
        return None

    # -- composition ----------------------------------------------------------

    def compose_with(self, inner):
        """The map self o inner."""
        d_out = self.degree * inner.degree
        if d_out > COMPOSE_DEGREE_CAP:
            raise DegreeCapError(f"composite degree {d_out} exceeds cap {COMPOSE_DEGREE_CAP}")
        d2 = self.degree
        f1, g1 = inner.num, inner.den
        num = Poly([])
        den = Poly([])
        # sum_k c_k f1^k g1^(d2-k) for each of self's polynomials
        powers_f = [Poly([1.0])]
        powers_g = [Poly([1.0])]
        for _ in range(d2):
            powers_f.append(powers_f[-1] * f1)
            powers_g.append(powers_g[-1] * g1)
        for k in range(d2 + 1):
            fk = powers_f[k] * powers_g[d2 - k]
            if k < len(self.num.coeffs):
                num = num + fk * self.num.coeffs[k]
            if k < len(self.den.coeffs):
                den = den + fk * self.den.coeffs[k]
        return RationalMap(num, den)

    # -- serialization ----------------------------------------------------------

    def to_lines(self):
        return [poly_to_text(self.num), poly_to_text(self.den)]

    @classmethod
    def from_lines(cls, num_line, den_line):
        return cls(poly_from_text(num_line), poly_from_text(den_line))

    def __repr__(self):
        return f"RationalMap(deg={self.degree}, num={list(self.num.coeffs)}, den={list(self.den.coeffs)})"


def deriv_square_integral(t, *, budget=100_000):
    """Adaptive quadrature of the squared spherical derivative.

    Equals deg(t) exactly (change of variables); spikes at the zeros of the
    numerator make a plain lattice rule useless here.
    """
    from .sphere import adaptive_sphere_integral

    return adaptive_sphere_integral(lambda w, f: t.sph_deriv_nf(w, f) ** 2, budget=budget)


def poly_to_text(p):
    coeffs = p.coeffs if len(p.coeffs) else np.zeros(1, dtype=complex)
    return " ".join(f"{float(c.real)!r},{float(c.imag)!r}" for c in coeffs)


def poly_from_text(line):
    coeffs = []
    for token in line.split():
        re_s, im_s = token.split(",")
        coeffs.append(complex(float(re_s), float(im_s)))
    return Poly(coeffs)


# -- standard families --------------------------------------------------------

def power_map(d):
    """z -> z^d."""
    return RationalMap([0] * d + [1], [1])


def affine_map(a, b=0):
    """z -> a z + b."""
    return RationalMap([b, a], [1])


def mobius_map(a, b, c, d):
    """z -> (a z + b)/(c z + d)."""
    return RationalMap([b, a], [d, c])


def q_family(c):
    """The quartic family 3z^2 - 2z^3 + c z^2 (z-1)^2 fixing 0, 1, infinity."""
    c = complex(c)
    return RationalMap([0, 0, 3 + c, -2 - 2 * c, c], [1])


def s_family(a, d):
    """(a z^d + 1)/(a z^d - 1): no fixed ramification points for generic a."""
    a = complex(a)
    return RationalMap([1] + [0] * (d - 1) + [a], [-1] + [0] * (d - 1) + [a])


def random_map(degree, rng, *, max_tries=64):
    """A random degree-`degree` map with Gaussian coefficients (coprime-checked)."""
    for _ in range(max_tries):
        num = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
        den = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
        den[degree] = 0.0  # keep the numerator in charge of the degree
        num[degree] += 0.5 * np.sign(abs(num[degree]) + 0.1)
        try:
            t = RationalMap(num, den)
        except DegenerateMapError:
            continue
        if t.degree == degree:
            return t
    raise RatMapError("could not draw a nondegenerate random map")
