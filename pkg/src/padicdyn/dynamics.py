"""Rational maps with Q_p coefficients acting on P(Q_p).

Iteration, the chordal metric, rational fixed points with multipliers, local
power-series expansions, inverse branches, and linearizing coordinates at
repelling fixed points.  Points are PadicNumber or the INFINITY marker; the
flagship constructions are polynomial, so affine charts carry the load and
infinity only needs degree bookkeeping.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import (DomainError, HenselError, InsufficientPrecision,
                     Undecidable)
from .padic import PadicJet, PadicNumber, Poly, hensel_lift
from .series import PadicBall, TruncatedSeries


class _Infinity:
    """The point at infinity on P(Q_p)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"


INFINITY = _Infinity()

Point = PadicNumber | _Infinity


def chordal_distance_exp(z: Point, w: Point) -> int | None:
    """Exponent e with Delta(z, w) = p^e (always <= 0).

    Delta(z, w) = |z - w| / (max(1,|z|) max(1,|w|)) in the affine chart and
    the homogeneous formula at infinity.  Returns None when the two points
    are indistinguishable at the certified window.
    """
    if isinstance(z, _Infinity) and isinstance(w, _Infinity):
        return None
    if isinstance(z, _Infinity) or isinstance(w, _Infinity):
        finite = w if isinstance(z, _Infinity) else z
        if finite.is_zero:
            return 0
        return -max(0, -finite.v)
    dv = z.valuation_of_difference(w)
    if dv is None:
        return None
    ez = 0 if z.is_zero else max(0, -z.v)
    ew = 0 if w.is_zero else max(0, -w.v)
    return -dv - ez - ew


def chordal_ultrametric_holds(x: Point, y: Point, z: Point) -> bool:
    """Delta(x, z) <= max(Delta(x, y), Delta(y, z)) on certified exponents."""
    dxz = chordal_distance_exp(x, z)
    if dxz is None:
        return True
    dxy = chordal_distance_exp(x, y)
    dyz = chordal_distance_exp(y, z)
    bound = max(e for e in (dxy, dyz) if e is not None) \
        if (dxy is not None or dyz is not None) else None
    if bound is None:
        # x ~ y and y ~ z at working precision, so x ~ z must hold too
        return False
    return dxz <= bound


class FixedPointInfo:
    """A fixed point with its multiplier and repelling/indifferent/attracting
    class, decided purely by the valuation of the multiplier."""

    __slots__ = ("point", "multiplier", "cls")

    def __init__(self, point: Point, multiplier: PadicNumber):
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "multiplier", multiplier)
        v = multiplier.v
        if v is None or v > 0:
            c = "attracting"
        elif v == 0:
            c = "indifferent"
        else:
            c = "repelling"
        object.__setattr__(self, "cls", c)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("FixedPointInfo is immutable")

    @property
    def is_repelling(self) -> bool:
        return self.cls == "repelling"

    def to_json(self) -> dict:
        pt = None if isinstance(self.point, _Infinity) else self.point.to_json()
        return {"point": pt, "multiplier": self.multiplier.to_json(),
                "class": self.cls}

    def __repr__(self):
        return f"FixedPointInfo({self.point!r}, {self.cls})"


class RationalMapQp:
    """num/den with Q_p coefficients; degree is fixed by construction."""

    __slots__ = ("num", "den", "p")

    def __init__(self, num: Poly, den: Poly | None = None, check: bool = True):
        p = num.p
        if den is None:
            den = Poly.from_rationals([1], p)
        if max(num.degree, den.degree) < 1:
            raise ValueError("degree must be at least 1")
        if check and den.degree >= 1:
            _require_coprime(num, den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "p", p)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("RationalMapQp is immutable")

    @property
    def degree(self) -> int:
        return max(self.num.degree, self.den.degree)

    @property
    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    # ------------------------------------------------------------------

    def __call__(self, z: Point) -> Point:
        if isinstance(z, _Infinity):
            dn, dd = self.num.degree, self.den.degree
            if dn > dd:
                return INFINITY
            if dn < dd:
                return PadicNumber.zero(self.p)
            return self.num.coeffs[dn] / self.den.coeffs[dd]
        d = self.den(z)
        if d.is_zero:
            return INFINITY
        return self.num(z) / d

    def derivative_at(self, z: PadicNumber) -> PadicNumber:
        d = self.den(z)
        if d.is_zero:
            raise DomainError("derivative at a pole")
        n_p = self.num.derivative()(z)
        d_p = self.den.derivative()(z)
        return (n_p * d - self.num(z) * d_p) / (d * d)

    def iterate(self, z: Point, n: int) -> Point:
        """n-fold application; the 0-th iterate is the identity."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        for _ in range(n):
            z = self(z)
        return z

    def orbit(self, z: Point, n: int) -> list[Point]:
        out = [z]
        for _ in range(n):
            z = self(z)
            out.append(z)
        return out

    # ------------------------------------------------------------------

    def local_expansion(self, z0: PadicNumber, order: int,
                        radius_exp: int | None = None) -> TruncatedSeries:
        """Power series of the map around z0 on a computed ball.

        Polynomial maps expand exactly (Taylor shift).  For a genuine
        denominator the series is num * (1 + h + h^2 + ...) on the largest
        ball where sup|h| < 1, and the discarded remainder is bounded
        exactly by the sup formula.
        """
        num_s = self.num.shift(z0)
        den_s = self.den.shift(z0)
        d0 = den_s.coeffs[0]
        if d0.is_zero:
            raise DomainError("expansion at a pole")

        if self.den.degree == 0:
            coeffs = [c / d0 for c in num_s.coeffs]
            r = 0 if radius_exp is None else radius_exp
            tail = None
            if len(coeffs) > order + 1:
                tail = max(-c.v + k * r
                           for k, c in enumerate(coeffs)
                           if k > order and not c.is_zero)
                coeffs = coeffs[:order + 1]
            return TruncatedSeries(coeffs, PadicBall(z0, r), tail)

        inv_d0 = d0.inv()
        num_n = num_s * inv_d0
        den_n = den_s * inv_d0
        # den_n = 1 - h with h(0) = 0; sup|h| < 1 pins the radius
        h = [-c for c in den_n.coeffs]
        r = None
        for k in range(1, len(h)):
            if h[k].is_zero:
                continue
            rk = (h[k].v - 1) // k
            r = rk if r is None else min(r, rk)
        if r is None:
            raise DomainError("denominator is constant after normalization")
        if radius_exp is not None:
            r = min(r, radius_exp)

        # geometric inversion: e solves den_n * e = 1 coefficient by
        # coefficient, exactly
        e = [PadicNumber.from_rational(1, self.p)]
        for k in range(1, order + 1):
            acc = PadicNumber.zero(self.p)
            for j in range(1, min(k, len(h) - 1) + 1):
                if h[j].is_zero or e[k - j].is_zero:
                    continue
                acc = acc + h[j] * e[k - j]
            e.append(acc)
        poly_part = num_n * Poly(e, self.p)
        coeffs = list(poly_part.coeffs[:order + 1])
        coeffs += [PadicNumber.zero(self.p)] * (order + 1 - len(coeffs))
        # remainder = num_n - poly * den_n is divisible by u^(order+1) and
        # |1/den_n| = 1 on the ball, so sup|remainder| bounds the tail
        rem = num_n - Poly(coeffs, self.p) * den_n
        tail = None
        for k, c in enumerate(rem.coeffs):
            if c.is_zero:
                continue
            if k <= order and not c.approx_equal(PadicNumber.zero(self.p)):
                raise AssertionError("low-order remainder in expansion")
            ek = -c.v + k * r
            tail = ek if tail is None else max(tail, ek)
        return TruncatedSeries(coeffs, PadicBall(z0, r), tail)

    def local_degree(self, z0: PadicNumber, order: int | None = None) -> int:
        """Smallest k >= 1 with a nonzero k-th Taylor coefficient at z0."""
        order = order if order is not None else self.degree + 1
        f = self.local_expansion(z0, order)
        for k in range(1, f.order + 1):
            if not f.coeffs[k].is_zero:
                return k
        raise Undecidable("local degree exceeds the expansion order")

    def local_inverse(self, a: PadicNumber, order: int
                      ) -> TruncatedSeries:
        """Inverse branch g with R(g(w)) = w near R(a) and g(R(a)) = a.

        Errors at critical points (vanishing derivative).
        """
        f = self.local_expansion(a, order)
        c1 = f.coefficient(1)
        if c1.is_zero:
            raise DomainError("critical point: derivative vanishes")
        R = f.ball.radius_exp
        order_M = f.order
        r = R
        for k in range(2, order_M + 1):
            c = f.coeffs[k]
            if c.is_zero:
                continue
            r = min(r, (c.v - c1.v - 1) // (k - 1))
        if f.tail_exp is not None:
            # tail coefficients obey |c_k| <= p^(tail - k R); domination
            # needs tail - r + (M+1)(r - R) < -v(c1), solved for r
            num = -c1.v - 1 - f.tail_exp + (order_M + 1) * R
            r = min(r, num // order_M)
        zero = PadicNumber.zero(self.p)
        coeffs0 = [zero] + list(f.coeffs[1:])
        coeffs0 += [zero] * (order + 1 - len(coeffs0))
        f0 = TruncatedSeries(coeffs0, PadicBall(a, r),
                             f.tail_exp_at(r) if f.tail_exp is not None
                             else None)
        g0 = f0.invert()
        center = f.coeffs[0]
        coeffs = [a] + list(g0.coeffs[1:])
        return TruncatedSeries(coeffs, PadicBall(center, g0.ball.radius_exp),
                               g0.tail_exp)

    # ------------------------------------------------------------------

    def fixed_points_rational(self) -> list[FixedPointInfo]:
        """Q_p-rational finite fixed points with multipliers.

        Candidate valuations come from the Newton polygon of
        num(z) - z den(z); unit-residue seeds are grown digit by digit until
        the strong Hensel condition certifies a lift.  Complete only over
        roots whose seeds the residue search finds.
        """
        z_den = Poly([PadicNumber.zero(self.p)] + list(self.den.coeffs),
                     self.p)
        F = self.num - z_den
        if all(c.is_zero for c in F.coeffs):
            raise DomainError("identity map: every point is fixed")
        roots: list[PadicNumber] = []
        if F.coeffs[0].is_zero:
            roots.append(PadicNumber.zero(self.p))
        for s in _integer_newton_slopes(F):
            scale = PadicNumber.from_rational(Fraction(self.p)**s, self.p)
            G = Poly([c * scale**k for k, c in enumerate(F.coeffs)], self.p)
            shift = -min(c.v for c in G.coeffs if not c.is_zero)
            if shift:
                G = G * PadicNumber.from_rational(
                    Fraction(self.p)**shift, self.p)
            for y in _unit_roots(G):
                root = y * scale
                if not any(_same_point(root, r) for r in roots):
                    roots.append(root)
        out = []
        for a in roots:
            img = self(a)
            if isinstance(img, _Infinity) or not img.approx_equal(a):
                continue
            out.append(FixedPointInfo(a, self.derivative_at(a)))
        return out

    def to_json(self) -> dict:
        return {"num": [c.to_json() for c in self.num.coeffs],
                "den": [c.to_json() for c in self.den.coeffs]}


def _same_point(a: PadicNumber, b: PadicNumber) -> bool:
    try:
        return a.approx_equal(b)
    except Undecidable:  # pragma: no cover
        return True


def _require_coprime(num: Poly, den: Poly) -> None:
    if all(c.is_exact for c in num.coeffs) and \
            all(c.is_exact for c in den.coeffs):
        res = _resultant_fractions(
            [c.frac for c in num.coeffs], [c.frac for c in den.coeffs])
        if res == 0:
            raise ValueError("num and den share a root")
        return
    raise Undecidable(
        "coprimality check needs exact coefficients; pass check=False "
        "after validating the construction")


def _resultant_fractions(a: list[Fraction], b: list[Fraction]) -> Fraction:
    """Resultant via the Sylvester determinant over Q (small degrees)."""
    while len(a) > 1 and a[-1] == 0:
        a = a[:-1]
    while len(b) > 1 and b[-1] == 0:
        b = b[:-1]
    m, n = len(a) - 1, len(b) - 1
    if m == 0:
        return a[0] ** n
    if n == 0:
        return b[0] ** m
    size = m + n
    rows = []
    for i in range(n):
        row = [Fraction(0)] * size
        for j, c in enumerate(reversed(a)):
            row[i + j] = c
        rows.append(row)
    for i in range(m):
        row = [Fraction(0)] * size
        for j, c in enumerate(reversed(b)):
            row[i + j] = c
        rows.append(row)
    # fraction Gaussian elimination
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            det = -det
        det *= rows[col][col]
        inv = 1 / rows[col][col]
        for r in range(col + 1, size):
            if rows[r][col] == 0:
                continue
            factor = rows[r][col] * inv
            for c in range(col, size):
                rows[r][c] -= factor * rows[col][c]
    return det


def _integer_newton_slopes(F: Poly) -> list[int]:
    """Integer candidate valuations of roots from the lower Newton polygon."""
    pts = [(k, c.v) for k, c in enumerate(F.coeffs) if not c.is_zero]
    if len(pts) < 2:
        return []
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    slopes = set()
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        num, den = y1 - y2, x2 - x1
        if num % den == 0:
            slopes.add(num // den)
    return sorted(slopes)


_SEARCH_DEPTH_CAP = 40


def _unit_roots(G: Poly) -> list[PadicNumber]:
    """Unit roots of G by digit search + Hensel; drops unresolved seeds."""
    p = G.p
    Gp = G.derivative()
    out = []
    level = [c for c in range(1, p)]
    for depth in range(1, _SEARCH_DEPTH_CAP + 1):
        if not level:
            break
        next_level = []
        for c in level:
            x = PadicNumber.from_rational(c, p)
            val = _poly_val_at_int(G, c, depth)
            if val < depth:
                continue
            dval = _poly_val_at_int(Gp, c, depth)
            if val > 2 * dval:
                try:
                    root = hensel_lift(G, x)
                except (HenselError, InsufficientPrecision):
                    continue
                if not any(_same_point(root, r) for r in out):
                    out.append(root)
                continue
            next_level.extend(c + j * p**depth for j in range(p))
        level = next_level
    return out


def _poly_val_at_int(G: Poly, c: int, depth: int) -> int:
    """Certified v(G(c)) for integer c, capped at a large window."""
    window = 2 * _SEARCH_DEPTH_CAP + 8
    acc = Fraction(0)
    exact = all(co.is_exact for co in G.coeffs)
    if exact:
        for co in reversed(G.coeffs):
            acc = acc * c + co.frac
        if acc == 0:
            return window
        from .padic import vp_fraction
        return vp_fraction(acc, G.p)
    val = G(PadicNumber.from_rational(c, G.p, window))
    if val.is_zero:
        return window
    return val.v


# ----------------------------------------------------------------------
# linearizing coordinate at a repelling fixed point


def linearizer(R: RationalMapQp, fp: FixedPointInfo, order: int,
               precision: int | None = None,
               max_iters: int = 512) -> TruncatedSeries:
    """The coordinate conjugating the inverse branch to w -> w/multiplier.

    Built as the limit of lambda^i (g^i - a) for the local inverse g at the
    repelling fixed point a; successive iterates differ by a factor
    |multiplier|^-1, so the iteration stops once two of them agree modulo
    p^precision on every stored coefficient.  Normalized by zeta(a) = 0,
    zeta'(a) = 1.
    """
    from .padic import DEFAULT_PRECISION

    if not fp.is_repelling:
        raise DomainError("linearizer needs a repelling fixed point")
    if precision is None:
        precision = DEFAULT_PRECISION
    a = fp.point
    lam = fp.multiplier
    g = R.local_inverse(a, order)
    # recenter to offset coordinates around a (constant is 0 by construction)
    g_off = TruncatedSeries([PadicNumber.zero(R.p)] + list(g.coeffs[1:]),
                            PadicBall(PadicNumber.zero(R.p),
                                      g.ball.radius_exp),
                            g.tail_exp)
    b1 = g_off.coefficient(1)
    if b1.is_zero:
        raise DomainError("inverse branch is degenerate")
    # C = sup |c_i| for g = lambda^{-1} u (1 + c_1 u + ...); the iteration
    # ball is |u| < 1/C intersected with the branch domain
    C = None
    for i in range(2, g_off.order + 1):
        bi = g_off.coeffs[i]
        if bi.is_zero:
            continue
        e = -bi.v + b1.v
        C = e if C is None else max(C, e)
    if g_off.tail_exp is not None:
        e = g_off.tail_exp - (g_off.order + 1) * g_off.ball.radius_exp + b1.v
        C = e if C is None else max(C, e)
    r_d = g_off.ball.radius_exp if C is None \
        else min(g_off.ball.radius_exp, -C - 1)
    g_dom = g_off.restricted(r_d)

    zeta = g_dom.scale(lam)
    for _ in range(max_iters):
        nxt = zeta.compose(g_dom).scale(lam)
        if _series_agree(nxt, zeta, precision):
            return TruncatedSeries(nxt.coeffs, PadicBall(a, r_d),
                                   nxt.tail_exp)
        zeta = nxt
    raise InsufficientPrecision("linearizer did not stabilize")


def _series_agree(f: TruncatedSeries, g: TruncatedSeries,
                  abs_exp: int) -> bool:
    n = max(f.order, g.order)
    for k in range(n + 1):
        a, b = f.coefficient(k), g.coefficient(k)
        dv = a.valuation_of_difference(b)
        if dv is not None and dv < abs_exp:
            return False
    return True


# ----------------------------------------------------------------------
# continuation of a repelling fixed point through the family


def fixed_point_continuation(family, t, a0: PadicNumber,
                             target_abs_exp: int | None = None):
    """The fixed point a_t of family(t) continuing a0; jet mode when t is a
    PadicJet (returns a jet with da/dt from implicit differentiation).

    Newton on z -> R_t(z) - z seeded at a0; the strong condition holds as
    long as |t| stays in the continuation domain, else HenselError.
    """
    jet = isinstance(t, PadicJet)
    t_val = t.value if jet else t
    R = family.map_at(t_val)
    if not R.is_polynomial:
        raise DomainError("continuation implemented for polynomial families")
    minus_z = [PadicNumber.zero(R.p),
               PadicNumber.from_rational(-1, R.p)]
    F = R.num + Poly(minus_z, R.p)
    try:
        a_t = hensel_lift(F, a0, target_abs_exp=target_abs_exp)
    except HenselError as exc:
        raise HenselError(f"left continuation domain: {exc}") from exc
    if not jet:
        return a_t
    # implicit differentiation: a' = dR/dt (t, a) / (1 - dR/dz (t, a))
    dt_map = family.eval(t, PadicJet.constant(a_t))
    lam = family.deriv_z(t_val, a_t)
    one = PadicNumber.from_rational(1, R.p)
    a_prime = dt_map.deriv / (one - lam)
    return PadicJet(a_t, a_prime)


# ----------------------------------------------------------------------
# orbit tables (external interface)


def orbit_table(R: RationalMapQp, z0: Point, n: int,
                reference: Point) -> list[dict]:
    """[{i, point, delta_exp to the reference point}] for the first n steps."""
    rows = []
    z = z0
    for i in range(n + 1):
        delta = chordal_distance_exp(z, reference)
        rows.append({
            "i": i,
            "point": None if isinstance(z, _Infinity) else z.to_json(),
            "delta_exp": delta,
        })
        if i < n:
            z = R(z)
    return rows
