"""Truncated power series over Q_p with certified tail bounds.

A series is stored as coefficients c_0..c_M around a center together with a
reference ball and an exponent bound on the sup of the discarded tail over
that ball.  Every operation either propagates a finite tail bound or raises;
nothing is dominated silently.  The sup of a series over a ball of radius p^r
is max_k |c_k| p^(k r), combined with the tail bound, so all strict norm
comparisons reduce to integer exponent comparisons.
"""

from __future__ import annotations

from .errors import (CertificateError, DomainError, InsufficientPrecision,
                     Undecidable, UnboundedTail)
from .padic import MIN_PRECISION, PadicNumber, vp_int

_BIG = 1 << 40


class PadicBall:
    """Closed ball {|z - center| <= p^radius_exp}.

    Open balls never occur as stored domains; strict inequalities are
    expressed as exponent comparisons by the callers.
    """

    __slots__ = ("center", "radius_exp")

    def __init__(self, center: PadicNumber, radius_exp: int):
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius_exp", int(radius_exp))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("PadicBall is immutable")

    @property
    def p(self) -> int:
        return self.center.p

    def contains(self, z: PadicNumber) -> bool:
        """|z - center| <= p^radius_exp, decided on certified valuations."""
        v = z.valuation_of_difference(self.center)
        if v is None:
            # difference vanishes within the certified window; the window is
            # at least the radius or we could not decide.
            window = _joint_window(z, self.center)
            if window < -self.radius_exp:
                raise Undecidable("membership needs more digits")
            return True
        return v >= -self.radius_exp

    def contains_ball(self, other: "PadicBall") -> bool:
        return other.radius_exp <= self.radius_exp and self.contains(other.center)

    def intersects(self, other: "PadicBall") -> bool:
        """Ultrametric: two balls intersect iff one contains the other."""
        r = max(self.radius_exp, other.radius_exp)
        v = self.center.valuation_of_difference(other.center)
        return v is None or v >= -r

    def to_json(self) -> dict:
        return {"center": self.center.to_json(), "radius_exp": self.radius_exp}

    def __repr__(self):
        return f"PadicBall(|z - c| <= {self.p}^{self.radius_exp})"


def _joint_window(x: PadicNumber, y: PadicNumber) -> int:
    a = x.abs_precision
    b = y.abs_precision
    a = _BIG if a is None else a
    b = _BIG if b is None else b
    return min(a, b)


# ----------------------------------------------------------------------
# windowed values for series evaluation (zero-tolerant, unlike PadicNumber)


class _WVal:
    """p^v0 * rep with rep known modulo p^(A - v0); A = absolute window."""

    __slots__ = ("p", "v0", "rep", "A")

    def __init__(self, p: int, v0: int, rep: int, A: int):
        self.p = p
        self.v0 = v0
        self.A = A
        self.rep = rep % p**(A - v0) if A - v0 < _BIG else rep

    @classmethod
    def of(cls, x: PadicNumber, window: int) -> "_WVal":
        """Windowed view of x; exact values are rendered at ``window``."""
        if x.is_zero:
            return cls(x.p, 0, 0, window)
        A = window if x.is_exact else min(window, x.abs_precision)
        n = max(1, A - x.v)
        return cls(x.p, x.v, x.unit_at(n), A)

    def eff_val(self) -> int:
        if self.rep == 0:
            return self.A
        return min(self.v0 + vp_int(self.rep, self.p), self.A)

    def add(self, o: "_WVal") -> "_WVal":
        v0 = min(self.v0, o.v0)
        A = min(self.A, o.A)
        rep = (self.rep * self.p**(self.v0 - v0)
               + o.rep * self.p**(o.v0 - v0))
        return _WVal(self.p, v0, rep, A)

    def mul(self, o: "_WVal") -> "_WVal":
        A = min(self.A + o.eff_val(), o.A + self.eff_val(), _BIG)
        return _WVal(self.p, self.v0 + o.v0, self.rep * o.rep, A)

    def cap(self, abs_exp: int) -> "_WVal":
        return _WVal(self.p, self.v0, self.rep, min(self.A, abs_exp))

    def to_padic(self) -> PadicNumber:
        if self.rep == 0:
            raise InsufficientPrecision(
                f"value indistinguishable from 0 modulo p^{self.A}")
        w = vp_int(self.rep, self.p)
        v = self.v0 + w
        n = self.A - v
        if n < MIN_PRECISION:
            raise InsufficientPrecision(
                f"only {n} certified digits remain (floor {MIN_PRECISION})")
        return PadicNumber(self.p, v, self.rep // self.p**w % self.p**n, n)


# ----------------------------------------------------------------------


class InjectivityCertificate:
    """Outcome of the coefficient-domination test |c_k| r^(k-1) < |c_1|."""

    __slots__ = ("injective", "radius_exp", "margin_exp", "violating_index")

    def __init__(self, injective, radius_exp, margin_exp, violating_index):
        self.injective = injective
        self.radius_exp = radius_exp
        self.margin_exp = margin_exp
        self.violating_index = violating_index

    def __bool__(self):
        return self.injective

    def __repr__(self):
        if self.injective:
            return (f"injective on radius exp {self.radius_exp} "
                    f"(margin p^-{self.margin_exp})")
        return f"not injective: k={self.violating_index} violates domination"


class TruncatedSeries:
    """c_0 + c_1 (z - a) + ... + c_M (z - a)^M with a certified tail bound.

    ``tail_exp`` bounds the sup of the discarded tail over the reference
    ball (norm exponent); None means the tail is exactly zero.
    """

    __slots__ = ("coeffs", "ball", "tail_exp")

    def __init__(self, coeffs, ball: PadicBall, tail_exp: int | None = None):
        cs = tuple(coeffs)
        if not cs:
            raise ValueError("series needs at least the constant coefficient")
        object.__setattr__(self, "coeffs", cs)
        object.__setattr__(self, "ball", ball)
        object.__setattr__(self, "tail_exp",
                           None if tail_exp is None else int(tail_exp))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("TruncatedSeries is immutable")

    @property
    def p(self) -> int:
        return self.ball.p

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, k: int) -> PadicNumber:
        if k <= self.order:
            return self.coeffs[k]
        return PadicNumber.zero(self.p)

    # ------------------------------------------------------------------
    # norms

    def tail_exp_at(self, r_exp: int) -> int | None:
        """Tail bound sharpened to a smaller radius.

        Each tail coefficient satisfies |c_k| <= p^(tail - k R), so on radius
        r <= R the tail sup is at most p^(tail + (M+1)(r - R)).
        """
        if self.tail_exp is None:
            return None
        R = self.ball.radius_exp
        if r_exp > R:
            raise DomainError("radius exceeds the reference ball")
        return self.tail_exp + (self.order + 1) * (r_exp - R)

    def sup_norm_exp(self, r_exp: int | None = None) -> int | None:
        """Exponent e with sup over {|z - a| <= p^r} equal to p^e.

        Combines the stored coefficients with the tail bound; None for the
        zero series.
        """
        r = self.ball.radius_exp if r_exp is None else r_exp
        if r > self.ball.radius_exp:
            raise DomainError("radius exceeds the reference ball")
        best = None
        for k, c in enumerate(self.coeffs):
            if c.is_zero:
                continue
            e = -c.v + k * r
            best = e if best is None else max(best, e)
        t = self.tail_exp_at(r)
        if t is not None:
            best = t if best is None else max(best, t)
        return best

    # ------------------------------------------------------------------
    # injectivity, image balls

    def injectivity_on(self, r_exp: int | None = None) -> InjectivityCertificate:
        """Certify or refute injectivity on radius p^r.

        Injective iff |c_k| r^(k-1) < |c_1| for every k > 1 (including the
        tail).  Raises Undecidable when the stored coefficients pass but the
        tail bound is too weak to decide the strict inequality.
        """
        r = self.ball.radius_exp if r_exp is None else r_exp
        if r > self.ball.radius_exp:
            raise DomainError("radius exceeds the reference ball")
        c1 = self.coefficient(1)
        if c1.is_zero:
            raise CertificateError("injectivity", "linear coefficient is zero")
        lead = -c1.v
        margin = None
        for k in range(2, self.order + 1):
            c = self.coeffs[k]
            if c.is_zero:
                continue
            gap = lead - (-c.v + (k - 1) * r)
            if gap <= 0:
                return InjectivityCertificate(False, r, None, k)
            margin = gap if margin is None else min(margin, gap)
        t = self.tail_exp_at(r)
        if t is not None:
            # tail coefficients: |c_k| r^(k-1) <= p^(t - r) for k > M
            gap = lead - (t - r)
            if gap <= 0:
                raise Undecidable(
                    "undecidable at this truncation: tail bound too weak")
            margin = gap if margin is None else min(margin, gap)
        return InjectivityCertificate(True, r, margin, None)

    def image_ball(self, r_exp: int | None = None) -> PadicBall:
        """Image of the radius-p^r sub-ball: {|w - c_0| <= |c_1| p^r}."""
        r = self.ball.radius_exp if r_exp is None else r_exp
        cert = self.injectivity_on(r)
        if not cert:
            raise CertificateError(
                "image_ball", f"not injective (k={cert.violating_index})")
        return PadicBall(self.coeffs[0], -self.coeffs[1].v + r)

    # ------------------------------------------------------------------
    # ring operations

    def _require_same_frame(self, other: "TruncatedSeries") -> None:
        if not self.ball.center.approx_equal(other.ball.center):
            raise DomainError("series are centered at different points")

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._require_same_frame(other)
        r = min(self.ball.radius_exp, other.ball.radius_exp)
        n = max(len(self.coeffs), len(other.coeffs))
        out = [self.coefficient(k) + other.coefficient(k) for k in range(n)]
        tails = [t for t in (self.tail_exp_at(r), other.tail_exp_at(r))
                 if t is not None]
        return TruncatedSeries(out, PadicBall(self.ball.center, r),
                               max(tails) if tails else None)

    def __neg__(self):
        return TruncatedSeries([-c for c in self.coeffs], self.ball,
                               self.tail_exp)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self + (-other)

    def scale(self, c: PadicNumber) -> "TruncatedSeries":
        if c.is_zero:
            return TruncatedSeries([c], self.ball, None)
        tail = None if self.tail_exp is None else self.tail_exp - c.v
        return TruncatedSeries([a * c for a in self.coeffs], self.ball, tail)

    def shift_constant(self, c: PadicNumber) -> "TruncatedSeries":
        out = list(self.coeffs)
        out[0] = out[0] + c
        return TruncatedSeries(out, self.ball, self.tail_exp)

    def restricted(self, r_exp: int) -> "TruncatedSeries":
        """The same series viewed on a smaller ball, tail sharpened."""
        if r_exp > self.ball.radius_exp:
            raise DomainError("radius exceeds the reference ball")
        return TruncatedSeries(self.coeffs,
                               PadicBall(self.ball.center, r_exp),
                               self.tail_exp_at(r_exp))

    def truncated(self, order: int) -> "TruncatedSeries":
        """Drop coefficients beyond ``order``, folding them into the tail."""
        if order >= self.order:
            return self
        r = self.ball.radius_exp
        dropped = None
        for k in range(order + 1, self.order + 1):
            c = self.coeffs[k]
            if c.is_zero:
                continue
            e = -c.v + k * r
            dropped = e if dropped is None else max(dropped, e)
        tails = [t for t in (self.tail_exp, dropped) if t is not None]
        return TruncatedSeries(self.coeffs[:order + 1], self.ball,
                               max(tails) if tails else None)

    def mul(self, other: "TruncatedSeries", order: int) -> "TruncatedSeries":
        """Truncated product with a certified bound on everything dropped."""
        self._require_same_frame(other)
        p = self.p
        r = min(self.ball.radius_exp, other.ball.radius_exp)
        zero = PadicNumber.zero(p)
        out = [zero] * (order + 1)
        drop = None
        prof_a = [None if c.is_zero else -c.v for c in self.coeffs]
        prof_b = [None if c.is_zero else -c.v for c in other.coeffs]
        for i, a in enumerate(self.coeffs):
            if a.is_zero:
                continue
            for j, b in enumerate(other.coeffs):
                if b.is_zero:
                    continue
                if i + j <= order:
                    out[i + j] = out[i + j] + a * b
                else:
                    e = prof_a[i] + prof_b[j] + (i + j) * r
                    drop = e if drop is None else max(drop, e)
        sup_a = self.sup_norm_exp(r)
        sup_b = other.sup_norm_exp(r)
        tails = [] if drop is None else [drop]
        ta = self.tail_exp_at(r)
        tb = other.tail_exp_at(r)
        if ta is not None and sup_b is not None:
            tails.append(ta + sup_b)
        if tb is not None and sup_a is not None:
            tails.append(tb + sup_a)
        if ta is not None and tb is not None:
            tails.append(ta + tb)
        return TruncatedSeries(out, PadicBall(self.ball.center, r),
                               max(tails) if tails else None)

    def derivative(self) -> "TruncatedSeries":
        cs = [self.coeffs[k] * k for k in range(1, self.order + 1)] \
            or [PadicNumber.zero(self.p)]
        tail = None if self.tail_exp is None \
            else self.tail_exp - self.ball.radius_exp
        return TruncatedSeries(cs, self.ball, tail)

    # ------------------------------------------------------------------
    # evaluation

    def _offset_of(self, x: PadicNumber) -> PadicNumber:
        u = x - self.ball.center if not x.approx_equal(self.ball.center) \
            else PadicNumber.zero(self.p)
        if not u.is_zero and -u.v > self.ball.radius_exp:
            raise DomainError("argument outside the reference ball")
        return u

    def _eval_wval(self, x: PadicNumber, window: int | None = None) -> _WVal:
        from .padic import DEFAULT_PRECISION

        u = self._offset_of(x)
        tail_cap = None
        if self.tail_exp is not None and not u.is_zero:
            tail_cap = -self.tail_exp_at(-u.v)
        finite = [c.abs_precision for c in self.coeffs if not c.is_exact]
        if not u.is_exact:
            finite.append(u.abs_precision)
        cands = [w for w in (window, tail_cap) if w is not None]
        if finite:
            cands.append(max(finite))
        W = max(cands) if cands else DEFAULT_PRECISION + 32
        # exact inputs render at the working window plus room for negative
        # valuations; under-claiming a window is sound, overflowing is not
        shift = max([0] + [-c.v for c in self.coeffs
                           if not c.is_zero and c.v < 0])
        if not u.is_zero and u.v < 0:
            shift += self.order * (-u.v)
        W += shift + 4
        uw = _WVal.of(u, W)
        acc = _WVal.of(self.coeffs[-1], W)
        for c in reversed(self.coeffs[:-1]):
            acc = acc.mul(uw).add(_WVal.of(c, W))
        if tail_cap is not None:
            acc = acc.cap(tail_cap)
        if window is not None:
            acc = acc.cap(window)
        return acc

    def evaluate(self, x: PadicNumber) -> PadicNumber:
        """Value at a point of the reference ball; the result window is
        capped by the tail bound at |x - a|."""
        u = self._offset_of(x)
        if self.tail_exp is None and u.is_exact \
                and all(c.is_exact for c in self.coeffs):
            from fractions import Fraction
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * u.frac + c.frac
            return PadicNumber.from_rational(
                acc, self.p, max(c.N for c in self.coeffs))
        return self._eval_wval(x).to_padic()

    # ------------------------------------------------------------------
    # composition and inversion

    def compose(self, inner: "TruncatedSeries",
                order: int | None = None) -> "TruncatedSeries":
        """self(inner(z)), a series on inner's reference ball.

        Requires the image of inner to land inside self's reference ball.
        """
        order = self.order if order is None else order
        p = self.p
        offset = inner.shift_constant(-self.ball.center)
        r_img = offset.sup_norm_exp()
        if r_img is not None and r_img > self.ball.radius_exp:
            raise DomainError("inner image escapes the outer reference ball")
        one = TruncatedSeries([PadicNumber.from_rational(1, p)],
                              inner.ball, None)
        acc = one.scale(self.coeffs[-1])
        for c in reversed(self.coeffs[:-1]):
            acc = acc.mul(offset, order).shift_constant(c)
        if self.tail_exp is not None:
            outer_tail = self.tail_exp if r_img is None \
                else self.tail_exp_at(r_img)
            tails = [t for t in (acc.tail_exp, outer_tail) if t is not None]
            acc = TruncatedSeries(acc.coeffs, acc.ball,
                                  max(tails) if tails else None)
        return acc

    def invert(self) -> "TruncatedSeries":
        """Compositional inverse of c_1 z + c_2 z^2 + ...

        Requires c_0 = 0 exactly, c_1 != 0, and an injectivity certificate on
        the reference ball.  The inverse g satisfies g(self(z)) = z through
        the stored order.  With gamma = max_k |c_k/c_1| r^(k-1) < 1, every
        normalized inverse coefficient obeys |b_i| r^i <= gamma r, which is
        the uniform tail bound on the full image ball; evaluating on smaller
        balls sharpens it coefficientwise.
        """
        p = self.p
        if not self.coeffs[0].is_zero:
            raise DomainError("normalize first: constant term must be exact 0")
        c1 = self.coefficient(1)
        if c1.is_zero:
            raise DomainError("linear coefficient vanishes")
        cert = self.injectivity_on()
        if not cert:
            raise CertificateError(
                "invert", f"not injective on the reference ball "
                f"(k={cert.violating_index})")
        R = self.ball.radius_exp
        M = self.order
        gamma = -cert.margin_exp if cert.margin_exp is not None else None

        # normalized f~ = z + (c_2/c_1) z^2 + ... ; inverse recursion keeps
        # sum b_j f~(z)^j = z  (mod z^(i+1))
        c1_inv = c1.inv()
        zero = PadicNumber.zero(p)
        one = PadicNumber.from_rational(1, p)
        norm = [zero, one] + [self.coeffs[k] * c1_inv
                              for k in range(2, M + 1)]

        def mul_trunc(a, b):
            out = [zero] * (M + 1)
            for i, x in enumerate(a):
                if x.is_zero:
                    continue
                for j, y in enumerate(b):
                    if i + j > M:
                        break
                    if y.is_zero:
                        continue
                    out[i + j] = out[i + j] + x * y
            return out

        powers = [None, list(norm) + [zero] * (M - len(norm) + 1)]
        for j in range(2, M + 1):
            powers.append(mul_trunc(powers[j - 1], powers[1]))
        b = [zero, one]
        acc = list(powers[1])
        for i in range(1, M):
            coeff = acc[i + 1]
            b_next = -coeff
            b.append(b_next)
            if not b_next.is_zero:
                contrib = powers[i + 1]
                acc = [acc[k] + b_next * contrib[k] for k in range(M + 1)]

        # denormalize: g(w) = g~(w / c_1)
        g_coeffs = [zero]
        for i in range(1, M + 1):
            g_coeffs.append(b[i] * c1_inv**i)
        tail = None
        if gamma is not None or self.tail_exp is not None:
            if gamma is None:
                raise UnboundedTail("no domination margin available")
            tail = gamma + R
        image = PadicBall(PadicNumber.zero(p), -c1.v + R)
        return TruncatedSeries(g_coeffs, image, tail)

    def to_json(self) -> dict:
        return {
            "coeffs": [c.to_json() for c in self.coeffs],
            "ball": self.ball.to_json(),
            "tail_exp": self.tail_exp,
        }

    def __repr__(self):
        t = "0" if self.tail_exp is None else f"p^{self.tail_exp}"
        return (f"TruncatedSeries(order={self.order}, "
                f"radius_exp={self.ball.radius_exp}, tail<={t})")


# ----------------------------------------------------------------------
# equation solving on a ball


def rouche_solve(f: TruncatedSeries, g: TruncatedSeries,
                 ball: PadicBall | None = None) -> PadicNumber:
    """The point z0 with f(z0) = g(z0), certified by norm comparisons.

    Preconditions: f injective on the ball, 0 inside f's image ball, and
    sup |g| strictly below diam f(ball).  Under these, f - g is injective
    with the same image ball, so the root exists, is unique, and lies in the
    base field of the coefficients.  Newton iteration from the center.
    """
    ball = f.ball if ball is None else ball
    r = ball.radius_exp
    if not f.ball.center.approx_equal(ball.center):
        raise DomainError("ball must be centered with the series")
    cert = f.injectivity_on(r)
    if not cert:
        raise CertificateError("rouche", "f is not injective on the ball")
    image = f.image_ball(r)
    if not image.contains(PadicNumber.zero(f.p)):
        raise CertificateError("rouche", "0 is not in the image ball of f")
    sup_g = g.sup_norm_exp(r)
    diam = image.radius_exp
    if sup_g is not None and sup_g >= diam:
        raise CertificateError(
            "rouche",
            f"Rouché condition violated: sup|g| = p^{sup_g} "
            f">= diam f(D) = p^{diam}")
    h = f - g
    hp = h.derivative()
    p = f.p
    z = ball.center
    prev = None
    for _ in range(256):
        val = h._eval_wval(z)
        res = val.eff_val()
        if val.rep == 0 or res >= val.A:
            break
        if prev is not None and res <= prev:
            raise InsufficientPrecision("Newton on f - g stalled")
        prev = res
        dv = hp._eval_wval(z)
        beta = dv.eff_val()
        if dv.rep == 0:
            raise InsufficientPrecision("derivative window collapsed")
        # Newton step z <- z - h(z)/h'(z) with explicit p-power bookkeeping
        u_num = val.rep // p**(res - val.v0)
        u_den = dv.rep // p**(beta - dv.v0)
        m = p**(val.A - res)
        corr = u_num * pow(u_den, -1, m) % m
        z = z - _step_number(p, corr, res - beta, val.A - res)
    residual = h._eval_wval(z)
    assert residual.rep == 0 or residual.eff_val() >= residual.A, \
        "rouche_solve postcondition failed"
    return z


def _step_number(p: int, corr: int, v: int, n: int) -> PadicNumber:
    """corr * p^v as a finite-precision number with n digits."""
    if corr == 0:
        return PadicNumber.zero(p)
    w = vp_int(corr, p)
    unit = corr // p**w % p**max(1, n - w)
    if unit == 0:
        return PadicNumber.zero(p)
    return PadicNumber(p, v + w, unit, max(1, n - w))
