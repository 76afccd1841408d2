"""Exact arithmetic in Q_p at certified absolute precision.

A nonzero element is stored as p^v * u with v an integer valuation and u a
unit known modulo p^N, so the value is known modulo p^(v+N).  Norms are never
floats: |x| = p^(-v) is carried as the exponent v.  Valuations of stored
numbers are always certified; a cancellation that would leave a result
indistinguishable from zero raises InsufficientPrecision instead of
fabricating digits.  Exact zero is a separate state (valuation +infinity).

Numbers built from int or Fraction keep their exact value alongside the digit
rendering, so ring operations among exact inputs stay exact: 1 - 1 is exact
zero, not a precision failure.  Anything that passes through a root finder
(hensel_lift, d-th roots) is finite-precision with an honestly computed
window.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import HenselError, InsufficientPrecision, Undecidable

DEFAULT_PRECISION = 64

# Results whose certified relative precision would fall below this floor are
# rejected; the cascade needs certified valuations, not best-effort digits.
MIN_PRECISION = 4

# Sentinel absolute precision for exact values inside _Approx computations.
_EXACT_WINDOW = 1 << 40


def vp_int(n: int, p: int) -> int:
    """Valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0 is +infinity")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_fraction(x: Fraction, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of 0 is +infinity")
    return vp_int(x.numerator, p) - vp_int(x.denominator, p)


def _render_fraction(x: Fraction, p: int, n: int) -> tuple[int, int]:
    """(valuation, unit mod p^n) of a nonzero rational."""
    v = vp_fraction(x, p)
    num = x.numerator
    den = x.denominator
    if v > 0:
        num //= p**v
    elif v < 0:
        den //= p**(-v)
    u = num * pow(den, -1, p**n) % p**n
    return v, u


class PadicNumber:
    """An element of Q_p: p^v * u with u known modulo p^N.

    Instances are immutable.  ``frac`` is the exact rational value when the
    number was obtained by ring operations on exact inputs, else None.
    """

    __slots__ = ("p", "v", "unit", "N", "frac")

    def __init__(self, p: int, v: int | None, unit: int, N: int,
                 frac: Fraction | None = None):
        if p < 2:
            raise ValueError("p must be at least 2")
        if v is None:
            if unit != 0 or frac not in (None, Fraction(0)):
                raise ValueError("exact zero must have unit 0")
            frac = Fraction(0)
        else:
            if N < 1:
                raise ValueError("precision N must be >= 1")
            if not 0 < unit < p**N or unit % p == 0:
                raise ValueError("unit must be a reduced unit modulo p^N")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "frac", frac)

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("PadicNumber is immutable")

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls, p: int) -> "PadicNumber":
        return cls(p, None, 0, DEFAULT_PRECISION)

    @classmethod
    def from_rational(cls, value, p: int,
                      precision: int = DEFAULT_PRECISION) -> "PadicNumber":
        """Exact element from an int or Fraction, rendered at ``precision``
        digits."""
        x = Fraction(value)
        if x == 0:
            return cls(p, None, 0, precision)
        v, u = _render_fraction(x, p, precision)
        return cls(p, v, u, precision, frac=x)

    # ------------------------------------------------------------------
    # basic queries

    @property
    def is_zero(self) -> bool:
        """Exact zero (valuation +infinity)."""
        return self.v is None

    @property
    def is_exact(self) -> bool:
        return self.frac is not None

    @property
    def abs_precision(self) -> int | None:
        """Exponent A such that the value is known modulo p^A (None = exact)."""
        if self.is_exact:
            return None
        return self.v + self.N

    @property
    def valuation(self) -> int | None:
        return self.v

    @property
    def norm_exp(self) -> int | None:
        """Exponent e with |x| = p^e, or None for exact zero."""
        return None if self.v is None else -self.v

    def in_unit_ball(self) -> bool:
        """|x| <= 1."""
        return self.is_zero or self.v >= 0

    def in_open_unit_ball(self) -> bool:
        """|x| < 1."""
        return self.is_zero or self.v >= 1

    # ------------------------------------------------------------------
    # representative digits

    def unit_at(self, n: int) -> int:
        """The unit part modulo p^n; exact values render at any n."""
        if self.is_zero:
            raise ValueError("exact zero has no unit part")
        if self.is_exact:
            return _render_fraction(self.frac, self.p, n)[1]
        if n > self.N:
            raise InsufficientPrecision(
                f"requested {n} unit digits, only {self.N} certified")
        return self.unit % self.p**n

    def rep_scaled(self, v0: int, abs_exp: int) -> int:
        """Integer representative of x / p^v0 modulo p^(abs_exp - v0).

        Requires v0 <= v(x) and abs_exp <= the certified window of x.
        """
        m = abs_exp - v0
        if self.is_zero:
            return 0
        if v0 > self.v:
            raise ValueError("scaling below the valuation")
        return self.unit_at(max(1, abs_exp - self.v)) * self.p**(self.v - v0) % self.p**m

    def digits(self, n: int | None = None) -> list[int]:
        """Unit digits base p, little-endian."""
        if self.is_zero:
            return []
        n = self.N if n is None else n
        u = self.unit_at(n)
        out = []
        for _ in range(n):
            u, r = divmod(u, self.p)
            out.append(r)
        return out

    # ------------------------------------------------------------------
    # arithmetic

    def _coerce(self, other):
        if isinstance(other, PadicNumber):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        if isinstance(other, (int, Fraction)):
            return PadicNumber.from_rational(other, self.p, self.N)
        return None

    def __add__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        x = self
        if x.is_zero:
            return y
        if y.is_zero:
            return x
        if x.is_exact and y.is_exact:
            return PadicNumber.from_rational(x.frac + y.frac, x.p,
                                             min(x.N, y.N))
        A = _min_window(x.abs_precision, y.abs_precision)
        v0 = min(x.v, y.v)
        rep = (x.rep_scaled(v0, A) + y.rep_scaled(v0, A)) % x.p**(A - v0)
        return _from_rep(x.p, rep, v0, A)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero:
            return self
        if self.is_exact:
            return PadicNumber.from_rational(-self.frac, self.p, self.N)
        return PadicNumber(self.p, self.v, (-self.unit) % self.p**self.N,
                           self.N)

    def __sub__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        return self + (-y)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        x = self
        if x.is_zero or y.is_zero:
            return PadicNumber.zero(x.p)
        if x.is_exact and y.is_exact:
            return PadicNumber.from_rational(x.frac * y.frac, x.p,
                                             min(x.N, y.N))
        n = min(x.N if not x.is_exact else y.N,
                y.N if not y.is_exact else x.N)
        if n < MIN_PRECISION:
            raise InsufficientPrecision("product precision below floor")
        u = x.unit_at(n) * y.unit_at(n) % x.p**n
        return PadicNumber(x.p, x.v + y.v, u, n)

    __rmul__ = __mul__

    def inv(self) -> "PadicNumber":
        if self.is_zero:
            raise ZeroDivisionError("inverse of exact zero")
        if self.is_exact:
            return PadicNumber.from_rational(1 / self.frac, self.p, self.N)
        u = pow(self.unit, -1, self.p**self.N)
        return PadicNumber(self.p, -self.v, u, self.N)

    def __truediv__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        return self * y.inv()

    def __rtruediv__(self, other):
        return self.inv() * other

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inv() ** (-n)
        result = PadicNumber.from_rational(1, self.p, self.N)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # ------------------------------------------------------------------
    # comparisons

    def __eq__(self, other):
        y = self._coerce(other) if isinstance(other, (PadicNumber, int, Fraction)) else None
        if y is None:
            return NotImplemented
        if self.is_zero or y.is_zero:
            return self.is_zero and y.is_zero
        if self.v != y.v:
            return False
        n = min(self.N, y.N)
        return self.unit_at(n) == y.unit_at(n)

    __hash__ = None  # congruence-style equality is not hashable

    def approx_equal(self, other, abs_exp: int | None = None) -> bool:
        """Certified congruence x = y modulo p^abs_exp.

        Defaults to the joint certified window.  Raises Undecidable if a
        stricter modulus is requested than the digits support.
        """
        y = self._coerce(other)
        window = _min_window(self.abs_precision, y.abs_precision)
        if abs_exp is None:
            if window == _EXACT_WINDOW:
                # both exact: literal identity
                return self.frac == y.frac
            abs_exp = window
        elif abs_exp > window:
            raise Undecidable(
                f"congruence modulo p^{abs_exp} exceeds certified window p^{window}")
        v0 = min(self.v if not self.is_zero else abs_exp,
                 y.v if not y.is_zero else abs_exp, abs_exp)
        m = self.p**(abs_exp - v0)
        return (self.rep_scaled(v0, abs_exp) - y.rep_scaled(v0, abs_exp)) % m == 0

    def valuation_of_difference(self, other) -> int | None:
        """Certified v(x - y); None if indistinguishable within the window."""
        y = self._coerce(other)
        window = _min_window(self.abs_precision, y.abs_precision)
        if window == _EXACT_WINDOW:
            diff = self.frac - y.frac
            return None if diff == 0 else vp_fraction(diff, self.p)
        v0 = min(self.v if not self.is_zero else window,
                 y.v if not y.is_zero else window)
        rep = (self.rep_scaled(v0, window) - y.rep_scaled(v0, window)) \
            % self.p**(window - v0)
        if rep == 0:
            return None
        return v0 + vp_int(rep, self.p)

    # ------------------------------------------------------------------
    # serialization & display

    def to_json(self) -> dict:
        """{p, v, unit digits base p little-endian, N}; exact round trip."""
        return {
            "p": self.p,
            "v": self.v,
            "digits": self.digits(),
            "N": self.N,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PadicNumber":
        p = data["p"]
        if data["v"] is None:
            return cls(p, None, 0, data["N"])
        u = 0
        for d in reversed(data["digits"]):
            u = u * p + d
        return cls(p, data["v"], u, data["N"])

    def __repr__(self):
        if self.is_zero:
            return f"PadicNumber({self.p}, 0 exact)"
        return (f"PadicNumber(p={self.p}, v={self.v}, unit={self.unit}, "
                f"N={self.N})")

    def __str__(self):
        if self.is_zero:
            return "0"
        shown = self.digits(min(self.N, 12))
        tail = "..." if self.N > 12 else ""
        return f"{self.p}^{self.v} * {shown}{tail} (little-endian digits)"


def _min_window(a: int | None, b: int | None) -> int:
    a = _EXACT_WINDOW if a is None else a
    b = _EXACT_WINDOW if b is None else b
    return min(a, b)


def _from_rep(p: int, rep: int, v0: int, abs_exp: int) -> PadicNumber:
    """Build a finite-precision number from a representative of x/p^v0
    modulo p^(abs_exp - v0)."""
    if rep == 0:
        raise InsufficientPrecision(
            f"result indistinguishable from 0 modulo p^{abs_exp}")
    w = vp_int(rep, p)
    v = v0 + w
    n = abs_exp - v
    if n < MIN_PRECISION:
        raise InsufficientPrecision(
            f"cancellation left {n} certified digits (floor {MIN_PRECISION})")
    return PadicNumber(p, v, rep // p**w % p**n, n)


def padic(value, p: int, precision: int = DEFAULT_PRECISION) -> PadicNumber:
    """Shorthand exact constructor."""
    return PadicNumber.from_rational(value, p, precision)


# ----------------------------------------------------------------------
# first-order jets in the parameter


class PadicJet:
    """value + eps * deriv with eps^2 = 0; tracks d/dt through arithmetic."""

    __slots__ = ("value", "deriv")

    def __init__(self, value: PadicNumber, deriv: PadicNumber):
        if value.p != deriv.p:
            raise ValueError("mixed primes in jet")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "deriv", deriv)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("PadicJet is immutable")

    @classmethod
    def constant(cls, x: PadicNumber) -> "PadicJet":
        return cls(x, PadicNumber.zero(x.p))

    @classmethod
    def variable(cls, x: PadicNumber) -> "PadicJet":
        return cls(x, PadicNumber.from_rational(1, x.p, x.N))

    def _coerce(self, other):
        if isinstance(other, PadicJet):
            return other
        if isinstance(other, PadicNumber):
            return PadicJet.constant(other)
        if isinstance(other, (int, Fraction)):
            return PadicJet.constant(
                PadicNumber.from_rational(other, self.value.p))
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return PadicJet(self.value + o.value, self.deriv + o.deriv)

    __radd__ = __add__

    def __neg__(self):
        return PadicJet(-self.value, -self.deriv)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return PadicJet(self.value * o.value,
                        self.value * o.deriv + self.deriv * o.value)

    __rmul__ = __mul__

    def inv(self) -> "PadicJet":
        iv = self.value.inv()
        return PadicJet(iv, -(self.deriv * iv * iv))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inv()

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = PadicJet.constant(
            PadicNumber.from_rational(1, self.value.p))
        for _ in range(n):
            result = result * self
        return result

    def __repr__(self):
        return f"PadicJet({self.value!r}, d/dt={self.deriv!r})"


# ----------------------------------------------------------------------
# polynomials over Q_p


class Poly:
    """Dense polynomial with PadicNumber coefficients, low degree first."""

    __slots__ = ("p", "coeffs")

    def __init__(self, coeffs, p: int | None = None):
        cs = list(coeffs)
        if not cs:
            raise ValueError("empty coefficient list")
        if p is None:
            p = cs[0].p
        cs = [c if isinstance(c, PadicNumber)
              else PadicNumber.from_rational(c, p) for c in cs]
        while len(cs) > 1 and cs[-1].is_zero:
            cs.pop()
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Poly is immutable")

    @classmethod
    def from_rationals(cls, values, p: int,
                       precision: int = DEFAULT_PRECISION) -> "Poly":
        return cls([PadicNumber.from_rational(x, p, precision)
                    for x in values], p)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        """Horner evaluation; works for PadicNumber and PadicJet."""
        if isinstance(x, PadicJet):
            acc = PadicJet.constant(self.coeffs[-1])
            for c in reversed(self.coeffs[:-1]):
                acc = acc * x + c
            return acc
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Poly":
        if self.degree == 0:
            return Poly([PadicNumber.zero(self.p)], self.p)
        return Poly([self.coeffs[k] * k for k in range(1, self.degree + 1)],
                    self.p)

    def shift(self, a: PadicNumber) -> "Poly":
        """Taylor coefficients at a: returns q with q(u) = self(a + u).

        Repeated synthetic division; exact when inputs are exact.
        """
        work = list(self.coeffs)
        out = []
        for _ in range(len(work)):
            # divide work by (x - 0) after substituting x -> x + a:
            # classic Horner shift accumulating remainders
            rem = work[-1]
            new = [work[-1]]
            for c in reversed(work[:-1]):
                rem = rem * a + c
                new.append(rem)
            new.reverse()
            out.append(new[0])
            work = new[1:]
            if not work:
                break
        return Poly(out, self.p)

    def __add__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        zero = PadicNumber.zero(self.p)
        a = list(self.coeffs) + [zero] * (n - len(self.coeffs))
        b = list(other.coeffs) + [zero] * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)], self.p)

    def __neg__(self):
        return Poly([-c for c in self.coeffs], self.p)

    def __sub__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (PadicNumber, int, Fraction)):
            return Poly([c * other for c in self.coeffs], self.p)
        if not isinstance(other, Poly):
            return NotImplemented
        zero = PadicNumber.zero(self.p)
        out = [zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_zero:
                continue
            for j, b in enumerate(other.coeffs):
                if b.is_zero:
                    continue
                out[i + j] = out[i + j] + a * b
        return Poly(out, self.p)

    __rmul__ = __mul__

    def min_coeff_valuation(self) -> int:
        vs = [c.v for c in self.coeffs if not c.is_zero]
        if not vs:
            raise ValueError("zero polynomial")
        return min(vs)

    def __repr__(self):
        return f"Poly(deg={self.degree}, p={self.p})"


# ----------------------------------------------------------------------
# interval-style modular windows used inside the root finders


class _Approx:
    """An integer known modulo p^A (A = certified window).  rep is reduced.

    Used only inside Newton iterations, where legitimate residuals are
    congruent to 0 within their window and must not raise.
    """

    __slots__ = ("p", "rep", "A")

    def __init__(self, p: int, rep: int, A: int):
        self.p = p
        self.A = A
        self.rep = rep % p**A if A < _EXACT_WINDOW else rep

    def val(self) -> int:
        """Valuation, capped at the window A."""
        if self.rep == 0:
            return self.A
        return min(vp_int(self.rep, self.p), self.A)

    def add(self, other: "_Approx") -> "_Approx":
        A = min(self.A, other.A)
        return _Approx(self.p, self.rep + other.rep, A)

    def mul(self, other: "_Approx") -> "_Approx":
        A = min(self.A + other.val(), other.A + self.val(), _EXACT_WINDOW)
        return _Approx(self.p, self.rep * other.rep, A)

    @classmethod
    def of(cls, x: PadicNumber, window: int) -> "_Approx":
        """Representative of x modulo p^min(window, certified).  Requires
        v(x) >= 0."""
        if x.is_zero:
            return cls(x.p, 0, _EXACT_WINDOW if x.is_exact else window)
        if x.v < 0:
            raise ValueError("negative valuation has no integer representative")
        A = window if x.is_exact else min(window, x.abs_precision)
        return cls(x.p, x.unit_at(max(1, A - x.v)) * x.p**x.v, A)


def _poly_window_eval(coeffs: list[_Approx], y: _Approx) -> _Approx:
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc.mul(y).add(c)
    return acc


# ----------------------------------------------------------------------
# Hensel lifting (Newton iteration with certified windows)


def hensel_lift(poly, seed: PadicNumber,
                target_abs_exp: int | None = None) -> PadicNumber:
    """Certified root of ``poly`` near ``seed``.

    Requires the strong condition |F(y0)| < |F'(y0)|^2, which covers the wild
    case |F'| < 1.  Returns y with F(y) = 0 modulo p^target and
    |y - y0| <= |F(y0)| / |F'(y0)|.  The result's precision window is
    computed from the residual, never assumed.

    ``poly`` may be any object with ``coeffs`` (PadicNumber list) and
    evaluation via Horner; in practice a Poly.
    """
    p = seed.p
    coeffs = list(poly.coeffs)

    # trivial exact root (e.g. linear F = y - c with exact data)
    if seed.is_exact and all(c.is_exact for c in coeffs):
        val = Fraction(0)
        for c in reversed(coeffs):
            val = val * seed.frac + c.frac
        if val == 0:
            return seed

    # normalize denominators away so integer windows apply
    shift = max(0, -min((c.v for c in coeffs if not c.is_zero), default=0))
    if shift:
        scale = PadicNumber.from_rational(Fraction(p) ** shift, p)
        coeffs = [c * scale for c in coeffs]
    if not seed.is_zero and seed.v < 0:
        raise HenselError("seeds with negative valuation are not supported; "
                          "rescale the variable first")

    # a generous working window: enough digits that the Newton loop is never
    # the binding constraint; certification below uses honest windows.
    coeff_windows = [c.abs_precision for c in coeffs]
    finite = [w for w in coeff_windows if w is not None]
    seed_w = seed.abs_precision
    if seed_w is not None:
        finite.append(seed_w)
    base_window = min(finite) if finite else \
        (target_abs_exp if target_abs_exp is not None else DEFAULT_PRECISION)
    window = max(base_window, target_abs_exp or 0) + shift + 8

    if len(coeffs) < 2:
        raise ValueError("hensel_lift needs degree >= 1")
    acoeffs = [_Approx.of(c, window) for c in coeffs]
    dcoeffs = [_Approx.of(c * k, window)
               for k, c in enumerate(coeffs) if k >= 1]
    y = _Approx.of(seed, window)

    f = _poly_window_eval(acoeffs, y)
    fp = _poly_window_eval(dcoeffs, y)
    beta = fp.val()
    if fp.rep == 0:
        raise HenselError("derivative indistinguishable from zero at seed")
    if f.val() <= 2 * beta:
        raise HenselError(
            f"no certified root from this seed: v(F(y0))={f.val()} "
            f"<= 2*v(F'(y0))={2 * beta}")

    # target_abs_exp is the modulus of the residual F(y); the scaled
    # polynomial is p^shift * F.
    stop = target_abs_exp + shift if target_abs_exp is not None else None
    prev_res = f.val()
    for _ in range(256):
        res = f.val()
        if (stop is not None and res >= stop) or res >= f.A:
            break
        # Newton step: y <- y - F(y)/F'(y)
        u_f = f.rep // p**res
        u_fp = fp.rep // p**beta
        m = p**(window - res)
        delta = p**(res - beta) * (u_f * pow(u_fp, -1, m) % m)
        y = _Approx(p, y.rep - delta, window)
        f = _poly_window_eval(acoeffs, y)
        fp = _poly_window_eval(dcoeffs, y)
        beta = fp.val()
        if f.val() <= prev_res and f.rep != 0:
            raise HenselError("Newton iteration stalled")
        prev_res = f.val()

    res = f.val()
    if stop is not None and res < stop:
        raise InsufficientPrecision("precision budget exceeded during lift")

    # certified window of the root: sensitivity to the residual is 1/|F'|,
    # and res/beta both refer to the p^shift-scaled polynomial.
    root_abs = res - beta
    if root_abs <= 0:
        raise InsufficientPrecision("root window is empty")
    if y.rep % p**root_abs == 0:
        if seed.is_zero:
            return seed
        raise InsufficientPrecision("root indistinguishable from zero")
    root = _from_rep(p, y.rep % p**root_abs, 0, root_abs)

    # postcondition asserted on every return
    check = _poly_window_eval(acoeffs, _Approx.of(root, root_abs))
    assert check.val() >= min(check.A, stop if stop is not None else res), \
        "hensel_lift postcondition failed"
    return root


# ----------------------------------------------------------------------
# d-th power decision procedure


class DthPowerCertificate:
    """Transcript of a d-th power membership test."""

    __slots__ = ("ok", "witness", "d", "reason", "seed", "seed_modulus_exp")

    def __init__(self, ok, witness, d, reason, seed, seed_modulus_exp):
        self.ok = ok
        self.witness = witness
        self.d = d
        self.reason = reason
        self.seed = seed
        self.seed_modulus_exp = seed_modulus_exp

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {
            "is_dth_power": self.ok,
            "d": self.d,
            "reason": self.reason,
            "seed": self.seed,
            "seed_modulus_exp": self.seed_modulus_exp,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


def is_dth_power(x: PadicNumber, d: int) -> DthPowerCertificate:
    """Decide x in (Q_p^*)^d and produce a witness root when true.

    Decision procedure: d must divide v(x); then the unit part must be a d-th
    power modulo p^(2*w+1) with w = v_p(d), which is exactly the strong-Hensel
    threshold for y^d - u.  The witness is the lift of the smallest
    nonnegative residue seed (deterministic across runs).
    """
    if x.is_zero:
        raise ValueError("x must be nonzero")
    if d < 1:
        raise ValueError("d must be positive")
    p = x.p
    w = vp_int(d, p) if d % p == 0 else 0
    # wild-case margin: 2 v_p(d) + 2 certified digits of the unit
    if not x.is_exact and x.N < 2 * w + 2:
        raise Undecidable(
            f"d-th power test needs {2 * w + 2} unit digits, have {x.N}")

    if x.v % d != 0:
        return DthPowerCertificate(False, None, d, "valuation not divisible",
                                   None, 2 * w + 1)

    m_exp = 2 * w + 1
    m = p**m_exp
    u_res = x.unit_at(m_exp)
    seed = None
    for s in range(1, m):
        if s % p != 0 and pow(s, d, m) == u_res:
            seed = s
            break
    if seed is None:
        return DthPowerCertificate(False, None, d,
                                   "unit class is not a d-th power",
                                   None, m_exp)

    n_digits = x.N
    unit_part = (PadicNumber.from_rational(x.frac / Fraction(p)**x.v, p, n_digits)
                 if x.is_exact
                 else PadicNumber(p, 0, x.unit, x.N))
    f = Poly([-unit_part] + [0] * (d - 1) + [1], p)
    y = hensel_lift(f, PadicNumber.from_rational(seed, p, n_digits),
                    target_abs_exp=n_digits)
    witness = y * PadicNumber.from_rational(Fraction(p)**(x.v // d), p,
                                            n_digits)
    assert (witness**d).approx_equal(x), \
        "d-th root witness failed back-substitution"
    return DthPowerCertificate(True, witness, d, "unit class matched",
                               seed, m_exp)
