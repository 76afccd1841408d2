"""The Misiurewicz-cascade machinery for P_t(z) = -p^(-d) z (z-1)^d + t.

The marked critical point is 1 (local degree d there, wild when p | d).  At
t = 0 the critical point lands on the repelling fixed point 0 in one step.
This module certifies the bifurcation conditions, computes the homoclinic
orbit through the inverse branch into the open unit ball, its asymptotic
position, the d-th-power admissibility witnesses, and then the cascade: for
each level it finds the parameter where the critical orbit first returns
very close to the critical point and then lands exactly on the continued
repelling fixed point, certifies transversality by jet arithmetic, and
certifies admissibility of the new homoclinic orbit so the construction can
be iterated.

Every inequality that the construction relies on is checked as an integer
exponent comparison and recorded; nothing is assumed from asymptotic
"large r" reasoning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (CertificateError, DomainError, HenselError,
                     InsufficientPrecision, Undecidable)
from .padic import (DEFAULT_PRECISION, DthPowerCertificate, PadicJet,
                    PadicNumber, Poly, hensel_lift, is_dth_power, padic,
                    vp_int)
from .series import PadicBall, TruncatedSeries
from .dynamics import (RationalMapQp, chordal_distance_exp,
                       fixed_point_continuation, orbit_table)

SCHEMA_VERSION = "1"


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FamilyConfig:
    """Parameters of one cascade computation.

    k defaults to d (needed for admissibility at the new parameter) and
    r_hat to the smallest value making the block-return margin strict.
    """

    p: int
    d: int = 2
    precision: int = DEFAULT_PRECISION          # reporting precision N
    series_order: int = 32                      # truncation order M
    n_back: int = 24                            # backward orbit length shown
    r: int = 2                                  # cascade depth
    r_hat: int | None = None                    # secondary depth
    k: int | None = None                        # block count

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.precision < 8:
            raise ValueError("precision must be at least 8")
        if self.r < 1:
            raise ValueError("r must be at least 1")

    @property
    def wild(self) -> bool:
        return self.d % self.p == 0

    @property
    def wild_valuation(self) -> int:
        return vp_int(self.d, self.p) if self.wild else 0

    @property
    def blocks(self) -> int:
        return self.d if self.k is None else self.k

    def secondary_depth(self, r: int, m0: int = 0) -> int:
        """Smallest r_hat > r with |lambda|^-(m_hat - m) < |p^2 d d'|."""
        if self.r_hat is not None:
            return self.r_hat
        # (m_hat - m) d = (r_hat - r) d^2 d' must exceed 2 + v_p(d d')
        need = 2 + self.wild_valuation + 1
        step = max(1, math.ceil(need / self.d**2))
        return r + step


@dataclass(frozen=True)
class CheckRecord:
    """One named exponent comparison from the construction."""

    name: str
    lhs: int | None
    op: str
    rhs: int | None
    passed: bool
    note: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "op": self.op,
                "rhs": self.rhs, "pass": self.passed, "note": self.note}


class CheckList:
    def __init__(self):
        self.records: list[CheckRecord] = []

    def require(self, name, lhs, op, rhs, note="", fatal=True):
        ok = {
            ">=": lambda a, b: a >= b,
            ">": lambda a, b: a > b,
            "<=": lambda a, b: a <= b,
            "<": lambda a, b: a < b,
            "==": lambda a, b: a == b,
        }[op](lhs, rhs) if lhs is not None and rhs is not None else lhs is None
        self.records.append(CheckRecord(name, lhs, op, rhs, ok, note))
        if fatal and not ok:
            raise CertificateError(name, f"{lhs} {op} {rhs} fails ({note})")
        return ok

    def note_pass(self, name, note=""):
        self.records.append(CheckRecord(name, None, "", None, True, note))


class CriticalCascadeFamily:
    """P_t(z) = -p^(-d) z (z - 1)^d + t and its calculus."""

    def __init__(self, p: int, d: int, precision: int = DEFAULT_PRECISION):
        self.p = p
        self.d = d
        self.precision = precision
        self.scale = Fraction(-1, p**d)
        # z (z-1)^d expanded: sum_j C(d,j) (-1)^(d-j) z^(j+1)
        body = [Fraction(0)] * (d + 2)
        for j in range(d + 1):
            body[j + 1] = math.comb(d, j) * Fraction(-1)**(d - j)
        self._body = body  # coefficients of z (z-1)^d

    def one(self):
        return padic(1, self.p, self.precision)

    def map_at(self, t: PadicNumber) -> RationalMapQp:
        coeffs = [t] + [padic(self.scale * c, self.p, self.precision)
                        for c in self._body[1:]]
        return RationalMapQp(Poly(coeffs, self.p))

    def eval(self, t, z):
        """P_t(z); works for PadicNumber and PadicJet arguments."""
        jet = isinstance(t, PadicJet) or isinstance(z, PadicJet)
        c = padic(self.scale, self.p, self.precision)
        one = self.one()
        if jet:
            if not isinstance(t, PadicJet):
                t = PadicJet.constant(t)
            if not isinstance(z, PadicJet):
                z = PadicJet.constant(z)
            c = PadicJet.constant(c)
            one = PadicJet.constant(one)
        return c * z * (z - one)**self.d + t

    def deriv_z(self, t, z):
        """dP/dz = -p^(-d) (z-1)^(d-1) ((d+1) z - 1); independent of t."""
        c = padic(self.scale, self.p, self.precision)
        one = self.one()
        dp1 = padic(self.d + 1, self.p, self.precision)
        if isinstance(z, PadicJet):
            c = PadicJet.constant(c)
            one = PadicJet.constant(one)
            dp1 = PadicJet.constant(dp1)
        return c * (z - one)**(self.d - 1) * (dp1 * z - one)

    def orbit(self, t, z, n: int) -> list:
        out = [z]
        for _ in range(n):
            z = self.eval(t, z)
            out.append(z)
        return out

    @property
    def multiplier0(self) -> PadicNumber:
        """Multiplier of the fixed point 0 at t = 0: -(-1)^d p^(-d)."""
        return padic(-Fraction(-1)**self.d * Fraction(1, self.p**self.d),
                     self.p, self.precision)

    @property
    def rho_tilde(self) -> PadicNumber:
        """Leading coefficient of P_t at the critical point: exact -p^(-d),
        the same for every parameter since P_t(1+u) = t + rho (u^d + u^(d+1))."""
        return padic(self.scale, self.p, self.precision)

    def shifted_critical_poly(self, t: PadicNumber,
                              target: PadicNumber) -> Poly:
        """u^d (1 + u) - p^d (t - target), whose root u gives the preimage
        1 + u of target under P_t near the critical point."""
        pd = padic(self.p**self.d, self.p, self.precision)
        rhs = pd * (t - target)
        coeffs = [-rhs] + [padic(0, self.p)] * (self.d - 1) \
            + [padic(1, self.p, self.precision),
               padic(1, self.p, self.precision)]
        return Poly(coeffs, self.p)


# ----------------------------------------------------------------------
# reports and certificates


@dataclass(frozen=True)
class ConditionReport:
    name: str
    passed: bool
    detail: str

    def to_json(self):
        return {"condition": self.name, "pass": self.passed,
                "detail": self.detail}


@dataclass(frozen=True)
class MisiurewiczReport:
    config: FamilyConfig
    conditions: tuple[ConditionReport, ...]
    ell: int
    lambda0: PadicNumber
    rho: PadicNumber
    rho_prime: PadicNumber
    d_prime: int
    wild: bool

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.conditions)

    def to_json(self):
        return {
            "p": self.config.p, "d": self.config.d, "wild": self.wild,
            "ell": self.ell,
            "lambda0": self.lambda0.to_json(),
            "rho": self.rho.to_json(),
            "rho_prime": self.rho_prime.to_json(),
            "d_prime": self.d_prime,
            "conditions": [c.to_json() for c in self.conditions],
        }


@dataclass(frozen=True)
class HomoclinicData:
    """Backward orbit, asymptotic position, and the convergence record of
    the product formula (valuations of factor_i - 1, strictly increasing)."""

    backward: tuple[PadicNumber, ...]
    zeta: PadicNumber
    factor_gaps: tuple[int, ...]

    def to_json(self):
        return {
            "backward_orbit": [z.to_json() for z in self.backward],
            "zeta": self.zeta.to_json(),
            "factor_gaps": list(self.factor_gaps),
        }


@dataclass(frozen=True)
class AdmissibilityCertificate:
    m0: int
    zeta: PadicNumber
    rho: PadicNumber
    rho_prime: PadicNumber
    xi: PadicNumber
    xi_prime: PadicNumber
    transcript: DthPowerCertificate
    residual_ok: bool

    def to_json(self):
        return {
            "m0": self.m0,
            "zeta": self.zeta.to_json(),
            "rho": self.rho.to_json(),
            "rho_prime": self.rho_prime.to_json(),
            "xi": self.xi.to_json(),
            "xi_prime": self.xi_prime.to_json(),
            "dth_power": self.transcript.to_json(),
            "witness_residual_ok": self.residual_ok,
        }


@dataclass(frozen=True)
class TransversalityCertificate:
    derivative: PadicNumber
    valuation: int
    norm_identity_ok: bool

    def to_json(self):
        return {
            "derivative": self.derivative.to_json(),
            "valuation": self.valuation,
            "norm_identity_ok": self.norm_identity_ok,
        }


@dataclass(frozen=True)
class BifurcationData:
    """Everything the cascade step needs about its base bifurcation."""

    level: int
    tau: PadicNumber            # base parameter
    ell: int                    # steps from the critical point to the fixed point
    a_tau: PadicNumber
    lam: PadicNumber            # multiplier of a_tau
    zeta: PadicNumber
    rho: PadicNumber            # leading coefficient of P^ell at 1
    rho_prime: PadicNumber      # d/dt (P_t^ell(1) - a_t) at tau
    m0: int
    xi: PadicNumber
    xi_prime: PadicNumber
    base_orbit: tuple[PadicNumber, ...]   # P_tau^j(1), j = 0..ell


@dataclass
class CascadeResult:
    level: int
    r: int
    r_hat: int
    k: int
    m: int
    m_hat: int
    ell: int
    ell_r: int
    t_r: PadicNumber
    a_tr: PadicNumber
    lam_tr: PadicNumber
    orbit: tuple[PadicNumber, ...]
    blocks: tuple[PadicNumber, ...]
    near_return_index: int
    near_return_exp: int
    near_return_predicted: int
    exact_hit_window: int
    iteration_gaps: tuple[int, ...]
    checks: tuple[CheckRecord, ...]
    transversality: TransversalityCertificate | None = None
    admissibility: AdmissibilityCertificate | None = None
    next_base: BifurcationData | None = None

    def to_json(self):
        return {
            "level": self.level,
            "r": self.r, "r_hat": self.r_hat, "k": self.k,
            "m": self.m, "m_hat": self.m_hat,
            "ell": self.ell, "ell_r": self.ell_r,
            "t_r": self.t_r.to_json(),
            "valuation_t_r": self.t_r.v,
            "a_t_r": self.a_tr.to_json(),
            "orbit": [z.to_json() for z in self.orbit],
            "blocks": [w.to_json() for w in self.blocks],
            "near_return": {"index": self.near_return_index,
                            "exponent": self.near_return_exp,
                            "predicted_at_least": self.near_return_predicted},
            "exact_hit_window": self.exact_hit_window,
            "iteration_gaps": list(self.iteration_gaps),
            "checks": [c.to_json() for c in self.checks],
            "transversality": None if self.transversality is None
            else self.transversality.to_json(),
            "admissibility": None if self.admissibility is None
            else self.admissibility.to_json(),
        }


# ----------------------------------------------------------------------


class MisiurewiczCascade:
    """Driver object binding a FamilyConfig to the cascade operations."""

    def __init__(self, config: FamilyConfig):
        self.config = config
        self.extra_margin = 0
        self.family = CriticalCascadeFamily(config.p, config.d,
                                            precision=self.work_precision)

    # -- working precisions -------------------------------------------

    @property
    def work_precision(self) -> int:
        c = self.config
        return c.precision + 2 * c.wild_valuation + 8 \
            + getattr(self, "extra_margin", 0)

    def _with_retries(self, fn):
        """Re-run a certificate computation with a growing precision margin
        whenever a window proves too small for the configured precision."""
        last = None
        for _ in range(8):
            try:
                return fn()
            except _NeedMorePrecision as exc:
                self.extra_margin += exc.deficit + 8
                last = exc
            except Undecidable as exc:
                self.extra_margin += 16
                last = exc
            self.family.precision = self.work_precision
        raise InsufficientPrecision(
            f"could not certify at the configured precision: {last}")

    def _exact(self, x, precision=None) -> PadicNumber:
        return padic(x, self.config.p, precision or self.work_precision)

    # -- spec operations ------------------------------------------------

    def family_eval(self, t, z):
        return self.family.eval(t, z)

    def verify_misiurewicz_conditions(self) -> MisiurewiczReport:
        """Check the four bifurcation conditions at t = 0.

        The critical point 1 maps to the fixed point 0 in one step, the
        multiplier is -(-1)^d p^(-d) (repelling), the backward orbit gives
        infinitely many unramified preimages, the parameter derivative of
        P_t(1) - a_t is a unit, and the local degree at 1 equals d.
        """
        fam = self.family
        p, d = self.config.p, self.config.d
        conds = []
        zero = PadicNumber.zero(p)
        one = self._exact(1)

        # (M1): P_0(1) = 0, 0 fixed, multiplier repelling; ell = 1
        img = fam.eval(zero, one)
        fixed = fam.eval(zero, zero)
        lam0 = fam.deriv_z(zero, zero)
        m1 = img.is_zero and fixed.is_zero and lam0.v == -d
        conds.append(ConditionReport(
            "M1", m1,
            f"P_0(1) = 0 fixed with multiplier valuation {lam0.v} = -d"))

        # (M2): n_back distinct unramified backward preimages of 1
        back = self.backward_orbit(zero, one, self.config.n_back)
        distinct = all(back[i].v == (i + 1) * d for i in range(len(back)))
        unramified = all(not fam.deriv_z(zero, z).is_zero for z in back)
        conds.append(ConditionReport(
            "M2", distinct and unramified,
            f"{len(back)} backward preimages in the open unit ball, "
            f"valuations i*d, derivative nonvanishing"))

        # (M3): jet of t -> P_t(1) - a_t at 0 is nonzero (d' = 1)
        t_jet = PadicJet.variable(zero)
        a_jet = fixed_point_continuation(fam, t_jet, zero)
        crit_jet = fam.eval(t_jet, PadicJet.constant(one))
        diff = crit_jet - a_jet
        rho_prime = diff.deriv
        m3 = (not rho_prime.is_zero) and rho_prime.v == 0
        conds.append(ConditionReport(
            "M3", m3,
            f"d/dt (P_t(1) - a_t) at 0 has valuation "
            f"{rho_prime.v} (unit, so d' = 1)"))

        # (M4): local degree at the critical point equals d
        R0 = fam.map_at(zero)
        expansion = R0.local_expansion(one, d + 1)
        low_zero = all(expansion.coeffs[k].is_zero for k in range(1, d))
        rho = expansion.coefficient(d)
        m4 = low_zero and (not rho.is_zero) and rho.v == -d
        conds.append(ConditionReport(
            "M4", m4, f"P_t(1+u) = t + rho u^d (1+u) with v(rho) = {rho.v}"))

        return MisiurewiczReport(
            config=self.config, conditions=tuple(conds), ell=1,
            lambda0=lam0, rho=rho, rho_prime=rho_prime, d_prime=1,
            wild=self.config.wild)

    def backward_orbit(self, t: PadicNumber, w: PadicNumber,
                       steps: int) -> list[PadicNumber]:
        """g_t^i(w) for i = 1..steps, the inverse branch into {|z| < 1}.

        Each step solves z (z-1)^d = p^d (t - w') from the seed 0, where the
        strong Hensel condition holds whenever |w'| <= 1 and |t| <= 1.
        """
        if not (t.in_unit_ball() and w.in_unit_ball()):
            raise DomainError("backward branch needs |w| <= 1 and |t| <= 1")
        p, d = self.config.p, self.config.d
        out = []
        cur = w
        zero = PadicNumber.zero(p)
        pd = self._exact(self.config.p**self.config.d)
        body = [padic(c, p, self.work_precision)
                for c in self.family._body]
        desired = self.work_precision + 2 * d + 4
        for _ in range(steps):
            rhs = pd * (t - cur) if not (t.is_zero and cur.is_zero) \
                else PadicNumber.zero(p)
            coeffs = list(body)
            coeffs[0] = coeffs[0] - rhs if not rhs.is_zero else coeffs[0]
            cap = rhs.abs_precision
            target = desired if cap is None else min(desired, cap)
            cur = hensel_lift(Poly(coeffs, p), zero, target_abs_exp=target)
            if not cur.is_zero and cur.v < 1:
                raise HenselError("backward branch left the open unit ball")
            out.append(cur)
        return out

    def asymptotic_position(self, steps: int | None = None,
                            t: PadicNumber | None = None,
                            a: PadicNumber | None = None,
                            lam: PadicNumber | None = None,
                            start: PadicNumber | None = None
                            ) -> HomoclinicData:
        """The limit of lam^i (z_{-i} - a) along the backward orbit.

        Computed as (start - a) * prod_i factor_i with
        factor_i = lam (z_{-(i+1)} - a) / (z_{-i} - a); the product stops
        once a factor is 1 at working precision.  At the base parameter the
        factor equals (1 - z_{-(i+1)})^(-d), which is checked.
        """
        p, d = self.config.p, self.config.d
        t = PadicNumber.zero(p) if t is None else t
        a = PadicNumber.zero(p) if a is None else a
        lam = self.family.multiplier0 if lam is None else lam
        start = self._exact(1) if start is None else start
        window = self.work_precision
        cap = steps if steps is not None else \
            4 + (window + 2 * d) // d * 2
        base_case = t.is_zero and a.is_zero

        zeta = start - a
        gaps = []
        cur = start
        converged = False
        for _ in range(cap):
            nxt = self.backward_orbit(t, cur, 1)[0]
            factor = lam * (nxt - a) / (cur - a)
            if base_case:
                alt = (self._exact(1) - nxt).inv() ** d
                assert factor.approx_equal(alt), \
                    "product factor disagrees with (1 - g(z))^-d at base"
            gap = factor.valuation_of_difference(self._exact(1))
            if gap is None:
                gaps.append(min(factor.abs_precision or window, window))
                converged = True
                break
            gaps.append(gap)
            if gap >= window:
                converged = True
                break
            zeta = zeta * factor
            cur = nxt
        if not converged:
            raise InsufficientPrecision(
                "precision exhausted before the asymptotic position "
                "converged; raise steps or the working precision")
        return HomoclinicData(
            backward=tuple(self.backward_orbit(
                t, start, min(self.config.n_back, 64))),
            zeta=zeta, factor_gaps=tuple(gaps))

    def admissibility_check(self, zeta: PadicNumber, rho: PadicNumber,
                            rho_prime: PadicNumber, m0: int = 0,
                            lam: PadicNumber | None = None
                            ) -> AdmissibilityCertificate:
        """d-th power test for -lam^m0 zeta / rho, with witness xi solving
        rho xi^d = -lam^m0 zeta; since d' = 1 the second condition is a
        division: xi' = lam^m0 zeta / rho_prime."""
        d = self.config.d
        lam = self.family.multiplier0 if lam is None else lam
        argument = -(lam**m0) * zeta / rho
        transcript = is_dth_power(argument, d)
        if not transcript.ok:
            raise CertificateError(
                "admissibility",
                f"-lam^{m0} zeta / rho is not a d-th power "
                f"({transcript.reason}); this family should be admissible")
        xi = transcript.witness
        xi_prime = (lam**m0) * zeta / rho_prime
        residual_ok = (rho * xi**d).approx_equal(-(lam**m0) * zeta)
        if not residual_ok:
            raise CertificateError("admissibility",
                                   "witness failed back-substitution")
        return AdmissibilityCertificate(
            m0=m0, zeta=zeta, rho=rho, rho_prime=rho_prime, xi=xi,
            xi_prime=xi_prime, transcript=transcript, residual_ok=True)

    # -- near-critical geometry ----------------------------------------

    def near_critical_preimage(self, t: PadicNumber, target: PadicNumber,
                               ball: PadicBall,
                               checks: CheckList | None = None
                               ) -> PadicNumber:
        """The unique preimage of ``target`` under P_t inside ``ball``.

        ``ball`` is centered at 1 + u0 with radius |p^2 d'| |u0|.  The map
        sends it bijectively onto {|w - (t + rho u0^d)| <= |p^2 d'| |d u0^d
        rho|}; membership of the target in that image ball is checked
        before solving u^d (1+u) = p^d (t - target) by Hensel from u0.
        """
        p, d = self.config.p, self.config.d
        checks = checks if checks is not None else CheckList()
        u0 = ball.center - self._exact(1)
        rho = self.family.rho_tilde
        delta_exp = -(2)  # |p^2 d'| with d' = 1
        checks.require("near_critical.delta_le_p2", -2, "<=", -2,
                       note="Lemma hypothesis delta <= |p|^2 (binding side)")
        image_center = t + rho * u0**d
        image_radius_v = 2 + vp_int(d, p) + d * u0.v + rho.v
        dv = target.valuation_of_difference(image_center)
        checks.require(
            "near_critical.image_ball", image_radius_v if dv is None else dv,
            ">=", image_radius_v,
            note="ball mapping violated: raise r" if dv is not None and
            dv < image_radius_v else "target in predicted image ball")
        poly = self.family.shifted_critical_poly(t, target)
        u = hensel_lift(poly, u0)
        w = self._exact(1) + u
        if not ball.contains(w):
            raise CertificateError("near_critical.in_ball",
                                   "preimage escaped the near-critical ball")
        return w

    # -- the cascade ----------------------------------------------------

    def base_bifurcation(self) -> BifurcationData:
        report = self.verify_misiurewicz_conditions()
        if not report.all_pass:
            bad = [c.name for c in report.conditions if not c.passed]
            raise CertificateError("misiurewicz_conditions",
                                   f"failed: {bad}")
        hom = self.asymptotic_position()
        cert = self.admissibility_check(hom.zeta, report.rho,
                                        report.rho_prime, m0=0)
        zero = PadicNumber.zero(self.config.p)
        return BifurcationData(
            level=0, tau=zero, ell=1, a_tau=zero,
            lam=self.family.multiplier0, zeta=hom.zeta, rho=report.rho,
            rho_prime=report.rho_prime, m0=0, xi=cert.xi,
            xi_prime=cert.xi_prime,
            base_orbit=(self._exact(1), zero))

    def find_cascade_parameter(self, base: BifurcationData | None = None,
                               r: int | None = None) -> CascadeResult:
        """The parameter t_r where the critical orbit first returns very
        close to the critical point and then lands exactly on the continued
        fixed point after ell_r steps.

        Solves P_t^ell(1) = g_t^m(w_t^k(t)) by the contracting fixed-point
        iteration; every ball containment and margin is recorded.  Retries
        at a higher working precision when the forward orbit verification
        cannot certify the exact hit at the configured precision.
        """
        rr = self.config.r if r is None else r
        if base is not None:
            # the caller owns the base data and the retry policy
            return self._cascade_at_precision(base, rr)
        return self._with_retries(
            lambda: self._cascade_at_precision(self.base_bifurcation(), rr))

    def _cascade_at_precision(self, base: BifurcationData, r: int,
                              r_hat: int | None = None) -> CascadeResult:
        cfg = self.config
        p, d = cfg.p, cfg.d
        k = cfg.blocks
        checks = CheckList()
        N_goal = cfg.precision

        m0 = base.m0
        ell = base.ell
        m = r * d - m0
        if r_hat is None:
            r_hat = cfg.secondary_depth(r, m0)
        m_hat = r_hat * d - m0
        checks.require("cascade.m_positive", m, ">", 0,
                       note="m = r d d' - m0 must be positive; raise r")
        checks.require(
            "cascade.block_margin", (m_hat - m) * d, ">",
            2 + cfg.wild_valuation,
            note="|lambda|^-(m_hat-m) < |p^2 d d'| so block targets have "
            "unique preimages")
        ell_r = (k - 1) * (m_hat + ell) + m + 2 * ell

        lam, zeta, xi, xi_p = base.lam, base.zeta, base.xi, base.xi_prime
        sigma0 = lam**(-(r * d)) * xi_p
        param_radius_v = 2 + cfg.wild_valuation + sigma0.v
        u0 = lam**(-r) * xi
        ball_radius_v = 2 + u0.v
        ball = PadicBall(self._exact(1) + u0, -ball_radius_v)
        checks.require("cascade.param_ball_radius", param_radius_v, ">",
                       sigma0.v, note="parameter ball is proper")

        t = base.tau + sigma0
        gaps: list[int] = []
        blocks: tuple[PadicNumber, ...] = ()
        a_t = None
        stall = 0
        max_iters = 12 + 4 * (self.work_precision + abs(sigma0.v)) // max(1, d)
        for _ in range(max_iters):
            a_t, z_ell, blocks = self._phi(base, t, m, m_hat, k, ball, u0)
            t_next = z_ell if ell == 1 else \
                self._solve_parameter(base, t, z_ell)
            gap = t_next.valuation_of_difference(t)
            if gap is None:
                t = t_next
                break
            gaps.append(gap)
            if len(gaps) >= 2 and gap <= gaps[-2]:
                stall += 1
                if stall >= 3:
                    raise CertificateError(
                        "cascade.contraction",
                        "successive iterates diverge: r too small or "
                        "precision too low")
            t = t_next
        else:
            raise CertificateError("cascade.contraction",
                                   "iteration cap reached without agreement")

        # final verified pass at the fixed parameter; from here on a
        # precision shortfall is a deficit to retry at a larger margin, not
        # a geometry failure
        try:
            return self._verify_cascade(base, t, r, r_hat, k, m, m_hat,
                                        ell, ell_r, sigma0, u0, ball,
                                        param_radius_v, gaps, checks)
        except InsufficientPrecision:
            raise _NeedMorePrecision(24)

    def _verify_cascade(self, base, t, r, r_hat, k, m, m_hat, ell, ell_r,
                        sigma0, u0, ball, param_radius_v, gaps, checks):
        cfg = self.config
        d = cfg.d
        lam, zeta, xi = base.lam, base.zeta, base.xi
        N_goal = cfg.precision
        a_t, z_ell, blocks = self._phi(base, t, m, m_hat, k, ball, u0,
                                       checks=checks)
        dv = t.valuation_of_difference(base.tau + sigma0)
        checks.require("cascade.param_in_ball",
                       dv if dv is not None else param_radius_v, ">=",
                       param_radius_v, note="t_r lies in the parameter ball")

        # the gap between the two sides of the equation, before the hit:
        # lam^-m zeta - (g^m(w^k) - a_t) must be below the image diameter
        g_v = (lam**(-m) * zeta).valuation_of_difference(z_ell - a_t)
        if g_v is None:
            g_v = _joint_window_of(z_ell, a_t)
        diam_v = 2 + cfg.wild_valuation + m * d + zeta.v
        part_e_v = 3 + cfg.wild_valuation + m * d + zeta.v
        checks.require("cascade.rouche_gap", g_v, ">", diam_v,
                       note="sup|g| < diam f(B') certificate")
        checks.require("cascade.part_e_bound", g_v, ">=", part_e_v,
                       note="|zeta - lam^m (h^m(w) - a)| <= |p^3 d d' zeta|",
                       fatal=False)

        # forward orbit and the exact hit
        orbit = self.family.orbit(t, self._exact(1), ell_r)
        hit_gap = orbit[-1].valuation_of_difference(a_t)
        window = _joint_window_of(orbit[-1], a_t)
        if hit_gap is not None or window < t.v + N_goal:
            deficit = (t.v + N_goal) - (hit_gap if hit_gap is not None
                                        else window)
            raise _NeedMorePrecision(max(deficit, 8))
        checks.require("cascade.exact_hit_window", window, ">=",
                       t.v + N_goal,
                       note="P^ell_r(1) = a_t certified at working precision")

        near_idx = m + ell
        nr = orbit[near_idx].valuation_of_difference(self._exact(1))
        nr_pred = r * d + xi.v
        checks.require("cascade.near_return", nr, ">=", nr_pred,
                       note="Delta(1, P^(m+ell)(1)) <= |lambda|^-r d' |xi|")

        for i in range(ell, ell_r):
            if orbit[i].valuation_of_difference(a_t) is None:
                raise CertificateError(
                    "cascade.minimality",
                    f"orbit point {i} already equals a_t")
        for i in range(1, ell_r):
            if self.family.deriv_z(t, orbit[i]).is_zero:
                raise CertificateError(
                    "cascade.unramified_orbit",
                    f"orbit point {i} is critical")
        checks.note_pass("cascade.minimality",
                         "no earlier orbit point equals a_t")
        checks.note_pass("cascade.unramified_orbit",
                         "no orbit point after the critical one is critical")

        return CascadeResult(
            level=base.level + 1, r=r, r_hat=r_hat, k=k, m=m, m_hat=m_hat,
            ell=ell, ell_r=ell_r, t_r=t, a_tr=a_t,
            lam_tr=self.family.deriv_z(t, a_t),
            orbit=tuple(orbit), blocks=blocks,
            near_return_index=near_idx, near_return_exp=nr,
            near_return_predicted=nr_pred,
            exact_hit_window=window,
            iteration_gaps=tuple(gaps), checks=tuple(checks.records))

    def _phi(self, base: BifurcationData, t: PadicNumber, m: int,
             m_hat: int, k: int, ball: PadicBall, u0: PadicNumber,
             checks: CheckList | None = None):
        """One evaluation of the block construction at parameter t:
        continue the fixed point, build w^1..w^k, and return g^m(w^k)."""
        a_t = fixed_point_continuation(self.family, t, base.a_tau)
        target = a_t
        blocks = []
        for j in range(k):
            w = self._invert_through_orbit(base, t, target, ball, u0,
                                           checks=checks)
            blocks.append(w)
            if j < k - 1:
                target = self.backward_orbit(t, w, m_hat)[-1]
        z_ell = self.backward_orbit(t, blocks[-1], m)[-1]
        return a_t, z_ell, tuple(blocks)

    def _invert_through_orbit(self, base: BifurcationData, t: PadicNumber,
                              target: PadicNumber, ball: PadicBall,
                              u0: PadicNumber,
                              checks: CheckList | None = None
                              ) -> PadicNumber:
        """Unique preimage of target under P_t^ell inside the near-critical
        ball: pull back through the base orbit by Hensel at each regular
        point, then one near-critical step."""
        x = target
        for j in range(base.ell - 1, 0, -1):
            seed = base.base_orbit[j]
            x = self._pullback_regular(t, x, seed)
        return self.near_critical_preimage(t, x, ball, checks=checks)

    def _pullback_regular(self, t: PadicNumber, target: PadicNumber,
                          seed: PadicNumber) -> PadicNumber:
        """Solve P_t(z) = target near a non-critical seed by Hensel."""
        p = self.config.p
        coeffs = [c for c in self.family.map_at(t).num.coeffs]
        coeffs[0] = coeffs[0] - target
        return hensel_lift(Poly(coeffs, p), seed)

    def _solve_parameter(self, base: BifurcationData, t_seed: PadicNumber,
                         target: PadicNumber) -> PadicNumber:
        """Solve P_t^ell(1) = target for t near t_seed by jet Newton."""
        t = t_seed
        one = self._exact(1)
        prev = None
        for _ in range(64):
            T = PadicJet.variable(t)
            z = PadicJet.constant(one)
            for _ in range(base.ell):
                z = self.family.eval(T, z)
            res_v = z.value.valuation_of_difference(target)
            if res_v is None:
                return t
            if prev is not None and res_v <= prev:
                raise CertificateError("cascade.parameter_solve",
                                       "Newton in t stalled")
            prev = res_v
            try:
                step = (z.value - target) / z.deriv
            except InsufficientPrecision:
                return t
            t = t - step
        raise CertificateError("cascade.parameter_solve",
                               "Newton in t did not converge")

    # -- transversality and admissibility at the new parameter ----------

    def verify_transversality(self, result: CascadeResult,
                              base: BifurcationData | None = None
                              ) -> TransversalityCertificate:
        """Jet derivative of t -> P_t^(ell_r)(1) - a_t at t_r; certifies a
        finite valuation and records the norm identity
        |D| = |(P^(ell_r - ell))'(P^ell(1))| |rho'_base|."""
        base = self.base_bifurcation() if base is None else base
        t_r = result.t_r
        T = PadicJet.variable(t_r)
        z = PadicJet.constant(self._exact(1))
        for _ in range(result.ell_r):
            z = self.family.eval(T, z)
        a_jet = fixed_point_continuation(self.family, T, base.a_tau)
        # the value parts agree (that is the exact hit), so only the
        # derivative components are subtracted
        deriv = z.deriv - a_jet.deriv
        if deriv.is_zero:
            raise Undecidable("transversality undecided at this precision")
        chain = self._orbit_derivative(result, start=result.ell)
        expected_v = chain.v + base.rho_prime.v
        ok = deriv.v == expected_v
        result.transversality = TransversalityCertificate(
            derivative=deriv, valuation=deriv.v, norm_identity_ok=ok)
        return result.transversality

    def _orbit_derivative(self, result: CascadeResult,
                          start: int) -> PadicNumber:
        """(P^(ell_r - start))'(P^start(1)) along the verified orbit."""
        acc = self._exact(1)
        for i in range(start, result.ell_r):
            acc = acc * self.family.deriv_z(result.t_r, result.orbit[i])
        return acc

    def certify_admissibility_at(self, result: CascadeResult,
                                 base: BifurcationData | None = None
                                 ) -> AdmissibilityCertificate:
        """Part G: the homoclinic orbit of the new bifurcation at t_r is
        admissible (requires k = d).  Computes the new asymptotic position
        by the same product method, the new leading coefficient by two
        independent routes, and searches a small window of m0 exponents."""
        base = self.base_bifurcation() if base is None else base
        cfg = self.config
        if result.k != cfg.d:
            raise CertificateError(
                "admissibility_at",
                f"k = {result.k} != d = {cfg.d}: the d-th power argument "
                "needs one block per sheet")
        if result.transversality is None:
            self.verify_transversality(result, base)
        t_r, a_t = result.t_r, result.a_tr
        lam = result.lam_tr

        hom = self.asymptotic_position(t=t_r, a=a_t, lam=lam,
                                       start=self._exact(1))
        zeta_r = hom.zeta

        rho_r = self._orbit_derivative(result, start=result.ell) \
            * self.family.rho_tilde
        rho_series = self._iterate_leading_coefficient(result)
        if not rho_r.approx_equal(rho_series):
            raise CertificateError(
                "admissibility_at.rho_routes",
                "chain-rule and series-composition leading coefficients "
                "disagree")

        d = cfg.d
        last_reason = None
        for m0 in sorted(range(-2 * d, 2 * d + 1), key=abs):
            argument = -(lam**m0) * zeta_r / rho_r
            if argument.v % d != 0:
                last_reason = "valuation"
                continue
            transcript = is_dth_power(argument, d)
            if transcript.ok:
                xi = transcript.witness
                rho_prime_r = result.transversality.derivative
                xi_prime = (lam**m0) * zeta_r / rho_prime_r
                cert = AdmissibilityCertificate(
                    m0=m0, zeta=zeta_r, rho=rho_r, rho_prime=rho_prime_r,
                    xi=xi, xi_prime=xi_prime, transcript=transcript,
                    residual_ok=(rho_r * xi**d).approx_equal(
                        -(lam**m0) * zeta_r))
                result.admissibility = cert
                result.next_base = BifurcationData(
                    level=result.level, tau=t_r, ell=result.ell_r,
                    a_tau=a_t, lam=lam, zeta=zeta_r, rho=rho_r,
                    rho_prime=rho_prime_r, m0=m0, xi=xi, xi_prime=xi_prime,
                    base_orbit=result.orbit[:result.ell_r + 1])
                return cert
            last_reason = transcript.reason
        raise CertificateError(
            "admissibility_at",
            f"no m0 in [-2d, 2d] makes -lam^m0 zeta_r / rho_r a d-th power "
            f"(last reason: {last_reason})")

    def _iterate_leading_coefficient(self, result: CascadeResult
                                     ) -> PadicNumber:
        """Order-d coefficient of P^(ell_r) at 1 by series composition, the
        route independent of the chain rule.

        Works in offset coordinates: U_i(u) = P^i(1+u) - y_i with constant
        exactly zero, where y_(i+1) is defined as the constant term of the
        local expansion, so no subtraction of nearly equal values occurs.
        """
        t_r = result.t_r
        p = self.config.p
        r_u = -(result.near_return_exp + 2)
        R_t = self.family.map_at(t_r)
        order = self.config.d + 1
        zero = PadicNumber.zero(p)
        one = padic(1, p, self.work_precision)
        ident = TruncatedSeries([zero, one], PadicBall(zero, r_u), None)
        acc = ident
        y = self._exact(1)
        for _ in range(result.ell_r):
            sup = acc.sup_norm_exp()
            step = R_t.local_expansion(y, order, radius_exp=sup)
            y = step.coeffs[0]
            # both sides are offset series (constant exactly zero), so the
            # composition happens in offset coordinates around the orbit
            step0 = TruncatedSeries([zero] + list(step.coeffs[1:]),
                                    PadicBall(zero, step.ball.radius_exp),
                                    step.tail_exp)
            acc = step0.compose(acc, order=order)
        return acc.coefficient(self.config.d)

    # -- the full cascade ------------------------------------------------

    def cascade_iterate(self, levels: int) -> "CascadeReport":
        """Iterate the construction: each level uses the previous level's
        parameter, orbit length, and admissibility data as its base.

        Per level the near-return exponent must strictly improve and the
        new parameter must sit strictly inside the previous scale, which is
        how the limit parameter acquires a recurrent, non-periodic critical
        orbit."""
        if levels < 1:
            raise ValueError("levels must be at least 1")
        return self._with_retries(lambda: self._cascade_levels(levels))

    def _cascade_levels(self, levels: int) -> "CascadeReport":
        base = self.base_bifurcation()
        results: list[CascadeResult] = []
        r = self.config.r
        prev_near = None
        for level in range(1, levels + 1):
            result = None
            for attempt_r in range(r, r + 12):
                rh0 = self.config.secondary_depth(attempt_r, base.m0)
                for rh in range(rh0, rh0 + 6):
                    try:
                        cand = self._cascade_at_precision(
                            base, attempt_r, r_hat=rh)
                    except (CertificateError, HenselError,
                            InsufficientPrecision):
                        continue
                    if prev_near is not None and \
                            cand.near_return_exp <= prev_near:
                        continue
                    result = cand
                    break
                if result is not None:
                    break
            if result is None:
                raise CertificateError(
                    "cascade.level",
                    f"no (r, r_hat) with r in [{r}, {r + 11}] passes at "
                    f"level {level}")
            self.verify_transversality(result, base)
            self.certify_admissibility_at(result, base)
            results.append(result)
            prev_near = result.near_return_exp
            base = result.next_base
            r = 1
        return CascadeReport(config=self.config, levels=tuple(results))


class _NeedMorePrecision(Exception):
    def __init__(self, deficit: int):
        self.deficit = deficit
        super().__init__(f"need {deficit} more digits")


def _joint_window_of(x: PadicNumber, y: PadicNumber) -> int:
    a = x.abs_precision
    b = y.abs_precision
    vals = [w for w in (a, b) if w is not None]
    return min(vals) if vals else 1 << 30


@dataclass(frozen=True)
class CascadeReport:
    config: FamilyConfig
    levels: tuple[CascadeResult, ...]

    def recurrence_records(self) -> list[dict]:
        """Per level: the near-return exponent and the distance to the
        previous parameter (Cauchy behaviour of the parameter sequence)."""
        rows = []
        prev_t = None
        for res in self.levels:
            step_v = None
            if prev_t is not None:
                step_v = res.t_r.valuation_of_difference(prev_t)
            rows.append({
                "level": res.level,
                "t": res.t_r.to_json(),
                "valuation_t": res.t_r.v,
                "ell_r": res.ell_r,
                "near_return_exp": res.near_return_exp,
                "step_valuation": step_v,
            })
            prev_t = res.t_r
        return rows

    def to_json(self):
        return certificate_document(self)


def certificate_document(report: CascadeReport) -> dict:
    cfg = report.config
    return {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "p": cfg.p, "d": cfg.d, "precision": cfg.precision,
            "series_order": cfg.series_order, "n_back": cfg.n_back,
            "r": cfg.r, "k": cfg.blocks, "wild": cfg.wild,
        },
        "levels": [res.to_json() for res in report.levels],
        "recurrence": report.recurrence_records(),
    }


# ----------------------------------------------------------------------
# module-level operation wrappers


def family_eval(config: FamilyConfig, t, z):
    return MisiurewiczCascade(config).family_eval(t, z)


def verify_misiurewicz_conditions(config: FamilyConfig) -> MisiurewiczReport:
    return MisiurewiczCascade(config).verify_misiurewicz_conditions()


def backward_orbit(config: FamilyConfig, t: PadicNumber, w: PadicNumber,
                   steps: int) -> list[PadicNumber]:
    return MisiurewiczCascade(config).backward_orbit(t, w, steps)


def asymptotic_position(config: FamilyConfig,
                        steps: int | None = None) -> HomoclinicData:
    return MisiurewiczCascade(config).asymptotic_position(steps)


def admissibility_check(config: FamilyConfig, zeta, rho, rho_prime,
                        m0: int = 0) -> AdmissibilityCertificate:
    return MisiurewiczCascade(config).admissibility_check(
        zeta, rho, rho_prime, m0)


def find_cascade_parameter(config: FamilyConfig) -> CascadeResult:
    return MisiurewiczCascade(config).find_cascade_parameter()


def cascade_iterate(config: FamilyConfig, levels: int) -> CascadeReport:
    return MisiurewiczCascade(config).cascade_iterate(levels)
