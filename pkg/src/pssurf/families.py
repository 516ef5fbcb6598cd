"""Named catalog systems and the classification-family generators.

Two generator flavors are provided: the general quasilinear family built from
input data (ell, g, h, P, q) with one of the first-column coefficient
functions pinned to ell(x, t), and the constant-coefficient KdV-type family
a*z3 + L11*z1 + L12*y1 + L13 with one coefficient pinned to the spectral
parameter.  Every generated pair passes the characterization verifier by
construction; genericity violations raise instead of producing degenerate
output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .expr import (JetExpr, JetVar, ParamSymbol, T, X, Y, Z, ZeroStatus, as_expr,
                   divide_exact, is_zero, probe_zero)
from .parser import parse_expr
from .verify import (AssociatedFunctions, EvolutionSystem, system_to_document)


class FamilyError(ValueError):
    pass


class GenericityViolation(FamilyError):
    pass


class IrreducibilityViolation(FamilyError):
    pass


def _nonvanishing(e: JetExpr, seed: int = 0) -> bool:
    status = is_zero(e)
    if status is ZeroStatus.UNKNOWN:
        return probe_zero(e, trials=50, seed=seed).nonzero
    return status is ZeroStatus.NONZERO


def _check_jets(e: JetExpr, max_order: int, what: str):
    if e.jet_order() > max_order:
        raise FamilyError(f"{what} may depend on jets up to order {max_order} only")


def _check_no_derivative_jets(e: JetExpr, what: str):
    for j in (1, 2, 3):
        if e.contains(Z[j]) or e.contains(Y[j]):
            raise FamilyError(f"{what} must not depend on derivative jets")


# -- general quasilinear family ------------------------------------------------


@dataclass(frozen=True)
class GeneralFamilyInput:
    """Data for the general family: ell(x,t); g, h in (x,t,z0,y0); P of jet
    order <= 2; q of jet order <= 1; optionally an explicit quotient H when g
    does not divide the defining numerator in the polynomial ring."""

    ell: JetExpr
    g: JetExpr
    h: JetExpr
    P: JetExpr
    q: JetExpr
    delta: int = 1
    placement: str = "f21"  # "f21" | "f11" | "f31"
    H: Optional[JetExpr] = None

    def __post_init__(self):
        if self.delta not in (1, -1):
            raise FamilyError("delta must be +1 or -1")
        if self.placement not in ("f21", "f11", "f31"):
            raise FamilyError("placement must be f21, f11 or f31")
        if self.ell.jet_order() >= 0:
            raise FamilyError("ell must depend on (x, t) and parameters only")
        _check_no_derivative_jets(self.g, "g")
        _check_no_derivative_jets(self.h, "h")
        _check_jets(self.P, 2, "P")
        _check_jets(self.q, 1, "q")


def generate_general(inp: GeneralFamilyInput
                     ) -> tuple[EvolutionSystem, AssociatedFunctions]:
    """Instantiate the general family; the emitted pair always verifies."""
    g, h, P, q, ell = inp.g, inp.h, inp.P, inp.q, inp.ell
    delta = JetExpr.const(inp.delta)

    w = g.diff(Z[0]) * h.diff(Y[0]) - g.diff(Y[0]) * h.diff(Z[0])
    if not _nonvanishing(w):
        raise GenericityViolation("Jacobian of (g, h) in (z0, y0) vanishes")

    ell_t = ell.diff(T)
    dxq = q.total_x()
    if inp.placement == "f31":
        numerator = P * h + delta * (dxq - ell_t)
    else:
        numerator = P * h + dxq - ell_t
    if inp.H is not None:
        H = inp.H
        if g * H - numerator:
            raise FamilyError("supplied H does not satisfy g*H == P*h + Dx q - ell_t")
    else:
        H = divide_exact(numerator, g)
        if H is None:
            raise FamilyError(
                "g does not divide the defining numerator; supply H explicitly")

    if inp.placement == "f31":
        if not _nonvanishing(dxq - ell_t):
            raise GenericityViolation("Dx q == ell_t makes the metric degenerate")
        c1 = P.total_x() + h * q - ell * H - g.diff(T)
        c2 = H.total_x() - q * g + ell * P - h.diff(T)
    else:
        if not _nonvanishing(ell * P - g * q):
            raise GenericityViolation("ell*P - g*q vanishes (degenerate metric)")
        c1 = P.total_x() - h * q + ell * H - g.diff(T)
        c2 = H.total_x() - delta * q * g + delta * ell * P - h.diff(T)

    F = _divide_by_coefficient(h.diff(Y[0]) * c1 - g.diff(Y[0]) * c2, w, "W")
    G = _divide_by_coefficient(g.diff(Z[0]) * c2 - h.diff(Z[0]) * c1, w, "W")

    irr = ((F.diff(Z[3]) ** 2 + G.diff(Z[3]) ** 2)
           * (F.diff(Y[3]) ** 2 + G.diff(Y[3]) ** 2))
    if not _nonvanishing(irr):
        raise IrreducibilityViolation("system degenerates to lower order")

    if inp.placement == "f21":
        fijs = AssociatedFunctions(f11=g, f12=P, f21=ell, f22=q, f31=h, f32=H,
                                   delta=inp.delta)
    elif inp.placement == "f11":
        fijs = AssociatedFunctions(f11=ell, f12=q, f21=g, f22=P, f31=-h, f32=-H,
                                   delta=inp.delta)
    else:
        fijs = AssociatedFunctions(f11=g, f12=P, f21=h, f22=H, f31=ell, f32=q,
                                   delta=inp.delta)
    sys = EvolutionSystem(F=F, G=G,
                          description=f"general family ({inp.placement} pinned)")
    return sys, fijs


def _divide_by_coefficient(num: JetExpr, den: JetExpr, what: str) -> JetExpr:
    if not num:
        return JetExpr.zero()
    const = den.as_const()
    if const is not None:
        if const == 0:
            raise GenericityViolation(f"{what} vanishes")
        return num * JetExpr.const(1 / const)
    quotient = divide_exact(num, den)
    if quotient is None:
        raise FamilyError(f"{what} = {den} does not divide {num}")
    return quotient


# -- constant-coefficient KdV-type family ---------------------------------------


@dataclass(frozen=True)
class KdVFamilyInput:
    """Data for the KdV-type family.  The linear-form coefficients a1, b1,
    a2, b2 and the constant c may involve parameters (surds included) but no
    jet variables; p is an arbitrary smooth function of (z0, y0)."""

    a: Fraction
    eta: ParamSymbol
    a1: JetExpr
    b1: JetExpr
    a2: JetExpr
    b2: JetExpr
    c: JetExpr
    p: JetExpr
    delta: int = 1
    placement: str = "f21"  # "f21" | "f11" | "f31"

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        for name in ("a1", "b1", "a2", "b2", "c", "p"):
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        if self.delta not in (1, -1):
            raise FamilyError("delta must be +1 or -1")
        if self.placement not in ("f21", "f11", "f31"):
            raise FamilyError("placement must be f21, f11 or f31")
        for name in ("a1", "b1", "a2", "b2", "c"):
            if getattr(self, name).jet_order() >= 0:
                raise FamilyError(f"{name} must be constant in the jet variables")
        _check_no_derivative_jets(self.p, "p")


def generate_kdv_family(inp: KdVFamilyInput
                        ) -> tuple[EvolutionSystem, AssociatedFunctions]:
    """Instantiate the KdV-type family; the emitted pair always verifies."""
    if inp.a == 0:
        raise GenericityViolation("leading coefficient a must be nonzero")
    gamma = inp.a1 * inp.b2 - inp.a2 * inp.b1
    if not _nonvanishing(gamma):
        raise GenericityViolation("gamma = a1*b2 - a2*b1 vanishes")

    a = JetExpr.const(inp.a)
    eta = JetExpr.var(inp.eta)
    half = JetExpr.const(Fraction(1, 2))
    delta = JetExpr.const(inp.delta)
    z0, y0, z1, y1, z2, y2 = (JetExpr.var(v) for v in (Z[0], Y[0], Z[1], Y[1],
                                                       Z[2], Y[2]))
    q1 = inp.a1 * z0 + inp.b1 * y0
    q2 = inp.a2 * z0 + inp.b2 * y0
    if inp.placement == "f31":
        q = half * (q2 * q2 + q1 * q1) + inp.c
    else:
        q = half * (q2 * q2 - delta * q1 * q1) + inp.c
    p = inp.p
    p_z, p_y = p.diff(Z[0]), p.diff(Y[0])
    q_z, q_y = q.diff(Z[0]), q.diff(Y[0])
    eta2 = eta * eta

    if inp.placement == "f31":
        F = (a * JetExpr.var(Z[3])
             + a * (p + z0 * p_z - delta * y0 * q_y + eta2) * z1
             + a * z0 * (p_y + delta * q_y) * y1
             - _divide_by_coefficient(a * eta * (p + delta * q) * q_y, gamma, "gamma"))
        G = (a * JetExpr.var(Y[3])
             + a * y0 * (p_z + delta * q_z) * z1
             + a * (p + y0 * p_y - delta * z0 * q_z + eta2) * y1
             + _divide_by_coefficient(a * eta * (p + delta * q) * q_z, gamma, "gamma"))
    else:
        F = (a * JetExpr.var(Z[3])
             + a * (y0 * q_y - delta * eta2 + z0 * p_z + p) * z1
             + a * z0 * (p_y - q_y) * y1
             + _divide_by_coefficient(a * eta * (p - q) * q_y, gamma, "gamma"))
        G = (a * JetExpr.var(Y[3])
             + a * y0 * (p_z - q_z) * z1
             + a * (z0 * q_z - delta * eta2 + y0 * p_y + p) * y1
             - _divide_by_coefficient(a * eta * (p - q) * q_z, gamma, "gamma"))

    rot = a * gamma * (z0 * y1 - y0 * z1)
    if inp.placement == "f31":
        f12 = (a * inp.a1 * z2 + a * inp.b1 * y2
               + a * eta * (inp.a2 * z1 + inp.b2 * y1) + a * q1 * p)
        f22 = (a * inp.a2 * z2 + a * inp.b2 * y2
               - a * eta * (inp.a1 * z1 + inp.b1 * y1) + a * q2 * p)
        f32 = delta * rot - delta * a * eta * q
        fijs = AssociatedFunctions(f11=q1, f12=f12, f21=q2, f22=f22,
                                   f31=eta, f32=f32, delta=inp.delta)
    else:
        fP = (a * inp.a1 * z2 + a * inp.b1 * y2
              - a * eta * (inp.a2 * z1 + inp.b2 * y1) + a * q1 * p)
        fQ = rot + a * eta * q
        fH = (a * inp.a2 * z2 + a * inp.b2 * y2
              - a * delta * eta * (inp.a1 * z1 + inp.b1 * y1) + a * q2 * p)
        if inp.placement == "f21":
            fijs = AssociatedFunctions(f11=q1, f12=fP, f21=eta, f22=fQ,
                                       f31=q2, f32=fH, delta=inp.delta)
        else:
            fijs = AssociatedFunctions(f11=eta, f12=fQ, f21=q1, f22=fP,
                                       f31=-q2, f32=-fH, delta=inp.delta)
    sys = EvolutionSystem(F=F, G=G,
                          description=f"KdV-type family ({inp.placement} pinned)")
    return sys, fijs


def translate_dependent(sys: EvolutionSystem, fijs: AssociatedFunctions,
                        c1, c2) -> tuple[EvolutionSystem, AssociatedFunctions]:
    """Shift the dependent variables (z0, y0) -> (z0 + c1, y0 + c2); the
    family theorems hold up to exactly this freedom."""
    bind = {Z[0]: JetExpr.var(Z[0]) + as_expr(c1),
            Y[0]: JetExpr.var(Y[0]) + as_expr(c2)}
    sub = lambda e: e.substitute(bind)
    return (EvolutionSystem(F=sub(sys.F), G=sub(sys.G), description=sys.description),
            AssociatedFunctions(
                f11=sub(fijs.f11), f12=sub(fijs.f12), f21=sub(fijs.f21),
                f22=sub(fijs.f22), f31=sub(fijs.f31), f32=sub(fijs.f32),
                delta=fijs.delta))


# -- metric ---------------------------------------------------------------------


def metric_coefficients(fijs: AssociatedFunctions
                        ) -> tuple[JetExpr, JetExpr, JetExpr]:
    """First fundamental form coefficients (E, F, G) of omega1^2 + omega2^2 in
    the (x, t) coordinates: E = f11^2 + f21^2, F = f11 f12 + f21 f22,
    G = f12^2 + f22^2 (tensor components; the dx dt cross term is 2F)."""
    E = fijs.f11 * fijs.f11 + fijs.f21 * fijs.f21
    F = fijs.f11 * fijs.f12 + fijs.f21 * fijs.f22
    G = fijs.f12 * fijs.f12 + fijs.f22 * fijs.f22
    return E, F, G


# -- catalog --------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    system: EvolutionSystem
    fijs: AssociatedFunctions
    params: dict

    def to_document(self) -> dict:
        return system_to_document(self.system, self.fijs, self.params)


def _entry(name, desc, delta, params, F, G, fij) -> CatalogEntry:
    sys = EvolutionSystem(F=parse_expr(F, params), G=parse_expr(G, params),
                          description=desc)
    fijs = AssociatedFunctions(
        f11=parse_expr(fij[0], params), f12=parse_expr(fij[1], params),
        f21=parse_expr(fij[2], params), f22=parse_expr(fij[3], params),
        f31=parse_expr(fij[4], params), f32=parse_expr(fij[5], params),
        delta=delta)
    return CatalogEntry(name=name, system=sys, fijs=fijs, params=dict(params))


def _nls_params() -> dict:
    return {"eta": ParamSymbol("eta"),
            "alpha": ParamSymbol("alpha", time_dependent=True),
            "beta": ParamSymbol("beta", time_dependent=True)}


def _mkdv_params() -> dict:
    return {"eta": ParamSymbol("eta"), "alpha": ParamSymbol("alpha"),
            "s6": ParamSymbol("s6", reduction=(2, Fraction(6)))}


def catalog() -> list[CatalogEntry]:
    """The six named systems with their associated functions.

    Note: the two third-order NLS variants carry the curvature sign that the
    characterization identities force (the plus variant is spherical, the
    minus variant pseudospherical); see the delta-discovery test.
    """
    entries = []

    entries.append(_entry(
        "nlse", "cubic nonlinear Schrodinger system", 1,
        {"eta": ParamSymbol("eta")},
        "-y2 + 2*(z0^2 + y0^2)*y0",
        "z2 - 2*(z0^2 + y0^2)*z0",
        ("2*z0",
         "-4*eta*z0 - 2*y1",
         "-2*y0",
         "4*eta*y0 - 2*z1",
         "2*eta",
         "-4*eta^2 - 2*(z0^2 + y0^2)")))

    nls = _nls_params()
    entries.append(_entry(
        "3nls-plus", "third-order NLS-type system (+)", -1, nls,
        "-alpha*y2 - alpha*(z0^2 + y0^2)*y0 - beta*z3 - 3*beta*(z0^2 + y0^2)*z1",
        "alpha*z2 + alpha*(z0^2 + y0^2)*z0 - beta*y3 - 3*beta*(z0^2 + y0^2)*y1",
        ("z0 + y0",
         "-beta*(y2 + z2) - (beta*eta + alpha)*(y1 - z1)"
         " + (z0 + y0)*(beta*(eta^2 - z0^2 - y0^2) + eta*alpha)",
         "y0 - z0",
         "-beta*(y2 - z2) + (beta*eta + alpha)*(z1 + y1)"
         " + (y0 - z0)*(beta*(eta^2 - y0^2 - z0^2) + eta*alpha)",
         "eta",
         "-2*beta*(y0*z1 - z0*y1) + (beta*eta + alpha)*(eta^2 - z0^2 - y0^2)")))

    nls = _nls_params()
    entries.append(_entry(
        "3nls-minus", "third-order NLS-type system (-)", 1, nls,
        "-alpha*y2 + alpha*(z0^2 + y0^2)*y0 - beta*z3 + 3*beta*(z0^2 + y0^2)*z1",
        "alpha*z2 - alpha*(z0^2 + y0^2)*z0 - beta*y3 + 3*beta*(z0^2 + y0^2)*y1",
        ("z0 + y0",
         "-beta*(y2 + z2) - (beta*eta + alpha)*(y1 - z1)"
         " + (z0 + y0)*(beta*(eta^2 + z0^2 + y0^2) + eta*alpha)",
         "y0 - z0",
         "-beta*(y2 - z2) + (beta*eta + alpha)*(z1 + y1)"
         " + (y0 - z0)*(beta*(eta^2 + y0^2 + z0^2) + eta*alpha)",
         "eta",
         "2*beta*(y0*z1 - z0*y1) + (beta*eta + alpha)*(eta^2 + z0^2 + y0^2)")))

    mk = _mkdv_params()
    entries.append(_entry(
        "mkdv-plus", "coupled mKdV-type system (+)", 1, mk,
        "-z3 + alpha^2*(z0^2 + y0^2)*z1",
        "-y3 + alpha^2*(z0^2 + y0^2)*y1",
        ("s6/3*alpha*z0",
         "-s6/3*alpha*(z2 + eta*y1)"
         " + s6/9*alpha*z0*(alpha^2*z0^2 + alpha^2*y0^2 + 3*eta^2)",
         "s6/3*alpha*y0",
         "-s6/3*alpha*(y2 - eta*z1)"
         " + s6/9*alpha*y0*(alpha^2*z0^2 + alpha^2*y0^2 + 3*eta^2)",
         "eta",
         "2/3*alpha^2*(y0*z1 - z0*y1)"
         " + eta/3*(alpha^2*z0^2 + alpha^2*y0^2 + 3*eta^2)")))

    mk = _mkdv_params()
    entries.append(_entry(
        "mkdv-minus", "coupled mKdV-type system (-)", -1, mk,
        "-z3 - alpha^2*(z0^2 + y0^2)*z1",
        "-y3 - alpha^2*(z0^2 + y0^2)*y1",
        ("s6/3*alpha*z0",
         "-s6/3*alpha*(z2 + eta*y1)"
         " - s6/9*alpha*z0*(alpha^2*z0^2 + alpha^2*y0^2 - 3*eta^2)",
         "s6/3*alpha*y0",
         "-s6/3*alpha*(y2 - eta*z1)"
         " - s6/9*alpha*y0*(alpha^2*z0^2 + alpha^2*y0^2 - 3*eta^2)",
         "eta",
         "2/3*alpha^2*(z0*y1 - y0*z1)"
         " - eta/3*(alpha^2*z0^2 + alpha^2*y0^2 - 3*eta^2)")))

    entries.append(_entry(
        "coupled-kdv", "coupled KdV system", 1,
        {"eta": ParamSymbol("eta")},
        "-z3 + 6*z0*y0*z1",
        "-y3 + 6*z0*y0*y1",
        ("z0 + y0",
         "-z2 - y2 + 2*(y0*z0^2 + z0*y0^2) - eta^2*(z0 + y0) + eta*(y1 - z1)",
         "eta",
         "-eta^3 + 2*(y0*z1 - z0*y1) + 2*eta*z0*y0",
         "y0 - z0",
         "z2 - y2 + 2*(z0*y0^2 - y0*z0^2) + eta^2*(z0 - y0) + eta*(z1 + y1)")))

    return entries


def catalog_entry(name: str) -> CatalogEntry:
    for entry in catalog():
        if entry.name == name:
            return entry
    raise KeyError(f"no catalog entry named {name!r}")


# -- corollary presets -----------------------------------------------------------


def kdv_remark_preset(eta: Optional[ParamSymbol] = None
                      ) -> tuple[EvolutionSystem, AssociatedFunctions, dict]:
    """KdV-family parameters that rebuild the coupled KdV catalog entry."""
    eta = eta or ParamSymbol("eta")
    params = {"eta": eta}
    e = JetExpr.var(eta)
    inp = KdVFamilyInput(
        a=Fraction(-1), eta=eta,
        a1=JetExpr.const(1), b1=JetExpr.const(1),
        a2=JetExpr.const(-1), b2=JetExpr.const(1),
        c=e * e, p=e * e - 2 * JetExpr.var(Z[0]) * JetExpr.var(Y[0]),
        delta=1, placement="f21")
    sys, fijs = generate_kdv_family(inp)
    sys = EvolutionSystem(F=sys.F, G=sys.G, description="coupled KdV system")
    return sys, fijs, params


def _sqrt_const(k: Fraction, params: dict) -> JetExpr:
    """sqrt of a positive rational as an exact expression; introduces a surd
    parameter sk with sk^2 -> k when k is not a perfect rational square."""
    k = Fraction(k)
    if k <= 0:
        raise FamilyError("k must be positive")
    num, den = k.numerator, k.denominator
    rn, rd = math_isqrt(num), math_isqrt(den)
    if rn * rn == num and rd * rd == den:
        return JetExpr.const(Fraction(rn, rd))
    sk = ParamSymbol("sk", reduction=(2, k))
    params["sk"] = sk
    return JetExpr.var(sk)


def math_isqrt(n: int) -> int:
    import math
    return math.isqrt(n)


def nls_family_preset(k: Fraction, delta: int
                      ) -> tuple[EvolutionSystem, AssociatedFunctions, dict]:
    """NLS-type corollary of the general family (f31-pinned placement).

    With k = 1 this rebuilds the catalog third-order NLS entries; delta = +1
    gives the pseudospherical (minus) variant, delta = -1 the spherical
    (plus) variant.
    """
    params = _nls_params()
    sk = _sqrt_const(k, params)
    kc = JetExpr.const(Fraction(k))
    eta, alpha, beta = (JetExpr.var(params[n]) for n in ("eta", "alpha", "beta"))
    z0, y0, z1, y1, z2, y2 = (JetExpr.var(v) for v in (Z[0], Y[0], Z[1], Y[1],
                                                       Z[2], Y[2]))
    d = JetExpr.const(delta)
    s = z0 * z0 + y0 * y0
    g = sk * (z0 + y0)
    h = sk * (y0 - z0)
    kappa = eta * alpha + eta * eta * beta + d * beta * kc * s
    P = -beta * sk * (y2 + z2) - sk * (beta * eta + alpha) * (y1 - z1) + g * kappa
    H = -beta * sk * (y2 - z2) + sk * (beta * eta + alpha) * (y1 + z1) + h * kappa
    q = (2 * d * kc * beta * (y0 * z1 - z0 * y1)
         + (eta * beta + alpha) * (d * kc * s + eta * eta))
    sys, fijs = generate_general(GeneralFamilyInput(
        ell=eta, g=g, h=h, P=P, q=q, delta=delta, placement="f31", H=H))
    if Fraction(k) == 1:
        desc = ("third-order NLS-type system (-)" if delta == 1
                else "third-order NLS-type system (+)")
    else:
        desc = f"third-order NLS-type family (k={k}, {'-' if delta == 1 else '+'})"
    sys = EvolutionSystem(F=sys.F, G=sys.G, description=desc)
    return sys, fijs, params


def mkdv_family_preset(delta: int
                       ) -> tuple[EvolutionSystem, AssociatedFunctions, dict]:
    """mKdV-type corollary of the KdV family (f31-pinned, a1 = b2 = sqrt(6)/3
    alpha); rebuilds the catalog mKdV entries."""
    params = _mkdv_params()
    eta = params["eta"]
    third = JetExpr.const(Fraction(1, 3))
    coeff = third * JetExpr.var(params["s6"]) * JetExpr.var(params["alpha"])
    e = JetExpr.var(eta)
    d = JetExpr.const(delta)
    c = d * e * e
    z0, y0 = JetExpr.var(Z[0]), JetExpr.var(Y[0])
    q1 = coeff * z0
    q2 = coeff * y0
    half = JetExpr.const(Fraction(1, 2))
    q = half * (q1 * q1 + q2 * q2) + c
    p = -d * q
    sys, fijs = generate_kdv_family(KdVFamilyInput(
        a=Fraction(-1), eta=eta, a1=coeff, b1=JetExpr.zero(),
        a2=JetExpr.zero(), b2=coeff, c=c, p=p, delta=delta, placement="f31"))
    desc = ("coupled mKdV-type system (+)" if delta == 1
            else "coupled mKdV-type system (-)")
    sys = EvolutionSystem(F=sys.F, G=sys.G, description=desc)
    return sys, fijs, params
