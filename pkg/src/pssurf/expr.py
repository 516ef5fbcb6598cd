"""Exact symbolic expressions over jet coordinates.

The kernel works in the polynomial ring over the rationals generated by the
jet variables x, t, z0..z3, y0..y3 and declared parameter symbols, extended
by opaque function applications (sin, cos, tan, sec, exp, sqrt) and opaque
inverse powers of whole subexpressions.  Every expression is kept in a
canonical normal form: a merged, reduction-applied, deterministically ordered
sum of terms, so that equality and zero-testing of polynomial expressions are
exact and decidable.  No trigonometric or exponential identities are ever
rewritten; zero-testing of expressions that still carry function applications
falls back to randomized numerical probing.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union


class ExprError(ValueError):
    pass


class UnknownSymbolError(ExprError):
    pass


class OrderOverflowError(ExprError):
    pass


class DepthExceededError(ExprError):
    pass


class UnboundSymbolError(ExprError):
    pass


class NumericalDomainError(ExprError):
    pass


class DomainError(ExprError):
    """Raised when numerical probing cannot find any admissible sample point."""


MAX_JET_ORDER = 3
# order-4 jets exist only transiently inside on-shell prolongation
_MAX_JET_ORDER_EXT = 4


class JetVar:
    """A jet coordinate: x, t, or z_i / y_i with i the x-derivative order."""

    __slots__ = ("kind", "order", "_key")

    def __init__(self, kind: str, order: int = 0, _internal: bool = False):
        if kind not in ("x", "t", "z", "y"):
            raise ExprError(f"bad jet variable kind {kind!r}")
        cap = _MAX_JET_ORDER_EXT if _internal else MAX_JET_ORDER
        if kind in ("x", "t"):
            order = 0
        elif not 0 <= order <= cap:
            raise OrderOverflowError(f"jet order {order} out of range for {kind}")
        self.kind = kind
        self.order = order
        group = {"x": 0, "t": 1, "z": 2, "y": 3}[kind]
        self._key = (group, order)

    @property
    def name(self) -> str:
        if self.kind in ("x", "t"):
            return self.kind
        return f"{self.kind}{self.order}"

    def sort_key(self):
        return (0,) + self._key

    def __hash__(self):
        return hash(("jet", self._key))

    def __eq__(self, other):
        return isinstance(other, JetVar) and self._key == other._key

    def __repr__(self):
        return self.name


X = JetVar("x")
T = JetVar("t")
Z = tuple(JetVar("z", i, _internal=True) for i in range(5))
Y = tuple(JetVar("y", i, _internal=True) for i in range(5))


class ParamSymbol:
    """A named parameter, optionally time dependent or carrying a power
    reduction rule (symbol**power rewrites to an exact rational).

    Reduction rules encode surds: sqrt(6) is a symbol s with s**2 -> 6, so
    products of surds collapse exactly during normalization.  Time dependent
    symbols own derivative symbols (alpha -> alpha_t -> alpha_tt, capped at
    second derivatives).
    """

    __slots__ = ("name", "time_dependent", "reduction", "depth")

    def __init__(self, name: str, time_dependent: bool = False,
                 reduction: Optional[tuple[int, Fraction]] = None,
                 depth: int = 0):
        if not name or not (name[0].isalpha() or name[0] == "_"):
            raise ExprError(f"bad parameter name {name!r}")
        if reduction is not None:
            power, value = reduction
            if power < 2:
                raise ExprError("reduction power must be >= 2")
            reduction = (int(power), Fraction(value))
        self.name = name
        self.time_dependent = time_dependent
        self.reduction = reduction
        self.depth = depth

    def derivative_symbol(self) -> "ParamSymbol":
        if self.depth >= 2:
            raise DepthExceededError(
                f"no derivative symbol beyond second order for {self.name}")
        return ParamSymbol(self.name + "_t", time_dependent=True,
                           depth=self.depth + 1)

    def sort_key(self):
        return (1, self.name)

    def __hash__(self):
        return hash(("param", self.name))

    def __eq__(self, other):
        return isinstance(other, ParamSymbol) and self.name == other.name

    def __repr__(self):
        return self.name


Symbol = Union[JetVar, ParamSymbol]

FUNCTIONS = ("sin", "cos", "tan", "sec", "exp", "sqrt")


class FuncApp:
    """An opaque elementary-function application with a normalized argument."""

    __slots__ = ("name", "arg", "_key")

    def __init__(self, name: str, arg: "JetExpr"):
        if name not in FUNCTIONS:
            raise ExprError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg
        self._key = ("f", name, arg.key)

    def sort_key(self):
        return self._key

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        return isinstance(other, FuncApp) and self._key == other._key

    def __repr__(self):
        return f"{self.name}({self.arg})"


class PowFactor:
    """An opaque inverse power of a whole subexpression (used with negative
    exponents only); lets quotients with sum denominators be carried exactly."""

    __slots__ = ("base", "_key")

    def __init__(self, base: "JetExpr"):
        self.base = base
        self._key = ("p", base.key)

    def sort_key(self):
        return self._key

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        return isinstance(other, PowFactor) and self._key == other._key

    def __repr__(self):
        return f"({self.base})^-1"


Factor = Union[FuncApp, PowFactor]

# term key: (monomial, factors); monomial = tuple[(Symbol, int>0)],
# factors = tuple[(Factor, int != 0)], both sorted by sort_key.
_TermKey = tuple[tuple, tuple]


def _reduce_monomial(mono: Iterable[tuple[Symbol, int]], coeff: Fraction):
    """Apply parameter power reductions; returns (sorted monomial, coeff)."""
    out = []
    for sym, exp in mono:
        if exp == 0:
            continue
        red = getattr(sym, "reduction", None)
        if red is not None and exp >= red[0]:
            power, value = red
            coeff *= value ** (exp // power)
            exp = exp % power
            if exp == 0:
                continue
        out.append((sym, exp))
    out.sort(key=lambda se: se[0].sort_key())
    return tuple(out), coeff


class JetExpr:
    """A canonical sum of terms: rational coefficient x monomial x opaque
    factors.  Immutable; all arithmetic returns new normalized expressions."""

    __slots__ = ("_terms", "_key", "_str")

    def __init__(self, terms: Optional[dict] = None, _raw: bool = False):
        if terms is None:
            terms = {}
        if not _raw:
            clean = {}
            for (mono, facs), c in terms.items():
                c = Fraction(c)
                if c == 0:
                    continue
                mono, c = _reduce_monomial(mono, c)
                facs = tuple(sorted(((f, e) for f, e in facs if e != 0),
                                    key=lambda fe: fe[0].sort_key()))
                key = (mono, facs)
                c = clean.get(key, Fraction(0)) + c
                if c == 0:
                    clean.pop(key, None)
                else:
                    clean[key] = c
            terms = clean
        self._terms = terms
        self._key = None
        self._str = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "JetExpr":
        return _ZERO

    @staticmethod
    def const(value) -> "JetExpr":
        c = Fraction(value)
        if c == 0:
            return _ZERO
        return JetExpr({((), ()): c}, _raw=True)

    @staticmethod
    def var(sym: Symbol) -> "JetExpr":
        return JetExpr({(((sym, 1),), ()): Fraction(1)}, _raw=True)

    @staticmethod
    def func(name: str, arg: "JetExpr") -> "JetExpr":
        return JetExpr({((), ((FuncApp(name, arg), 1),)): Fraction(1)}, _raw=True)

    # -- structure ---------------------------------------------------------

    @property
    def key(self):
        if self._key is None:
            self._key = tuple(sorted(
                (mono_facs_key(mk), c) for mk, c in self._terms.items()))
        return self._key

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        if not isinstance(other, JetExpr):
            if isinstance(other, (int, Fraction)):
                other = JetExpr.const(other)
            else:
                return NotImplemented
        return self._terms == other._terms

    def __bool__(self):
        return bool(self._terms)

    def num_terms(self) -> int:
        return len(self._terms)

    def as_const(self) -> Optional[Fraction]:
        """The rational value if the expression is constant, else None."""
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1:
            (mono, facs), c = next(iter(self._terms.items()))
            if not mono and not facs:
                return c
        return None

    def is_polynomial(self) -> bool:
        """True when no term carries an opaque function or inverse power."""
        return all(not facs for (_, facs) in self._terms)

    def single_term(self) -> Optional[tuple[Fraction, tuple, tuple]]:
        if len(self._terms) == 1:
            (mono, facs), c = next(iter(self._terms.items()))
            return c, mono, facs
        return None

    def symbols(self) -> set:
        out: set = set()
        for (mono, facs) in self._terms:
            for sym, _ in mono:
                out.add(sym)
            for fac, _ in facs:
                base = fac.arg if isinstance(fac, FuncApp) else fac.base
                out |= base.symbols()
        return out

    def jet_order(self) -> int:
        """Highest z/y jet order appearing anywhere, -1 if none."""
        order = -1
        for sym in self.symbols():
            if isinstance(sym, JetVar) and sym.kind in ("z", "y"):
                order = max(order, sym.order)
        return order

    def contains(self, sym: Symbol) -> bool:
        return sym in self.symbols()

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = as_expr(other)
        if not self._terms:
            return other
        if not other._terms:
            return self
        terms = dict(self._terms)
        for key, c in other._terms.items():
            s = terms.get(key, Fraction(0)) + c
            if s == 0:
                terms.pop(key, None)
            else:
                terms[key] = s
        return JetExpr(terms, _raw=True)

    __radd__ = __add__

    def __neg__(self):
        return JetExpr({k: -c for k, c in self._terms.items()}, _raw=True)

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) + (-self)

    def __mul__(self, other):
        other = as_expr(other)
        if not self._terms or not other._terms:
            return _ZERO
        out: dict = {}
        for (m1, f1), c1 in self._terms.items():
            for (m2, f2), c2 in other._terms.items():
                c = c1 * c2
                mono, c = _reduce_monomial(_merge_powers(m1, m2), c)
                facs = tuple(sorted(_merge_powers(f1, f2),
                                    key=lambda fe: fe[0].sort_key()))
                key = (mono, facs)
                s = out.get(key, Fraction(0)) + c
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        return JetExpr(out, _raw=True)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            raise ExprError("only integer exponents are supported")
        if exponent == 0:
            return JetExpr.const(1)
        if exponent < 0:
            return _opaque_power(self, exponent)
        result = self
        for _ in range(exponent - 1):
            result = result * self
        return result

    def __truediv__(self, other):
        other = as_expr(other)
        const = other.as_const()
        if const is not None:
            if const == 0:
                raise ZeroDivisionError("division by zero expression")
            return self * JetExpr.const(1 / const)
        quotient = divide_exact(self, other)
        if quotient is not None:
            return quotient
        return self * _opaque_power(other, -1)

    def __rtruediv__(self, other):
        return as_expr(other) / self

    # -- calculus ----------------------------------------------------------

    def diff(self, v: Symbol) -> "JetExpr":
        """Exact partial derivative; all other symbols held independent.

        Differentiating by t drives time-dependent parameters to their
        derivative symbols (chain rule through the opaque factors as well).
        """
        result = _ZERO
        for (mono, facs), c in self._terms.items():
            # monomial part
            for i, (sym, exp) in enumerate(mono):
                dsym = _symbol_derivative(sym, v)
                if dsym is None:
                    continue
                if exp > 1:
                    rest = mono[:i] + ((sym, exp - 1),) + mono[i + 1:]
                else:
                    rest = mono[:i] + mono[i + 1:]
                piece = JetExpr({(rest, facs): c * exp})
                result = result + piece * dsym
            # factor part (chain rule through opaque applications)
            for i, (fac, exp) in enumerate(facs):
                dfac = _factor_derivative(fac, v)
                if dfac is None:
                    continue
                lowered = facs[:i] + ((fac, exp - 1),) + facs[i + 1:]
                piece = JetExpr({(mono, lowered): c * exp})
                result = result + piece * dfac
        return result

    def total_x(self) -> "JetExpr":
        """Total x-derivative: shifts each jet variable up one order.

        The input must stay within order-2 jets so the result lives in the
        order-3 jet space.
        """
        if self.jet_order() > 2:
            raise OrderOverflowError(
                "total_x needs jet order <= 2 (found order "
                f"{self.jet_order()})")
        return self._total_x_capped(2)

    def _total_x_capped(self, top: int) -> "JetExpr":
        result = self.diff(X)
        for i in range(top + 1):
            dz = self.diff(Z[i])
            if dz:
                result = result + dz * JetExpr.var(Z[i + 1])
            dy = self.diff(Y[i])
            if dy:
                result = result + dy * JetExpr.var(Y[i + 1])
        return result

    def substitute(self, bindings: Mapping[Symbol, "JetExpr"]) -> "JetExpr":
        """Simultaneous substitution followed by normalization."""
        for val in bindings.values():
            if as_expr(val).jet_order() > MAX_JET_ORDER:
                raise OrderOverflowError("substitution value exceeds jet order 3")
        result = _ZERO
        for (mono, facs), c in self._terms.items():
            piece = JetExpr.const(c)
            for sym, exp in mono:
                if sym in bindings:
                    piece = piece * (as_expr(bindings[sym]) ** exp)
                else:
                    piece = piece * JetExpr({(((sym, exp),), ()): Fraction(1)})
            for fac, exp in facs:
                if isinstance(fac, FuncApp):
                    new = JetExpr.func(fac.name, fac.arg.substitute(bindings)) ** exp
                else:
                    new = _opaque_power(fac.base.substitute(bindings), exp)
                piece = piece * new
            result = result + piece
        if result.jet_order() > MAX_JET_ORDER:
            raise OrderOverflowError("substitution raised jet order above 3")
        return result

    # -- evaluation --------------------------------------------------------

    def eval(self, bindings: Mapping) -> float:
        """IEEE double evaluation; every symbol must be bound.

        Keys may be Symbol objects or their names.
        """
        named = {}
        for k, v in bindings.items():
            named[k.name if not isinstance(k, str) else k] = float(v)
        return self._eval_named(named)

    def _eval_named(self, named: Mapping[str, float]) -> float:
        total = 0.0
        for (mono, facs), c in self._terms.items():
            val = float(c)
            for sym, exp in mono:
                if sym.name not in named:
                    raise UnboundSymbolError(f"unbound symbol {sym.name}")
                val *= named[sym.name] ** exp
            for fac, exp in facs:
                val *= _eval_factor(fac, named, exp)
            total += val
        return total

    # -- printing ----------------------------------------------------------

    def sorted_terms(self) -> list[tuple[tuple, tuple, Fraction]]:
        """Terms in the canonical (graded-lexicographic, descending) order."""
        syms = sorted({s for (mono, _) in self._terms for s, _ in mono},
                      key=lambda s: s.sort_key())
        position = {s: i for i, s in enumerate(syms)}

        def order_key(item):
            (mono, facs), _ = item
            vec = [0] * len(syms)
            deg = 0
            for s, e in mono:
                vec[position[s]] = e
                deg += e
            fkey = tuple(f.sort_key() + (e,) for f, e in facs)
            return (-deg, tuple(-v for v in vec), fkey)

        return [(mono, facs, c) for (mono, facs), c in
                sorted(self._terms.items(), key=order_key)]

    def __str__(self):
        if self._str is None:
            self._str = _render(self)
        return self._str

    def __repr__(self):
        return f"JetExpr({self})"


_ZERO = JetExpr({}, _raw=True)


def as_expr(value) -> JetExpr:
    if isinstance(value, JetExpr):
        return value
    if isinstance(value, (int, Fraction)):
        return JetExpr.const(value)
    if isinstance(value, (JetVar, ParamSymbol)):
        return JetExpr.var(value)
    raise ExprError(f"cannot coerce {value!r} to JetExpr")


def _merge_powers(a, b):
    out = dict(a)
    for k, e in b:
        s = out.get(k, 0) + e
        if s == 0:
            out.pop(k, None)
        else:
            out[k] = s
    return tuple(out.items())


def _opaque_power(e: JetExpr, exp: int) -> JetExpr:
    """e**exp for exp < 0; stays in normal form without nesting PowFactors."""
    if exp >= 0:
        return e ** exp
    const = e.as_const()
    if const is not None:
        if const == 0:
            raise ZeroDivisionError("inverse of zero expression")
        return JetExpr.const(const ** exp)
    single = e.single_term()
    if single is not None:
        c, mono, facs = single
        if not mono and all(isinstance(f, FuncApp) for f, _ in facs):
            return JetExpr({((), tuple((f, x * exp) for f, x in facs)): c ** exp})
    return JetExpr({((), ((PowFactor(e), exp),)): Fraction(1)}, _raw=True)


def _symbol_derivative(sym: Symbol, v: Symbol) -> Optional[JetExpr]:
    """d(sym)/d(v) as an expression, or None when it vanishes."""
    if sym == v:
        return JetExpr.const(1)
    if isinstance(v, JetVar) and v.kind == "t" and \
            isinstance(sym, ParamSymbol) and sym.time_dependent:
        return JetExpr.var(sym.derivative_symbol())
    return None


_FUNC_DERIVATIVE = {
    "sin": lambda a: JetExpr.func("cos", a),
    "cos": lambda a: -JetExpr.func("sin", a),
    "tan": lambda a: JetExpr.func("sec", a) ** 2,
    "sec": lambda a: JetExpr.func("sec", a) * JetExpr.func("tan", a),
    "exp": lambda a: JetExpr.func("exp", a),
    "sqrt": lambda a: JetExpr.const(Fraction(1, 2)) * JetExpr.func("sqrt", a) ** -1,
}


def _factor_derivative(fac: Factor, v: Symbol) -> Optional[JetExpr]:
    if isinstance(fac, FuncApp):
        darg = fac.arg.diff(v)
        if not darg:
            return None
        return _FUNC_DERIVATIVE[fac.name](fac.arg) * darg
    dbase = fac.base.diff(v)
    if not dbase:
        return None
    return dbase


def _eval_factor(fac: Factor, named: Mapping[str, float], exp: int) -> float:
    if isinstance(fac, FuncApp):
        a = fac.arg._eval_named(named)
        try:
            if fac.name == "sin":
                v = math.sin(a)
            elif fac.name == "cos":
                v = math.cos(a)
            elif fac.name == "tan":
                v = math.tan(a)
            elif fac.name == "sec":
                v = 1.0 / math.cos(a)
            elif fac.name == "exp":
                v = math.exp(a)
            else:
                v = math.sqrt(a)
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise NumericalDomainError(f"{fac.name}: {err}") from None
    else:
        v = fac.base._eval_named(named)
    try:
        return v ** exp
    except (ZeroDivisionError, OverflowError) as err:
        raise NumericalDomainError(str(err)) from None


def mono_facs_key(term_key: _TermKey):
    mono, facs = term_key
    return (tuple((s.sort_key(), e) for s, e in mono),
            tuple(f.sort_key() + (e,) for f, e in facs))


# -- zero testing -----------------------------------------------------------


class ZeroStatus(Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    UNKNOWN = "unknown"


def is_zero(e: JetExpr) -> ZeroStatus:
    """Exact tri-state zero test; Unknown when opaque factors survive."""
    if not e:
        return ZeroStatus.ZERO
    if e.is_polynomial():
        return ZeroStatus.NONZERO
    return ZeroStatus.UNKNOWN


@dataclass(frozen=True)
class ProbeResult:
    kind: str                      # "likely_zero" | "nonzero" | "inconclusive"
    witness: Optional[dict] = None
    value: Optional[float] = None

    @property
    def likely_zero(self) -> bool:
        return self.kind == "likely_zero"

    @property
    def nonzero(self) -> bool:
        return self.kind == "nonzero"


def probe_zero(e: JetExpr, trials: int = 20, seed: int = 0,
               witness_tol: float = 1e-8, zero_tol: float = 1e-10) -> ProbeResult:
    """Evaluate at random points, symbols uniform in [-2, 2].

    Resamples points that hit function singularities; raises DomainError when
    no admissible point can be found at all.
    """
    if trials < 1:
        raise ExprError("trials must be >= 1")
    rng = random.Random(seed)
    syms = sorted(e.symbols(), key=lambda s: s.sort_key())
    if not syms:
        value = e._eval_named({})
        if abs(value) > witness_tol:
            return ProbeResult("nonzero", {}, value)
        return ProbeResult("likely_zero")
    gray = False
    for _ in range(trials):
        for _attempt in range(60):
            point = {s.name: rng.uniform(-2.0, 2.0) for s in syms}
            try:
                value = e._eval_named(point)
            except NumericalDomainError:
                continue
            if not math.isfinite(value):
                continue
            break
        else:
            raise DomainError("could not sample an admissible point")
        if abs(value) > witness_tol:
            return ProbeResult("nonzero", point, value)
        if abs(value) > zero_tol:
            gray = True
    return ProbeResult("inconclusive" if gray else "likely_zero")


# -- exact division ---------------------------------------------------------


def _divide_term(coeff, mono, facs, dc, dmono, dfacs):
    """Single-term division; None when not exactly divisible."""
    c = coeff / dc
    out_mono = dict(mono)
    for sym, exp in dmono:
        have = out_mono.get(sym, 0)
        if have < exp:
            red = getattr(sym, "reduction", None)
            if red is None:
                return None
            power, value = red
            # borrow whole reduction periods: sym**e == sym**(e+power) / value
            while have < exp:
                have += power
                c /= value
        have -= exp
        if have:
            out_mono[sym] = have
        else:
            out_mono.pop(sym, None)
    out_facs = dict(facs)
    for fac, exp in dfacs:
        if isinstance(fac, PowFactor):
            return None
        out_facs[fac] = out_facs.get(fac, 0) - exp
        if out_facs[fac] == 0:
            del out_facs[fac]
    return JetExpr({(tuple(out_mono.items()), tuple(out_facs.items())): c})


def divide_exact(num: JetExpr, den: JetExpr) -> Optional[JetExpr]:
    """Exact division in the polynomial ring; None when den does not divide.

    Single-term divisors may carry function factors and reduction symbols.
    Multi-term divisors must be plain polynomials free of reduction symbols
    (the quotient ring of a surd breaks the monomial-order termination
    argument); leading-term reduction then decides divisibility.
    """
    const = den.as_const()
    if const is not None:
        if const == 0:
            raise ZeroDivisionError("division by zero expression")
        return num * JetExpr.const(1 / const)
    single = den.single_term()
    if single is not None:
        dc, dmono, dfacs = single
        result = _ZERO
        for (mono, facs), c in num._terms.items():
            q = _divide_term(c, mono, facs, dc, dmono, dfacs)
            if q is None:
                return None
            result = result + q
        return result
    if not den.is_polynomial() or not num.is_polynomial():
        return None
    if any(getattr(s, "reduction", None) is not None for s in den.symbols()):
        return None
    lead = den.sorted_terms()[0]
    dmono, _, dc = lead[0], lead[1], lead[2]
    remainder = num
    quotient = _ZERO
    for _ in range(10000):
        if not remainder:
            return quotient
        if not remainder.is_polynomial():
            return None
        rmono, _rfacs, rc = remainder.sorted_terms()[0]
        q = _divide_term(rc, rmono, (), dc, dmono, ())
        if q is None:
            return None
        quotient = quotient + q
        remainder = remainder - q * den
    return None


# -- canonical rendering ------------------------------------------------------


def _render_factor(fac: Factor, exp: int) -> str:
    if isinstance(fac, FuncApp):
        body = f"{fac.name}({fac.arg})"
    else:
        body = f"({fac.base})"
    if exp == 1:
        return body
    return f"{body}^{exp}"


def _render_term(mono, facs, coeff: Fraction) -> str:
    parts = []
    if abs(coeff) != 1 or (not mono and not facs):
        parts.append(str(abs(coeff)))
    for sym, exp in mono:
        parts.append(sym.name if exp == 1 else f"{sym.name}^{exp}")
    for fac, exp in facs:
        parts.append(_render_factor(fac, exp))
    return "*".join(parts)


def _render(e: JetExpr) -> str:
    terms = e.sorted_terms()
    if not terms:
        return "0"
    pieces = []
    for i, (mono, facs, coeff) in enumerate(terms):
        body = _render_term(mono, facs, coeff)
        if i == 0:
            pieces.append(("-" if coeff < 0 else "") + body)
        else:
            pieces.append((" - " if coeff < 0 else " + ") + body)
    return "".join(pieces)
