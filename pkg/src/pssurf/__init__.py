"""pssurf: symbolic-numeric toolkit for third-order evolution systems whose
generic solutions induce metrics of constant Gaussian curvature K = -1 or +1.
"""

from .expr import (DomainError, ExprError, JetExpr, JetVar, NumericalDomainError,
                   OrderOverflowError, ParamSymbol, ProbeResult, T, UnboundSymbolError,
                   UnknownSymbolError, X, Y, Z, ZeroStatus, as_expr, divide_exact,
                   is_zero, probe_zero)
from .parser import ExprSyntaxError, parse_expr

__all__ = [
    "DomainError", "ExprError", "ExprSyntaxError", "JetExpr", "JetVar",
    "NumericalDomainError", "OrderOverflowError", "ParamSymbol", "ProbeResult",
    "T", "UnboundSymbolError", "UnknownSymbolError", "X", "Y", "Z", "ZeroStatus",
    "as_expr", "divide_exact", "is_zero", "parse_expr", "probe_zero",
]
