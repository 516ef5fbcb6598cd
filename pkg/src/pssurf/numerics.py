"""Grids, finite differences, PDE residuals, curvature and holonomy checks.

Solutions are carried either as closed-form expressions in (x, t), whose
derivatives of any needed order are produced symbolically and evaluated with
vectorized numpy kernels, or as plain arrays differentiated with second-order
stencils.  All verification here is a posteriori: given a solution, certify
the PDE residual, the induced-metric curvature, and the zero-curvature
transport defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .expr import FuncApp, JetExpr, JetVar, ParamSymbol, T, X, Y, Z
from .verify import EvolutionSystem, LinearProblem, AssociatedFunctions
from .families import metric_coefficients


@dataclass(frozen=True)
class Grid:
    """Uniform space-time grid; u[i, j] lives at (x0 + i dx, t0 + j dt)."""

    x0: float
    t0: float
    dx: float
    dt: float
    nx: int
    nt: int

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("grid spacings must be positive")
        if self.nx < 5 or self.nt < 5:
            raise ValueError("need at least 5 points per axis")

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def ts(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ts, indexing="ij")

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.x0, self.t0, self.dx / factor, self.dt / factor,
                    (self.nx - 1) * factor + 1, (self.nt - 1) * factor + 1)

    @staticmethod
    def from_spec(spec: str) -> "Grid":
        x0, t0, dx, dt, nx, nt = (float(tok) for tok in spec.split(","))
        return Grid(x0, t0, dx, dt, int(nx), int(nt))

    @staticmethod
    def over_box(x0: float, x1: float, t0: float, t1: float,
                 nx: int, nt: int) -> "Grid":
        return Grid(x0, t0, (x1 - x0) / (nx - 1), (t1 - t0) / (nt - 1), nx, nt)


# -- vectorized expression evaluation ------------------------------------------


def compile_expr(e: JetExpr) -> Callable[[Mapping[str, np.ndarray]], np.ndarray]:
    """Compile a normalized expression into a numpy evaluator over named
    arrays; out-of-domain points evaluate to inf/nan for downstream masking."""
    compiled_terms = []
    for (mono, facs), c in e._terms.items():
        fac_fns = []
        for fac, exp in facs:
            if isinstance(fac, FuncApp):
                arg_fn = compile_expr(fac.arg)
                np_fn = _NP_FUNCS[fac.name]
                fac_fns.append((lambda vals, f=np_fn, a=arg_fn: f(a(vals)), exp))
            else:
                fac_fns.append((compile_expr(fac.base), exp))
        compiled_terms.append(
            (float(c), tuple((s.name, x) for s, x in mono), tuple(fac_fns)))

    def evaluate(vals: Mapping[str, np.ndarray]):
        total = 0.0
        for c, mono, fac_fns in compiled_terms:
            piece = c
            for name, exp in mono:
                piece = piece * vals[name] ** exp
            for fn, exp in fac_fns:
                # integer exponents keep negative bases well defined
                piece = piece * fn(vals) ** exp
            total = total + piece
        return total

    return evaluate


_NP_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sec": lambda a: 1.0 / np.cos(a),
    "exp": np.exp,
    "sqrt": np.sqrt,
}


def eval_on(e: JetExpr, vals: Mapping[str, np.ndarray],
            shape: Optional[tuple] = None) -> np.ndarray:
    with np.errstate(all="ignore"):
        out = compile_expr(e)(vals)
    if np.isscalar(out) or np.ndim(out) == 0:
        out = np.full(shape if shape is not None else (), float(out))
    return np.asarray(out, dtype=float)


def bind_params(e: JetExpr, params: Mapping[str, float]) -> JetExpr:
    """Substitute numeric parameter values (exactly, via binary rationals)."""
    bindings = {}
    for sym in e.symbols():
        if isinstance(sym, ParamSymbol) and sym.name in params:
            bindings[sym] = JetExpr.const(Fraction(params[sym.name]))
    return e.substitute(bindings) if bindings else e


# -- finite differences --------------------------------------------------------


def diff_axis(arr: np.ndarray, h: float, axis: int, order: int = 1) -> np.ndarray:
    """Second-order accurate derivative along one axis, one-sided second-order
    stencils at the boundary rows."""
    a = np.moveaxis(np.asarray(arr, dtype=float), axis, 0)
    out = np.empty_like(a)
    n = a.shape[0]
    if order == 1:
        out[1:-1] = (a[2:] - a[:-2]) / (2 * h)
        out[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
        out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    elif order == 2:
        out[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / h**2
        out[0] = (2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]) / h**2
        out[-1] = (2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]) / h**2
    elif order == 3:
        out[2:-2] = (a[4:] - 2 * a[3:-1] + 2 * a[1:-3] - a[:-4]) / (2 * h**3)
        # one-sided / skewed 5-point stencils, all second-order accurate
        out[0] = (-2.5 * a[0] + 9 * a[1] - 12 * a[2] + 7 * a[3]
                  - 1.5 * a[4]) / h**3
        out[1] = (-1.5 * a[0] + 5 * a[1] - 6 * a[2] + 3 * a[3]
                  - 0.5 * a[4]) / h**3
        out[-2] = (0.5 * a[-5] - 3 * a[-4] + 6 * a[-3] - 5 * a[-2]
                   + 1.5 * a[-1]) / h**3
        out[-1] = (1.5 * a[-5] - 7 * a[-4] + 12 * a[-3] - 9 * a[-2]
                   + 2.5 * a[-1]) / h**3
    else:
        raise ValueError("order must be 1, 2 or 3")
    return np.moveaxis(out, 0, axis)


def observed_order(errors: Sequence[float]) -> float:
    """Mean log2 ratio of successive errors under grid halving."""
    errs = [float(e) for e in errors]
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    return float(np.mean([np.log2(r) for r in ratios]))


# -- sampled solutions ----------------------------------------------------------


@dataclass
class SampledSolution:
    """A (u, v) field over a grid, array-backed or closed-form-backed."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    mask: np.ndarray
    u_expr: Optional[JetExpr] = None
    v_expr: Optional[JetExpr] = None
    _deriv_cache: dict = field(default_factory=dict, repr=False)

    @property
    def provenance(self) -> str:
        return "closed" if self.u_expr is not None else "array"

    @classmethod
    def from_exprs(cls, grid: Grid, u_expr: JetExpr, v_expr: JetExpr,
                   mask: Optional[np.ndarray] = None) -> "SampledSolution":
        for e in (u_expr, v_expr):
            for sym in e.symbols():
                if not (isinstance(sym, JetVar) and sym.kind in ("x", "t")):
                    raise ValueError(
                        "closed-form solutions must be expressions in x, t only")
        xm, tm = grid.mesh()
        vals = {"x": xm, "t": tm}
        u = eval_on(u_expr, vals, xm.shape)
        v = eval_on(v_expr, vals, xm.shape)
        finite = np.isfinite(u) & np.isfinite(v)
        mask = finite if mask is None else (mask & finite)
        return cls(grid=grid, u=u, v=v, mask=mask, u_expr=u_expr, v_expr=v_expr)

    @classmethod
    def from_arrays(cls, grid: Grid, u: np.ndarray, v: np.ndarray,
                    mask: Optional[np.ndarray] = None) -> "SampledSolution":
        u = np.asarray(u, dtype=float)
        if mask is None:
            mask = np.ones(u.shape, dtype=bool)
        return cls(grid=grid, u=u, v=np.asarray(v, dtype=float), mask=mask)

    def deriv_expr(self, which: str, x_order: int, t_order: int = 0) -> JetExpr:
        key = (which, x_order, t_order)
        if key not in self._deriv_cache:
            e = self.u_expr if which == "u" else self.v_expr
            if e is None:
                raise ValueError("symbolic derivatives need a closed-form solution")
            for _ in range(x_order):
                e = e.diff(X)
            for _ in range(t_order):
                e = e.diff(T)
            self._deriv_cache[key] = e
        return self._deriv_cache[key]

    def deriv_array(self, which: str, x_order: int, t_order: int = 0) -> np.ndarray:
        if self.provenance == "closed":
            xm, tm = self.grid.mesh()
            return eval_on(self.deriv_expr(which, x_order, t_order),
                           {"x": xm, "t": tm}, xm.shape)
        arr = self.u if which == "u" else self.v
        if x_order:
            arr = diff_axis(arr, self.grid.dx, axis=0, order=x_order)
        for _ in range(t_order):
            arr = diff_axis(arr, self.grid.dt, axis=1, order=1)
        return arr

    def jet_arrays(self, max_order: int = 3) -> dict[str, np.ndarray]:
        xm, tm = self.grid.mesh()
        vals = {"x": xm, "t": tm}
        for i in range(max_order + 1):
            vals[f"z{i}"] = self.deriv_array("u", i)
            vals[f"y{i}"] = self.deriv_array("v", i)
        return vals

    def fields_at(self, xa: np.ndarray, ta: np.ndarray, max_x_order: int = 2
                  ) -> dict[str, np.ndarray]:
        """Evaluate u, v and x-derivatives at arbitrary points (closed form)."""
        if self.provenance != "closed":
            raise ValueError("off-grid evaluation needs a closed-form solution")
        vals = {"x": np.asarray(xa, dtype=float), "t": np.asarray(ta, dtype=float)}
        out = {}
        names = ["u", "u_x", "u_xx", "u_xxx"]
        vnames = ["v", "v_x", "v_xx", "v_xxx"]
        for i in range(max_x_order + 1):
            out[names[i]] = eval_on(self.deriv_expr("u", i), vals,
                                    np.shape(vals["x"]))
            out[vnames[i]] = eval_on(self.deriv_expr("v", i), vals,
                                     np.shape(vals["x"]))
        return out

    def masked_fraction(self) -> float:
        return 1.0 - float(np.count_nonzero(self.mask)) / self.mask.size


# -- residual statistics ---------------------------------------------------------


@dataclass(frozen=True)
class FieldStats:
    max: float
    mean: float
    field: np.ndarray
    mask: np.ndarray

    def to_dict(self) -> dict:
        return {"max": self.max, "mean": self.mean,
                "valid_fraction": float(np.count_nonzero(self.mask)) / self.mask.size}


def _stats(field: np.ndarray, mask: np.ndarray) -> FieldStats:
    vals = np.abs(field[mask])
    if vals.size == 0:
        return FieldStats(max=float("nan"), mean=float("nan"),
                          field=field, mask=mask)
    return FieldStats(max=float(vals.max()), mean=float(vals.mean()),
                      field=field, mask=mask)


def pde_residual(sys: EvolutionSystem, sol: SampledSolution,
                 params: Optional[Mapping[str, float]] = None) -> FieldStats:
    """Pointwise |u_t - F| and |v_t - G| over the unmasked grid."""
    params = dict(params or {})
    jets = sol.jet_arrays(3)
    jets.update(params)
    with np.errstate(all="ignore"):
        f_val = eval_on(sys.F, jets, sol.u.shape)
        g_val = eval_on(sys.G, jets, sol.u.shape)
        u_t = sol.deriv_array("u", 0, 1)
        v_t = sol.deriv_array("v", 0, 1)
        res = np.maximum(np.abs(u_t - f_val), np.abs(v_t - g_val))
    mask = sol.mask & np.isfinite(res)
    return _stats(res, mask)


def metric_field(fijs: AssociatedFunctions, sol: SampledSolution,
                 params: Optional[Mapping[str, float]] = None
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate the first-fundamental-form coefficients along the solution
    jet; returns (E, F, G, mask)."""
    e_expr, f_expr, g_expr = metric_coefficients(fijs)
    jets = sol.jet_arrays(2)
    jets.update(params or {})
    with np.errstate(all="ignore"):
        E = eval_on(e_expr, jets, sol.u.shape)
        F = eval_on(f_expr, jets, sol.u.shape)
        G = eval_on(g_expr, jets, sol.u.shape)
    mask = sol.mask & np.isfinite(E) & np.isfinite(F) & np.isfinite(G)
    return E, F, G, mask


def gaussian_curvature(E: np.ndarray, F: np.ndarray, G: np.ndarray, grid: Grid,
                       mask: Optional[np.ndarray] = None,
                       degeneracy_tol: float = 1e-8
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian curvature of E dx^2 + 2F dx dt + G dt^2 via the Brioschi
    formula with centered second differences.

    Points where EG - F^2 <= degeneracy_tol are masked (not fatal), as is the
    one-cell boundary ring of the stencil.
    """
    if mask is None:
        mask = np.ones(E.shape, dtype=bool)
    dx, dt = grid.dx, grid.dt
    d_x = lambda a: diff_axis(a, dx, axis=0, order=1)
    d_t = lambda a: diff_axis(a, dt, axis=1, order=1)
    with np.errstate(all="ignore"):
        E_x, E_t = d_x(E), d_t(E)
        F_x, F_t = d_x(F), d_t(F)
        G_x, G_t = d_x(G), d_t(G)
        E_tt = diff_axis(E, dt, axis=1, order=2)
        G_xx = diff_axis(G, dx, axis=0, order=2)
        F_xt = d_t(F_x)

        def det3(r0, r1, r2):
            a, b, c = r0
            d, e, f = r1
            g, h, i = r2
            return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)

        m1 = det3((-0.5 * E_tt + F_xt - 0.5 * G_xx, 0.5 * E_x, F_x - 0.5 * E_t),
                  (F_t - 0.5 * G_x, E, F),
                  (0.5 * G_t, F, G))
        m2 = det3((np.zeros_like(E), 0.5 * E_t, 0.5 * G_x),
                  (0.5 * E_t, E, F),
                  (0.5 * G_x, F, G))
        w = E * G - F * F
        K = (m1 - m2) / (w * w)
    out_mask = mask & (w > degeneracy_tol) & np.isfinite(K)
    out_mask[[0, -1], :] = False
    out_mask[:, [0, -1]] = False
    return K, out_mask


# -- holonomy -------------------------------------------------------------------


def _matrix_functions(lp: LinearProblem, sol: SampledSolution,
                      params: Mapping[str, float]):
    """Compile A(x,t), B(x,t) along a closed-form solution.

    sl(2,R) transports in the real 2x2 representation; su(2) in the real 4x4
    representation [[Re, -Im], [Im, Re]] to keep the kernel real.
    """
    if sol.provenance != "closed":
        raise ValueError("holonomy transport needs a closed-form solution")
    jet_bind = {}
    for i in range(3):
        jet_bind[Z[i]] = sol.deriv_expr("u", i)
        jet_bind[Y[i]] = sol.deriv_expr("v", i)

    def entry_fn(e: JetExpr):
        e = bind_params(e, params).substitute(jet_bind)
        fn = compile_expr(e)
        return lambda xa, ta: np.broadcast_to(
            np.asarray(fn({"x": xa, "t": ta}), dtype=float), np.shape(xa)).copy()

    def matrix_fn(m):
        real = [[entry_fn(m[i][j].re) for j in range(2)] for i in range(2)]
        if lp.algebra == "sl2r":
            def fn(xa, ta):
                out = np.empty(np.shape(xa) + (2, 2))
                for i in range(2):
                    for j in range(2):
                        out[..., i, j] = real[i][j](xa, ta)
                return out
            return fn, 2
        imag = [[entry_fn(m[i][j].im) for j in range(2)] for i in range(2)]

        def fn(xa, ta):
            out = np.zeros(np.shape(xa) + (4, 4))
            for i in range(2):
                for j in range(2):
                    re = real[i][j](xa, ta)
                    im = imag[i][j](xa, ta)
                    out[..., i, j] = re
                    out[..., i + 2, j + 2] = re
                    out[..., i, j + 2] = -im
                    out[..., i + 2, j] = im
            return out
        return fn, 4

    a_fn, dim = matrix_fn(lp.a)
    b_fn, _ = matrix_fn(lp.b)
    return a_fn, b_fn, dim


def _rk4_transport(m_of_s, s0: np.ndarray, h: float, start: np.ndarray) -> np.ndarray:
    """One classical fourth-order step for dT/ds = M(s) T on stacked matrices."""
    k1 = m_of_s(s0) @ start
    k2 = m_of_s(s0 + h / 2) @ (start + (h / 2) * k1)
    k3 = m_of_s(s0 + h / 2) @ (start + (h / 2) * k2)
    k4 = m_of_s(s0 + h) @ (start + h * k3)
    return start + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def holonomy_defect(lp: LinearProblem, sol: SampledSolution,
                    params: Optional[Mapping[str, float]] = None) -> FieldStats:
    """Per-plaquette operator-norm discrepancy between the two edge-ordered
    frame transports, divided by the plaquette area; approximates the norm of
    A_t - B_x + [A, B] and converges to zero on solutions."""
    params = dict(params or {})
    a_fn, b_fn, dim = _matrix_functions(lp, sol, params)
    grid = sol.grid
    xs, ts = grid.xs, grid.ts
    xm = np.repeat(xs[:-1], grid.nt - 1)
    tm = np.tile(ts[:-1], grid.nx - 1)
    eye = np.broadcast_to(np.eye(dim), (xm.size, dim, dim)).copy()
    dx, dt = grid.dx, grid.dt
    with np.errstate(all="ignore"):
        # path 1: along x at t, then along t at x + dx
        p1 = _rk4_transport(lambda s: a_fn(s, tm), xm, dx, eye)
        p1 = _rk4_transport(lambda s: b_fn(xm + dx, s), tm, dt, p1)
        # path 2: along t at x, then along x at t + dt
        p2 = _rk4_transport(lambda s: b_fn(xm, s), tm, dt, eye)
        p2 = _rk4_transport(lambda s: a_fn(s, tm + dt), xm, dx, p2)
        diff = p1 - p2
        defect = np.linalg.svd(diff, compute_uv=False)[..., 0] / (dx * dt)
    defect = defect.reshape(grid.nx - 1, grid.nt - 1)
    corner_mask = (sol.mask[:-1, :-1] & sol.mask[1:, :-1]
                   & sol.mask[:-1, 1:] & sol.mask[1:, 1:])
    mask = corner_mask & np.isfinite(defect)
    return _stats(defect, mask)


# -- exports --------------------------------------------------------------------


def write_field_csv(path, grid: Grid, fields: Mapping[str, np.ndarray],
                    mask: np.ndarray):
    """CSV export: x, t, <fields...>, mask rows in grid-major order."""
    xm, tm = grid.mesh()
    names = list(fields)
    with open(path, "w") as handle:
        handle.write("x,t," + ",".join(names) + ",mask\n")
        for i in range(grid.nx):
            for j in range(grid.nt):
                row = [f"{xm[i, j]:.17g}", f"{tm[i, j]:.17g}"]
                row += [f"{fields[n][i, j]:.17g}" for n in names]
                row.append("1" if mask[i, j] else "0")
                handle.write(",".join(row) + "\n")
