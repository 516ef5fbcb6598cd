"""Backlund transformation for the coupled KdV system.

Provides the closed-form solution families obtained from the vacuum and the
(0, 1) seed, numerical transformation of arbitrary closed-form seeds through
the pseudopotential flow, and certification of transformed pairs against the
first-order transformation system.

The pseudopotential (phi, psi) is the complex Riccati flow of the coupled
KdV linear problem at spectral value lambda2 + i*lambda1; its real form is
the four-equation first-order system integrated here, and the new solution is
u' = u + lambda1/psi, v' = v + lambda1 (phi^2 + psi^2)/psi.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional

import numpy as np

from .defaults import DEFAULTS, Defaults
from .expr import JetExpr, T, X
from .numerics import Grid, SampledSolution, diff_axis, eval_on
from .parser import parse_expr


class BacklundError(ValueError):
    pass


class EmptyMaskError(BacklundError):
    pass


class BlowUpError(BacklundError):
    def __init__(self, message: str, last_valid_index: int):
        super().__init__(f"{message} (last valid index {last_valid_index})")
        self.last_valid_index = last_valid_index


class MaskCollisionError(BacklundError):
    pass


class BranchViolationError(BacklundError):
    pass


@dataclass(frozen=True)
class BTParams:
    """Transformation parameters; lambda1 is the (nonzero) spectral imaginary
    part, k1/k2 the integration constants of the closed-form families."""

    lambda1: float
    lambda2: float = 0.0
    sigma: int = 1
    k1: float = 0.0
    k2: float = 0.0

    def __post_init__(self):
        if self.lambda1 == 0:
            raise BacklundError("lambda1 must be nonzero")
        if self.sigma not in (1, -1):
            raise BacklundError("sigma must be +1 or -1")

    @property
    def eta(self) -> complex:
        return complex(self.lambda2, self.lambda1)

    def phase_speeds(self) -> tuple[float, float]:
        """Coefficients of t in the oscillatory and exponential phases."""
        l1, l2 = self.lambda1, self.lambda2
        return l1**3 - 3 * l1 * l2**2, l2**3 - 3 * l2 * l1**2


def _const(value: float) -> JetExpr:
    return JetExpr.const(Fraction(float(value)))


def _phases(params: BTParams) -> tuple[JetExpr, JetExpr]:
    """xi1 = l1 x + (l1^3 - 3 l1 l2^2) t + k1, xi2 = -l2 x + (l2^3 - 3 l2 l1^2) t + k2."""
    mu1, mu2 = params.phase_speeds()
    x, t = JetExpr.var(X), JetExpr.var(T)
    xi1 = _const(params.lambda1) * x + _const(mu1) * t + _const(params.k1)
    xi2 = -_const(params.lambda2) * x + _const(mu2) * t + _const(params.k2)
    return xi1, xi2


def _dilate_invalid(mask: np.ndarray) -> np.ndarray:
    """Erode the valid region by one cell (masked cells poison neighbours)."""
    out = mask.copy()
    out[1:, :] &= mask[:-1, :]
    out[:-1, :] &= mask[1:, :]
    out[:, 1:] &= mask[:, :-1]
    out[:, :-1] &= mask[:, 1:]
    return out


def bt_vacuum(params: BTParams, grid: Grid,
              defaults: Defaults = DEFAULTS) -> SampledSolution:
    """Closed-form family obtained by transforming the zero solution:
    u' = sigma l1 e^{-xi2} sec(xi1), v' = sigma l1 e^{xi2} sec(xi1)."""
    xi1, xi2 = _phases(params)
    amp = _const(params.sigma * params.lambda1)
    sec = JetExpr.func("sec", xi1)
    u = amp * JetExpr.func("exp", -xi2) * sec
    v = amp * JetExpr.func("exp", xi2) * sec
    xm, tm = grid.mesh()
    denom = np.abs(eval_on(JetExpr.func("cos", xi1), {"x": xm, "t": tm}, xm.shape))
    mask = _dilate_invalid(denom >= defaults.mask_threshold)
    if not mask.any():
        raise EmptyMaskError("every grid point is inside the singularity mask")
    return SampledSolution.from_exprs(grid, u, v, mask=mask)


def bt_u0v1(params: BTParams, grid: Grid,
            defaults: Defaults = DEFAULTS) -> SampledSolution:
    """Closed-form family obtained by transforming the seed (u, v) = (0, 1)."""
    l1, l2 = params.lambda1, params.lambda2
    xi1, xi2 = _phases(params)
    e2 = JetExpr.func("exp", xi2)
    s1 = JetExpr.func("sin", xi1)
    c1 = JetExpr.func("cos", xi1)
    den = _const(l1) + e2 * s1
    den_inv = den ** -1
    norm = l1 * l1 + l2 * l2
    u = -_const(l1 * norm) * den_inv
    v = (-_const(1.0 / norm) * e2
         * (_const(l1) * e2 + _const(l1 * l1 - l2 * l2) * s1
            + _const(2 * l1 * l2) * c1) * den_inv)
    xm, tm = grid.mesh()
    denom = np.abs(eval_on(den, {"x": xm, "t": tm}, xm.shape))
    mask = _dilate_invalid(denom >= defaults.mask_threshold)
    if not mask.any():
        raise EmptyMaskError("every grid point is inside the singularity mask")
    return SampledSolution.from_exprs(grid, u, v, mask=mask)


def u0v1_pseudopotential(params: BTParams) -> tuple[JetExpr, JetExpr]:
    """Closed-form (phi, psi) of the constant-coefficient flow at seed (0, 1):
    phi = (e^{xi2} cos xi1 + l2)/(l1^2 + l2^2),
    psi = -(e^{xi2} sin xi1 + l1)/(l1^2 + l2^2)."""
    l1, l2 = params.lambda1, params.lambda2
    xi1, xi2 = _phases(params)
    norm = _const(1.0 / (l1 * l1 + l2 * l2))
    e2 = JetExpr.func("exp", xi2)
    phi = norm * (e2 * JetExpr.func("cos", xi1) + _const(l2))
    psi = -norm * (e2 * JetExpr.func("sin", xi1) + _const(l1))
    return phi, psi


def vacuum_pseudopotential(params: BTParams) -> tuple[JetExpr, JetExpr]:
    """Closed-form (phi, psi) of the vacuum flow matching bt_vacuum:
    phi = sigma e^{xi2} sin(xi1), psi = sigma e^{xi2} cos(xi1)."""
    xi1, xi2 = _phases(params)
    s = _const(params.sigma)
    e2 = JetExpr.func("exp", xi2)
    return s * e2 * JetExpr.func("sin", xi1), s * e2 * JetExpr.func("cos", xi1)


def vacuum_params_from_init(lambda1: float, lambda2: float, x0: float, t0: float,
                            phi0: float, psi0: float) -> BTParams:
    """Fit (k1, k2) so the vacuum closed forms pass through (phi0, psi0) at
    the grid origin (branch sigma = +1)."""
    r0 = float(np.hypot(phi0, psi0))
    if r0 == 0:
        raise BacklundError("initial pseudopotential must be nonzero")
    mu1 = lambda1**3 - 3 * lambda1 * lambda2**2
    mu2 = lambda2**3 - 3 * lambda2 * lambda1**2
    k1 = float(np.arctan2(phi0, psi0)) - lambda1 * x0 - mu1 * t0
    k2 = float(np.log(r0)) + lambda2 * x0 - mu2 * t0
    return BTParams(lambda1=lambda1, lambda2=lambda2, sigma=1, k1=k1, k2=k2)


# -- pseudopotential integration -------------------------------------------------


@dataclass
class PseudopotentialField:
    """Integrated (phi, psi) over a grid with the retained-division mask and
    the interior cross-consistency defect of the two flow directions."""

    grid: Grid
    phi: np.ndarray
    psi: np.ndarray
    mask: np.ndarray
    defect_max: float
    defect_mean: float
    params: BTParams


def _riccati_rhs_x(gamma: np.ndarray, fld: Mapping[str, np.ndarray],
                   eta: complex) -> np.ndarray:
    return -fld["u"] * gamma**2 - eta * gamma + fld["v"]


def _riccati_rhs_t(gamma: np.ndarray, fld: Mapping[str, np.ndarray],
                   eta: complex) -> np.ndarray:
    u, v = fld["u"], fld["v"]
    c2 = fld["u_xx"] + eta * fld["u_x"] + eta**2 * u - 2 * v * u**2
    c1 = 2 * (u * fld["v_x"] - v * fld["u_x"] - eta * u * v) + eta**3
    c0 = -fld["v_xx"] + eta * fld["v_x"] - eta**2 * v + 2 * u * v**2
    return c2 * gamma**2 + c1 * gamma + c0


def _rk4(f: Callable, s0, h: float, y):
    k1 = f(s0, y)
    k2 = f(s0 + h / 2, y + (h / 2) * k1)
    k3 = f(s0 + h / 2, y + (h / 2) * k2)
    k4 = f(s0 + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _field_accessor(seed: SampledSolution) -> Callable:
    if seed.provenance == "closed":
        return lambda xa, ta: seed.fields_at(np.asarray(xa, dtype=float),
                                             np.asarray(ta, dtype=float), 2)
    # array seeds: second-order stencils on the grid, bilinear in between
    grid = seed.grid
    tables = {}
    for name, which, order in (("u", "u", 0), ("u_x", "u", 1), ("u_xx", "u", 2),
                               ("v", "v", 0), ("v_x", "v", 1), ("v_xx", "v", 2)):
        tables[name] = seed.deriv_array(which, order)

    def interp(xa, ta):
        fi = np.clip((np.asarray(xa) - grid.x0) / grid.dx, 0, grid.nx - 1 - 1e-12)
        fj = np.clip((np.asarray(ta) - grid.t0) / grid.dt, 0, grid.nt - 1 - 1e-12)
        i0 = fi.astype(int)
        j0 = fj.astype(int)
        wx = fi - i0
        wt = fj - j0
        out = {}
        for name, a in tables.items():
            out[name] = ((1 - wx) * (1 - wt) * a[i0, j0]
                         + wx * (1 - wt) * a[i0 + (i0 < grid.nx - 1), j0]
                         + (1 - wx) * wt * a[i0, j0 + (j0 < grid.nt - 1)]
                         + wx * wt * a[i0 + (i0 < grid.nx - 1),
                                       j0 + (j0 < grid.nt - 1)])
        return out
    return interp


def integrate_pseudopotential(seed: SampledSolution, params: BTParams,
                              init: tuple[float, float],
                              defaults: Defaults = DEFAULTS
                              ) -> PseudopotentialField:
    """Integrate the pseudopotential flow: the t-equations along x = x0, then
    the x-equations along every t-row, one classical fourth-order step per
    grid cell.

    The theorem guarantees the two directions commute on solutions; the
    interior cross-consistency defect |d(phi)/dt - phi_t| turns that claim
    into a measurement.
    """
    phi0, psi0 = float(init[0]), float(init[1])
    if abs(psi0) < 1e-12:
        raise MaskCollisionError("initial psi must be nonzero (division mask)")
    eta = params.eta
    grid = seed.grid
    fields = _field_accessor(seed)
    xs, ts = grid.xs, grid.ts

    # spine: march the t-equations along x = x0
    spine = np.empty(grid.nt, dtype=complex)
    spine[0] = complex(phi0, psi0)
    rhs_t = lambda t, y: _riccati_rhs_t(y, fields(np.full(np.shape(y), xs[0]), t), eta)
    for j in range(grid.nt - 1):
        spine[j + 1] = _rk4(rhs_t, ts[j], grid.dt, spine[j])
        if abs(spine[j + 1]) > defaults.blowup_limit:
            raise BlowUpError("pseudopotential blow-up along the t-line", j)

    # rows: march the x-equations for all t simultaneously
    gamma = np.empty((grid.nx, grid.nt), dtype=complex)
    gamma[0] = spine
    rhs_x = lambda x, y: _riccati_rhs_x(y, fields(x, ts), eta)
    for i in range(grid.nx - 1):
        state = _rk4(rhs_x, np.full(grid.nt, xs[i]), grid.dx, gamma[i])
        if np.abs(state).max() > defaults.blowup_limit:
            raise BlowUpError("pseudopotential blow-up along an x-row", i)
        gamma[i + 1] = state

    phi, psi = gamma.real.copy(), gamma.imag.copy()

    # cross-consistency: numeric t-derivative vs the t-equations, interior points
    xm, tm = grid.mesh()
    fld = fields(xm, tm)
    rhs = _riccati_rhs_t(gamma, fld, eta)
    d_dt = (gamma[:, 2:] - gamma[:, :-2]) / (2 * grid.dt)
    defect = np.abs(d_dt - rhs[:, 1:-1])
    valid = seed.mask[:, 1:-1] & np.isfinite(defect)
    defect_max = float(defect[valid].max()) if valid.any() else float("nan")
    defect_mean = float(defect[valid].mean()) if valid.any() else float("nan")

    mask = seed.mask & (np.abs(psi) >= defaults.mask_threshold)
    return PseudopotentialField(grid=grid, phi=phi, psi=psi, mask=mask,
                                defect_max=defect_max, defect_mean=defect_mean,
                                params=params)


def bt_transform(seed: SampledSolution, pp: PseudopotentialField,
                 lambda1: float) -> SampledSolution:
    """u' = u + lambda1/psi, v' = v + lambda1 (phi^2 + psi^2)/psi on the
    unmasked region."""
    if not pp.mask.any():
        raise EmptyMaskError("pseudopotential mask is empty")
    if lambda1 == 0:
        warnings.warn("lambda1 = 0 reduces the transformation to the identity")
        return SampledSolution.from_arrays(seed.grid, seed.u.copy(), seed.v.copy(),
                                           mask=seed.mask & pp.mask)
    with np.errstate(all="ignore"):
        u = seed.u + lambda1 / pp.psi
        v = seed.v + lambda1 * (pp.phi**2 + pp.psi**2) / pp.psi
    mask = seed.mask & pp.mask & np.isfinite(u) & np.isfinite(v)
    return SampledSolution.from_arrays(seed.grid, u, v, mask=mask)


# -- first-order system certification --------------------------------------------


@dataclass(frozen=True)
class BTResidualStats:
    max: float
    mean: float
    per_equation: tuple[float, float, float, float]
    mask: np.ndarray
    sigma_field: np.ndarray

    def to_dict(self) -> dict:
        return {"max": self.max, "mean": self.mean,
                "per_equation": list(self.per_equation),
                "valid_fraction":
                    float(np.count_nonzero(self.mask)) / self.mask.size}


def _solution_derivs(sol: SampledSolution):
    return {
        "u_x": sol.deriv_array("u", 1), "v_x": sol.deriv_array("v", 1),
        "u_xx": sol.deriv_array("u", 2), "v_xx": sol.deriv_array("v", 2),
        "u_t": sol.deriv_array("u", 0, 1), "v_t": sol.deriv_array("v", 0, 1),
    }


def bt_first_order_residual(seed: SampledSolution, transformed: SampledSolution,
                            params: BTParams,
                            radicand_tol: float = -1e-10) -> BTResidualStats:
    """Evaluate the four equations of the first-order transformation system.

    The square root carries a pointwise branch sign: it is recovered from the
    x-equation of u' - u (the only sign consistent with the pseudopotential
    ratio) and then held fixed across all four equations, so the remaining
    three are genuine checks.  A radicand below radicand_tol is a branch
    violation; small negative roundoff is clamped to zero.
    """
    l1, l2 = params.lambda1, params.lambda2
    s = _solution_derivs(seed)
    p = _solution_derivs(transformed)
    u, v = seed.u, seed.v
    up, vp = transformed.u, transformed.v
    mask = seed.mask & transformed.mask
    du, dv = up - u, vp - v
    with np.errstate(all="ignore"):
        radicand = du * dv - l1 * l1
        if np.any(mask & (radicand < radicand_tol)):
            worst = float(radicand[mask].min())
            raise BranchViolationError(
                f"radicand drops to {worst:.3e} below tolerance {radicand_tol:.0e}")
        root = np.sqrt(np.clip(radicand, 0.0, None))

        du_x = p["u_x"] - s["u_x"]
        dv_x = p["v_x"] - s["v_x"]
        du_t = p["u_t"] - s["u_t"]
        dv_t = p["v_t"] - s["v_t"]

        drive = (du_x - l2 * du) * (up + u)
        sigma = np.where(np.abs((up + u) * root) > 1e-12, np.sign(drive), 1.0)
        sigma = np.where(sigma == 0, 1.0, sigma)
        sroot = sigma * root

        mid = u * v + (l1 * l1 - l2 * l2) / 2
        midp = up * vp + (l1 * l1 - l2 * l2) / 2

        r1 = du_x - sroot * (up + u) - l2 * du
        r2 = dv_x - sroot * (vp + v) + l2 * dv
        r3 = du_t - (
            -2 * sroot * (s["u_xx"] + l2 * s["u_x"] + l2 * l2 * du - (up + u) * mid)
            - (du * (vp - 3 * v) - 2 * l1 * l1) * s["u_x"]
            - du * (up + u) * s["v_x"]
            + 2 * l2 * du * midp
            - 2 * l2 * (up + u) * radicand)
        r4 = dv_t - (
            2 * sroot * (-s["v_xx"] + l2 * s["v_x"] - l2 * l2 * dv + (vp + v) * mid)
            - (dv * (up - 3 * u) - 2 * l1 * l1) * s["v_x"]
            - dv * (vp + v) * s["u_x"]
            - 2 * l2 * dv * midp
            + 2 * l2 * (vp + v) * radicand)
        per = []
        for r in (r1, r2, r3, r4):
            vals = np.abs(r[mask])
            per.append(float(vals.max()) if vals.size else float("nan"))
        stack = np.maximum.reduce([np.abs(r) for r in (r1, r2, r3, r4)])
    vals = stack[mask]
    return BTResidualStats(
        max=float(vals.max()) if vals.size else float("nan"),
        mean=float(vals.mean()) if vals.size else float("nan"),
        per_equation=tuple(per), mask=mask, sigma_field=sigma)


def sigma_from_pseudopotential(pp: PseudopotentialField, du: np.ndarray,
                               lambda1: float) -> np.ndarray:
    """Branch sign recovered from phi (u'-u)/lambda1."""
    return np.sign(pp.phi * du / lambda1)


def seed_constant(grid: Grid, u0: float, v0: float) -> SampledSolution:
    """Closed-form constant seed (u, v) = (u0, v0)."""
    return SampledSolution.from_exprs(grid, parse_expr(repr(float(u0))),
                                      parse_expr(repr(float(v0))))
