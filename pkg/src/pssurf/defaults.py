"""Versioned numeric conventions used across certification runs.

Every threshold the toolkit applies lives here so runs are auditable; CLI
flags may override individual values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Defaults:
    residual_tol: float = 1e-8        # analytic-derivative PDE residual bound
    bt_residual_tol: float = 1e-7     # first-order transformation system bound
    pipeline_tol: float = 1e-6        # integrated pipeline vs closed form
    order_low: float = 1.8            # accepted refinement-order window
    order_high: float = 2.2
    mask_threshold: float = 1e-3      # denominator singularity mask
    degeneracy_tol: float = 1e-8      # metric determinant floor
    curvature_tol: float = 5e-3       # |K + delta| bound at 129x129
    holonomy_floor: float = 1e-2      # off-shell defect must exceed this
    probe_trials: int = 50
    blowup_limit: float = 1e6
    mask_fraction_limit: float = 0.5  # above this a run is inconclusive

    def override(self, **kwargs) -> "Defaults":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


DEFAULTS = Defaults()
