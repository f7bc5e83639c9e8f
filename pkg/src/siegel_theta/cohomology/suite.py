"""Batch identity checks for the Hermite solver and the torus solver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ObstructionError
from .forms import (
    PForm,
    d,
    d_minus_one,
    extend_first,
    homotopy_K,
    integrate_all,
    integrate_first,
    project_M,
)
from .hermite import HermiteField, HermiteTruncation, extend_E, integrate_I
from .torus import TorusForm, TorusFrame, torus_d, torus_solve


@dataclass(frozen=True)
class SuiteConfig:
    g: int = 2
    d: int = 2
    cutoff: int = 64
    band: int = 16
    n_samples: int = 50
    seed: int = 0


@dataclass
class SuiteResult:
    dd: float = 0.0
    ie: float = 0.0
    homotopy: float = 0.0
    solve: float = 0.0
    obstruction_defect_error: float = 0.0
    obstruction_raised: bool = True
    per_sample: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(self.homotopy, self.solve, self.dd, self.ie)

    def to_json(self) -> dict:
        return {
            "dd": self.dd,
            "ie": self.ie,
            "homotopy": self.homotopy,
            "solve": self.solve,
            "obstruction_defect_error": self.obstruction_defect_error,
            "obstruction_raised": self.obstruction_raised,
            "max_residual": self.max_residual,
        }


def _rel(a: PForm, b: PForm) -> float:
    return (a - b).max_abs() / max(1.0, b.max_abs())


def run_suite(cfg: SuiteConfig) -> SuiteResult:
    """Residuals of ``dd = 0``, ``IE = 1``, ``1 - EI = dK + Kd``, ``d d_{-1} = 1`` and obstruction reporting.

    Every residual is the largest coefficient error relative to ``max(1, |input|_max)``.
    Sampled forms use at most ``cutoff // 2`` modes per axis so that the
    ladder operators never reach the truncation.
    """
    trunc = HermiteTruncation(cfg.g, cfg.cutoff)
    cfg = SuiteConfig(cfg.g, cfg.d, cfg.cutoff, min(cfg.band, cfg.cutoff // 2), cfg.n_samples, cfg.seed)
    rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(cfg.seed).spawn(cfg.n_samples)]
    out = SuiteResult()
    D = cfg.d
    for rng in rngs:
        row = {}
        # d d = 0 on forms of every degree below d - 1
        for k in range(0, D - 1):
            w = PForm.random(trunc, D, k, rng, cfg.band)
            row[f"dd{k}"] = d(d(w)).max_abs() / max(1.0, w.max_abs())
        # I E = 1 on fields of the transverse axes
        if cfg.g > 1:
            f = HermiteField.random(trunc.with_g(cfg.g - 1), rng, cfg.band)
            back = integrate_I(extend_E(f, 1), 1)
            row["ie"] = float(np.max(np.abs(back.coeffs - f.coeffs))) / max(1.0, float(np.max(np.abs(f.coeffs))))
        else:
            c = complex(rng.normal(), rng.normal())
            back = integrate_I(extend_E(c, 1, trunc), 1)
            row["ie"] = abs(complex(back.coeffs) - c) / max(1.0, abs(c))
        # homotopy identity in every positive degree
        hom = 0.0
        for k in range(1, D + 1):
            w = PForm.random(trunc, D, k, rng, cfg.band)
            lhs = w - extend_first(integrate_first(w))
            rhs = d(homotopy_K(w))
            if k < D:
                rhs = rhs + homotopy_K(d(w))
            hom = max(hom, _rel(rhs, lhs))
        row["homotopy"] = hom
        # d d_{-1} = 1 on exact forms and on moment-free top forms
        sol = 0.0
        for k in range(1, D):
            w = d(PForm.random(trunc, D, k - 1, rng, cfg.band))
            sol = max(sol, _rel(d(d_minus_one(w)), w))
        top = project_M(PForm.random(trunc, D, D, rng, cfg.band))
        sol = max(sol, _rel(d(d_minus_one(top)), top))
        row["solve"] = sol
        # obstruction: a top form with moment must be rejected with its moment as defect
        w = PForm.random(trunc, D, D, rng, cfg.band)
        expect = integrate_all(w).coeffs
        try:
            d_minus_one(w)
            out.obstruction_raised = False
        except ObstructionError as exc:
            row["defect"] = float(np.max(np.abs(np.asarray(exc.defect) - expect)))
        out.per_sample.append(row)

    def mx(key):
        vals = [r[k] for r in out.per_sample for k in r if k.startswith(key)]
        return float(max(vals)) if vals else 0.0

    out.dd = mx("dd")
    out.ie = mx("ie")
    out.homotopy = mx("homotopy")
    out.solve = mx("solve")
    out.obstruction_defect_error = mx("defect")
    return out


@dataclass(frozen=True)
class TorusSuiteResult:
    residual: float
    divisor_min: float
    modes: int

    def to_json(self) -> dict:
        return {"residual": self.residual, "divisor_min": self.divisor_min, "modes": self.modes}


def run_torus(frame: TorusFrame, seed: int) -> TorusSuiteResult:
    """Solve ``dW = w`` for a random top-degree form without zero mode.

    Raises
    ------
    ResonanceError
        Propagated from the solver when the frame has resonant modes.
    """
    rng = np.random.default_rng(seed)
    shape = (2 * frame.K + 1,) * frame.ell
    n = frame.modes()
    mask = np.any(n != 0, axis=1).reshape(shape)
    c = (rng.normal(size=shape) + 1j * rng.normal(size=shape)) * mask
    D = frame.d
    w = TorusForm(frame, D, {tuple(range(D)): c})
    W = torus_solve(frame, w)
    res = float(np.max(np.abs(torus_d(W).stacked() - w.stacked())))
    H = np.sum(frame.divisors(n) ** 2, axis=1)
    return TorusSuiteResult(res / max(1.0, float(np.abs(c).max())), float(math.sqrt(H[mask.ravel()].min())), int(mask.sum()))
