"""Command-line experiment runner.

Each subcommand reads an optional JSON config, applies flag overrides (flags
win), validates, runs, and writes CSV/JSON files into ``--out``.  Data files
carry the tool version and a hash of the config; the wall time goes into a
separate ``manifest.json`` so that data files are byte-identical across reruns
and thread counts.

Exit codes: 0 ok, 2 accuracy failure, 3 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import (
    AccuracyError,
    ConfigError,
    DimensionError,
    DomainError,
    NoPredictionError,
    NonTerminationError,
    ResonanceError,
    WindowError,
)

TOOL = "siegel-theta"
EXIT_OK, EXIT_ACCURACY, EXIT_CONFIG = 0, 2, 3
# fields that do not change results and stay out of the config hash
UNHASHED = ("threads", "out")


# --- configs -----------------------------------------------------------------

@dataclass
class ThetaConfig:
    g: int = 1
    q: Any = 0.0
    l: Any = None
    n_max: int = 10_000
    checkpoints: int = 24
    seed: int = 0
    statistic: str = "running-max"
    fit_min: int | None = None
    fit_max: int | None = None
    t_max: float = 20.0
    t_step: float = 0.1
    threads: int | None = None
    out: str = "run"


@dataclass
class FlowConfig:
    g: int = 1
    q: Any = None
    alpha: Any = None
    dhat: Any = None
    t_max: float = 20.0
    t_step: float = 0.1
    bounded_margin: float = math.log(50.0)
    eps_roth: float = 0.1
    residual_bound: float = 1.0
    seed: int = 0
    threads: int | None = None
    out: str = "run"


@dataclass
class LoglawConfig:
    g: int = 1
    dhat: Any = None
    n_samples: int = 100
    t_max: float = 20.0
    step: float = 0.05
    seed: int = 0
    threads: int | None = None
    out: str = "run"


@dataclass
class CohoConfig:
    g: int = 2
    d: int = 2
    cutoff: int = 64
    band: int = 16
    n_samples: int = 50
    seed: int = 0
    tol: float = 1e-8
    tame_k: int = 1
    tame_s: float = 1.0
    tame_eps: float = 0.1
    tame_samples: int = 20
    tame_cutoffs: Any = field(default_factory=lambda: [64])
    tame_h: Any = field(default_factory=lambda: [1.0])
    torus: Any = None
    threads: int | None = None
    out: str = "run"


@dataclass
class BirkhoffConfig:
    g: int = 1
    q: Any = 1.4142135623730951
    l: Any = None
    t: float = 0.0
    radius: float = 0.2
    order: int = 3
    phi: Any = field(default_factory=lambda: [{"k": 1, "re": 1.0, "im": 0.0}])
    T: Any = field(default_factory=lambda: [8, 16, 32])
    margin: float = 0.5
    quad: float = 8.0
    tol: float | None = None
    check_theta: bool = False
    seed: int = 0
    threads: int | None = None
    out: str = "run"


CONFIGS = {
    "theta": ThetaConfig,
    "height-flow": FlowConfig,
    "classify": FlowConfig,
    "loglaw": LoglawConfig,
    "coho": CohoConfig,
    "birkhoff": BirkhoffConfig,
}


def _flag_value(s: str):
    """JSON literal if it parses, else the raw string (e.g. ``sqrt(2)``)."""
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def load_config(cmd: str, path: str | None, overrides: dict) -> Any:
    cls = CONFIGS[cmd]
    names = {f.name for f in dataclasses.fields(cls)}
    data: dict = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(cfg) -> str:
    d = {k: v for k, v in dataclasses.asdict(cfg).items() if k not in UNHASHED}
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


# --- validation helpers ------------------------------------------------------

def _int(name, v, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{name} must be >= {lo}")
    return v


def _num(name, v, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name} must be a finite number")
    if positive and v <= 0:
        raise ConfigError(f"{name} must be positive")
    return float(v)


def _exact_Q(q, g: int) -> list:
    """Q as a g x g nested list of numbers or expression strings."""
    if q is None:
        raise ConfigError("q is required")
    if isinstance(q, (int, float, str)) and not isinstance(q, bool):
        if g != 1:
            raise ConfigError("a scalar q needs g = 1")
        rows = [[q]]
    elif isinstance(q, list) and all(isinstance(r, list) for r in q):
        rows = q
    else:
        raise ConfigError("q must be a number, an expression string or a g x g matrix")
    if len(rows) != g or any(len(r) != g for r in rows):
        raise ConfigError(f"q must be {g} x {g}")
    return rows


def _float_Q(rows) -> np.ndarray:
    import sympy

    try:
        Q = np.array([[float(sympy.sympify(v, rational=True)) if isinstance(v, str) else float(v) for v in r] for r in rows])
    except (sympy.SympifyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot evaluate q: {exc}") from exc
    if not np.all(np.isfinite(Q)):
        raise ConfigError("q must be finite")
    if np.abs(Q - Q.T).max() > 1e-14:
        raise ConfigError("schema: q must be symmetric")
    return Q


def _vector(name, v, g, default=0.0) -> np.ndarray:
    if v is None:
        return np.full(g, default)
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v] * g if g == 1 else None
    if not isinstance(v, list) or len(v) != g:
        raise ConfigError(f"{name} must be a list of length {g}")
    return np.array([_num(name, x) for x in v])


def _dhat(cfg):
    from .symplectic import CartanDirection

    v = [1.0] * cfg.g if cfg.dhat is None else cfg.dhat
    if not isinstance(v, list) or len(v) != cfg.g:
        raise ConfigError(f"dhat must be a list of length {cfg.g}")
    try:
        dh = CartanDirection(tuple(_num("dhat", x) for x in v))
        dh.require_nonzero()
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return dh


def _alpha(cfg):
    from .symplectic import BlockSymplectic

    try:
        if cfg.alpha is not None:
            if cfg.q is not None:
                raise ConfigError("give either q or alpha, not both")
            return BlockSymplectic.from_matrix(np.array(cfg.alpha, dtype=float))
        rows = _exact_Q(cfg.q, cfg.g)
        _float_Q(rows)
        return BlockSymplectic.lower_triangular(rows)
    except (DomainError, DimensionError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _t_grid(t_max, step) -> np.ndarray:
    t_max = _num("t_max", t_max, positive=True)
    step = _num("t_step", step, positive=True)
    n = int(round(t_max / step)) + 1
    return np.linspace(0.0, t_max, n)


# --- output ------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class Writer:
    def __init__(self, cfg, cmd: str):
        self.dir = Path(cfg.out)
        self.hash = config_hash(cfg)
        self.cmd = cmd
        self.files: list[str] = []
        self.t0 = time.perf_counter()
        self.dir.mkdir(parents=True, exist_ok=True)

    def meta(self) -> dict:
        return {"tool": TOOL, "version": __version__, "command": self.cmd, "config_hash": self.hash}

    def csv(self, name: str, header: str, rows) -> None:
        lines = [f"# tool={TOOL} version={__version__} command={self.cmd} config={self.hash}", header]
        lines += [",".join(_fmt(v) for v in r) for r in rows]
        (self.dir / name).write_text("\n".join(lines) + "\n")
        self.files.append(name)

    def json(self, name: str, payload: dict) -> None:
        body = {"meta": self.meta(), **payload}
        (self.dir / name).write_text(json.dumps(body, sort_keys=True, indent=1) + "\n")
        self.files.append(name)

    def manifest(self, status: str) -> None:
        m = {**self.meta(), "wall_time_s": time.perf_counter() - self.t0, "files": self.files, "status": status}
        (self.dir / "manifest.json").write_text(json.dumps(m, sort_keys=True, indent=1) + "\n")


# --- runners -----------------------------------------------------------------

def run_theta(cfg: ThetaConfig) -> int:
    from .reduction import classify_diophantine, height_flow
    from .theta import QuadraticData, growth_fit, predicted_exponent, theta_sum

    g = _int("g", cfg.g, 1)
    rows = _exact_Q(cfg.q, g)
    Q = _float_Q(rows)
    l = _vector("l", cfg.l, g)
    _int("n_max", cfg.n_max, 1)
    _int("checkpoints", cfg.checkpoints, 1)
    if cfg.statistic not in ("running-max", "direct"):
        raise ConfigError("statistic must be 'running-max' or 'direct'")
    alpha = _alpha(FlowConfig(g=g, q=rows))
    grid = _t_grid(cfg.t_max, cfg.t_step)
    w = Writer(cfg, "theta")
    res = theta_sum(QuadraticData(Q, l), cfg.n_max, cfg.checkpoints, threads=cfg.threads)
    w.csv("theta.csv", "N,re,im,normalized", res.to_csv_rows())
    window = None
    if cfg.fit_min is not None or cfg.fit_max is not None:
        window = (cfg.fit_min or 0, cfg.fit_max or cfg.n_max)
    try:
        fit = growth_fit(res, cfg.statistic, window).to_json()
        fit_err = None
    except Exception as exc:  # FitError: report, do not abort the run
        fit, fit_err = None, str(exc)
    w.json("fit.json", {"fit": fit, "error": fit_err, "complete": res.complete, "g": g})
    report = classify_diophantine(height_flow(alpha, _dhat(FlowConfig(g=g)), grid), g)
    try:
        pred = predicted_exponent(report, g, g).to_json()
    except NoPredictionError:
        pred = None
    w.json("classify.json", {"report": report.to_json(), "predicted": pred})
    w.manifest("ok")
    return EXIT_OK


def _flow(cfg: FlowConfig):
    from .reduction import height_flow

    _int("g", cfg.g, 1)
    alpha = _alpha(cfg)
    if alpha.g != cfg.g:
        raise ConfigError("alpha does not match g")
    return height_flow(alpha, _dhat(cfg), _t_grid(cfg.t_max, cfg.t_step))


def run_heightflow(cfg: FlowConfig) -> int:
    w = Writer(cfg, "height-flow")
    traj = _flow(cfg)
    w.csv("trajectory.csv", "t,log_hgt", traj.to_csv_rows())
    w.json(
        "report.json",
        {"sup_log_hgt": float(traj.log_hgt.max()), "certified": all(traj.certified), "samples": len(traj.samples)},
    )
    w.manifest("ok")
    return EXIT_OK


def run_classify(cfg: FlowConfig) -> int:
    from .reduction import ClassifierOptions, classify_diophantine
    from .theta import predicted_exponent

    opts = ClassifierOptions(
        bounded_margin=_num("bounded_margin", cfg.bounded_margin),
        eps_roth=_num("eps_roth", cfg.eps_roth, positive=True),
        residual_bound=_num("residual_bound", cfg.residual_bound, positive=True),
    )
    w = Writer(cfg, "classify")
    traj = _flow(cfg)
    w.csv("trajectory.csv", "t,log_hgt", traj.to_csv_rows())
    try:
        report = classify_diophantine(traj, cfg.g, opts)
    except WindowError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        pred = predicted_exponent(report, cfg.g).to_json()
    except NoPredictionError:
        pred = None
    w.json("report.json", {"report": report.to_json(), "predicted": pred})
    w.manifest("ok")
    return EXIT_OK


def run_loglaw(cfg: LoglawConfig) -> int:
    from .reduction import loglaw_mc

    _int("g", cfg.g, 1)
    _int("n_samples", cfg.n_samples, 1)
    _num("step", cfg.step, positive=True)
    dh = _dhat(cfg)
    if _num("t_max", cfg.t_max, positive=True) <= max(math.e, cfg.t_max / 2):
        raise ConfigError("t_max too small for the log-law window")
    w = Writer(cfg, "loglaw")
    summ = loglaw_mc(cfg.g, dh, cfg.n_samples, cfg.t_max, _int("seed", cfg.seed), threads=cfg.threads, step=cfg.step)
    w.json("loglaw.json", {"summary": summ.to_json(), "g": cfg.g, "dhat": list(dh.delta)})
    w.csv("statistics.csv", "sample,statistic", enumerate(summ.statistics))
    w.manifest("ok")
    return EXIT_OK


def run_coho(cfg: CohoConfig) -> int:
    from .cohomology.forms import closed_sampler, tame_ratio
    from .cohomology.suite import SuiteConfig, run_suite, run_torus
    from .cohomology.torus import TorusFrame

    g, d = _int("g", cfg.g, 1), _int("d", cfg.d, 1)
    if d > g:
        raise ConfigError("need d <= g")
    _int("cutoff", cfg.cutoff, 4)
    _int("band", cfg.band, 1)
    _int("n_samples", cfg.n_samples, 1)
    tol = _num("tol", cfg.tol, positive=True)
    k = _int("tame_k", cfg.tame_k, 1)
    if k > d:
        raise ConfigError("need tame_k <= d")
    if not isinstance(cfg.tame_cutoffs, list) or not isinstance(cfg.tame_h, list):
        raise ConfigError("tame_cutoffs and tame_h must be lists")
    frame = None
    if cfg.torus is not None:
        try:
            V = cfg.torus["V"]
            frame = TorusFrame(tuple(tuple(r) for r in V), int(cfg.torus.get("K", 8)))
        except (KeyError, TypeError, DomainError, DimensionError) as exc:
            raise ConfigError(f"invalid torus frame: {exc}") from exc

    w = Writer(cfg, "coho")
    suite = run_suite(SuiteConfig(g, d, cfg.cutoff, cfg.band, cfg.n_samples, _int("seed", cfg.seed)))
    tame = []
    rows = []
    for c in cfg.tame_cutoffs:
        for h in cfg.tame_h:
            st = tame_ratio(closed_sampler(d, k, min(cfg.band, _int("cutoff", c, 4))), cfg.tame_s, k, d, g, cfg.tame_eps, cfg.tame_samples, cfg.seed, c, _num("h", h))
            tame.append({"cutoff": c, "h": h, "max_ratio": st.max_ratio, "median_ratio": st.median_ratio})
            rows.append((c, h, st.max_ratio, st.median_ratio))
    w.csv("tame.csv", "cutoff,h,max_ratio,median_ratio", rows)
    payload = {"suite": suite.to_json(), "tame": tame, "tol": tol}
    status, code = "ok", EXIT_OK
    if frame is not None:
        try:
            payload["torus"] = run_torus(frame, cfg.seed).to_json()
        except ResonanceError as exc:
            payload["torus"] = {"error": str(exc), "resonant_modes": [list(m) for m in exc.modes]}
            status, code = "resonance", EXIT_ACCURACY
            print(f"resonant torus frame: modes {exc.modes}", file=sys.stderr)
    if suite.max_residual > tol or not suite.obstruction_raised:
        status, code = "accuracy", EXIT_ACCURACY
        print(f"residual {suite.max_residual:.3e} exceeds tol {tol:.1e}", file=sys.stderr)
    w.json("coho.json", payload)
    w.manifest(status)
    return code


def run_birkhoff(cfg: BirkhoffConfig) -> int:
    from .heisenberg import Bump, Observable, birkhoff, theta_bridge_point, theta_frame
    from .theta import QuadraticData, pretheta_sum

    g = _int("g", cfg.g, 1)
    Q = _float_Q(_exact_Q(cfg.q, g))
    l = _vector("l", cfg.l, g)
    if not isinstance(cfg.T, list) or not cfg.T:
        raise ConfigError("T must be a non-empty list")
    Ts = [_num("T", v, positive=True) for v in cfg.T]
    try:
        phi = tuple((int(p["k"]), complex(p["re"], p.get("im", 0.0))) for p in cfg.phi)
        obs = Observable(Q, Bump(_num("radius", cfg.radius), _int("order", cfg.order, 1)), phi)
        frame = theta_frame(Q)
        m = theta_bridge_point(l, _num("t", cfg.t), Q)
    except (KeyError, TypeError, DomainError, DimensionError) as exc:
        raise ConfigError(str(exc)) from exc
    quad = _num("quad", cfg.quad, positive=True)
    if quad < 8:
        raise ConfigError("quad must be >= 8")
    margin = _num("margin", cfg.margin)
    w = Writer(cfg, "birkhoff")
    rows, recs = [], []
    worst = 0.0
    for T in Ts:
        r = birkhoff(frame, obs, m, [(-margin, T + margin)] * g, quad=quad)
        rec = {"T": T, "re": r.value.real, "im": r.value.imag, "indicator": r.indicator, "nodes": r.nodes}
        if cfg.check_theta:
            if T != int(T):
                raise ConfigError("check_theta needs integer T")
            # the same sum through the theta evaluator, mode by mode
            ref = pretheta_sum(phi, QuadraticData(Q, l, cfg.t), int(T), threads=cfg.threads)
            rec["theta"] = [ref.real, ref.imag]
            rec["delta"] = abs(r.value - ref)
        worst = max(worst, r.indicator)
        rows.append((T, r.value.real, r.value.imag, r.indicator))
        recs.append(rec)
    w.csv("birkhoff.csv", "T,re,im,indicator", rows)
    w.json("birkhoff.json", {"observable": obs.to_json(), "results": recs})
    if cfg.tol is not None and worst > cfg.tol:
        w.manifest("accuracy")
        print(f"quadrature indicator {worst:.3e} exceeds tol {cfg.tol:.1e}", file=sys.stderr)
        return EXIT_ACCURACY
    w.manifest("ok")
    return EXIT_OK


RUNNERS = {
    "theta": run_theta,
    "height-flow": run_heightflow,
    "classify": run_classify,
    "loglaw": run_loglaw,
    "coho": run_coho,
    "birkhoff": run_birkhoff,
}


# --- argument parsing --------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=TOOL, description="Experiments on theta sums, height flows and cohomological equations.")
    p.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, cls in CONFIGS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="JSON config file; flags override its entries")
        for f in dataclasses.fields(cls):
            flag = "--" + f.name.replace("_", "-")
            if f.type in ("bool", bool):
                sp.add_argument(flag, dest=f.name, action="store_const", const=True, default=None)
            else:
                sp.add_argument(flag, dest=f.name, type=_flag_value, default=None, metavar=f.name.upper())
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = load_config(args.command, args.config, overrides)
        return RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AccuracyError, NonTerminationError) as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (DomainError, DimensionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
