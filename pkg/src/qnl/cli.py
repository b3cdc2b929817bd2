"""Command-line front end: one subcommand per module, CSV artifacts with a
self-describing ``#`` header block.

Header layout (every artifact)::

    # qnl <version>
    # timestamp: <UTC ISO time>
    # wall_time_s: <seconds>
    # config: <resolved config as JSON>
    # result: <JSON summary>          (when the run has one)
    <csv columns>
    <rows>

Everything from the ``# config`` line down is deterministic for a fixed
config, seed and thread count.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__

log = logging.getLogger("qnl")

SUBCOMMANDS = ("variational", "perturb", "asymptotic", "lattice", "evolve", "relax", "check")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- ranges

def parse_range(text: str) -> list[float]:
    """Comma list whose items are numbers or ``start:stop[:log]:count`` ranges.

    Ranges include both endpoints; ``log`` spaces points geometrically.
    """
    values: list[float] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise UsageError(f"empty item in range {text!r}")
        parts = item.split(":")
        try:
            if len(parts) == 1:
                values.append(float(parts[0]))
                continue
            if len(parts) == 3:
                start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
                spacing = "lin"
            elif len(parts) == 4 and parts[2] == "log":
                start, stop, count = float(parts[0]), float(parts[1]), int(parts[3])
                spacing = "log"
            else:
                raise UsageError(f"malformed range {item!r}; use start:stop[:log]:count")
        except ValueError as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(f"malformed range {item!r}: {exc}") from None
        if count < 1:
            raise UsageError(f"range {item!r} needs count >= 1")
        if spacing == "log":
            if start <= 0 or stop <= 0:
                raise UsageError(f"log range {item!r} needs positive endpoints")
            pts = np.geomspace(start, stop, count) if count > 1 else np.array([start])
        else:
            pts = np.linspace(start, stop, count) if count > 1 else np.array([start])
        values.extend(float(v) for v in pts)
    if not values:
        raise UsageError(f"range {text!r} is empty")
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"range {text!r} has non-finite values")
    return values


def _positive_list(text: str) -> list[float]:
    vals = parse_range(text)
    if any(v <= 0 for v in vals):
        raise UsageError(f"values must be positive: {text!r}")
    return vals


def _eta_list(text: str) -> list[float]:
    vals = parse_range(text)
    bad = [v for v in vals if not (0.0 < v <= 1.0)]
    if bad:
        raise UsageError(f"eta must lie in (0, 1], got {bad[0]}")
    return vals


def _int_list(text: str) -> list[int]:
    vals = parse_range(text)
    if any(v != int(v) or v < 0 for v in vals):
        raise UsageError(f"expected non-negative integers: {text!r}")
    return [int(v) for v in vals]


def _wrap(fn):
    def conv(text):
        try:
            return fn(text)
        except UsageError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    conv.__name__ = fn.__name__.lstrip("_")
    return conv


def _eta_single(text: str) -> float:
    vals = _eta_list(text)
    if len(vals) != 1:
        raise UsageError("expected a single eta")
    return vals[0]


def parse_psi0(text: str) -> dict:
    """``gaussian:c=1[,x0=0,k=0]``, ``plane:k=1`` or ``sho:n=0``."""
    kind, _, rest = text.partition(":")
    defaults = {"gaussian": {"c": 1.0, "x0": 0.0, "k": 0.0}, "plane": {"k": 1.0}, "sho": {"n": 0.0}}
    if kind not in defaults:
        raise UsageError(f"unknown psi0 kind {kind!r}; use gaussian, plane or sho")
    spec = dict(defaults[kind])
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep or key not in spec:
            raise UsageError(f"bad psi0 field {item!r} for {kind}")
        try:
            spec[key] = float(val)
        except ValueError:
            raise UsageError(f"bad psi0 value {item!r}") from None
    if kind == "gaussian" and spec["c"] <= 0:
        raise UsageError("gaussian width c must be positive")
    if kind == "sho":
        if spec["n"] != int(spec["n"]) or spec["n"] < 0:
            raise UsageError("sho:n must be a non-negative integer")
        spec["n"] = int(spec["n"])
    return {"kind": kind, **spec}


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    subcommand: str
    options: dict[str, Any] = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    threads: int = 1
    verbose: bool = False

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("verbose")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        record = {"error": "usage", "message": message}
        sys.stderr.write(json.dumps(record) + "\n")
        raise SystemExit(2)


def _threads_default() -> int:
    env = os.environ.get("QNL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer QNL_THREADS=%r", env)
    return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed for randomized inputs")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: QNL_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")

    parser = _Parser(prog="qnl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qnl {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("variational", parents=[common], help="width-variational sweep over (n, eta, eps)")
    p.add_argument("--n", type=_wrap(_int_list), default=[0], help="state indices, e.g. 0,5")
    p.add_argument("--eta", type=_wrap(_eta_list), default=[0.5], help="eta values or range")
    p.add_argument("--eps", type=_wrap(_positive_list), default=[1.0], help="eps = L/a values or range")

    p = sub.add_parser("perturb", parents=[common], help="first-order energy shifts")
    p.add_argument("--n", type=_wrap(_int_list), default=[5])
    p.add_argument("--potential", default="sho", choices=["sho", "quartic"])
    p.add_argument("--L", type=_wrap(_positive_list), default=[1e-3], dest="L")
    p.add_argument("--eta", type=_wrap(_eta_list), default=[0.5])
    p.add_argument("--cells-per-shift", type=int, default=20)

    p = sub.add_parser("asymptotic", parents=[common], help="collapse energy g(eta)")
    p.add_argument("--scan-eta", type=_wrap(_eta_list), default=None,
                   help="eta values or range (each in (0, 1))")
    p.add_argument("--L", type=float, default=1.0, dest="L", help="length for the energy column")

    p = sub.add_parser("lattice", parents=[common], help="discretised free equation trajectories")
    p.add_argument("--eta", type=_wrap(_eta_single), default=1.0)
    p.add_argument("--e-ratio", type=float, required=True, help="E / escale")
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--p1", type=float, default=None)
    p.add_argument("--random-seeds", type=int, default=0,
                   help="also classify this many log-uniform random seed pairs")
    p.add_argument("--window", type=int, default=10_000)
    p.add_argument("--bound", type=float, default=1e100)

    for name, helptext in (("evolve", "real-time split-step evolution"),
                           ("relax", "imaginary-time ground-state relaxation")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--eta", type=_wrap(_eta_single), default=0.5)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--eps", type=float, default=None)
        g.add_argument("--L", type=float, default=None, dest="L")
        p.add_argument("--halfwidth", type=float, default=8.0, help="domain half-width in units of a")
        p.add_argument("--dx", type=float, default=0.05, help="target spacing (snapped to eta*L/s)")
        p.add_argument("--potential", default="sho", choices=["sho", "quartic", "free"])
        p.add_argument("--psi0", type=_wrap(parse_psi0), default=None,
                       help="gaussian:c=1[,x0=,k=] | plane:k= | sho:n=")
        if name == "evolve":
            p.add_argument("--dt", type=float, default=1e-3)
            p.add_argument("--steps", type=int, default=1000)
            p.add_argument("--record-every", type=int, default=10)
        else:
            p.add_argument("--dtau", type=float, default=0.05)
            p.add_argument("--tol", type=float, default=1e-7)
            p.add_argument("--max-steps", type=int, default=200_000)

    p = sub.add_parser("check", parents=[common], help="run the acceptance/invariant suite")
    p.add_argument("--only", type=_wrap(_int_list), default=None, help="criterion numbers")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "out", "seed", "threads", "verbose")}
    threads = ns.threads if ns.threads is not None else _threads_default()
    if threads < 1:
        raise SystemExit(_usage_exit("--threads must be >= 1"))
    cfg = RunConfig(ns.subcommand, opts, ns.out, ns.seed, threads, ns.verbose)
    if ns.subcommand in ("evolve", "relax"):
        if opts["eps"] is None and opts["L"] is None:
            opts["eps"] = 1.0
        if opts["psi0"] is None:
            opts["psi0"] = parse_psi0("gaussian:c=1")
    if ns.subcommand == "asymptotic":
        if opts["scan_eta"] is None:
            opts["scan_eta"] = parse_range("0.05:0.999:200")
        if any(e >= 1.0 for e in opts["scan_eta"]):
            raise SystemExit(_usage_exit("g(eta) diverges at eta = 1; use eta < 1"))
    if ns.subcommand == "lattice":
        if (opts["p0"] is None) != (opts["p1"] is None):
            raise SystemExit(_usage_exit("give both --p0 and --p1"))
        if opts["p0"] is None and opts["random_seeds"] == 0:
            opts["p0"] = opts["p1"] = 1.0
        if opts["p0"] is not None and (opts["p0"] <= 0 or opts["p1"] <= 0):
            raise SystemExit(_usage_exit("seeds must be positive"))
    return cfg


def _usage_exit(message: str) -> int:
    sys.stderr.write(json.dumps({"error": "usage", "message": message}) + "\n")
    return 2


# ---------------------------------------------------------------- runners

@dataclass
class Output:
    columns: Sequence[str]
    rows: list[list]
    result: dict | None = None
    summary: list[str] = field(default_factory=list)
    failed: bool = False


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _run_variational(cfg: RunConfig) -> Output:
    from .variational import VariationalPoint, sweep

    o = cfg.options
    points = sweep(o["n"], o["eta"], o["eps"], workers=cfg.threads)
    failed = [p for p in points if p.error]
    summary = [f"{len(points)} points, {len(failed)} failed"]
    for p in failed:
        summary.append(f"failed n={p.n} eta={p.eta} eps={p.eps}: {p.error}")
    return Output(VariationalPoint.CSV_COLUMNS, [p.csv_row() for p in points], summary=summary)


def _run_perturb(cfg: RunConfig) -> Output:
    from .perturb import ShiftScan, eta_shape_factor, scaling_exponent, shift_at

    o = cfg.options
    rows = []
    result: dict[str, Any] = {}
    for n in o["n"]:
        for eta in sorted(o["eta"]):
            scans = [shift_at(n, eta, L, o["potential"], o["cells_per_shift"]) for L in sorted(o["L"])]
            exponent = c2 = math.nan
            if len(scans) > 1:
                exponent, _ = scaling_exponent([s.L for s in scans], [s.deltaE for s in scans])
            if eta < 1.0 and abs(exponent - 1.0) <= 0.25 and eta_shape_factor(eta) != 0:
                X = np.array([math.pi / 6.0 * eta_shape_factor(eta) * s.L for s in scans])
                y = np.array([s.deltaE for s in scans])
                c2 = float(X @ y / (X @ X))
            for s in scans:
                rows.append(ShiftScan(n, eta, s.L, s.deltaE, exponent, c2).csv_row())
        # per-(n, L) eta summary: sign change and parabolic argmin
        for L in sorted(o["L"]):
            sub = [r for r in rows if r[0] == n and r[2] == L]
            etas = [r[1] for r in sub]
            vals = np.array([r[3] for r in sub])
            entry: dict[str, Any] = {"sign_change": None, "argmin_eta": None}
            for i in range(len(sub) - 1):
                if np.sign(vals[i]) != np.sign(vals[i + 1]):
                    entry["sign_change"] = [etas[i], etas[i + 1]]
                    break
            if len(sub) >= 3:
                from .optimize import parabolic_vertex

                k = int(np.argmin(vals))
                entry["argmin_eta"] = (parabolic_vertex(etas[k - 1:k + 2], vals[k - 1:k + 2])
                                       if 0 < k < len(sub) - 1 else etas[k])
            result[f"n={n},L={L!r}"] = entry
    return Output(ShiftScan.CSV_COLUMNS, rows, result=result)


def _run_asymptotic(cfg: RunConfig) -> Output:
    from .asymptotic import eta_minimizer_asymptotic, scan

    o = cfg.options
    rows = [list(r) for r in scan(np.array(o["scan_eta"]), o["L"])]
    m = eta_minimizer_asymptotic()
    return Output(("eta", "g", "energy"), rows, result={"argmin_eta": m.eta, "golden": m.eta_golden})


def _run_lattice(cfg: RunConfig) -> Output:
    from .lattice import classify_trajectory

    o = cfg.options
    seeds = []
    if o["p0"] is not None:
        seeds.append((o["p0"], o["p1"]))
    rng = np.random.default_rng(cfg.seed)
    for _ in range(o["random_seeds"]):
        a, b = np.exp(rng.uniform(-5.0, 5.0, size=2))
        seeds.append((float(a), float(b)))
    multi = len(seeds) > 1
    rows, summary, counts = [], [], {}
    for i, (p0, p1) in enumerate(seeds):
        traj = classify_trajectory(o["eta"], o["e_ratio"], p0, p1, o["window"], o["bound"])
        rows.extend([i] + r if multi else r for r in traj.csv_rows())
        summary.append(traj.summary())
        counts[traj.classification.value] = counts.get(traj.classification.value, 0) + 1
    columns = ("eta", "e_ratio", "index", "p")
    if multi:
        columns = ("trajectory",) + columns
    return Output(columns, rows, result={"classifications": counts}, summary=summary)


def _field_setup(o: dict):
    from .core import ModelParams, PotentialSpec, make_grid
    from .perturb import quartic_well

    params = ModelParams(o["eta"], o["L"]) if o["L"] is not None else ModelParams.from_eps(o["eta"], o["eps"])
    grid = make_grid(o["halfwidth"] * params.a, params.eta, params.L, o["dx"], "periodic")
    if o["potential"] == "sho":
        V = PotentialSpec.harmonic(params.omega)
    elif o["potential"] == "quartic":
        V = PotentialSpec.from_function(quartic_well, grid, label="quartic")
    else:
        V = PotentialSpec.free(grid)
    return params, grid, V


def _initial_state(spec: dict, grid, params):
    from .core import WaveField
    from .dynamics import gaussian_state
    from .spectra import sho_eigenstate

    if spec["kind"] == "gaussian":
        return gaussian_state(grid, spec["c"] * params.a, spec["x0"], spec["k"])
    if spec["kind"] == "plane":
        k = spec["k"]
        # snap to a wavenumber that is periodic on the grid
        kk = 2.0 * math.pi / grid.length * round(k * grid.length / (2.0 * math.pi))
        if kk != k:
            log.warning("plane wave k=%g snapped to periodic k=%g", k, kk)
        return WaveField(grid, np.exp(1j * kk * grid.x)).normalized()
    return sho_eigenstate(spec["n"], 1.0, grid, params).psi


def _run_evolve(cfg: RunConfig) -> Output:
    from .dynamics import EvolutionDiagnostics, evolve

    o = cfg.options
    params, grid, V = _field_setup(o)
    psi0 = _initial_state(o["psi0"], grid, params)
    _, diag = evolve(psi0, V, params, o["dt"], o["steps"], record_every=max(1, o["record_every"]))
    return Output(EvolutionDiagnostics.CSV_COLUMNS, diag.csv_rows(),
                  result={"grid": grid.to_dict(), "final_norm": diag.records[-1].norm})


def _run_relax(cfg: RunConfig) -> Output:
    from .dynamics import moments, relax_ground_state

    o = cfg.options
    params, grid, V = _field_setup(o)
    psi0 = _initial_state(o["psi0"], grid, params)
    res = relax_ground_state(V, params, grid, dtau=o["dtau"], tol=o["tol"], max_steps=o["max_steps"], psi0=psi0)
    _, centroid, width = moments(res.psi)
    result = {"energy": res.energy, "converged": res.converged, "steps": res.steps,
              "residual": res.residual, "dtau": res.dtau, "message": res.message,
              "centroid": centroid, "width": width, "grid": grid.to_dict()}
    rows = [[x, v] for x, v in zip(grid.x.tolist(), res.psi.values.real.tolist())]
    return Output(("x", "value"), rows, result=result, failed=not res.converged,
                  summary=[f"energy={res.energy!r} converged={res.converged} ({res.message})"])


def _run_check(cfg: RunConfig) -> Output:
    from .checks import run_checks

    o = cfg.options
    results = run_checks(only=o["only"], seed=cfg.seed, workers=cfg.threads)
    rows = [[r.criterion, r.name, int(r.passed), r.detail] for r in results]
    return Output(("criterion", "name", "passed", "detail"), rows,
                  summary=[r.line() for r in results], failed=not all(r.passed for r in results),
                  result={"passed": sum(r.passed for r in results), "total": len(results)})


RUNNERS = {
    "variational": _run_variational,
    "perturb": _run_perturb,
    "asymptotic": _run_asymptotic,
    "lattice": _run_lattice,
    "evolve": _run_evolve,
    "relax": _run_relax,
    "check": _run_check,
}

# check output carries runtimes, which are not replayable
_DETERMINISTIC = set(SUBCOMMANDS) - {"check"}


def render(cfg: RunConfig, out: Output, wall: float, timestamp: str) -> str:
    lines = [f"# qnl {__version__}", f"# timestamp: {timestamp}", f"# wall_time_s: {wall:.3f}",
             f"# config: {cfg.to_json()}"]
    if out.result is not None:
        lines.append(f"# result: {json.dumps(out.result, sort_keys=True, default=_json_default)}")
    lines.append(",".join(out.columns))
    for row in out.rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Artifact:
    version: str
    config: dict
    result: dict | None
    columns: list[str]
    rows: list[list[str]]

    def column(self, name: str) -> list[str]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def read_artifact(text: str) -> Artifact:
    """Parse the header block and CSV body written by ``render``."""
    lines = text.splitlines()
    header = [ln for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    meta = {}
    for ln in header[1:]:
        key, _, val = ln[2:].partition(": ")
        meta[key] = val
    if not header or not header[0].startswith("# qnl ") or "config" not in meta or not body:
        raise ValueError("not a qnl artifact")
    config = json.loads(meta["config"])
    result = json.loads(meta["result"]) if "result" in meta else None
    columns = body[0].split(",")
    rows = [ln.split(",", len(columns) - 1) for ln in body[1:]]
    return Artifact(header[0][len("# qnl "):], config, result, columns, rows)


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"not serializable: {type(v)}")


def run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    try:
        out = RUNNERS[cfg.subcommand](cfg)
    except Exception as exc:  # reported as a machine-readable record
        log.debug("run failed", exc_info=True)
        record = {"error": type(exc).__name__, "message": str(exc), "subcommand": cfg.subcommand,
                  "config": json.loads(cfg.to_json())}
        sys.stderr.write(json.dumps(record, default=_json_default) + "\n")
        return 1
    text = render(cfg, out, time.perf_counter() - t0, stamp)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        summary_stream = sys.stdout
    else:
        sys.stdout.write(text)
        summary_stream = sys.stderr
    for line in out.summary:
        summary_stream.write(line + "\n")
    return 1 if out.failed else 0


def main(argv: Sequence[str] | None = None) -> int:
    cfg = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if cfg.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
