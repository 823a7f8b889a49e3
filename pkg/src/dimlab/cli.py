"""Command-line experiment runner.

Every subcommand builds an ``ExperimentConfig``; ``dimlab run --config f.json``
reads the same structure from a file.  Results go to ``<out>/<command>.csv``
and ``<out>/report.json``.  CSV bodies depend on the config alone; timestamps
live only in the report.

Exit status: 0 when every check passes, 1 on a failed check or a module
error, 2 on a usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from fractions import Fraction

from dimlab import __version__
from dimlab.complexity import make_model
from dimlab.dimension import (
    AUDIT_SLACK,
    MODES,
    PrecisionSchedule,
    audit_identities,
    complexity_curve,
    cond_curve,
    dim_pair,
    mutual_curve,
    robustness_audit,
    sensitivity_audit,
)
from dimlab.errors import ConfigError, DimlabError, InvalidSpec
from dimlab.generators import (
    PointSpec,
    SetSpec,
    analytic_dimension,
    generate_point,
    generate_set,
    pair_components,
)

COMMANDS = ("dim", "cond-dim", "mdim", "audit", "box-dim", "cover", "p2s-audit", "kakeya-reconstruct",
            "kakeya-stats", "machine-k", "packing")
PAIR_COMMANDS = ("cond-dim", "mdim", "audit")
SET_COMMANDS = ("box-dim", "cover", "p2s-audit", "packing")

DEFAULT_PARAMS = {
    "dim": {"window": None},
    "cond-dim": {"window": None},
    "mdim": {"window": None},
    "audit": {"audits": ["identities"], "sensitivity_r": 1024, "sensitivity_delta": 64},
    "box-dim": {"count": 1000, "r_lo": None, "r_hi": None},
    "cover": {"count": 200, "s": 1.0, "r": 8, "slack_bits": 0.0},
    "p2s-audit": {"count": 20000, "points": 3},
    "packing": {"count": 1000, "s": 1.0, "deltas": [0, 2, 4, 6, 8]},
    "kakeya-reconstruct": {"r": 3, "m": "1/2", "b": "1/4", "x": "1/2", "h": 1},
    "kakeya-stats": {"r": 10, "trials": 1000, "m": "1/2", "b": "1/4"},
    "machine-k": {"w": "", "v": "", "max_len": 16, "max_steps": 10000},
}
DEFAULT_TOLERANCES = {
    "audit": {"slack": AUDIT_SLACK, "robustness": 0.1, "lipschitz_bits": 64.0},
    "p2s-audit": {"gap": 0.12},
}
CONFIG_KEYS = {"command", "seed", "model", "point", "x", "y", "set", "schedule", "out", "tolerances",
               "params", "threads"}


@dataclass
class ExperimentConfig:
    command: str
    seed: int
    model: str = "lz78"
    point: dict | None = None
    x: dict | None = None
    y: dict | None = None
    set: dict | None = None
    schedule: dict = field(default_factory=dict)
    out: str = "dimlab-out"
    tolerances: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    threads: int | None = None

    @classmethod
    def from_dict(cls, d) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(d) - CONFIG_KEYS
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        for key in ("command", "seed"):
            if key not in d:
                raise ConfigError(f"config needs {key!r}")
        if d["command"] not in COMMANDS:
            raise ConfigError(f"unknown command {d['command']!r}; expected one of {COMMANDS}")
        if not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
            raise ConfigError("seed must be an integer")
        for key in ("point", "x", "y", "set", "schedule", "tolerances", "params"):
            if d.get(key) is not None and not isinstance(d[key], dict):
                raise ConfigError(f"{key!r} must be an object")
        threads = d.get("threads")
        if threads is not None and (not isinstance(threads, int) or threads < 1):
            raise ConfigError("threads must be a positive integer")
        return cls(**{k: v for k, v in d.items() if v is not None or k in ("point", "x", "y", "set")})

    def resolved(self) -> "ExperimentConfig":
        """Copy with every default filled in."""
        try:
            sched = PrecisionSchedule(**self.schedule)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad schedule: {e}") from e
        params = {**DEFAULT_PARAMS[self.command], **self.params}
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.command])
        if unknown:
            raise ConfigError(f"unknown params for {self.command}: {sorted(unknown)}")
        tols = {**DEFAULT_TOLERANCES.get(self.command, {}), **self.tolerances}

        def spec(s, cls):
            if s is None:
                return None
            return cls.from_dict({"seed": self.seed, **s}).to_dict()

        return ExperimentConfig(self.command, self.seed, self.model, spec(self.point, PointSpec),
                                spec(self.x, PointSpec), spec(self.y, PointSpec), spec(self.set, SetSpec),
                                sched.to_dict(), self.out, tols, params, self.threads)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Report:
    config: dict
    csv_paths: list
    results: dict
    checks: dict
    started: str = ""
    finished: str = ""
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


# output


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return repr(float(v))
    return v


def _clean(obj):
    """JSON-safe copy (Fractions as strings, non-finite floats as null)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item"):
        return obj.item()
    return obj


# commands


def _range_checks(pair, tols: dict) -> dict:
    out = {}
    for key in ("lower", "upper"):
        if key in tols:
            lo, hi = tols[key]
            out[f"{key}_in_range"] = lo <= getattr(pair, key) <= hi
    return out


def _point(cfg: ExperimentConfig):
    if cfg.point is None:
        raise ConfigError(f"{cfg.command} needs a 'point' spec")
    return generate_point(cfg.point)


def _pair(cfg: ExperimentConfig):
    if cfg.x is not None and cfg.y is not None:
        return generate_point(cfg.x), generate_point(cfg.y)
    if cfg.point is not None:
        return pair_components(cfg.point)
    raise ConfigError(f"{cfg.command} needs 'x' and 'y' specs or a joint 'point' spec")


def _set(cfg: ExperimentConfig):
    if cfg.set is None:
        raise ConfigError(f"{cfg.command} needs a 'set' spec")
    return SetSpec.from_dict(cfg.set)


def _curve_rows(curve):
    return [(r, float(v), float(v) / r) for r, v in zip(curve.rs, curve.values)]


CURVE_HEADER = ["r", "value", "ratio"]


def _run_curve(cfg, model, sched, kind):
    p = cfg.params
    if kind == "dim":
        x = _point(cfg)
        curve, n = complexity_curve(model, x, sched, cfg.threads), x.dim
    else:
        x, y = _pair(cfg)
        if kind == "cond-dim":
            curve, n = cond_curve(model, x, y, sched, cfg.threads, seed=cfg.seed), x.dim
        else:
            curve, n = mutual_curve(model, x, y, sched, cfg.threads), min(x.dim, y.dim)
    pair = dim_pair(curve, n, p.get("window"))
    res = {"lower": pair.lower, "upper": pair.upper, "label": curve.label, "raw": [float(v) for v in curve.raw]}
    return {kind: (CURVE_HEADER, _curve_rows(curve))}, res, _range_checks(pair, cfg.tolerances)


def _run_audit(cfg, model, sched):
    x, y = _pair(cfg)
    p, tol = cfg.params, cfg.tolerances
    tables, res, checks = {}, {}, {}
    for name in p["audits"]:
        if name == "identities":
            rep = audit_identities(model, x, y, sched, tol["slack"], cfg.threads)
            v = rep.values
            rows = [(r, v["K_x"][i], v["K_y"][i], v["K_xy"][i], v["K_x|y"][i], v["K_y|x"][i], v["I"][i],
                     rep.residuals["chain"][i], rep.residuals["mutual"][i]) for i, r in enumerate(rep.rs)]
            tables["audit"] = (["r", "K_x", "K_y", "K_xy", "K_x_given_y", "K_y_given_x", "I", "chain_residual",
                                "mutual_residual"], rows)
        elif name == "robustness":
            rep = robustness_audit(model, x, y, sched, tol["robustness"], cfg.threads)
        elif name == "sensitivity":
            rep = sensitivity_audit(model, x, y, p["sensitivity_r"], p["sensitivity_delta"],
                                    slack_bits=tol["lipschitz_bits"])
        else:
            raise ConfigError(f"unknown audit {name!r}; expected identities, robustness or sensitivity")
        res[name] = rep.to_dict()
        checks.update({f"{name}.{k}": v for k, v in rep.checks.items()})
    return tables, res, checks


def _run_geometry(cfg, model, sched):
    from dimlab import geometry as G

    spec = _set(cfg)
    p = cfg.params
    if cfg.command == "p2s-audit":
        rep = G.point_to_set_audit(model, spec, schedule=sched, count=p["count"], points=p["points"],
                                   tol=cfg.tolerances["gap"], threads=cfg.threads)
        rows = [(i, d["lower"], d["upper"]) for i, d in enumerate(rep.values["point_dims"])]
        return {"p2s": (["point", "lower", "upper"], rows)}, rep.to_dict(), rep.checks
    sample = generate_set(spec, p["count"])
    if cfg.command == "box-dim":
        lo, hi = p["r_lo"], p["r_hi"]
        if lo is None or hi is None:
            alo, ahi = G.auto_range(sample)
            lo, hi = lo or alo, hi or ahi
        counts = G.cell_counts(sample, range(lo, hi + 1))
        d = G.box_counting_dim(sample, lo, hi)
        res = {"box_dim": d, "r_lo": lo, "r_hi": hi, "analytic_dim": analytic_dimension(spec),
               "note": G.HAUSDORFF_NOTE}
        return {"box_dim": (["r", "cells"], list(zip(range(lo, hi + 1), counts)))}, res, _range_checks_box(d, cfg)
    if cfg.command == "cover":
        cv = G.low_complexity_cover_cost(model, sample, float(p["s"]), int(p["r"]), float(p["slack_bits"]),
                                         cfg.threads)
        rows = [(e.ball.center.to_text(), e.ball.radius_exp, e.complexity_witness) for e in cv.elements]
        res = {"kept": cv.kept, "candidates": cv.candidates, "uncovered": cv.uncovered, "cost": cv.cost,
               "cardinality_bound": cv.cardinality_bound}
        return ({"cover": (["center", "radius_exp", "witness"], rows)}, res,
                {"cardinality": cv.kept < cv.cardinality_bound})
    rows = []
    for d in p["deltas"]:
        centers = G.packing(sample, int(d))
        rows.append((int(d), len(centers), len(centers) * 2.0 ** (-(int(d) + 1) * float(p["s"]))))
    return {"packing": (["delta_exp", "balls", "cost"], rows)}, {"s": p["s"]}, {}


def _range_checks_box(d: float, cfg) -> dict:
    if "box_dim" in cfg.tolerances:
        lo, hi = cfg.tolerances["box_dim"]
        return {"box_dim_in_range": lo <= d <= hi}
    return {}


def _frac(v) -> Fraction:
    try:
        return Fraction(str(v))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"not a number: {v!r}") from e


def _run_kakeya(cfg):
    from dimlab import kakeya as K

    p = cfg.params
    r = int(p["r"])
    if cfg.command == "kakeya-reconstruct":
        m, b, x = _frac(p["m"]), _frac(p["b"]), _frac(p["x"])
        c = K.reconstruct(K.harness_input(r, m, b, x, h=int(p["h"])))
        res = {"index": c.index, "u": str(c.u), "v": str(c.v), "p": str(c.p)}
        return {"reconstruct": (["index", "u", "v", "p"], [(c.index, str(c.u), str(c.v), str(c.p))])}, res, {}
    st = K.h_statistics(r, _frac(p["m"]), _frac(p["b"]), int(p["trials"]), cfg.seed, cfg.threads)
    res = st.to_dict()
    return {"kakeya_stats": (["trial", "x", "h", "log2h_over_r"], st.rows())}, res, st.checks()


def _run_machine(cfg):
    from dimlab.machine import MachineBudget, min_program_length

    p = cfg.params
    s, c = str(p["w"]), str(p["v"])
    if set(s + c) - {"0", "1"}:
        raise ConfigError("machine-k strings must be binary")
    k = min_program_length(s, c, MachineBudget(int(p["max_len"]), int(p["max_steps"])))
    return {}, {"k": k}, {}


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> Report:
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    cfg = cfg.resolved()
    try:
        model = make_model(cfg.model)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    sched = PrecisionSchedule(**cfg.schedule)
    if cfg.command in ("dim", "cond-dim", "mdim"):
        tables, res, checks = _run_curve(cfg, model, sched, cfg.command)
    elif cfg.command == "audit":
        tables, res, checks = _run_audit(cfg, model, sched)
    elif cfg.command in SET_COMMANDS:
        tables, res, checks = _run_geometry(cfg, model, sched)
    elif cfg.command.startswith("kakeya"):
        tables, res, checks = _run_kakeya(cfg)
    else:
        tables, res, checks = _run_machine(cfg)
    paths = []
    if write:
        for name, (header, rows) in tables.items():
            path = os.path.join(cfg.out, f"{name}.csv")
            atomic_write(path, csv_text(header, rows))
            paths.append(path)
    rep = Report(_clean(cfg.to_dict()), paths, _clean(res), {k: bool(v) for k, v in checks.items()}, started,
                 datetime.now(timezone.utc).isoformat(), time.perf_counter() - t0)
    if write:
        atomic_write(os.path.join(cfg.out, "report.json"), json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    return rep


# argument parsing


def _json_arg(text: str):
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON: {e}") from e


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"dimlab: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dimlab", description="Precision-complexity and effective-dimension experiments.")
    ap.add_argument("--version", action="version", version=f"dimlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment config file")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--threads", type=int)

    def common(p, schedule=False, model=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="dimlab-out")
        p.add_argument("--threads", type=int, help="worker threads (default: $DIMLAB_THREADS or 1)")
        if model:
            p.add_argument("--model", default="lz78", help="lz78 | lz78-classic | machine:L,T")
        if schedule:
            p.add_argument("--r1", type=int, default=64)
            p.add_argument("--ratio", type=float, default=1.3)
            p.add_argument("--r-max", type=int, default=1 << 14)
            p.add_argument("--mode", choices=MODES, default="identity")
            p.add_argument("--window", type=int, help="tail window size (default: last half)")

    p = sub.add_parser("dim", help="dimension pair of a point")
    common(p, schedule=True)
    p.add_argument("--point", required=True, help="point spec as JSON (or @file)")
    for name, hlp in (("cond-dim", "conditional dimension of x given y"), ("mdim", "mutual dimension")):
        p = sub.add_parser(name, help=hlp)
        common(p, schedule=True)
        p.add_argument("--point", help="joint spec of even dimension, split into x and y")
        p.add_argument("--x")
        p.add_argument("--y")
    p = sub.add_parser("audit", help="chain-rule and related identity audits")
    common(p, schedule=True)
    p.add_argument("--point")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--audits", nargs="+", default=["identities"],
                   choices=["identities", "robustness", "sensitivity"])

    p = sub.add_parser("box-dim", help="box-counting dimension of a set sample")
    common(p, model=False)
    p.add_argument("--set", required=True, help="set spec as JSON (or @file)")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--r-lo", type=int)
    p.add_argument("--r-hi", type=int)
    p = sub.add_parser("cover", help="low-complexity cover of a set sample")
    common(p)
    p.add_argument("--set", required=True)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--slack-bits", type=float, default=0.0)
    p = sub.add_parser("p2s-audit", help="box dimension against sampled point dimensions")
    common(p, schedule=True)
    p.add_argument("--set", required=True)
    p.add_argument("--count", type=int, default=20000)
    p.add_argument("--points", type=int, default=3)
    p.add_argument("--tol", type=float, default=0.12)
    p = sub.add_parser("packing", help="greedy packing costs")
    common(p, model=False)
    p.add_argument("--set", required=True)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--delta", type=int, nargs="+", default=[0, 2, 4, 6, 8])

    p = sub.add_parser("kakeya-reconstruct", help="run the slope-recovery machine once")
    common(p, model=False)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--m", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--h", type=int, default=1)
    p = sub.add_parser("kakeya-stats", help="statistics of h(x, r) over uniform x")
    common(p, model=False)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--m", default="1/2")
    p.add_argument("--b", default="1/4")

    p = sub.add_parser("machine-k", help="shortest toy-machine program length")
    p.add_argument("--w", required=True, help="target bits")
    p.add_argument("--v", default="", help="condition bits")
    p.add_argument("--max-len", type=int, default=16)
    p.add_argument("--max-steps", type=int, default=10000)
    return ap


def config_from_args(a: argparse.Namespace) -> ExperimentConfig:
    if a.command == "run":
        try:
            with open(a.config) as fh:
                raw = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        try:
            d = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON in {a.config}: {e}") from e
        cfg = ExperimentConfig.from_dict(d)
        if a.out:
            cfg.out = a.out
        if a.threads:
            cfg.threads = a.threads
        return cfg
    c = a.command
    if c == "machine-k":
        return ExperimentConfig(c, 0, params={"w": a.w, "v": a.v, "max_len": a.max_len,
                                              "max_steps": a.max_steps}, out="")
    cfg = ExperimentConfig(c, a.seed, out=a.out, threads=a.threads)
    if hasattr(a, "model"):
        cfg.model = a.model
    if hasattr(a, "r1"):
        cfg.schedule = {"r1": a.r1, "ratio": a.ratio, "r_max": a.r_max, "mode": a.mode}
        if c in ("dim", "cond-dim", "mdim"):
            cfg.params["window"] = a.window
    if c in ("dim", "cond-dim", "mdim", "audit") and a.point:
        cfg.point = _json_arg(a.point)
    if c in PAIR_COMMANDS:
        cfg.x = _json_arg(a.x) if a.x else None
        cfg.y = _json_arg(a.y) if a.y else None
    if c == "audit":
        cfg.params["audits"] = a.audits
    if c in SET_COMMANDS:
        cfg.set = _json_arg(a.set)
        cfg.params["count"] = a.count
    if c == "box-dim":
        cfg.params.update(r_lo=a.r_lo, r_hi=a.r_hi)
    elif c == "cover":
        cfg.params.update(s=a.s, r=a.r, slack_bits=a.slack_bits)
    elif c == "p2s-audit":
        cfg.params["points"] = a.points
        cfg.tolerances["gap"] = a.tol
    elif c == "packing":
        cfg.params.update(s=a.s, deltas=a.delta)
    elif c == "kakeya-reconstruct":
        cfg.params.update(r=a.r, m=a.m, b=a.b, x=a.x, h=a.h)
    elif c == "kakeya-stats":
        cfg.params.update(r=a.r, trials=a.trials, m=a.m, b=a.b)
    return cfg


def _summary(rep: Report) -> str:
    cmd = rep.config["command"]
    r = rep.results
    if cmd == "machine-k":
        return "none" if r["k"] is None else str(r["k"])
    if cmd in ("dim", "cond-dim", "mdim"):
        return f"lower={r['lower']:.4f} upper={r['upper']:.4f}"
    if cmd == "kakeya-reconstruct":
        return f"u={r['u']} v={r['v']} p={r['p']} (i={r['index']})"
    if cmd == "kakeya-stats":
        return f"mean_h={r['mean_h']:.3f} median_h={r['median_h']} max_h={r['max_h']}"
    if cmd == "box-dim":
        return f"box_dim={r['box_dim']:.4f} over r={r['r_lo']}..{r['r_hi']}"
    if cmd == "cover":
        return f"kept={r['kept']} uncovered={r['uncovered']} cost={r['cost']:.6g}"
    return "passed" if rep.passed else "failed"


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        rep = run_experiment(cfg, write=cfg.command != "machine-k")
    except SystemExit as e:
        return int(e.code or 0)
    except (ConfigError, InvalidSpec) as e:
        print(f"dimlab: {e.code}: {e}", file=sys.stderr)
        return 2
    except DimlabError as e:
        print(f"dimlab: {e.code}: {e}", file=sys.stderr)
        return 1
    print(_summary(rep))
    for name, ok in rep.checks.items():
        if not ok:
            print(f"check failed: {name}", file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
