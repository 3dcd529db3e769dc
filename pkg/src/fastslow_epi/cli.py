"""Command-line interface: ``fastslow-epi <command> [--config file.json] [flags]``.

Every run writes ``<command>.csv`` and ``manifest.json`` into ``--out``.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bifurcation as bif
from . import cycle
from .entry_exit import exit_function, sir_exit_point, sirws_exit_point
from .errors import DomainError, FastSlowError, NumericalError, ParameterError, PreconditionError
from .model import ModelKind, ModelParams, SystemState, TimeFrame
from .orbit import EventKind, EventSpec, IntegratorConfig, integrate, peak_sequences, singular_orbit
from .reports import build_manifest, write_csv, write_manifest

COMMANDS = ("simulate", "entry-exit", "peaks", "singular-orbit", "classify-j3", "find-cycle",
            "hopf-scan", "classify-attractor", "sweep")
PARAM_KEYS = ("beta", "gamma", "xi", "kappa", "nu", "delta", "epsilon")
INTEGRATOR_KEYS = {"rel_tol": float, "abs_tol": float, "max_step": float, "log_switch_threshold": float,
                   "horizon": float, "max_steps": int, "event_tol": float}
TOP_KEYS = ("model", "params", "integrator", "options", "threads")

# option name -> (type, nargs) ; nargs None for scalars
OPTIONS = {
    "simulate": {"initial": (float, "+"), "frame": (str, None), "layer": (bool, None), "events": (dict, "*")},
    "entry-exit": {"p0": (float, "+"), "entries": (float, "+")},
    "peaks": {"s0": (float, None), "n": (int, None)},
    "singular-orbit": {"s0": (float, None), "n_loops": (int, None), "n_points": (int, None)},
    "classify-j3": {"s0": (float, None), "w_lo": (float, None), "w_hi": (float, None),
                    "grid_n": (int, None), "xi_values": (float, "+")},
    "find-cycle": {"s0": (float, None), "w_lo": (float, None), "w_hi": (float, None),
                   "xi_bracket": (float, "+")},
    "hopf-scan": {"param": (str, None), "range": (float, "+"), "steps": (int, None), "spacing": (str, None)},
    "classify-attractor": {"initial_conditions": (float, "+"), "horizon": (float, None),
                           "transient_fraction": (float, None), "amp_tol": (float, None)},
    "sweep": {"param": (str, None), "values": (float, "+"), "task": (str, None), "horizon": (float, None),
              "transient_fraction": (float, None), "s0": (float, None), "grid_n": (int, None)},
}


class ConfigError(FastSlowError, ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- configuration ---------------------------------------------------------

def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}", "unknown key")


def _coerce(value, typ, nargs, path):
    if nargs is not None:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return [_coerce(v, typ, None, f"{path}[{k}]") for k, v in enumerate(value)]
    if typ is dict:
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true or false")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if typ is int:
        if float(value) != int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    if isinstance(data, dict) and data.get("tool") == "fastslow-epi" and "config" in data:
        data = data["config"]  # a manifest: rerun its resolved config
    return data


def resolve_config(command: str, raw: dict, overrides: dict | None = None) -> dict:
    """Validate ``raw`` (plus flag overrides) into a fully resolved config."""
    overrides = overrides or {}
    raw = copy.deepcopy(raw or {})
    _check_keys(raw, TOP_KEYS, "config")
    for key in ("params", "integrator", "options"):
        raw.setdefault(key, {})
    _check_keys(raw["params"], PARAM_KEYS, "config.params")
    _check_keys(raw["integrator"], INTEGRATOR_KEYS, "config.integrator")
    _check_keys(raw["options"], OPTIONS[command], "config.options")

    for section in ("params", "integrator", "options"):
        raw[section].update({k: v for k, v in overrides.get(section, {}).items() if v is not None})
    for key in ("model", "threads"):
        if overrides.get(key) is not None:
            raw[key] = overrides[key]

    try:
        kind = ModelKind.parse(raw.get("model", "SIR"))
    except ParameterError as exc:
        raise ConfigError("config.model", str(exc)) from None
    params = {}
    for k in PARAM_KEYS:
        if k in raw["params"]:
            params[k] = _coerce(raw["params"][k], float, None, f"config.params.{k}")
    for k in ("beta", "gamma"):
        if k not in params:
            raise ConfigError(f"config.params.{k}", "required")
    try:
        p = ModelParams(**params).validate_for(kind)
    except ParameterError as exc:
        raise ConfigError("config.params", str(exc)) from None

    integ = {k: _coerce(v, INTEGRATOR_KEYS[k], None, f"config.integrator.{k}") for k, v in raw["integrator"].items()}
    try:
        IntegratorConfig(**integ)
    except ParameterError as exc:
        raise ConfigError("config.integrator", str(exc)) from None

    opts = {}
    for k, v in raw["options"].items():
        typ, nargs = OPTIONS[command][k]
        opts[k] = _coerce(v, typ, nargs, f"config.options.{k}")

    threads = _coerce(raw.get("threads", 1), int, None, "config.threads")
    if threads < 1:
        raise ConfigError("config.threads", "must be >= 1")
    return {"model": kind.value, "params": p.as_dict(), "integrator": integ, "options": opts, "threads": threads}


# -- commands --------------------------------------------------------------

def _opt(opts, key, default=None, required=False):
    if key in opts:
        return opts[key]
    if required:
        raise ConfigError(f"config.options.{key}", "required")
    return default


def _state(values, kind, path):
    if len(values) != kind.dim:
        raise ConfigError(path, f"{kind.value} states have {kind.dim} components")
    try:
        return SystemState.from_array(values).check(kind)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from None


def _event_spec(d, k):
    path = f"config.options.events[{k}]"
    _check_keys(d, ("kind", "level", "direction", "terminal"), path)
    try:
        return EventSpec(EventKind(d.get("kind")), float(d.get("level", 0.0)), int(d.get("direction", 0)),
                         bool(d.get("terminal", False)))
    except (ValueError, ParameterError) as exc:
        raise ConfigError(path, str(exc)) from None


def cmd_simulate(kind, p, cfg, opts):
    x0 = _state(_opt(opts, "initial", required=True), kind, "config.options.initial")
    frame = TimeFrame.parse(_opt(opts, "frame", "fast"))
    events = [_event_spec(d, k) for k, d in enumerate(_opt(opts, "events", []))]
    tr = integrate(kind, p, x0, frame, cfg, events, layer=_opt(opts, "layer", False))
    names = ["S", "I", "W"][: kind.dim]
    header = [f"time[{frame.value} time]"] + [f"{n}[fraction]" for n in names] + ["event"]
    rows = [(float(t), *map(float, x), "") for t, x in zip(tr.times, tr.states)]
    rows += [(e.time, *e.state.as_array().tolist(), e.spec.kind.value) for e in tr.events]
    rows.sort(key=lambda r: (r[0], r[-1] != ""))
    summary = {"samples": len(tr), "events": len(tr.events), "status": tr.status,
               "accepted_steps": tr.n_accepted, "rejected_steps": tr.n_rejected,
               "final_time": float(tr.times[-1])}
    return header, rows, summary


def cmd_entry_exit(kind, p, cfg, opts):
    if kind is ModelKind.SIRWS:
        flat = _opt(opts, "entries", required=True)
        if len(flat) % 2:
            raise ConfigError("config.options.entries", "expected (s_inf, w_inf) pairs")
        header = ["s_inf[fraction]", "w_inf[fraction]", "exit_time[slow time]", "s_exit[fraction]",
                  "w_exit[fraction]", "residual[1]"]
        rows = []
        for s_inf, w_inf in zip(flat[::2], flat[1::2]):
            sol = sirws_exit_point(p, s_inf, w_inf)
            rows.append((s_inf, w_inf, sol.exit_time, sol.exit.s, sol.exit.w, sol.residual))
    else:
        header = ["p0[fraction]", "s1[fraction]", "residual[1]"]
        rows = []
        for p0 in _opt(opts, "p0", required=True):
            s1 = sir_exit_point(p, p0)
            rows.append((p0, s1, exit_function(p, p0, s1)))
    return header, rows, {"rows": len(rows), "max_abs_residual": max(abs(r[-1]) for r in rows)}


def cmd_peaks(kind, p, cfg, opts):
    n = _opt(opts, "n", 50)
    S, P = peak_sequences(p, _opt(opts, "s0", required=True), n)
    rows = [(k, float(S[k]), float(P[k]) if k < n else None) for k in range(n + 1)]
    turn = 1.0 / p.r0
    return (["k[1]", "S_k[fraction]", "P_k[fraction]"], rows,
            {"n": n, "S_last_minus_turn": float(S[-1] - turn), "turn_minus_P_last": float(turn - P[-1])})


def cmd_singular_orbit(kind, p, cfg, opts):
    segs = singular_orbit(p, _opt(opts, "s0", required=True), _opt(opts, "n_loops", 1), kind,
                          _opt(opts, "n_points", 400))
    rows = [(k, s.kind, s.start.s, s.start.i, s.end.s, s.end.i, s.duration) for k, s in enumerate(segs)]
    header = ["segment[1]", "kind", "S_start[fraction]", "I_start[fraction]", "S_end[fraction]",
              "I_end[fraction]", "duration[slow time]"]
    return header, rows, {"segments": len(segs)}


def _section(p, opts):
    s0 = _opt(opts, "s0")
    if s0 is None:
        j1 = cycle.default_section(p)
    else:
        j1 = cycle.SectionJ1.full(s0)
    lo, hi = _opt(opts, "w_lo", j1.w_lo), _opt(opts, "w_hi", j1.w_hi)
    try:
        return cycle.SectionJ1(j1.s0, lo, hi)
    except DomainError as exc:
        raise ConfigError("config.options", str(exc)) from None


def cmd_classify_j3(kind, p, cfg, opts):
    j1 = _section(p, opts)
    rows = []
    for xi in _opt(opts, "xi_values", [p.xi]):
        c = cycle.classify_j3(p.replace(xi=xi), j1, _opt(opts, "grid_n", 32))
        d = c.s_exit - j1.s0
        rows.append((xi, c.position.value, j1.s0, float(d.min()), float(d.max())))
    header = ["xi[1/slow time]", "position", "s0[fraction]", "min_s_exit_minus_s0[fraction]",
              "max_s_exit_minus_s0[fraction]"]
    return header, rows, {"positions": [r[1] for r in rows], "s0": j1.s0}


def cmd_find_cycle(kind, p, cfg, opts):
    j1 = _section(p, opts)
    br = _opt(opts, "xi_bracket", [0.01, 0.015])
    if len(br) != 2:
        raise ConfigError("config.options.xi_bracket", "expected two values")
    r = cycle.find_singular_cycle(p, j1, tuple(br))
    header = ["xi_star[1/slow time]", "w_star[fraction]", "s0[fraction]", "residual_s[fraction]",
              "residual_w[fraction]", "fast_span[fraction]", "slow_duration[slow time]",
              "xi_interval_lo[1/slow time]", "xi_interval_hi[1/slow time]"]
    row = (r.xi_star, r.w_star, r.s0, *r.residuals, r.fast_span, r.slow_duration, *r.crossing_interval)
    return header, [row], {"xi_star": r.xi_star, "w_star": r.w_star, "residuals": list(r.residuals),
                           "end_positions": [e.value for e in r.end_positions]}


def cmd_hopf_scan(kind, p, cfg, opts):
    name = _opt(opts, "param", "nu")
    rng = _opt(opts, "range", required=True)
    if len(rng) != 2:
        raise ConfigError("config.options.range", "expected two values")
    scan = bif.hopf_scan(kind, p, name, rng, _opt(opts, "steps", 64), _opt(opts, "spacing", "auto"))
    rows = [(float(v), float(r), float(i), "GRID") for v, r, i in zip(scan.grid, scan.re, scan.im)]
    for h in scan.points:
        rows.append((h.param_value, h.eigenvalue.real, h.eigenvalue.imag,
                     "HOPF" if h.flag is bif.HopfFlag.OK else "UNDECIDED"))
    header = [f"{name}[param]", "ReLambda[1/fast time]", "ImLambda[1/fast time]", "flag"]
    return header, rows, {"hopf_points": [h.param_value for h in scan.hopf_points],
                          "undecided_brackets": [list(h.bracket) for h in scan.undecided]}


def cmd_classify_attractor(kind, p, cfg, opts):
    flat = _opt(opts, "initial_conditions")
    ics = None
    if flat is not None:
        if len(flat) % kind.dim:
            raise ConfigError("config.options.initial_conditions", f"expected groups of {kind.dim}")
        ics = [_state(flat[k:k + kind.dim], kind, "config.options.initial_conditions")
               for k in range(0, len(flat), kind.dim)]
    lab = bif.attractor_classify(kind, p, ics, _opt(opts, "horizon", 2000.0),
                                 _opt(opts, "transient_fraction", 0.5), _opt(opts, "amp_tol", bif.AMP_TOL), cfg)
    names = ["S0", "I0", "W0"][: kind.dim]
    header = ["ic[1]"] + [f"{n}[fraction]" for n in names] + ["tag", "amplitude[fraction]",
                                                              "period[fast time]", "peaks[1]"]
    rows = [(k, *e.initial.as_array().tolist(), e.tag.value, e.amplitude, e.period, e.n_peaks)
            for k, e in enumerate(lab.evidence)]
    return header, rows, {"tag": lab.tag.value, "notes": [e.note for e in lab.evidence]}


def _sweep_point(kind, p, cfg, opts, name, value):
    q = p.replace(**{name: value})
    task = _opt(opts, "task", "spectrum")
    if task == "spectrum":
        ev = bif.equilibrium_spectrum(kind, q)
        return (value, float(ev[0].real), float(abs(ev[0].imag)), "stable" if ev[0].real < 0 else "unstable")
    if task == "attractor":
        lab = bif.attractor_classify(kind, q, None, _opt(opts, "horizon", 2000.0),
                                     _opt(opts, "transient_fraction", 0.5), config=cfg)
        return (value, max(e.amplitude for e in lab.evidence), math.nan, lab.tag.value)
    j1 = cycle.SectionJ1.full(_opt(opts, "s0", required=True))
    c = cycle.classify_j3(q, j1, _opt(opts, "grid_n", 32))
    d = c.s_exit - j1.s0
    return (value, float(d.min()), float(d.max()), c.position.value)


_SWEEP_HEADERS = {
    "spectrum": ["ReLambda[1/fast time]", "ImLambda[1/fast time]", "label"],
    "attractor": ["amplitude[fraction]", "unused", "label"],
    "j3": ["min_s_exit_minus_s0[fraction]", "max_s_exit_minus_s0[fraction]", "label"],
}


def cmd_sweep(kind, p, cfg, opts, threads=1):
    name = _opt(opts, "param", required=True)
    if name not in PARAM_KEYS:
        raise ConfigError("config.options.param", f"unknown parameter {name!r}")
    task = _opt(opts, "task", "spectrum")
    if task not in _SWEEP_HEADERS:
        raise ConfigError("config.options.task", f"expected one of {sorted(_SWEEP_HEADERS)}")
    values = _opt(opts, "values", required=True)
    work = lambda v: _sweep_point(kind, p, cfg, opts, name, v)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, values))  # map keeps input order
    else:
        rows = [work(v) for v in values]
    return [f"{name}[param]"] + _SWEEP_HEADERS[task], rows, {"task": task, "points": len(rows)}


_DISPATCH = {
    "simulate": cmd_simulate, "entry-exit": cmd_entry_exit, "peaks": cmd_peaks,
    "singular-orbit": cmd_singular_orbit, "classify-j3": cmd_classify_j3, "find-cycle": cmd_find_cycle,
    "hopf-scan": cmd_hopf_scan, "classify-attractor": cmd_classify_attractor, "sweep": cmd_sweep,
}


class CommandFailed(FastSlowError):
    def __init__(self, command, cause, config):
        super().__init__(f"{command} failed: {cause} (inputs: params={config['params']}, "
                         f"options={config['options']})")
        self.cause = cause


def run_command(command: str, config: dict, out_dir) -> dict:
    """Run one resolved config; writes the CSV and manifest and returns the manifest."""
    if command not in _DISPATCH:
        raise ConfigError("command", f"unknown command {command!r}")
    kind = ModelKind.parse(config["model"])
    p = ModelParams(**config["params"])
    cfg = IntegratorConfig(**config["integrator"])
    opts = config["options"]
    t0 = time.perf_counter()
    try:
        if command == "sweep":
            header, rows, summary = cmd_sweep(kind, p, cfg, opts, config.get("threads", 1))
        else:
            header, rows, summary = _DISPATCH[command](kind, p, cfg, opts)
    except (ConfigError, ParameterError, DomainError, PreconditionError):
        raise
    except NumericalError as exc:
        raise CommandFailed(command, exc, config) from exc
    out_dir = Path(out_dir)
    csv_path = write_csv(out_dir / f"{command}.csv", header, rows)
    manifest = build_manifest(command, config, time.perf_counter() - t0, [csv_path], summary)
    write_manifest(out_dir / "manifest.json", manifest)
    return manifest


# -- argument parsing --------------------------------------------------------

def _flag(key):
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (or a previous manifest.json)")
    common.add_argument("--model", choices=[k.value for k in ModelKind])
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--threads", type=int, help="worker threads for sweeps")
    for k in PARAM_KEYS:
        common.add_argument(_flag(k), dest=f"params.{k}", type=float, metavar="X")
    for k, typ in INTEGRATOR_KEYS.items():
        name = "--integrator-horizon" if k == "horizon" else _flag(k)
        common.add_argument(name, dest=f"integrator.{k}", type=typ, metavar="X")

    parser = argparse.ArgumentParser(prog="fastslow-epi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, parents=[common])
        for k, (typ, nargs) in OPTIONS[cmd].items():
            if typ is dict:
                continue  # events are config-file only
            if typ is bool:
                sp.add_argument(_flag(k), dest=f"options.{k}", action="store_const", const=True)
            else:
                sp.add_argument(_flag(k), dest=f"options.{k}", type=typ, nargs=nargs, metavar="X")
    return parser


def _overrides(ns) -> dict:
    out = {"params": {}, "integrator": {}, "options": {}, "model": ns.model, "threads": ns.threads}
    for dest, v in vars(ns).items():
        if "." in dest and v is not None:
            section, key = dest.split(".", 1)
            out[section][key] = v
    return out


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        raw = load_config_file(ns.config) if ns.config else {}
        config = resolve_config(ns.command, raw, _overrides(ns))
        manifest = run_command(ns.command, config, ns.out)
    except (ConfigError, ParameterError, DomainError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CommandFailed as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(manifest["summary"], sort_keys=True))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
