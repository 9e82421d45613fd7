"""Command-line front end.

Exit codes: 0 success, 1 selftest failure, 2 usage error, 3 configuration or
parameter error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path

from . import __version__
from .harness import (
    ConfigError,
    DomainError,
    FitError,
    PairError,
    SweepConfig,
    AdmissiblePair,
    decay_series,
    decay_slope_fit,
    dyadic_times,
    homogeneous_ratio,
    inhomogeneous_ratio,
    records_to_csv,
    records_to_jsonl,
    solve_q,
    uniformity_sweep,
)
from .lattice import (
    InvalidFieldError,
    ParameterError,
    SpaceTimeField,
    WalkParams,
    make_state,
    read_field,
)
from .multipliers import AnnihilatorInverseError, fractional_weight, littlewood_paley
from .spectral import DegenerateSymbolError, SingularityError, locate_degeneracies, spectral_evolve, symbol_table
from .walk import TimeGridError, evolve

EXIT_SELFTEST = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3

# errors that mean "the requested run is not well posed", reported with exit 3
INPUT_ERRORS = (ConfigError, PairError, ParameterError, DomainError, FitError, TimeGridError,
                InvalidFieldError, AnnihilatorInverseError, DegenerateSymbolError,
                SingularityError, FileNotFoundError)


class ConfigParseError(ConfigError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


# -- config files ------------------------------------------------------------------

def _real(tok: str) -> float:
    t = tok.strip().lower()
    if t in ("inf", "+inf"):
        return math.inf
    v = float(t)
    if not math.isfinite(v):
        raise ValueError(tok)
    return v


def _int(tok: str) -> int:
    return int(tok.strip())


_SCALAR, _LIST = False, True
CONFIG_KEYS = {
    "delta_ladder": (_real, _LIST),
    "mass": (_real, _SCALAR),
    "lambda_ladder": (_real, _LIST),
    "time_window": (_real, _SCALAR),
    "p": (_real, _LIST),
    "q": (_real, _LIST),
    "ring_size": (_int, _SCALAR),
    "seeds": (_int, _LIST),
    "state": (str.strip, _SCALAR),
    "width": (_real, _SCALAR),
    "carrier": (_real, _SCALAR),
}


def parse_config_text(text: str) -> SweepConfig:
    seen: dict[str, int] = {}
    vals: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigParseError(lineno, f"unknown key {key!r}")
        if key in seen:
            raise ConfigParseError(lineno, f"duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        conv, is_list = CONFIG_KEYS[key]
        toks = [t for t in value.split(",")] if is_list else [value]
        if is_list and value == "":
            toks = []
        try:
            items = [conv(t) for t in toks]
        except ValueError:
            raise ConfigParseError(lineno, f"bad value for {key}: {value!r}") from None
        if any(t.strip() == "" for t in toks):
            raise ConfigParseError(lineno, f"empty list entry for {key}")
        vals[key] = tuple(items) if is_list else items[0]

    ps = vals.pop("p", None)
    qs = vals.pop("q", None)
    if ps is not None:
        if qs is None:
            qs = tuple(solve_q(p) for p in ps)
        elif len(qs) != len(ps):
            raise ConfigParseError(seen["q"], "p and q lists differ in length")
        vals["pairs"] = tuple(zip(ps, qs))
    elif qs is not None:
        raise ConfigParseError(seen["q"], "q given without p")
    return SweepConfig(**vals)


def parse_config(path) -> SweepConfig:
    return parse_config_text(Path(path).read_text())


# -- run manifest ------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, (list, tuple)):
        return [_jsonable(e) for e in v]
    if isinstance(v, dict):
        return {k: _jsonable(e) for k, e in v.items()}
    return v


def manifest(command: str, config: dict, seeds) -> str:
    echo = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(f"{command}\n{echo}".encode()).hexdigest()
    started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return "".join(f"# {ln}\n" for ln in (
        f"tool=qwlab version={__version__} command={command}",
        f"config={echo}",
        f"seeds={json.dumps(list(seeds))}",
        f"started={started}",
        f"config_sha256={digest}",
    ))


def _emit(args, config: dict, seeds, body: str):
    text = manifest(args.command, config, seeds) + body
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _records(args, recs) -> str:
    return records_to_jsonl(recs) if args.json else records_to_csv(recs)


# -- subcommands -------------------------------------------------------------------

def _state(args, delta: float | None = None, seed: int | None = None):
    if args.input:
        return read_field(args.input)
    params = WalkParams(args.delta if delta is None else delta, args.mass)
    return make_state(args.state, params, args.sites, width=args.width, carrier=args.carrier,
                      seed=args.seed if seed is None else seed, radius=args.radius)


def _echo(args, *names) -> dict:
    base = ["delta", "mass", "sites", "state", "width", "carrier", "radius", "input", "json"]
    return {k: getattr(args, k) for k in base + list(names)}


def cmd_evolve(args) -> int:
    u = _state(args)
    v = spectral_evolve(u, args.t) if args.method == "spectral" else evolve(u, args.t)
    _emit(args, _echo(args, "t", "method"), [args.seed], v.to_text())
    return 0


def cmd_spectrum(args) -> int:
    params = WalkParams(args.delta, args.mass)
    table = symbol_table(params, args.sites)
    p2, p3 = locate_degeneracies(params)
    head = f"# pdprime_zeros={json.dumps(p2)}\n# ptprime_zeros={json.dumps(p3)}\n"
    if args.json:
        lines = table.splitlines()
        cols = lines[0].split(",")
        body = "".join(json.dumps({c: (int(v) if c == "k" else float(v))
                                   for c, v in zip(cols, ln.split(","))}) + "\n"
                       for ln in lines[1:])
    else:
        body = table
    _emit(args, {"delta": args.delta, "mass": args.mass, "sites": args.sites, "json": args.json},
          [], head + body)
    return 0


def cmd_lp(args) -> int:
    u = _state(args)
    if args.lam is not None:
        u = littlewood_paley(u, args.lam, companion=args.companion)
    if args.a or args.b:
        u = fractional_weight(u, args.a, args.b)
    _emit(args, _echo(args, "lam", "companion", "a", "b"), [args.seed], u.to_text())
    return 0


def cmd_decay(args) -> int:
    u = _state(args)
    d = u.delta
    kmax = int(math.floor(math.log2(args.tmax / d) + 1e-9))
    if kmax < 3:
        raise DomainError(f"tmax={args.tmax} is below 8 delta")
    times = dyadic_times(d, 3, kmax) if args.ladder == "dyadic" else \
        [k * d for k in range(8, 2**kmax + 1)]
    recs = decay_series(u, args.lam, times, seed=args.seed, method=args.method)
    slope, _, rms = decay_slope_fit(recs)
    body = _records(args, recs) + f"# slope={slope!r}\n# rms_residual={rms!r}\n"
    _emit(args, _echo(args, "lam", "tmax", "ladder", "method"), [args.seed], body)
    return 0


def _pair(p, q):
    return AdmissiblePair.from_p(p) if q is None else AdmissiblePair(p, q)


def cmd_strichartz(args) -> int:
    pair = _pair(args.p, args.q)
    recs = []
    if args.inhomogeneous:
        pt = _pair(args.pt, args.qt)
        for T in args.T:
            n = round(T / args.delta)
            slices = [_state(args, seed=args.seed + k) for k in range(n + 1)]
            f = SpaceTimeField.from_slices(slices)
            recs.append(inhomogeneous_ratio(f, pair, pt, T, weighted=args.weighted, seed=args.seed))
    else:
        u = _state(args)
        recs = [homogeneous_ratio(u, pair, T, seed=args.seed) for T in args.T]
    echo = _echo(args, "p", "q", "T", "inhomogeneous", "pt", "qt", "weighted")
    _emit(args, echo, [args.seed], _records(args, recs))
    return 0


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    recs = uniformity_sweep(cfg, jobs=args.jobs)
    echo = dict(cfg.to_dict(), json=args.json)
    _emit(args, echo, cfg.seeds, _records(args, recs))
    return 0


def cmd_selftest(args) -> int:
    from . import selftest

    return 0 if selftest.run(verbose=True) else EXIT_SELFTEST


# -- argument parsing --------------------------------------------------------------

def _ext_real(tok: str) -> float:
    try:
        return _real(tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a real number or inf: {tok!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="JSON-lines instead of CSV")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--delta", type=float, default=1.0)
    state.add_argument("--mass", type=float, default=1.0)
    state.add_argument("--sites", type=int, default=2**14)
    state.add_argument("--state", choices=["impulse", "gaussian", "random"], default=None,
                       help="initial state (default: impulse for decay, gaussian otherwise)")
    state.add_argument("--width", type=float, default=4.0)
    state.add_argument("--carrier", type=float, default=0.0)
    state.add_argument("--radius", type=int, default=None, help="support radius for random states")
    state.add_argument("--input", help="read the initial field from a field file")

    ap = argparse.ArgumentParser(prog="qwlab", description="Discrete-time quantum walk lab.")
    ap.add_argument("--version", action="version", version=f"qwlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", parents=[common, state], help="step a state and write the field")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--method", choices=["step", "spectral"], default="step")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("spectrum", parents=[common], help="export the symbol table")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--sites", type=int, default=256)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("lp", parents=[common, state], help="apply P_lambda and fractional weights")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--companion", action="store_true")
    p.add_argument("--a", type=float, default=0.0, help="exponent of |D|")
    p.add_argument("--b", type=float, default=0.0, help="exponent of <D>")
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("decay", parents=[common, state], help="dispersive decay ladder and slope")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--ladder", choices=["dyadic", "all"], default="dyadic")
    p.add_argument("--method", choices=["step", "spectral"], default="step")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("strichartz", parents=[common, state], help="Strichartz ratios")
    p.add_argument("--p", type=_ext_real, required=True)
    p.add_argument("--q", type=_ext_real, default=None, help="solved from p when omitted")
    p.add_argument("--T", type=float, nargs="+", default=[16.0])
    p.add_argument("--inhomogeneous", action="store_true")
    p.add_argument("--pt", type=_ext_real, default=math.inf)
    p.add_argument("--qt", type=_ext_real, default=None)
    p.add_argument("--weighted", action="store_true", help="delta-weighted Duhamel sum")
    p.set_defaults(func=cmd_strichartz)

    p = sub.add_parser("sweep", parents=[common], help="delta-uniformity sweep from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", parents=[common], help="run the oracle checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "state", "") is None:
        # parent-parser actions are shared, so per-command defaults are resolved here
        args.state = "impulse" if args.command == "decay" else "gaussian"
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"qwlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())
