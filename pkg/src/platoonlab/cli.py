"""Command-line front-end: analyze, bounds, synthesize, nnir, simulate, table3.

Exit codes: 0 on success (or a robustly string stable verdict), 2 when the
verdict is Violated, 1 on any input or file error.
"""
from __future__ import annotations

import argparse
import configparser
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import check_accel_gain, h_min, synthesize_spec
from .errors import GainOutOfRangeError, PlatoonError
from .freqstab import CRITERIA, SweepConfig, robust_check
from .nnir import DEFAULT_TAU_SAMPLES, gain_axis, region_scan
from .sim import (
    Disturbance,
    PlatoonConfig,
    amplification_verdict,
    growth_ratio,
    simulate,
    table3_matrix,
)
from .tf import ARCHITECTURES, ONE_AND_RTH, PF, ControllerSpec, LagSpec

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATED = 2

COMMANDS = ("analyze", "bounds", "synthesize", "nnir", "simulate", "table3")

# recipe keys that hold file paths; everything else that is not a spec field is an option
OUTPUT_KEYS = ("out", "summary")
_SPEC_KEYS = {"arch": "arch", "r": "r", "kp": "k_p", "kv": "k_v", "ka": "k_a", "hw": "h_w", "tau0": "tau0"}


def fmt(x) -> str:
    return f"{float(x):.9g}"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class ExperimentRecipe:
    """One named experiment: which command to run and with what inputs.

    Spec fields that are not set stay ``None`` and are omitted from the file.
    Floats are written with ``repr`` so that reading back is exact.
    """

    name: str
    command: str
    arch: str | None = None
    r: int | None = None
    k_p: float | None = None
    k_v: float | None = None
    k_a: float | None = None
    h_w: float | None = None
    tau0: float | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    options: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"recipe {self.name!r}: unknown command {self.command!r}")

    def to_section(self) -> dict[str, str]:
        out = {"command": self.command}
        for key, attr in _SPEC_KEYS.items():
            val = getattr(self, attr)
            if val is not None:
                out[key] = val if isinstance(val, str) else repr(val)
        out.update(self.outputs)
        out.update(self.options)
        return out

    @classmethod
    def from_section(cls, name: str, section) -> ExperimentRecipe:
        items = dict(section)
        if "command" not in items:
            raise UsageError(f"recipe {name!r} has no 'command' key")
        kw = {"name": name, "command": items.pop("command"), "outputs": {}, "options": {}}
        try:
            for key, attr in _SPEC_KEYS.items():
                if key in items:
                    raw = items.pop(key)
                    kw[attr] = raw if key == "arch" else (int(raw) if key == "r" else float(raw))
        except ValueError as exc:
            raise UsageError(f"recipe {name!r}: {exc}") from None
        for key, raw in items.items():
            (kw["outputs"] if key in OUTPUT_KEYS else kw["options"])[key] = raw
        return cls(**kw)

    def flags(self) -> dict[str, str]:
        """Values keyed by CLI destination name."""
        sec = self.to_section()
        sec.pop("command")
        return {k.replace("-", "_"): v for k, v in sec.items()}


def dump_recipes(recipes) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    for rec in recipes:
        cp[rec.name] = rec.to_section()
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse_recipes(text: str) -> list[ExperimentRecipe]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(text)
    return [ExperimentRecipe.from_section(name, cp[name]) for name in cp.sections()]


def load_recipes(path) -> list[ExperimentRecipe]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    try:
        return parse_recipes(text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from None


def _select_recipe(recipes, name, command, path) -> ExperimentRecipe:
    if name is not None:
        for rec in recipes:
            if rec.name == name:
                if rec.command != command:
                    raise UsageError(f"recipe {name!r} in {path} is for '{rec.command}', not '{command}'")
                return rec
        raise UsageError(f"no recipe named {name!r} in {path}")
    for rec in recipes:
        if rec.command == command:
            return rec
    raise UsageError(f"no '{command}' recipe in {path}")


def _apply_config(parser, args):
    """Overwrite parsed flags with values from the selected recipe."""
    if args.config is None:
        return
    rec = _select_recipe(load_recipes(args.config), args.recipe, args.command, args.config)
    actions = {a.dest: a for a in parser._actions}
    for dest, raw in rec.flags().items():
        action = actions.get(dest)
        if action is None:
            raise UsageError(f"recipe {rec.name!r}: '{dest}' is not an option of '{args.command}'")
        try:
            if isinstance(action, argparse._StoreTrueAction):
                value = configparser.ConfigParser.BOOLEAN_STATES[raw.lower()]
            elif isinstance(action, argparse._AppendAction):
                value = [action.type(part) for part in raw.split(";") if part.strip()]
            else:
                value = (action.type or str)(raw)
        except (KeyError, TypeError, ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"recipe {rec.name!r}: bad value for '{dest}': {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"recipe {rec.name!r}: '{dest}' must be one of {list(action.choices)}")
        setattr(args, dest, value)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required value(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _number_list(text: str) -> list[float]:
    """``"0.25"``, ``"0,0.1,0.2"`` or ``"lo:hi:n"`` (inclusive, evenly spaced)."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return [float(v) for v in np.linspace(float(lo), float(hi), int(n))]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, a list a,b,c or a range lo:hi:n, got {text!r}")


def _axis(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(",")
        return float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected kp,kv, got {text!r}")


def _emit(text: str, path=None):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None


def _spec_from_args(args) -> ControllerSpec:
    r = 1 if args.arch == PF else args.r
    if args.arch == ONE_AND_RTH and r is None:
        raise UsageError("--r is required for one-and-rth")
    r = 1 if r is None else r
    check_accel_gain(args.arch, r, args.ka)
    return ControllerSpec.build(args.arch, r, args.kp, args.kv, args.ka, args.hw, args.d)


def cmd_analyze(args) -> int:
    _need(args, "kp", "kv", "hw", "tau0")
    spec = _spec_from_args(args)
    cfg = SweepConfig(points_per_decade=args.points_per_decade, tau_grid_points=args.tau_points)
    rep = robust_check(spec, args.tau0, cfg, args.criterion)
    lines = [
        f"arch: {spec.arch}",
        f"r: {spec.r}",
        f"criterion: {rep.criterion}",
        f"worst_value: {fmt(rep.worst_value)}",
        f"worst_omega: {fmt(rep.worst_omega)}",
        f"worst_tau: {fmt(rep.worst_tau)}",
    ]
    if args.tau0 > 0:
        lines.append(f"h_min: {fmt(h_min(spec.arch, spec.r, args.ka, args.tau0).h_min)}")
    lines.append(f"verdict: {rep.verdict}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        _emit(text, args.out)
    return EXIT_OK if rep.stable else EXIT_VIOLATED


def cmd_bounds(args) -> int:
    _need(args, "tau0")
    if any(v != int(v) or v < 1 for v in args.r):
        raise UsageError("--r values must be positive integers")
    rs = [int(v) for v in args.r]
    kas = args.ka
    tabular = len(rs) > 1 or len(kas) > 1 or args.out is not None
    rows = []
    for r in rs:
        for ka in kas:
            for arch in ARCHITECTURES:
                if (arch == PF and r != 1) or (arch == ONE_AND_RTH and r < 2):
                    continue
                try:
                    rows.append((arch, r, ka, h_min(arch, r, ka, args.tau0).h_min))
                except GainOutOfRangeError as exc:
                    rows.append((arch, r, ka, None, str(exc)))
    if not tabular:
        ok = [row for row in rows if row[3] is not None]
        if not ok:
            raise GainOutOfRangeError("; ".join(row[4] for row in rows))
        sys.stdout.write("".join(f"{row[0]}: {fmt(row[3])}\n" for row in ok))
        return EXIT_OK
    buf = io.StringIO()
    buf.write("arch,r,k_a,h_min\n")
    for arch, r, ka, val, *_ in rows:
        buf.write(f"{arch},{r},{fmt(ka)},{'' if val is None else fmt(val)}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    _need(args, "ka", "eta", "tau0")
    r = 1 if args.arch == PF else args.r
    if r is None:
        raise UsageError(f"--r is required for {args.arch}")
    spec = synthesize_spec(args.arch, r, args.ka, args.eta, args.tau0, args.d)
    tap = spec.taps[0]
    rep = robust_check(spec, args.tau0)
    lines = [
        f"arch: {spec.arch}",
        f"r: {spec.r}",
        f"k_p: {fmt(tap.k_p)}",
        f"k_v: {fmt(tap.k_v)}",
        f"k_a: {fmt(tap.k_a)}",
        f"h_w: {fmt(spec.h_w)}",
        f"check_{rep.criterion}: {fmt(rep.worst_value)}",
        f"verdict: {rep.verdict}",
    ]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        _emit(text, args.out)
    return EXIT_OK if rep.stable else EXIT_VIOLATED


def cmd_nnir(args) -> int:
    _need(args, "ka")
    hw = args.hw_scaled if args.hw_scaled is not None else 2.0 / (1.0 + args.ka)
    include_kp = [p[0] for p in args.include]
    include_kv = [p[1] for p in args.include]
    kp = gain_axis(*args.kp_range, log=not args.linear, include=include_kp)
    kv = gain_axis(*args.kv_range, log=not args.linear, include=include_kv)
    taus = np.linspace(0.0, 1.0, args.tau_samples) if args.tau_samples else DEFAULT_TAU_SAMPLES
    scan = region_scan(args.ka, hw, kp, kv, taus)
    _emit(scan.to_csv(), args.out)
    n_ok = int(scan.admissible.sum())
    msg = f"admissible: {n_ok} of {scan.admissible.size} (k_a = {fmt(args.ka)}, h_w = {fmt(hw)})\n"
    (sys.stderr if args.out is None else sys.stdout).write(msg)
    return EXIT_OK


def _disturbance(args) -> Disturbance:
    return Disturbance(args.amplitude, args.omega_d, args.t_on, args.t_off)


def cmd_simulate(args) -> int:
    _need(args, "kp", "kv", "hw")
    spec = _spec_from_args(args)
    tau = args.tau0 if args.tau is None else args.tau
    cfg = PlatoonConfig(
        n=args.n, spec=spec, lag=LagSpec(tau, max(tau, args.tau0)), v_r=args.vr,
        disturbance=_disturbance(args), dt=args.dt, t_end=args.t_end,
    )
    res = simulate(cfg)
    if args.out:
        every = max(args.every, 1)
        idx = np.arange(0, res.t.size, every)
        if idx[-1] != res.t.size - 1:
            idx = np.append(idx, res.t.size - 1)
        sub = type(res)(res.t[idx], res.x[idx], res.v[idx], res.a[idx], res.u[idx], res.e[idx])
        _emit(sub.to_csv(), args.out)
    peaks = res.peak_abs_error
    lines = ["vehicle,peak_abs_error"]
    lines += [f"{i},{fmt(peaks[i])}" for i in range(1, cfg.n)]
    lines.append(f"growth_ratio: {fmt(growth_ratio(res))}")
    lines.append(f"verdict: {amplification_verdict(res)}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.summary:
        _emit(text, args.summary)
    return EXIT_OK


def cmd_table3(args) -> int:
    kw = dict(dt=args.dt, t_end=args.t_end, disturbance=_disturbance(args))
    matrix = table3_matrix(**kw)
    header = "r,k_a,h_min,h_w_a,verdict_a,growth_a,h_w_b,verdict_b,growth_b"
    rows = []
    for row, res_a, res_b in matrix:
        rows.append(",".join([
            str(row.r), fmt(row.k_a), fmt(row.h_min),
            fmt(row.h_a), amplification_verdict(res_a), fmt(growth_ratio(res_a)),
            fmt(row.h_b), amplification_verdict(res_b), fmt(growth_ratio(res_b)),
        ]))
    text = "\n".join([header] + rows) + "\n"
    _emit(text, args.out)
    if args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", help="INI file with one section per recipe; its values override flags")
    p.add_argument("--recipe", help="section to use (default: first recipe for this command)")
    p.add_argument("--out", help="output file")


def _add_spec(p):
    p.add_argument("--arch", choices=ARCHITECTURES, default=PF)
    p.add_argument("--r", type=int, default=None, help="look-ahead depth (ignored for pf)")
    p.add_argument("--kp", type=float)
    p.add_argument("--kv", type=float)
    p.add_argument("--ka", type=float, default=0.0)
    p.add_argument("--hw", type=float, help="time headway (s)")
    p.add_argument("--d", type=float, default=5.0, help="standstill distance (m)")


def _add_disturbance(p):
    p.add_argument("--amplitude", type=float, default=2.0, help="lead acceleration amplitude (m/s^2)")
    p.add_argument("--omega-d", type=float, default=1.0, help="disturbance frequency (rad/s)")
    p.add_argument("--t-on", type=float, default=5.0)
    p.add_argument("--t-off", type=float, default=None, help="default: 10, or t_end if smaller")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=40.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="platoonlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("analyze", help="robust string stability verdict over tau in [0, tau0]")
    _add_spec(p)
    _add_common(p)
    p.add_argument("--tau0", type=float)
    p.add_argument("--criterion", choices=CRITERIA, default=None)
    p.add_argument("--points-per-decade", type=int, default=200)
    p.add_argument("--tau-points", type=int, default=33)

    p = sub.add_parser("bounds", help="minimum employable time headway per architecture")
    _add_common(p)
    p.add_argument("--tau0", type=float)
    p.add_argument("--r", type=_number_list, default=[1.0], help="value, list a,b or range lo:hi:n")
    p.add_argument("--ka", type=_number_list, default=[0.0], help="value, list a,b or range lo:hi:n")

    p = sub.add_parser("synthesize", help="equal gains meeting the headway bound with margin eta")
    _add_common(p)
    p.add_argument("--arch", choices=ARCHITECTURES, default=PF)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--ka", type=float)
    p.add_argument("--eta", type=float, help="relative headway margin above the bound (required)")
    p.add_argument("--tau0", type=float)
    p.add_argument("--d", type=float, default=5.0)

    p = sub.add_parser("nnir", help="scan scaled gains for a non-negative impulse response")
    _add_common(p)
    p.add_argument("--ka", type=float)
    p.add_argument("--hw-scaled", type=float, default=None, help="scaled headway (default 2/(1+ka))")
    p.add_argument("--kp-range", type=_axis, default=(1e-4, 1e-2, 25), help="lo:hi:n")
    p.add_argument("--kv-range", type=_axis, default=(1e-2, 1.0, 25), help="lo:hi:n")
    p.add_argument("--linear", action="store_true", help="linear instead of log spacing")
    p.add_argument("--include", type=_pair, action="append", default=[], help="extra grid point kp,kv")
    p.add_argument("--tau-samples", type=int, default=21)

    p = sub.add_parser("simulate", help="simulate a platoon and write trajectories")
    _add_spec(p)
    _add_common(p)
    _add_disturbance(p)
    p.add_argument("--tau0", type=float, default=0.5, help="lag bound (s)")
    p.add_argument("--tau", type=float, default=None, help="actual lag (default tau0)")
    p.add_argument("--n", type=int, default=15)
    p.add_argument("--vr", type=float, default=20.0)
    p.add_argument("--every", type=int, default=10, help="write every k-th step to the CSV")
    p.add_argument("--summary", help="also write the summary here")

    p = sub.add_parser("table3", help="verdict matrix of the reference experiments")
    _add_common(p)
    _add_disturbance(p)
    return parser


_HANDLERS = {
    "analyze": cmd_analyze,
    "bounds": cmd_bounds,
    "synthesize": cmd_synthesize,
    "nnir": cmd_nnir,
    "simulate": cmd_simulate,
    "table3": cmd_table3,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        _apply_config(sub, args)
        if getattr(args, "t_off", "unset") is None:
            args.t_off = min(10.0, args.t_end)
        return _HANDLERS[args.command](args)
    except GainOutOfRangeError as exc:
        print(f"platoonlab: GainOutOfRange: {exc}", file=sys.stderr)
    except (UsageError, PlatoonError, ValueError) as exc:
        print(f"platoonlab: error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
