"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical failure or a point in
the Invalid region.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import sweep as sw
from ._parallel import WORKERS_ENV
from .dynamics import TRAJECTORY_COLUMNS, integrate, settle_state
from .errors import CavmagError
from .fluctuations import fluctuation_at
from .model import SystemParams, drive_bound
from .stability import Phase, Protocol, classify_point
from .steady_state import critical_strengths

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

# flag name -> SystemParams field
PARAM_FLAGS = {
    "gamma": "gamma",
    "j": "coupling_j",
    "kerr": "kerr_k",
    "g": "drive_g",
    "delta_a": "delta_a",
    "delta_m": "delta_m",
    "delta_f": "delta_f",
}

# per-command options and their fallback values
OPTION_DEFAULTS = {
    "steady": {"protocol": "sweep-up"},
    "critical": {},
    "phase-diagram": {"g_min": 1.0, "g_max": 3.0, "g_count": 200,
                      "ratio_min": 0.0, "ratio_max": 2.0, "ratio_count": 200},
    "dynamics": {"a0": None, "m0": None, "t_end": 100.0, "stride": 1},
    "fluctuations": {"g_min": None, "g_max": None, "g_count": 400, "protocol": "sweep-up"},
    "isolation": {"df_min": 0.0, "df_max": 0.5, "df_count": 200,
                  "g_min": 1.5, "g_max": 2.5, "g_count": 200, "protocol": "sweep-up"},
    "preset": {"points": None},
}
AXIS_OPTIONS = {"g_min", "g_max", "g_count", "ratio_min", "ratio_max", "ratio_count",
                "df_min", "df_max", "df_count"}
COMMON_DEFAULTS = {"format": "csv", "workers": None, "kappa_mhz": None}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class CliConfig:
    command: str
    params: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"
    workers: int | None = None
    kappa_mhz: float | None = None
    preset: str | None = None

    def __post_init__(self):
        if self.preset is not None and any(self.options.get(k) is not None for k in AXIS_OPTIONS):
            raise UsageError("a preset and explicit axes are mutually exclusive")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            if not parent.is_dir():
                raise UsageError(f"output directory {parent} does not exist")

    def system_params(self) -> SystemParams:
        return SystemParams(**self.params)

    def to_toml(self) -> str:
        lines = [f"command = {_toml_value(self.command)}"]
        for key in ("preset", "out", "format", "workers", "kappa_mhz"):
            value = getattr(self, key)
            if value is not None:
                lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
        lines.append("[params]")
        for k, v in self.params.items():
            lines.append(f"{k} = {_toml_value(v)}")
        opts = {k: v for k, v in self.options.items() if v is not None}
        if opts:
            lines.append("")
            lines.append("[options]")
            for k, v in opts.items():
                lines.append(f"{k} = {_toml_value(v)}")
        return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return json.dumps(str(v))


def _workers(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return value


def _count(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("counts must be >= 2")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    grp = common.add_argument_group("system parameters (units of kappa)")
    grp.add_argument("--gamma", type=float, help="magnon damping rate (default 1)")
    grp.add_argument("--j", type=float, help="cavity-magnon coupling J (default 2.5)")
    grp.add_argument("--kerr", type=float, help="Kerr coefficient K; fixes units only (default 1)")
    grp.add_argument("--g", type=float, help="parametric drive G (default 0)")
    grp.add_argument("--delta-a", type=float, help="cavity detuning (default 3)")
    grp.add_argument("--delta-m", type=float, help="magnon detuning (default 4)")
    grp.add_argument("--delta-f", type=float, help="signed Fizeau shift (default 0)")
    grp.add_argument("--kappa-mhz", type=float, help="kappa in MHz, used only to label output")
    io = common.add_argument_group("input and output")
    io.add_argument("--config", metavar="FILE", help="TOML config; flags override its values")
    io.add_argument("--dump-config", metavar="FILE", help="write the effective config as TOML")
    io.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    io.add_argument("--format", choices=("csv", "json"), help="machine output format (default csv)")
    io.add_argument("--workers", type=_workers,
                    help=f"worker processes or 'auto' (default ${WORKERS_ENV}, else CPU count)")

    parser = _Parser(prog="cavmag",
                     description="Phases, dynamics, fluctuations and isolation of a parametrically "
                                 "driven cavity-magnon system in a spinning resonator.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def protocol_flag(p):
        p.add_argument("--protocol", choices=[x.value for x in Protocol],
                       help="branch occupied where both are stable (default sweep-up)")

    def g_range(p, count_default):
        p.add_argument("--g-min", type=float, help="lowest drive")
        p.add_argument("--g-max", type=float, help="highest drive")
        p.add_argument("--g-count", type=_count, help=f"number of drives (default {count_default})")

    s = sub.add_parser("steady", parents=[common], help="branches and stability at one point")
    protocol_flag(s)

    sub.add_parser("critical", parents=[common], help="critical drives and triple point")

    s = sub.add_parser("phase-diagram", parents=[common], help="phases over drive and detuning ratio")
    g_range(s, 200)
    s.add_argument("--ratio-min", type=float, help="lowest delta_m/delta_a_tilde (default 0)")
    s.add_argument("--ratio-max", type=float, help="highest delta_m/delta_a_tilde (default 2)")
    s.add_argument("--ratio-count", type=_count, help="number of ratios (default 200)")

    s = sub.add_parser("dynamics", parents=[common], help="integrate the mean-field equations")
    s.add_argument("--a0", help="initial photon amplitude, e.g. 2+1.5j (default: both canonical pairs)")
    s.add_argument("--m0", help="initial magnon amplitude (default: same as --a0)")
    s.add_argument("--t-end", type=float, help="integration time in 1/kappa (default 100)")
    s.add_argument("--stride", type=int, help="keep every n-th accepted step (default 1)")

    s = sub.add_parser("fluctuations", parents=[common], help="magnon fluctuation at one drive or a sweep")
    g_range(s, 400)
    protocol_flag(s)

    s = sub.add_parser("isolation", parents=[common], help="isolation map over |delta_f| and drive")
    g_range(s, 200)
    s.add_argument("--df-min", type=float, help="lowest |delta_f| (default 0)")
    s.add_argument("--df-max", type=float, help="highest |delta_f| (default 0.5)")
    s.add_argument("--df-count", type=_count, help="number of |delta_f| values (default 200)")
    protocol_flag(s)

    s = sub.add_parser("preset", parents=[common], help="run a figure recipe")
    s.add_argument("name", choices=sw.PRESET_NAMES, metavar="NAME",
                   help="one of " + ", ".join(sw.PRESET_NAMES))
    s.add_argument("--points", type=_count, help="override the per-axis resolution")
    return parser


def resolve_config(args: argparse.Namespace) -> CliConfig:
    """Merge a config file (if any) with explicit flags; flags win."""
    file_cfg: dict = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                file_cfg = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cmd = file_cfg.get("command")
        if cmd is not None and cmd != args.command:
            raise UsageError(f"config is for {cmd!r}, not {args.command!r}")

    params = SystemParams().as_dict()
    unknown = set(file_cfg.get("params", {})) - set(params)
    if unknown:
        raise UsageError(f"unknown parameters in config: {', '.join(sorted(unknown))}")
    params.update({k: float(v) for k, v in file_cfg.get("params", {}).items()})
    for flag, name in PARAM_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            params[name] = value

    defaults = OPTION_DEFAULTS[args.command]
    file_opts = file_cfg.get("options", {})
    unknown = set(file_opts) - set(defaults)
    if unknown:
        raise UsageError(f"unknown options in config: {', '.join(sorted(unknown))}")
    options = {}
    for key, fallback in defaults.items():
        value = getattr(args, key, None)
        options[key] = value if value is not None else file_opts.get(key, fallback)

    def pick(key):
        value = getattr(args, key, None)
        return value if value is not None else file_cfg.get(key, COMMON_DEFAULTS.get(key))

    preset = getattr(args, "name", None) if args.command == "preset" else None
    if preset is None and args.command == "preset":
        preset = file_cfg.get("preset")
    workers = pick("workers")
    return CliConfig(
        command=args.command,
        params=params,
        options=options,
        out=pick("out"),
        format=pick("format"),
        workers=None if workers in (None, "auto") else int(workers),
        kappa_mhz=pick("kappa_mhz"),
        preset=preset,
    )


def _emit(text: str, out: str | None, stream) -> None:
    if out is None:
        stream.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _sibling(out: str, suffix: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + suffix + p.suffix))


def _fmt4(x: float) -> str:
    return f"{x:.4f}"


def _label(x: float, kappa_mhz: float | None) -> str:
    s = f"{_fmt4(x)} kappa"
    if kappa_mhz is not None:
        s += f" ({x * kappa_mhz:.4g} MHz)"
    return s


def _cmd_critical(cfg: CliConfig, stdout) -> int:
    c = critical_strengths(cfg.system_params())
    stdout.write(f"Gc1 = {_fmt4(c.g_c1)}\n")
    stdout.write(f"Gc2 = {_fmt4(c.g_c2)}\n")
    stdout.write(f"regime = {c.regime.value}\n")
    stdout.write(f"triple point delta_m/delta_a_tilde = {_fmt4(c.triple_point_ratio)}\n")
    stdout.write(f"threshold = {_label(c.threshold, cfg.kappa_mhz)}\n")
    return EXIT_OK


def _cmd_steady(cfg: CliConfig, stdout, stderr) -> int:
    p = cfg.system_params()
    pt = classify_point(p)
    if pt.phase is Phase.INVALID:
        stderr.write(f"Invalid region: {pt.note}\n")
        return EXIT_NUMERICAL
    rows = []
    for br in pt.branches:
        spectrum = pt.branch_spectra.get(br.label)
        max_re = float(spectrum.real.max()) if spectrum is not None else math.nan
        rows.append({
            "branch": br.label.value,
            "magnon_number": br.magnon_number_scaled,
            "physical": br.physical,
            "stable": br.label in pt.stable_branches,
            "max_real_eigenvalue": max_re,
            "photon_number": br.photon_number_scaled if br.photon_number_scaled is not None else math.nan,
        })
    occupied = pt.occupied(Protocol(cfg.options["protocol"]))
    if cfg.out is None and cfg.format == "csv":
        stdout.write(f"phase = {pt.phase.value}\n")
        for r in rows:
            state = "stable" if r["stable"] else ("unstable" if r["physical"] else "unphysical")
            stdout.write(f"{r['branch']:>5}: n = {r['magnon_number']:.4g}  {state}\n")
        if occupied is not None:
            stdout.write(f"occupied ({cfg.options['protocol']}) = {occupied.label.value}\n")
        return EXIT_OK
    if cfg.format == "json":
        doc = {"phase": pt.phase.value, "params": p.as_dict(),
               "branches": [{k: sw._json_value(v) for k, v in r.items()} for r in rows]}
        _emit(json.dumps(doc, indent=1) + "\n", cfg.out, stdout)
    else:
        cols = list(rows[0])
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(sw._fmt(r[c]) for c in cols))
        _emit("\r\n".join(lines) + "\r\n", cfg.out, stdout)
    return EXIT_OK


def _run_and_write(spec: sw.SweepSpec, cfg: CliConfig, stdout, stderr) -> int:
    result = sw.run_sweep(spec, workers=cfg.workers)
    text = sw.to_json(result) if cfg.format == "json" else sw.to_csv(result)
    _emit(text, cfg.out, stdout)
    if "boundaries" in result.extra and cfg.format == "csv":
        if cfg.out is not None:
            _emit(sw.boundaries_csv(result), _sibling(cfg.out, "_boundaries"), stdout)
        else:
            stdout.write(sw.boundaries_csv(result))
    bad = result.count("invalid") + result.count("skipped")
    if bad:
        stderr.write(f"{bad} of {len(result.statuses)} points not evaluated "
                     f"({result.count('invalid')} invalid, {result.count('skipped')} skipped)\n")
    return EXIT_OK


def _g_axis(cfg: CliConfig, p: SystemParams) -> sw.Axis:
    o = cfg.options
    g_min = o["g_min"] if o["g_min"] is not None else 0.0
    g_max = o["g_max"] if o["g_max"] is not None else 0.999 * drive_bound(p)
    return sw.Axis("drive_g", g_min, g_max, o["g_count"])


def _cmd_fluctuations(cfg: CliConfig, stdout, stderr) -> int:
    p = cfg.system_params()
    o = cfg.options
    protocol = Protocol(o["protocol"])
    if o["g_min"] is None and o["g_max"] is None:
        fp = fluctuation_at(p, protocol)
        if fp.status != "ok":
            stderr.write(f"no fluctuation at G={p.drive_g:g}: {fp.status} ({fp.note})\n")
            return EXIT_NUMERICAL
        stdout.write(f"branch = {fp.branch}\nfluctuation = {fp.fluctuation:.4g}\n"
                     f"residual = {fp.residual:.2e}\n")
        return EXIT_OK
    spec = sw.SweepSpec(p, (_g_axis(cfg, p),), "fluctuation", protocol=protocol)
    return _run_and_write(spec, cfg, stdout, stderr)


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def _cmd_dynamics(cfg: CliConfig, stdout, stderr) -> int:
    p = cfg.system_params()
    o = cfg.options
    if o["stride"] < 1 or o["t_end"] <= 0:
        raise UsageError("--stride must be >= 1 and --t-end positive")
    if o["a0"] is None:
        if o["m0"] is not None:
            raise UsageError("--m0 needs --a0")
        ics = list(sw.FIG3_ICS)
    else:
        a0 = _parse_complex(o["a0"])
        ics = [(a0, _parse_complex(o["m0"]) if o["m0"] is not None else a0)]
    rows, status = [], EXIT_OK
    for i, (a0, m0) in enumerate(ics):
        try:
            traj = integrate(p, a0, m0, o["t_end"], stride=o["stride"])
            final = settle_state(p, traj.photon_amplitudes[-1], traj.magnon_amplitudes[-1])
        except CavmagError as exc:
            stderr.write(f"initial condition {i} ({a0}, {m0}): {type(exc).__name__}: {exc}\n")
            status = EXIT_NUMERICAL
            continue
        stderr.write(f"initial condition {i} ({a0}, {m0}): settles to n = {final.magnon_number:.4g}\n")
        rows.extend((i,) + r for r in traj.rows())
    if rows:
        if cfg.format == "json":
            doc = {"params": p.as_dict(), "columns": ["ic", *TRAJECTORY_COLUMNS],
                   "rows": [[sw._json_value(x) for x in r] for r in rows]}
            _emit(json.dumps(doc) + "\n", cfg.out, stdout)
        else:
            _emit(sw._csv_text([], ("ic",) + TRAJECTORY_COLUMNS, rows), cfg.out, stdout)
    return status


def run(cfg: CliConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    p = cfg.system_params()
    o = cfg.options
    if cfg.command == "critical":
        return _cmd_critical(cfg, stdout)
    if cfg.command == "steady":
        return _cmd_steady(cfg, stdout, stderr)
    if cfg.command == "dynamics":
        return _cmd_dynamics(cfg, stdout, stderr)
    if cfg.command == "fluctuations":
        return _cmd_fluctuations(cfg, stdout, stderr)
    if cfg.command == "phase-diagram":
        axes = (sw.Axis("delta_m_ratio", o["ratio_min"], o["ratio_max"], o["ratio_count"]),
                sw.Axis("drive_g", o["g_min"], o["g_max"], o["g_count"]))
        return _run_and_write(sw.SweepSpec(p, axes, "phase"), cfg, stdout, stderr)
    if cfg.command == "isolation":
        axes = (sw.Axis("abs_delta_f", o["df_min"], o["df_max"], o["df_count"]),
                sw.Axis("drive_g", o["g_min"], o["g_max"], o["g_count"]))
        spec = sw.SweepSpec(p, axes, "isolation", protocol=o["protocol"])
        return _run_and_write(spec, cfg, stdout, stderr)
    if cfg.command == "preset":
        spec = sw.preset(cfg.preset, o["points"])
        return _run_and_write(spec, cfg, stdout, stderr)
    raise UsageError(f"unknown command {cfg.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            Path(args.dump_config).write_text(cfg.to_toml(), encoding="utf-8")
        return run(cfg)
    except UsageError as exc:
        sys.stderr.write(f"cavmag: error: {exc}\n")
        return EXIT_USAGE
    except CavmagError as exc:
        if isinstance(exc, ValueError):
            # bad parameters or sweep specs are the caller's input
            sys.stderr.write(f"cavmag: error: {exc}\n")
            return EXIT_USAGE
        sys.stderr.write(f"cavmag: numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
