"""Declarative parameter sweeps, figure presets and result writers.

A sweep names up to two axes over SystemParams fields (plus the derived
axes ``abs_delta_f`` and ``delta_m_ratio``) and one quantity to evaluate at
every node.  Nodes are independent; results are assembled in grid order
whatever the worker count, so output files are reproducible byte for byte
apart from the timestamp line.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from ._parallel import default_workers, parallel_map
from .dynamics import TRAJECTORY_COLUMNS, integrate, settle_many
from .errors import CavmagError, SweepSpecError
from .fluctuations import FLUCTUATION_COLUMNS, fluctuation_at
from .model import SystemParams, delta_a_tilde, is_valid
from .nonreciprocity import BOUNDARY_COLUMNS, MAP_COLUMNS, boundary_curves, isolation_point
from .stability import Phase, Protocol, classify_point
from .steady_state import Branch

__version__ = "0.1.0"

QUANTITIES = ("phase", "magnon_number", "fluctuation", "isolation", "dynamics-settle", "trajectory")
DERIVED_AXES = ("abs_delta_f", "delta_m_ratio")
STATUSES = ("ok", "invalid", "skipped")

PRESET_NAMES = ("fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c",
                "fig4a", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b")

SMALL_IC = 0.2 + 0.2j
LARGE_IC = 10 + 10j


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.name not in SystemParams.field_names() + DERIVED_AXES:
            raise SweepSpecError(f"unknown axis {self.name!r}")
        if int(self.count) != self.count or self.count < 2:
            raise SweepSpecError(f"axis {self.name!r} needs count >= 2, got {self.count}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise SweepSpecError(f"axis {self.name!r} bounds must be finite")

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, int(self.count))

    def as_dict(self) -> dict:
        return {"name": self.name, "min": self.min, "max": self.max, "count": int(self.count),
                "spacing": "linear"}


@dataclass(frozen=True)
class SweepSpec:
    """What to evaluate and where.

    ``initial_conditions`` are ``(a0, m0)`` pairs used by the dynamics
    quantities; ``t_end`` is the trajectory horizon.
    """

    base: SystemParams
    axes: tuple = ()
    quantity: str = "phase"
    protocol: Protocol = Protocol.SWEEP_UP
    seed: int = 0
    initial_conditions: tuple = ((SMALL_IC, SMALL_IC),)
    t_end: float = 100.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "initial_conditions",
                           tuple((complex(a), complex(m)) for a, m in self.initial_conditions))
        try:
            object.__setattr__(self, "protocol", Protocol(self.protocol))
        except ValueError:
            raise SweepSpecError(f"unknown protocol {self.protocol!r}") from None
        if self.quantity not in QUANTITIES:
            raise SweepSpecError(f"unknown quantity {self.quantity!r}")
        names = [ax.name for ax in self.axes]
        if len(set(names)) != len(names):
            raise SweepSpecError(f"repeated axis in {names}")
        if self.quantity == "trajectory":
            if self.axes:
                raise SweepSpecError("trajectory sweeps take no axes")
        elif not 1 <= len(self.axes) <= 2:
            raise SweepSpecError(f"{self.quantity} sweeps need 1 or 2 axes, got {len(self.axes)}")
        if "abs_delta_f" in names:
            if self.quantity != "isolation":
                raise SweepSpecError("abs_delta_f is only an axis of isolation sweeps")
            if "delta_f" in names:
                raise SweepSpecError("abs_delta_f and delta_f cannot both be swept")
        if "delta_m_ratio" in names and "delta_m" in names:
            raise SweepSpecError("delta_m_ratio and delta_m cannot both be swept")
        if self.quantity in ("dynamics-settle", "trajectory") and not self.initial_conditions:
            raise SweepSpecError("dynamics sweeps need at least one initial condition")
        if not self.t_end > 0:
            raise SweepSpecError("t_end must be positive")

    def grid(self) -> list[np.ndarray]:
        return [ax.values() for ax in self.axes]

    def nodes(self) -> list[dict]:
        """Axis assignments in grid order; the first axis varies slowest."""
        names = [ax.name for ax in self.axes]
        return [dict(zip(names, map(float, combo))) for combo in itertools.product(*self.grid())]

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "base": self.base.as_dict(),
            "axes": [ax.as_dict() for ax in self.axes],
            "quantity": self.quantity,
            "protocol": self.protocol.value,
            "seed": self.seed,
            "initial_conditions": [[_cplx(a), _cplx(m)] for a, m in self.initial_conditions],
            "t_end": self.t_end,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        return cls(
            base=SystemParams(**d["base"]),
            axes=tuple(Axis(a["name"], a["min"], a["max"], a["count"]) for a in d.get("axes", ())),
            quantity=d.get("quantity", "phase"),
            protocol=d.get("protocol", Protocol.SWEEP_UP.value),
            seed=int(d.get("seed", 0)),
            initial_conditions=tuple((_parse_cplx(a), _parse_cplx(m))
                                     for a, m in d.get("initial_conditions", ())),
            t_end=float(d.get("t_end", 100.0)),
            name=d.get("name", ""),
        )


def _cplx(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def _parse_cplx(s) -> complex:
    return complex(str(s).replace(" ", ""))


def node_params(base: SystemParams, node: dict) -> tuple[SystemParams, float | None]:
    """Parameters at a grid node, plus ``|delta_f|`` for isolation sweeps."""
    direct = {k: v for k, v in node.items() if k not in DERIVED_AXES}
    p = base.replace(**direct)
    if "delta_m_ratio" in node:
        p = p.replace(delta_m=node["delta_m_ratio"] * delta_a_tilde(p))
    abs_df = node.get("abs_delta_f")
    return p, abs_df


COLUMNS = {
    "phase": ("g_over_kappa", "delta_f_over_kappa", "delta_m_over_kappa", "delta_m_ratio",
              "phase", "n_plus"),
    "magnon_number": ("g_over_kappa", "delta_f_over_kappa", "delta_m_over_kappa", "branch",
                      "magnon_number", "photon_number"),
    "fluctuation": FLUCTUATION_COLUMNS,
    "isolation": MAP_COLUMNS,
    "trajectory": ("ic",) + TRAJECTORY_COLUMNS,
}


def columns_for(spec: SweepSpec) -> tuple:
    if spec.quantity == "dynamics-settle":
        settles = tuple(f"settle_ic{i}" for i in range(len(spec.initial_conditions)))
        return ("g_over_kappa", "delta_f_over_kappa", "delta_m_over_kappa") + settles + ("analytic_plus",)
    return COLUMNS[spec.quantity]


@dataclass
class SweepResult:
    spec: SweepSpec
    grid: list
    columns: tuple
    rows: list  # one tuple per node, trajectory samples for trajectories
    statuses: list
    notes: list
    provenance: dict
    extra: dict = field(default_factory=dict)

    def count(self, status: str) -> int:
        return sum(1 for s in self.statuses if s == status)


def _phase_node(p: SystemParams) -> tuple:
    pt = classify_point(p)
    plus = pt.branch(Branch.PLUS)
    n_plus = plus.magnon_number_scaled if plus is not None and plus.physical else math.nan
    ratio = p.delta_m / delta_a_tilde(p) if delta_a_tilde(p) != 0 else math.nan
    row = (p.drive_g, p.delta_f, p.delta_m, ratio, pt.phase.value, n_plus)
    status = "invalid" if pt.phase is Phase.INVALID else "ok"
    return row, status, pt.note


def _magnon_node(p: SystemParams, protocol: Protocol) -> tuple:
    nan = math.nan
    if not is_valid(p):
        return (p.drive_g, p.delta_f, p.delta_m, "", nan, nan), "invalid", "beyond drive bound"
    pt = classify_point(p)
    br = pt.occupied(protocol)
    if br is None:
        note = pt.note or "no stable branch"
        return (p.drive_g, p.delta_f, p.delta_m, "", nan, nan), "skipped", note
    return (p.drive_g, p.delta_f, p.delta_m, br.label.value, br.magnon_number_scaled,
            br.photon_number_scaled), "ok", ""


def _evaluate(args) -> tuple:
    quantity, base, node, protocol = args
    p, abs_df = node_params(base, node)
    try:
        if quantity == "phase":
            return _phase_node(p)
        if quantity == "magnon_number":
            return _magnon_node(p, protocol)
        if quantity == "fluctuation":
            fp = fluctuation_at(p, protocol)
            return fp.row(), fp.status, fp.note
        if quantity == "isolation":
            if abs_df is None:
                abs_df = abs(p.delta_f)
            ip = isolation_point(p, abs_df, p.drive_g, protocol)
            return ip.row(), ip.status, ip.note
    except CavmagError as exc:
        return None, "invalid", str(exc)
    raise SweepSpecError(f"quantity {quantity!r} is not node-wise")


def _settle_chunk(args) -> list:
    params, ics = args
    valid = [p for p in params if is_valid(p)]
    per_ic = [settle_many(valid, a0, m0) for a0, m0 in ics]
    out, k = [], 0
    for p in params:
        if not is_valid(p):
            out.append((None, "invalid", "beyond drive bound"))
            continue
        values, notes = [], []
        for res in per_ic:
            r = res[k]
            if isinstance(r, CavmagError):
                values.append(math.nan)
                notes.append(f"{type(r).__name__}: {r}")
            else:
                values.append(r.magnon_number)
        k += 1
        plus = classify_point(p).branch(Branch.PLUS)
        analytic = plus.magnon_number_scaled if plus is not None and plus.physical else math.nan
        status = "skipped" if notes else "ok"
        out.append(((p.drive_g, p.delta_f, p.delta_m, *values, analytic), status, "; ".join(notes)))
    return out


def _nan_row(n: int) -> tuple:
    return (math.nan,) * n


def run_sweep(spec: SweepSpec, workers: int | None = 1) -> SweepResult:
    """Evaluate ``spec`` at every grid node.

    Per-node failures become ``invalid`` or ``skipped`` statuses; only an
    inconsistent spec raises.
    """
    if workers is None:
        workers = default_workers()
    columns = columns_for(spec)
    provenance = {
        "package": "cavmag",
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "spec": spec.as_dict(),
    }
    if spec.quantity == "trajectory":
        return _run_trajectories(spec, columns, provenance)

    nodes = spec.nodes()
    if spec.quantity == "dynamics-settle":
        params = [node_params(spec.base, node)[0] for node in nodes]
        chunks = _split(params, max(1, workers))
        results = list(itertools.chain.from_iterable(
            parallel_map(_settle_chunk, [(c, spec.initial_conditions) for c in chunks], workers)))
    else:
        results = parallel_map(_evaluate, [(spec.quantity, spec.base, n, spec.protocol) for n in nodes],
                               workers)
    rows, statuses, notes = [], [], []
    for row, status, note in results:
        rows.append(row if row is not None else _nan_row(len(columns)))
        statuses.append(status)
        notes.append(note)
    extra = {}
    if spec.quantity == "isolation":
        dfs = next((ax.values() for ax in spec.axes if ax.name == "abs_delta_f"),
                   np.array([abs(spec.base.delta_f)]))
        extra["boundaries"] = boundary_curves(spec.base, dfs, spec.protocol)
    return SweepResult(spec, spec.grid(), columns, rows, statuses, notes, provenance, extra)


def _split(items: list, parts: int) -> list:
    size = max(1, math.ceil(len(items) / parts))
    return [items[i:i + size] for i in range(0, len(items), size)]


def _run_trajectories(spec: SweepSpec, columns, provenance) -> SweepResult:
    rows, statuses, notes = [], [], []
    for i, (a0, m0) in enumerate(spec.initial_conditions):
        try:
            traj = integrate(spec.base, a0, m0, spec.t_end)
        except CavmagError as exc:
            rows.append((i,) + _nan_row(len(columns) - 1))
            statuses.append("skipped")
            notes.append(str(exc))
            continue
        for r in traj.rows():
            rows.append((i,) + r)
        statuses.append("ok" if traj.converged else "skipped")
        notes.append("" if traj.converged else "not settled by t_end")
    return SweepResult(spec, [], columns, rows, statuses, notes, provenance)


# presets

def _fig_base(delta_f: float = 0.0, **kw) -> SystemParams:
    return SystemParams(gamma=1.0, coupling_j=2.5, delta_a=3.0, delta_f=delta_f, kappa=1.0, **kw)


FIG3_POINTS = {"fig3a": (1.7, 1.0), "fig3b": (2.3, 1.2), "fig3c": (2.3, 0.4)}
FIG3_ICS = ((2 + 1.5j, 2 - 1.5j), (0.05 + 0.05j, 0.05 - 0.05j))


def preset(name: str, points: int | None = None) -> SweepSpec:
    """Sweep recipes for the figures; ``points`` overrides the per-axis resolution."""
    if name not in PRESET_NAMES:
        raise SweepSpecError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    fig, panel = name[:4], name[4]
    n2 = points or 200
    n1 = points or 400
    if fig == "fig2":
        df = {"a": -0.3, "b": 0.0, "c": 0.3}[panel]
        return SweepSpec(_fig_base(df), (Axis("delta_m_ratio", 0.0, 2.0, n2), Axis("drive_g", 1.0, 3.0, n2)),
                         "phase", name=name)
    if fig == "fig3":
        g, ratio = FIG3_POINTS[name]
        base = _fig_base(0.0, drive_g=g, delta_m=ratio * 3.0)
        return SweepSpec(base, (), "trajectory", initial_conditions=FIG3_ICS, t_end=100.0, name=name)
    dm = 4.0 if panel == "a" else 2.2
    ic = SMALL_IC if panel == "a" else LARGE_IC
    curves = (Axis("delta_f", -0.3, 0.3, 3), Axis("drive_g", 1.5, 2.5, n1))
    if fig == "fig4":
        return SweepSpec(_fig_base(delta_m=dm), curves, "dynamics-settle",
                         initial_conditions=((ic, ic),), name=name)
    if fig == "fig6":
        return SweepSpec(_fig_base(delta_m=dm), curves, "fluctuation", name=name)
    return SweepSpec(_fig_base(delta_m=dm), (Axis("abs_delta_f", 0.0, 0.5, n2), Axis("drive_g", 1.5, 2.5, n2)),
                     "isolation", name=name)


# writers

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def provenance_lines(result: SweepResult) -> list[str]:
    prov = result.provenance
    return [
        f"# {prov['package']} {prov['version']}",
        f"# timestamp: {prov['timestamp']}",
        "# spec: " + json.dumps(prov["spec"], sort_keys=True),
    ]


def _csv_text(header_lines, columns, rows) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(line + "\r\n")
    w = csv.writer(buf)
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def to_csv(result: SweepResult, with_status: bool = True) -> str:
    """CSV text with ``#`` provenance lines above the header row."""
    columns = result.columns
    rows = result.rows
    if with_status and result.spec.quantity != "trajectory":
        columns = columns + ("status",)
        rows = [tuple(r) + (s,) for r, s in zip(rows, result.statuses)]
    return _csv_text(provenance_lines(result), columns, rows)


def boundaries_csv(result: SweepResult) -> str:
    return _csv_text(provenance_lines(result), BOUNDARY_COLUMNS, result.extra.get("boundaries", []))


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def to_json(result: SweepResult) -> str:
    """JSON document; non-finite numbers become null."""
    doc = {
        "provenance": result.provenance,
        "grid": [[float(v) for v in g] for g in result.grid],
        "columns": list(result.columns),
        "rows": [[_json_value(x) for x in row] for row in result.rows],
        "statuses": result.statuses,
        "notes": result.notes,
    }
    if "boundaries" in result.extra:
        doc["boundaries"] = [list(b) for b in result.extra["boundaries"]]
    return json.dumps(doc, indent=1)


def data_body(text: str) -> str:
    """Output text with the timestamp line removed, for reproducibility checks."""
    return "".join(line for line in text.splitlines(keepends=True)
                   if not line.startswith("# timestamp") and '"timestamp"' not in line)
