"""Command-line workbench: ``cocyclebench <area> <action> [flags]``.

Every run is described by a manifest (group, representation, cocycle or
field, measure sequence, radii, tolerances).  Output tables start with a
comment header carrying the tool version and the manifest's sha256, so two
tables with the same header came from the same experiment.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__
from .averaging import almost_fixed_points, fixpoint_csv, met_csv, met_run, rigidity_counterexample
from .cocycles import parse_cocycle
from .errors import BudgetExceededError, CapExceededError, GrammarError, WorkbenchError
from .folner import ball_scan, folner_scan_csv, shalom_ball_subsequence, uniform_measure
from .groups import DEFAULT_BUDGET, DEFAULT_RADIUS_CAP, Group, parse_group
from .higson import (
    constant_field,
    harmonic_csv,
    harmonic_scan,
    higson_csv,
    higson_test,
    hp_partials,
    length_field,
    linear_field,
    pairing_field,
    square_field,
    step_field,
    uniform_step_measure,
)
from .hilbert import parse_rep, parse_vector

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2

COMMANDS = {
    "group": ("info",),
    "folner": ("scan",),
    "met": ("run",),
    "fixpoint": ("run",),
    "higson": ("classify",),
    "harmonic": ("test",),
    "rigidity": ("demo",),
}


@dataclass
class Manifest:
    command: str = ""
    group: str = "zd:1"
    rep: str | None = None
    cocycle: str | None = None
    field: str | None = None
    measures: str | None = None
    xi: str | None = None
    radius: int | None = None
    p: float | None = None
    K: float | None = None
    target: float | None = None
    budget: int | None = None
    format: str = "csv"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Manifest":
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise GrammarError(f"unknown manifest keys {sorted(extra)}", text, 0)
        return cls(**data)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def header(self) -> str:
        return f"# cocyclebench {__version__} manifest-sha256={self.sha256()}\n# manifest {self.to_json()}\n"


# --- measure-sequence grammar ----------------------------------------------------

def _int(text: str, whole: str, pos: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise GrammarError(f"expected an integer, got {text!r}", whole, pos) from None


def parse_measures(text: str) -> tuple[str, dict]:
    """Split a measure-sequence string into (kind, parameters) without touching a group.

    ``balls:<n_max>`` or ``balls:<a>..<b>``; ``shalom:<K>,<n_max>``;
    ``shifted:<n_max>@<element json>`` (balls g B(n)); ``list:<n1>,<n2>,...``.
    """
    kind, sep, body = text.strip().partition(":")
    if not sep:
        raise GrammarError("measure sequence needs '<kind>:<params>'", text, len(text))
    pos = len(kind) + 1
    if kind == "balls":
        if ".." in body:
            a, _, b = body.partition("..")
            radii = list(range(_int(a, text, pos), _int(b, text, pos + len(a) + 2) + 1))
        else:
            radii = list(range(1, _int(body, text, pos) + 1))
        if not radii or radii[0] < 0:
            raise GrammarError("empty or negative radius range", text, pos)
        return "balls", {"radii": radii}
    if kind == "shalom":
        parts = body.split(",")
        if len(parts) != 2:
            raise GrammarError("shalom needs '<K>,<n_max>'", text, pos)
        try:
            K = float(parts[0])
        except ValueError:
            raise GrammarError(f"bad K {parts[0]!r}", text, pos) from None
        return "shalom", {"K": K, "n_max": _int(parts[1], text, pos + len(parts[0]) + 1)}
    if kind == "shifted":
        n, at, g = body.partition("@")
        if not at:
            raise GrammarError("shifted needs '<n_max>@<element json>'", text, pos)
        try:
            shift = json.loads(g)
        except json.JSONDecodeError as exc:
            raise GrammarError(f"bad element: {exc.msg}", text, pos + len(n) + 1 + exc.pos) from None
        return "shifted", {"radii": list(range(1, _int(n, text, pos) + 1)), "shift": shift}
    if kind == "list":
        radii, off = [], pos
        for part in body.split(","):
            radii.append(_int(part, text, off))
            off += len(part) + 1
        return "balls", {"radii": radii}
    raise GrammarError(f"unknown measure kind {kind!r}; expected balls, shalom, shifted or list", text, 0)


def measures_radius(kind: str, params: dict) -> int:
    """Largest word length any set of the sequence reaches, before shifting."""
    if kind == "shalom":
        return params["n_max"]
    return max(params["radii"])


def build_sets(group: Group, kind: str, params: dict) -> list[tuple[int, frozenset]]:
    if kind == "shalom":
        radii = shalom_ball_subsequence(group, params["K"], params["n_max"])
        return [(n, frozenset(group.ball(n))) for n in radii]
    if kind == "shifted":
        g = group.element_from_json(params["shift"])
        return [(n, frozenset(g * h for h in group.ball(n))) for n in params["radii"]]
    return [(n, frozenset(group.ball(n))) for n in params["radii"]]


# --- field grammar -----------------------------------------------------------------

FIELD_TOKENS = ("constant:<c>", "step", "linear:<c1,...>", "square", "length", "pairing", "abs-pairing")


def parse_field(text: str, group: Group, rep: str | None = None, cocycle: str | None = None, xi: str | None = None):
    t = text.strip()
    if t.startswith("constant:"):
        try:
            return constant_field(group, float(t[9:]))
        except ValueError:
            raise GrammarError("bad constant", text, 9) from None
    if t.startswith("linear:"):
        try:
            return linear_field(group, [float(c) for c in t[7:].split(",")])
        except ValueError as exc:
            raise GrammarError(f"bad linear field: {exc}", text, 7) from None
    simple = {"step": step_field, "square": square_field, "length": length_field}
    if t in simple:
        try:
            return simple[t](group)
        except ValueError as exc:
            raise GrammarError(str(exc), text, 0) from None
    if t in ("pairing", "abs-pairing"):
        if not (rep and cocycle and xi):
            raise GrammarError("pairing fields need --rep, --cocycle and --xi", text, 0)
        pi = parse_rep(rep, group)
        b = parse_cocycle(cocycle, pi)
        return pairing_field(b, parse_vector(xi, group), absolute=t == "abs-pairing")
    raise GrammarError(f"unknown field token {t!r}; expected one of {', '.join(FIELD_TOKENS)}", text, 0)


# --- planning ---------------------------------------------------------------------------

def needed_radius(m: Manifest, group: Group) -> int:
    """Word-length radius a run touches: its sets or window plus neighbours."""
    r = m.radius or 0
    if m.measures:
        kind, params = parse_measures(m.measures)
        reach = measures_radius(kind, params)
        if kind == "shifted":
            reach += group.word_length(group.element_from_json(params["shift"]))
        r = max(r, reach)
    return r + 2


SHIFT_PROBE_CAP = 256


def make_group(m: Manifest) -> Group:
    # the probe only measures shift lengths; its budget guard still applies
    need = needed_radius(m, parse_group(m.group, radius_cap=SHIFT_PROBE_CAP, budget=m.budget))
    return parse_group(m.group, radius_cap=max(DEFAULT_RADIUS_CAP, need), budget=m.budget)


def validate(m: Manifest) -> list[str]:
    """Parse everything and project the ball size; never runs the experiment."""
    diags = []
    if m.command not in {f"{a} {b}" for a, bs in COMMANDS.items() for b in bs}:
        diags.append(f"unknown command {m.command!r}")
    try:
        group = parse_group(m.group, radius_cap=SHIFT_PROBE_CAP, budget=m.budget)
        if m.measures:
            parse_measures(m.measures)
        need = needed_radius(m, group)
        budget = m.budget or DEFAULT_BUDGET
        projected = group.projected_ball_size(need)
        if projected > budget:
            diags.append(f"radius {need} projects {projected} elements for {group.token}, over the budget {budget}")
        if m.rep:
            pi = parse_rep(m.rep, group)
            if m.xi:
                pi.check_vector(parse_vector(m.xi, group))
            if m.cocycle:
                parse_cocycle(m.cocycle, pi)
        if m.field:
            parse_field(m.field, group, m.rep, m.cocycle, m.xi)
    except (WorkbenchError, ValueError) as exc:
        diags.append(f"{type(exc).__name__}: {exc}")
    return diags


# --- commands ------------------------------------------------------------------------------

def _require(m: Manifest, *names: str) -> None:
    missing = [n for n in names if getattr(m, n) in (None, "")]
    if missing:
        raise GrammarError(f"{m.command} needs --{', --'.join(missing)}", m.command, 0)


def _table(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_group_info(m: Manifest) -> tuple[str, int]:
    _require(m, "radius")
    g = make_group(m)
    rows = [[n, g.ball_size(n), len(g.sphere(n))] for n in range(m.radius + 1)]
    return _table(["n", "ball_size", "sphere_size"], rows), EXIT_OK


def cmd_folner_scan(m: Manifest) -> tuple[str, int]:
    _require(m, "radius")
    g = make_group(m)
    return folner_scan_csv(ball_scan(g, m.radius), m.K), EXIT_OK


def _cocycle(m: Manifest, group: Group):
    _require(m, "rep", "cocycle")
    return parse_cocycle(m.cocycle, parse_rep(m.rep, group))


def cmd_met_run(m: Manifest, workers: int) -> tuple[str, int]:
    _require(m, "measures", "xi")
    group = make_group(m)
    b = _cocycle(m, group)
    sets = build_sets(group, *parse_measures(m.measures))
    rows = met_run(b, [(n, uniform_measure(F)) for n, F in sets], parse_vector(m.xi, group), workers)
    return met_csv(rows), EXIT_OK


def cmd_fixpoint_run(m: Manifest, workers: int) -> tuple[str, int]:
    _require(m, "measures", "target")
    group = make_group(m)
    b = _cocycle(m, group)
    sets = [F for _, F in build_sets(group, *parse_measures(m.measures))]
    if not sets:
        raise WorkbenchError("measure sequence produced no sets")
    search = almost_fixed_points(b, sets, m.target, K=m.K, workers=workers)
    return fixpoint_csv(search), EXIT_OK if search.reached else EXIT_PARTIAL


def cmd_higson_classify(m: Manifest) -> tuple[str, int]:
    _require(m, "field", "radius")
    group = make_group(m)
    f = parse_field(m.field, group, m.rep, m.cocycle, m.xi)
    profile = higson_test(f, range(m.radius + 1))
    partials = hp_partials(f, group, m.p if m.p is not None else 1.0, m.radius)
    return higson_csv(profile, partials), EXIT_OK


def cmd_harmonic_test(m: Manifest) -> tuple[str, int]:
    _require(m, "field", "radius")
    group = make_group(m)
    u = parse_field(m.field, group, m.rep, m.cocycle, m.xi)
    return harmonic_csv(harmonic_scan(u, uniform_step_measure(group), group, m.radius)), EXIT_OK


def cmd_rigidity_demo(m: Manifest) -> tuple[str, int]:
    """Step-function witness on Z: sets {0..k}, witnesses 2k."""
    _require(m, "radius")
    group = make_group(m)
    if group.token != "zd:1":
        raise WorkbenchError("the rigidity demo is defined on Z (zd:1)")
    ks = range(1, m.radius + 1)
    sets = [[group.el(i) for i in range(k + 1)] for k in ks]
    rows = rigidity_counterexample(step_field(group), 1.0, sets, witnesses=[group.el(2 * k) for k in ks])
    body = [[r.k, json.dumps(r.witness.to_json()), r.support_size, repr(r.integral), repr(r.reiter_defect)] for r in rows]
    return _table(["k", "witness", "support_size", "integral", "reiter_defect"], body), EXIT_OK


def run(m: Manifest, workers: int = 1) -> tuple[str, int]:
    """Run one experiment; returns (csv body, exit code)."""
    handlers = {
        "group info": lambda: cmd_group_info(m),
        "folner scan": lambda: cmd_folner_scan(m),
        "met run": lambda: cmd_met_run(m, workers),
        "fixpoint run": lambda: cmd_fixpoint_run(m, workers),
        "higson classify": lambda: cmd_higson_classify(m),
        "harmonic test": lambda: cmd_harmonic_test(m),
        "rigidity demo": lambda: cmd_rigidity_demo(m),
    }
    if m.command not in handlers:
        raise GrammarError(f"unknown command {m.command!r}", m.command, 0)
    return handlers[m.command]()


def render(m: Manifest, body: str) -> str:
    if m.format == "json":
        rows = list(csv.reader(io.StringIO(body)))
        doc = {
            "tool": "cocyclebench",
            "version": __version__,
            "manifest_sha256": m.sha256(),
            "manifest": json.loads(m.to_json()),
            "columns": rows[0],
            "rows": rows[1:],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    return m.header() + body


# --- argument parsing ----------------------------------------------------------------------

def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file with an [experiment] section; flags override it")
    p.add_argument("--manifest", type=Path, help="JSON manifest; flags override it")
    p.add_argument("--group")
    p.add_argument("--rep")
    p.add_argument("--cocycle")
    p.add_argument("--field")
    p.add_argument("--measures", help="balls:<n_max>|balls:<a>..<b>|shalom:<K>,<n_max>|shifted:<n_max>@<g>|list:<n1,...>")
    p.add_argument("--xi")
    p.add_argument("--radius", type=int)
    p.add_argument("--n", dest="radius", type=int, help="alias for --radius")
    p.add_argument("--p", type=float)
    p.add_argument("--K", type=float)
    p.add_argument("--target", type=float)
    p.add_argument("--budget", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", type=Path, help="directory for <area>_<action>.<format> and manifest.json")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cocyclebench", description=__doc__.splitlines()[0])
    areas = parser.add_subparsers(dest="area", required=True)
    for area, actions in COMMANDS.items():
        ap = areas.add_parser(area)
        sub = ap.add_subparsers(dest="action", required=True)
        for action in actions:
            _experiment_flags(sub.add_parser(action))
    vp = areas.add_parser("validate", help="dry-run parse and budget projection")
    vp.add_argument("command", nargs="*", help="command to validate, e.g. 'met run'")
    _experiment_flags(vp)
    return parser


_CONFIG_TYPES = {f.name: f.type for f in fields(Manifest)}


def _coerce(name: str, value: str):
    t = _CONFIG_TYPES[name]
    if "int" in t:
        return int(value)
    if "float" in t:
        return float(value)
    return value


def manifest_from_args(args: argparse.Namespace, command: str) -> Manifest:
    data = {}
    if args.manifest:
        data.update(json.loads(Manifest.from_json(args.manifest.read_text()).to_json()))
    if args.config:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read(args.config)
        if "experiment" not in cp:
            raise GrammarError("config needs an [experiment] section", str(args.config), 0)
        for key, value in cp["experiment"].items():
            if key not in _CONFIG_TYPES:
                raise GrammarError(f"unknown config key {key!r}", str(args.config), 0)
            data[key] = _coerce(key, value)
    for f in fields(Manifest):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            data[f.name] = v
    data["command"] = command or data.get("command", "")
    return Manifest(**data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.area == "validate":
            m = manifest_from_args(args, " ".join(args.command))
            diags = validate(m)
            for d in diags:
                print(d)
            return EXIT_ERROR if diags else EXIT_OK
        m = manifest_from_args(args, f"{args.area} {args.action}")
        body, code = run(m, args.workers)
    except (WorkbenchError, CapExceededError, BudgetExceededError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = render(m, body)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{args.area}_{args.action}.{m.format}").write_text(text)
        (args.out / "manifest.json").write_text(m.to_json())
    else:
        sys.stdout.write(text)
    if code == EXIT_PARTIAL:
        print("partial: target not reached", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
