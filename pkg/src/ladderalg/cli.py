"""Command-line entry point: catalog, consistency, verify and spectrum.

Exit codes: 0 all pass, 2 constraint violation, 3 algebra failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import canonical_name, family_ids, get_family, parse_param_value
from .errors import ConstraintViolation, GridError, LadderError
from .expr import to_string
from .operators import Grid

EXIT_OK, EXIT_CONSTRAINT, EXIT_ALGEBRA, EXIT_USAGE = 0, 2, 3, 64
SPECTRUM_COLUMNS = ("n", "E_direct", "E_ladder", "J0_eig", "overlap", "annihilation_residual")
DEFAULT_SAMPLES = 4
VERIFY_KEYS = ("family", "status", "error", "pass", "grid", "K", "residuals", "enforced",
               "tolerance", "case", "xi", "sign", "expected_algebra", "closure_coefficient",
               "j0_hermiticity", "condition_number", "spectrum", "invariance", "seed", "notes")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    families: list[str]
    params: dict[str, complex] = field(default_factory=dict)
    grid: tuple[float | None, float | None, int | None] | None = None
    k: int | None = None
    out: Path | None = None
    formats: tuple[str, ...] = ("json",)
    seed: int = 0
    samples: int = DEFAULT_SAMPLES
    jobs: int = 1

    def params_for(self, fid: str) -> dict[str, complex]:
        used = set(get_family(fid).free_params)
        return {k: v for k, v in self.params.items() if k in used}

    def grid_for(self, fid: str) -> Grid | None:
        if self.grid is None:
            return None
        spec = get_family(fid)
        vals = spec.resolve_params(self.params_for(fid))
        lo0, hi0 = spec.domain_values(vals)
        lo, hi, n = self.grid
        return Grid(lo0 if lo is None else lo, hi0 if hi is None else hi, n or spec.n)


# ---------------------------------------------------------------------------
# serialization

def _plain(obj):
    """JSON-ready structure; complex -> [re, im], numpy scalars unwrapped."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return float(z.real) if z.imag == 0 else [float(z.real), float(z.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with floats printed to 17 significant digits."""
    def emit(o, level):
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {emit(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(emit(v, level) for v in o) + "]"
            return "[\n" + ",\n".join(inner + emit(v, level + 1) for v in o) + "\n" + pad + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _fmt_float(o)
        return json.dumps(o)

    return emit(_plain(obj), 0) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    v = _plain(v)
    if isinstance(v, list):
        return f"{_fmt_float(v[0])}{'+' if v[1] >= 0 else '-'}{_fmt_float(abs(v[1]))}j"
    if isinstance(v, float):
        return _fmt_float(v).strip('"')
    return str(v)


def spectrum_csv(rows: list[dict], trailer: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPECTRUM_COLUMNS)
    for row in rows:
        w.writerow([_csv_cell(row[c]) for c in SPECTRUM_COLUMNS])
    w.writerow([f"# {trailer}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# per-family work (runs in worker processes)

def _status(exc: BaseException) -> tuple[int, str]:
    if isinstance(exc, ConstraintViolation):
        return EXIT_CONSTRAINT, "constraint"
    return EXIT_ALGEBRA, "error"


def run_consistency(fid: str, cfg: RunConfig) -> tuple[int, dict]:
    from .consistency import audit_printed, check_consistency

    spec = get_family(fid)
    params = cfg.params_for(fid)
    try:
        res = check_consistency(spec, params)
    except LadderError as exc:
        code, status = _status(exc)
        return code, {"family": fid, "status": status, "error": f"{type(exc).__name__}: {exc}",
                      "pass": False, "equations": [], "printed_audit": []}
    ok = all(r.passed for r in res)
    return (EXIT_OK if ok else EXIT_ALGEBRA), {
        "family": fid,
        "status": "pass" if ok else "fail",
        "error": None,
        "pass": ok,
        "equations": [r.as_dict() for r in res],
        "printed_audit": [a.as_dict() for a in audit_printed(spec, params)],
    }


def run_verify(fid: str, cfg: RunConfig) -> tuple[int, dict]:
    from .algebra import RESIDUAL_KEYS, freedom_invariance, random_rescaling, verify_family
    from .families import instantiate

    try:
        real = instantiate(fid, cfg.params_for(fid), grid=cfg.grid_for(fid), k=cfg.k)
        rep = verify_family(real).as_dict()
        rng = np.random.default_rng([cfg.seed, sum(map(ord, fid))])
        shifts = rng.uniform(-3.0, 3.0, cfg.samples)
        rescalings = [random_rescaling(rng) for _ in range(cfg.samples)]
        rep["invariance"] = freedom_invariance(real, shifts, rescalings)
        rep["seed"] = cfg.seed
        rep["status"] = "pass" if rep["pass"] else "fail"
        rep["error"] = None
        return (EXIT_OK if rep["pass"] else EXIT_ALGEBRA), {k: rep[k] for k in VERIFY_KEYS}
    except LadderError as exc:
        code, status = _status(exc)
        msg = f"{type(exc).__name__}: {exc}"
        if type(exc).__name__ == "AlgebraNotRealizable":
            msg = f"algebra not realizable: {exc}"
        rep = dict.fromkeys(VERIFY_KEYS)
        rep.update({"family": fid, "residuals": {key: None for key in RESIDUAL_KEYS},
                    "enforced": {key: "not-applicable" for key in RESIDUAL_KEYS},
                    "spectrum": [], "pass": False, "notes": [], "seed": cfg.seed,
                    "status": status, "error": msg})
        rep["expected_algebra"] = get_family(fid).expected_algebra
        return code, rep


def run_spectrum(fid: str, cfg: RunConfig) -> tuple[int, dict]:
    from .families import instantiate
    from .spectra import compare

    try:
        real = instantiate(fid, cfg.params_for(fid), grid=cfg.grid_for(fid), k=cfg.k)
        cmp = compare(real)
    except LadderError as exc:
        code, status = _status(exc)
        return code, {"family": fid, "status": status, "error": f"{type(exc).__name__}: {exc}",
                      "rows": [], "trailer": f"error: {type(exc).__name__}: {exc}"}
    notes = list(cmp.notes)
    if cmp.stopped:
        notes.append(f"ladder stopped: {cmp.stopped}")
    trailer = "stopped=" + (cmp.stopped or "none") + "; notes=" + (" | ".join(notes) or "none")
    return EXIT_OK, {
        "family": fid,
        "status": "pass",
        "error": None,
        "rows": cmp.rows(),
        "j0_offset": cmp.j0_offset,
        "j0_step_deviation": cmp.j0_step_deviation,
        "tower": cmp.tower,
        "stopped": cmp.stopped,
        "notes": notes,
        "trailer": trailer,
    }


_RUNNERS = {"consistency": run_consistency, "verify": run_verify, "spectrum": run_spectrum}


def _work(args):
    command, fid, cfg = args
    return _RUNNERS[command](fid, cfg)


# ---------------------------------------------------------------------------
# argument handling

def _parse_param(text: str) -> tuple[str, complex]:
    if text.count("=") != 1:
        raise UsageError(f"--param expects name=value, got {text!r}")
    name, value = text.split("=")
    try:
        return canonical_name(name), parse_param_value(value)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad --param {text!r}: {exc}") from None


def _parse_grid(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--grid expects lo,hi,n (empty fields keep defaults), got {text!r}")
    try:
        lo = float(parts[0]) if parts[0].strip() else None
        hi = float(parts[1]) if parts[1].strip() else None
        n = int(parts[2]) if parts[2].strip() else None
    except ValueError:
        raise UsageError(f"cannot read --grid {text!r}") from None
    return lo, hi, n


def _select(families: list[str] | None, *, filtering: bool = False) -> list[str]:
    known = family_ids()
    if not families or "all" in families:
        return known
    out = []
    for item in families:
        for name in (s.strip() for s in item.split(",") if s.strip()):
            if name in known:
                hits = [name]
            elif filtering:
                hits = [f for f in known if name.lower() in f.lower()]
            else:
                hits = []
            if not hits:
                raise UsageError(f"unknown family {name!r}; known: {', '.join(known)}")
            out += [h for h in hits if h not in out]
    return out


def build_config(ns: argparse.Namespace) -> RunConfig:
    fams = _select(ns.family)
    params = dict(_parse_param(p) for p in ns.param or [])
    for name in params:
        if not any(name in get_family(f).free_params for f in fams):
            raise UsageError(f"parameter {name!r} is not used by {', '.join(fams)}")
    grid = _parse_grid(ns.grid) if ns.grid else None
    formats = tuple(dict.fromkeys(f.strip() for f in (ns.format or ns.default_format).split(",")))
    bad = [f for f in formats if f not in ("json", "csv")]
    if bad:
        raise UsageError(f"--format accepts json and csv, got {', '.join(bad)}")
    if ns.k is not None and ns.k < 1:
        raise UsageError("--k must be positive")
    cfg = RunConfig(families=fams, params=params, grid=grid, k=ns.k,
                    out=Path(ns.out) if ns.out else None, formats=formats, seed=ns.seed,
                    samples=ns.samples, jobs=max(1, ns.jobs or 1))
    for f in fams:                                   # grid invariants before any work
        try:
            cfg.grid_for(f)
        except GridError as exc:
            raise UsageError(f"--grid for {f}: {exc}") from None
    return cfg


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ladderalg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("catalog", help="list families")
    c.add_argument("--family", action="append", help="id or substring filter")

    def common(sp, default_format):
        sp.add_argument("--family", action="append", help="family id, comma list or 'all'")
        sp.add_argument("--param", action="append", metavar="NAME=VALUE",
                        help="parameter override (repeatable)")
        sp.add_argument("--grid", metavar="LO,HI,N", help="grid override")
        sp.add_argument("--k", type=int, help="checking subspace size K")
        sp.add_argument("--out", metavar="DIR", default="results",
                        help="output directory (default: results)")
        sp.add_argument("--format", help="json, csv or json,csv")
        sp.add_argument("--seed", type=int, default=0, help="seed for invariance sampling")
        sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                        help="random shifts/rescalings per family (verify)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.set_defaults(default_format=default_format)

    common(sub.add_parser("consistency", help="symbolic closure conditions"), "json")
    common(sub.add_parser("verify", help="algebra residual reports"), "json")
    common(sub.add_parser("spectrum", help="ladder spectra against direct eigenvalues"), "csv")
    return p


# ---------------------------------------------------------------------------
# commands

def cmd_catalog(families: list[str] | None, stream=None) -> int:
    stream = stream or sys.stdout
    for fid in _select(families, filtering=True):
        spec = get_family(fid)
        stream.write(f"{fid}: {spec.title}\n")
        for key in ("X", "Y", "V"):
            stream.write(f"    {key} = {to_string(spec.forms[key])}\n")
        stream.write(f"    constraints: {'; '.join(spec.constraints) or 'none'}\n")
        stream.write(f"    expected algebra: {spec.expected_algebra}\n")
    return EXIT_OK


def _write(cfg: RunConfig, name: str, text: str) -> None:
    if cfg.out is None:
        return
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / name).write_text(text)


def _summary_csv(reports: list[dict]) -> str:
    from .algebra import RESIDUAL_KEYS

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("family", "pass", "tolerance", *RESIDUAL_KEYS))
    for r in reports:
        w.writerow([r["family"], r["pass"], _csv_cell(r.get("tolerance")),
                    *(_csv_cell(r["residuals"].get(k)) for k in RESIDUAL_KEYS)])
    return buf.getvalue()


def run_command(command: str, cfg: RunConfig, stream=None) -> int:
    stream = stream or sys.stdout
    tasks = [(command, f, cfg) for f in cfg.families]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(tasks))) as pool:
            results = list(pool.map(_work, tasks))
    else:
        results = [_work(t) for t in tasks]
    codes = []
    for (code, rep), fid in zip(results, cfg.families):
        codes.append(code)
        if command == "spectrum":
            if "csv" in cfg.formats:
                _write(cfg, f"{fid}.spectrum.csv", spectrum_csv(rep["rows"], rep["trailer"]))
            if "json" in cfg.formats:
                _write(cfg, f"{fid}.spectrum.json", dumps(rep))
        elif "json" in cfg.formats:
            _write(cfg, f"{fid}.{command}.json", dumps(rep))
        line = f"{fid}: {rep['status']}"
        if rep.get("error"):
            line += f" ({rep['error']})"
        stream.write(line + "\n")
    if command == "verify" and "csv" in cfg.formats:
        _write(cfg, "verify_summary.csv", _summary_csv([r for _, r in results]))
    if EXIT_CONSTRAINT in codes:
        return EXIT_CONSTRAINT
    if any(c != EXIT_OK for c in codes):
        return EXIT_ALGEBRA
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if ns.command == "catalog":
            return cmd_catalog(ns.family)
        cfg = build_config(ns)
    except UsageError as exc:
        sys.stderr.write(f"ladderalg: {exc}\n")
        return EXIT_USAGE
    return run_command(ns.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
