"""Command-line entry point: ``flagdepth {depth,field,regions,reconstruct,verify}``.

Exit codes: 0 success, 1 a verification failed, 2 bad usage or bad measure spec.
Every input is parsed and checked before anything is written.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import depth as _depth
from . import oracle as _oracle
from . import reconstruct as _rec
from . import regions as _regions
from .measure import (
    Measure,
    MeasureError,
    axis_cauchy,
    cauchy_with_center_atom,
    disk_with_atom,
    load_measure,
    spec_hash,
    to_fraction,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(v) -> str:
    """12 significant digits; exact rationals also as ``p/q``."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{float(v):.12g} ({v.numerator}/{v.denominator})"
    return f"{float(v):.12g}"


def _num(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(v)


# --------------------------------------------------------------------------
# argument parsing


def _parse_bbox(s: str):
    try:
        vals = [float(v) for v in s.split(",")]
    except ValueError:
        raise UsageError(f"--bbox expects x0,y0,x1,y1, got {s!r}") from None
    if len(vals) != 4 or not all(map(math.isfinite, vals)):
        raise UsageError(f"--bbox expects four finite numbers, got {s!r}")
    if not (vals[2] > vals[0] and vals[3] > vals[1]):
        raise UsageError(f"--bbox is degenerate: {s!r}")
    return tuple(vals)


def _parse_resolution(s: str):
    parts = s.lower().split("x")
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError:
        raise UsageError(f"--resolution expects NxM, got {s!r}") from None
    if nx < 2 or ny < 2:
        raise UsageError("--resolution must be at least 2x2")
    return nx, ny


def _parse_levels(s: str):
    try:
        levels = [to_fraction(v.strip()) for v in s.split(",") if v.strip()]
    except MeasureError as exc:
        raise UsageError(f"--levels: {exc}") from None
    if not levels or any(a <= 0 for a in levels):
        raise UsageError("--levels needs positive values")
    return levels


@dataclass
class RunConfig:
    command: str
    spec: Path | None = None
    bbox: tuple | None = None
    resolution: tuple = (61, 61)
    levels: list = field(default_factory=list)
    tol: float = 1e-6
    seed: int = 0
    out: Path | None = None
    format: str = "json"
    threads: int = 1
    directions: int = _regions.DEFAULT_DIRECTIONS
    delta: Fraction = Fraction(1, 10)
    points: list = field(default_factory=list)
    target: str | None = None
    mode: str = "auto"

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        cfg = cls(ns.command)
        if getattr(ns, "spec", None):
            cfg.spec = Path(ns.spec)
            if not cfg.spec.is_file():
                raise UsageError(f"spec file not found: {cfg.spec}")
        if getattr(ns, "bbox", None):
            cfg.bbox = _parse_bbox(ns.bbox)
        if getattr(ns, "resolution", None):
            cfg.resolution = _parse_resolution(ns.resolution)
        if getattr(ns, "levels", None):
            cfg.levels = _parse_levels(ns.levels)
        cfg.tol = ns.tol
        if not (cfg.tol > 0 and math.isfinite(cfg.tol)):
            raise UsageError("--tol must be positive")
        cfg.seed = ns.seed
        cfg.out = Path(ns.out) if ns.out else None
        cfg.format = ns.format
        cfg.threads = ns.threads
        if cfg.threads < 1:
            raise UsageError("--threads must be at least 1")
        cfg.directions = getattr(ns, "directions", cfg.directions)
        if cfg.directions < 8:
            raise UsageError("--directions must be at least 8")
        try:
            cfg.delta = to_fraction(ns.delta)
        except MeasureError as exc:
            raise UsageError(f"--delta: {exc}") from None
        if cfg.delta <= 0:
            raise UsageError("--delta must be positive")
        if getattr(ns, "point", None) is not None:
            coords = ns.point
            if len(coords) % 2:
                raise UsageError("points are given as pairs of coordinates")
            try:
                vals = [to_fraction(c) for c in coords]
            except MeasureError as exc:
                raise UsageError(str(exc)) from None
            cfg.points = [(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]
        cfg.target = getattr(ns, "target", None)
        cfg.mode = getattr(ns, "mode", "auto")
        return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-6, help="numerical tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--threads", type=int, default=1, help="worker cap")
    common.add_argument("--delta", default="1/10", help="atom mass for the disk example")

    p = argparse.ArgumentParser(prog="flagdepth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"flagdepth {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("depth", parents=[common], help="depth at query points")
    d.add_argument("--spec", required=True)
    d.add_argument("point", nargs="+", help="coordinates x1 y1 x2 y2 ...")

    f = sub.add_parser("field", parents=[common], help="depth on a regular grid")
    f.add_argument("--spec", required=True)
    f.add_argument("--bbox")
    f.add_argument("--resolution", default="61x61")

    r = sub.add_parser("regions", parents=[common], help="central regions at given levels")
    r.add_argument("--spec", required=True)
    r.add_argument("--levels", required=True)
    r.add_argument("--bbox")
    r.add_argument("--directions", type=int, default=_regions.DEFAULT_DIRECTIONS)

    c = sub.add_parser("reconstruct", parents=[common], help="recover atoms from depth alone")
    c.add_argument("--spec", required=True)
    c.add_argument("--bbox")
    c.add_argument("--levels", help="level grid for corner detection")
    c.add_argument("--directions", type=int, default=_regions.DEFAULT_DIRECTIONS)
    c.add_argument("--mode", choices=("auto", "atomic", "detect"), default="auto")

    v = sub.add_parser("verify", parents=[common], help="scripted checks")
    v.add_argument("target", choices=("example1", "example2", "properties"))
    return p


# --------------------------------------------------------------------------
# output helpers


def _header(m: Measure | None, cfg: RunConfig) -> dict:
    h = {"tool": "flagdepth", "version": __version__, "command": cfg.command, "seed": cfg.seed}
    if m is not None:
        h["spec_hash"] = spec_hash(m)
    return h


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(cfg: RunConfig) -> Path | None:
    if cfg.out is None:
        return None
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _load(cfg: RunConfig) -> Measure:
    m = load_measure(cfg.spec)
    if not m.components:
        raise MeasureError("spec has no components")
    return m


# --------------------------------------------------------------------------
# commands


def cmd_depth(cfg: RunConfig) -> int:
    m = _load(cfg)
    rows = []
    for x in cfg.points:
        dv = _depth.depth(m, x)
        w = dv.witness
        rows.append({"point": [_num(c) for c in x],
                     "depth": _num(dv.exact) if dv.exact is not None else float(dv),
                     "exact": dv.exact is not None, "attained": dv.attained,
                     "normal": None if w is None else [_num(c) for c in w.plane_normal],
                     "ray": None if w is None else [_num(c) for c in w.ray_direction]})
    if cfg.format == "json":
        print(json.dumps({**_header(m, cfg), "results": rows}, indent=2, sort_keys=True))
    else:
        print("x,y,depth,exact,attained,normal_x,normal_y")
        for x, r in zip(cfg.points, rows):
            v = Fraction(r["depth"]) if r["exact"] else r["depth"]
            n = r["normal"] or ["", ""]
            print(",".join([fmt(x[0]), fmt(x[1]), fmt(v), str(r["exact"]).lower(),
                            str(r["attained"]).lower(), str(n[0]), str(n[1])]))
    return EXIT_OK


def _field(m: Measure, bbox, resolution, threads: int) -> np.ndarray:
    pts = _oracle.grid_points(bbox, resolution)
    chunks = np.array_split(pts, max(1, threads))
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda c: _depth.depth_many(m, c), chunks))
    return np.concatenate(parts).reshape(resolution[1], resolution[0])


def cmd_field(cfg: RunConfig) -> int:
    m = _load(cfg)
    bbox = cfg.bbox or _regions.default_bbox(m)
    if cfg.out is None:
        raise UsageError("field needs --out")
    values = _field(m, bbox, cfg.resolution, cfg.threads)
    fld = _oracle.DepthField(tuple(map(float, bbox)), cfg.resolution, values, _header(m, cfg))
    out = _out_dir(cfg)
    if cfg.format == "csv":
        fld.to_csv(out / "field.csv")
        _write_json(out / "field.json", fld.sidecar())
    else:
        _write_json(out / "field.json", {**fld.sidecar(),
                                         "values": [[float(f"{v:.12g}") for v in row]
                                                    for row in values]})
    print(f"wrote {cfg.resolution[0]}x{cfg.resolution[1]} field to {out}")
    return EXIT_OK


def _region(m: Measure, level, cfg: RunConfig, bbox):
    if m.is_atomic:
        return _regions.central_region_atomic(m, level)
    return _regions.central_region_mixture(m, float(level), eps=cfg.tol,
                                           n_directions=cfg.directions, bbox=bbox)


def cmd_regions(cfg: RunConfig) -> int:
    m = _load(cfg)
    bbox = cfg.bbox or _regions.default_bbox(m)
    regions = [_region(m, a, cfg, bbox) for a in cfg.levels]
    out = _out_dir(cfg)
    head = _header(m, cfg)
    summary = []
    for k, (a, r) in enumerate(zip(cfg.levels, regions)):
        js = _regions.region_to_json(r)
        if isinstance(r, _regions.EmptyRegion):
            print(f"level {fmt(a)}: empty ({r.diagnostic})")
        else:
            print(f"level {fmt(a)}: {js['kind']} with {len(js['vertices'])} vertices")
        summary.append(js)
        if out is not None and not isinstance(r, _regions.EmptyRegion) and cfg.format == "csv":
            lines = [f"{key}={val}" for key, val in sorted(head.items())] + [f"level={_num(a)}"]
            _regions.region_to_csv(r, out / f"region_{k:03d}.csv", lines)
    if out is not None:
        _write_json(out / "regions.json", {**head, "regions": summary})
    return EXIT_OK


def cmd_reconstruct(cfg: RunConfig) -> int:
    m = _load(cfg)
    oracle = _rec.DepthOracle.from_measure(m, cfg.bbox)
    mode = cfg.mode
    if mode == "auto":
        mode = "atomic" if m.is_atomic else "detect"
    if mode == "atomic":
        if not m.is_atomic:
            raise UsageError("atomic reconstruction needs an atomic spec")
        m_hat, report = _rec.reconstruct_finite_atomic(oracle)
    else:
        levels = [float(a) for a in cfg.levels] or None
        result = _rec.detect_atoms(oracle, levels=levels, n_directions=cfg.directions)
        support = None
        if cfg.out is not None:
            picks = result.levels[:: max(1, len(result.levels) // 6)]
            support = _rec.support_report(oracle, picks, n_directions=cfg.directions)
        report = _rec.detection_report(result, support)
    out = _out_dir(cfg)
    js = {**_header(m, cfg), "mode": mode, **report.to_json()}
    if out is not None and mode == "detect" and support is not None:
        refs = []
        for k, (a, c) in enumerate(zip(support.levels, support.contours)):
            name = f"contour_{k:03d}.csv"
            np.savetxt(out / name, c, delimiter=",", fmt="%.12g", header=f"level={a:.12g}")
            refs.append({"level": float(a), "path": name})
        js["contours"] = refs
    if out is not None:
        _write_json(out / "report.json", js)
    for c in report.candidates:
        print(f"atom at ({fmt(c.location[0])}, {fmt(c.location[1])}) mass {fmt(c.mass_estimate)}")
    for c in report.undecidable:
        print(f"undecidable at ({fmt(c.location[0])}, {fmt(c.location[1])}): {c.note}")
    print(f"verdict {report.verdict}")
    return EXIT_OK if report.verdict == "PASS" else EXIT_FAIL


# --------------------------------------------------------------------------
# verification


def verify_example2(grid: int = 61, tol: float = 1e-6) -> list[tuple[str, bool, str]]:
    """Both measures of the Cauchy example against the closed form."""
    mu, nu = cauchy_with_center_atom(2), axis_cauchy(2)
    pts = _oracle.grid_points((-3, -3, 3, 3), (grid, grid))
    ref = _depth.depth_cauchy_closed_form_np(pts, 2)
    out = []
    for name, m in (("mu", mu), ("nu", nu)):
        err = float(np.max(np.abs(_depth.depth_many(m, pts) - ref)))
        out.append((f"{name} matches closed form", err <= tol, f"max error {err:.3g}"))
    origin = _depth.depth(mu, (0, 0))
    out.append(("depth of mu at origin is 1/2", float(origin) == 0.5, f"got {fmt(float(origin))}"))
    return out


def verify_example1(delta=Fraction(1, 10), tol: float = 1e-3) -> list[tuple[str, bool, str]]:
    """The disk-plus-atom example: exactly one atom at (1, 1) with mass ``delta``."""
    oracle = _rec.DepthOracle.from_measure(disk_with_atom(delta))
    res = _rec.detect_atoms(oracle)
    out = [("exactly one atom candidate", len(res.candidates) == 1,
            f"{len(res.candidates)} candidates")]
    if len(res.candidates) == 1:
        c = res.candidates[0]
        err = math.hypot(c.location[0] - 1, c.location[1] - 1)
        out.append(("candidate at (1, 1)", err <= tol, f"location error {err:.3g}"))
        merr = abs(float(c.mass_estimate) - float(delta))
        out.append(("mass equals delta", merr <= tol, f"mass error {merr:.3g}"))
    return out


def verify_properties(seed: int = 0, n_instances: int = 20) -> list[tuple[str, bool, str]]:
    """Exact checks on random atomic instances."""
    rng = np.random.default_rng(seed)
    agree, ineq, incid, rt = [], [], [], []
    for _ in range(n_instances):
        m = _oracle.random_atomic_measure(rng, n_max=8)
        atoms = m.atoms()
        for _ in range(5):
            x = tuple(Fraction(int(v), 2) for v in rng.integers(-12, 13, size=2))
            a = _oracle.brute_force_depth_atomic(m, x)
            agree.append(a == _depth.depth_atomic_value(m, x) == _depth.depth_flag(m, x).exact)
        for x, w in atoms.items():
            alpha = _depth.depth_atomic_value(m, x)
            beta = alpha - w / 2
            if beta > 0:
                r = _regions.central_region_atomic(m, beta)
                incid.append(isinstance(r, _regions.Polygon) and x in r.vertices)
            for z in list(atoms)[:4]:
                if _depth.depth_atomic_value(m, z) > alpha:
                    y = (2 * x[0] - z[0], 2 * x[1] - z[1])
                    ineq.append(_depth.depth_atomic_value(m, y) <= alpha - w)
        gp = _oracle.random_atomic_measure(rng, n_max=6, general_position=True)
        m_hat, rep = _rec.reconstruct_finite_atomic(_rec.DepthOracle.from_measure(gp))
        rt.append(rep.verdict == "PASS" and m_hat is not None and m_hat.atoms() == gp.atoms())
    return [("brute = sweep = flag depth", all(agree), f"{sum(agree)}/{len(agree)}"),
            ("depth beyond an atom drops by its mass", all(ineq), f"{sum(ineq)}/{len(ineq)}"),
            ("atoms are region vertices", all(incid), f"{sum(incid)}/{len(incid)}"),
            ("atomic round trip", all(rt), f"{sum(rt)}/{len(rt)}")]


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.target == "example1":
        checks = verify_example1(cfg.delta)
    elif cfg.target == "example2":
        checks = verify_example2(tol=cfg.tol)
    else:
        checks = verify_properties(cfg.seed)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    ok = all(c[1] for c in checks)
    if cfg.out is not None:
        _write_json(_out_dir(cfg) / f"verify_{cfg.target}.json",
                    {**_header(None, cfg), "target": cfg.target, "pass": ok,
                     "checks": [{"name": n, "pass": p, "detail": d} for n, p, d in checks]})
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"depth": cmd_depth, "field": cmd_field, "regions": cmd_regions,
            "reconstruct": cmd_reconstruct, "verify": cmd_verify}


def _glue(argv: list[str]) -> list[str]:
    """Attach values to value flags so ``--bbox -3,-3,3,3`` is not read as an option."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--bbox", "--levels", "--resolution") and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue(list(sys.argv[1:] if argv is None else argv))
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = RunConfig.from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, MeasureError, ValueError) as exc:
        print(f"flagdepth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"flagdepth: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # keep crashes apart from verification failures
        print(f"flagdepth: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
