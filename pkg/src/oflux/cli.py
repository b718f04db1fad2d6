"""Command-line entry point: oflux {gen,verify,structure,budget,strip,modulus}.

Exit codes: 0 success, 1 a check failed, 2 usage or validation error,
3 I/O error.  Settings come from --config (JSON with RunConfig keys) and are
overridden by any flag given on the command line.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .energy_budget import budget
from .errors import DomainError, ShapeError
from .field_core import Grid3
from .io import SnapshotFormatError, read_series, read_snapshot, sha256_file, write_snapshot
from .lemmas import lemma_suite
from .reports import RunConfig, write_report
from .structure import boundary_modulus, bulk_condition_study, strip_norm_study
from .synth_fields import FieldSpec, build_series

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

SPEC_FLAGS = ("kind", "alpha", "mode_count", "plateau", "cutoff", "modulation",
              "modulation_param", "amplitude", "speed")


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _directions(text: str) -> list[list[int]]:
    try:
        dirs = [[int(v) for v in part.split(",")] for part in text.split(";") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected offsets like '1,0,0;0,1,0', got {text!r}")
    if any(len(d) != 3 for d in dirs):
        raise argparse.ArgumentTypeError("each direction needs three integer node offsets")
    return dirs


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = argparse.ArgumentParser(prog="oflux", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"oflux {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON file with RunConfig keys")
    common.add_argument("-o", "--out", default=S, help="output directory")
    common.add_argument("--tolerance-profile", dest="tolerance_profile", default=S)
    common.add_argument("--seed", type=int, default=S)

    series = argparse.ArgumentParser(add_help=False)
    series.add_argument("inputs", nargs="*", default=S, help="OFLX1 snapshot files")
    series.add_argument("--t", type=float, default=S, help="final time (default: last snapshot)")

    g = sub.add_parser("gen", parents=[common], help="write synthetic snapshots")
    g.add_argument("--nx", type=int, default=S)
    g.add_argument("--ny", type=int, default=S)
    g.add_argument("--nz-half", dest="nz_half", type=int, default=S)
    g.add_argument("--lz", type=float, default=S)
    g.add_argument("--times", type=_floats, default=S)
    g.add_argument("--kind", default=S, choices=FieldSpec.KINDS)
    g.add_argument("--alpha", type=float, default=S)
    g.add_argument("--mode-count", dest="mode_count", type=int, default=S)
    g.add_argument("--plateau", type=float, default=S)
    g.add_argument("--cutoff", type=float, default=S)
    g.add_argument("--modulation", default=S, choices=("constant", "linear", "sine"))
    g.add_argument("--modulation-param", dest="modulation_param", type=float, default=S)
    g.add_argument("--amplitude", type=float, default=S)
    g.add_argument("--speed", type=float, default=S)

    v = sub.add_parser("verify", parents=[common], help="run the reflection/mollifier identity suite")
    v.add_argument("inputs", nargs="*", default=S)
    v.add_argument("--epsilon", type=float, default=S)
    v.add_argument("--gamma", type=float, default=S)

    s = sub.add_parser("structure", parents=[common, series], help="third-order structure functions")
    s.add_argument("--scale-count", dest="scale_count", type=int, default=S)
    s.add_argument("--base", type=int, default=S)
    s.add_argument("--directions", type=_directions, default=S)

    b = sub.add_parser("budget", parents=[common, series], help="mollified energy budget")
    b.add_argument("--epsilons", type=_floats, default=S)
    b.add_argument("--region", choices=("above", "full"), default=S)

    st = sub.add_parser("strip", parents=[common, series], help="near-boundary strip norms")
    st.add_argument("--epsilons", type=_floats, default=S)

    m = sub.add_parser("modulus", parents=[common, series], help="boundary modulus of continuity")
    m.add_argument("--delta", type=float, default=S)
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    flags = vars(args).copy()
    path = flags.pop("config", None)
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise OSError(f"cannot read config {path}: {e.strerror}") from e
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise UsageError(f"config {path} must hold a JSON object")
    spec = dict(data.get("spec", {}))
    for k in SPEC_FLAGS:
        if k in flags:
            spec[k] = flags.pop(k)
    if "seed" in flags:
        spec["seed"] = flags["seed"]
    data.update(flags)
    data["spec"] = spec
    cfg = RunConfig.from_dict(data)
    cfg.validate()
    return cfg


def _check_inputs(cfg: RunConfig) -> None:
    if not cfg.inputs:
        raise UsageError(f"{cfg.command}: no input snapshots given")
    missing = [p for p in cfg.inputs if not Path(p).is_file()]
    if missing:
        raise OSError(f"input not found: {', '.join(missing)}")


def cmd_gen(cfg: RunConfig) -> int:
    spec_d = dict(cfg.spec)
    spec_d.setdefault("seed", cfg.seed)
    spec = FieldSpec.from_dict(spec_d)
    grid = Grid3(cfg.nx, cfg.ny, cfg.nz_half, cfg.lz)
    series = build_series(spec, grid, cfg.times)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, snap in enumerate(series.snapshots):
        path = write_snapshot(out / f"snap_{i:03d}.oflx", snap, {"spec": spec.to_dict(), "index": i})
        files.append({"path": str(path), "sha256": sha256_file(path), "time": snap.time})
    write_report(cfg, "gen", {"spec": spec.to_dict(), "grid": grid.to_dict(), "outputs": files}, "ok")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    _check_inputs(cfg)
    tol = cfg.tol()
    snaps = [read_snapshot(p) for p in cfg.inputs]
    results, ok = [], True
    for i, (path, g) in enumerate(zip(cfg.inputs, snaps)):
        checks = lemma_suite(g, seed=cfg.seed + i, epsilon=cfg.epsilon, gamma=cfg.gamma,
                             tol=tol["lemma"], boundary_tol=tol["boundary"])
        passed = all(c.passed for c in checks)
        ok &= passed
        results.append({"path": str(path), "passed": passed, "checks": [c.to_dict() for c in checks]})
        for c in checks:
            if not c.passed:
                print(f"{path}: {c.name} failed ({c.value:.3e} > {c.tol:.1e})", file=sys.stderr)
    write_report(cfg, "verify", {"snapshots": results, "all_passed": ok}, "ok" if ok else "fail")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_structure(cfg: RunConfig) -> int:
    _check_inputs(cfg)
    u = read_series(cfg.inputs)
    rep = bulk_condition_study(u, cfg.directions, cfg.scale_count, cfg.t, cfg.base)
    write_report(cfg, "structure", rep.to_dict(), "ok", rep.csv_rows())
    return EXIT_OK


def cmd_budget(cfg: RunConfig) -> int:
    _check_inputs(cfg)
    if not cfg.epsilons:
        raise UsageError("budget: give an epsilon ladder with --epsilons")
    u = read_series(cfg.inputs)
    rep = budget(u, cfg.epsilons, cfg.t, cfg.region)
    tol = cfg.tol()["identity_residual"]
    rel = [abs(rep.relative(r.identity_residual)) for r in rep.rows]
    ok = all(x <= tol for x in rel)
    result = rep.to_dict()
    result["identity_residual_relative"] = rel
    write_report(cfg, "budget", result, "ok" if ok else "fail", rep.csv_rows())
    if not ok:
        print(f"budget: relative identity residual {max(rel):.3e} exceeds {tol:.1e}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_strip(cfg: RunConfig) -> int:
    _check_inputs(cfg)
    if not cfg.epsilons:
        raise UsageError("strip: give an epsilon ladder with --epsilons")
    u = read_series(cfg.inputs)
    rep = strip_norm_study(u, cfg.epsilons, cfg.t)
    write_report(cfg, "strip", rep.to_dict(), "ok", rep.csv_rows())
    return EXIT_OK


def cmd_modulus(cfg: RunConfig) -> int:
    _check_inputs(cfg)
    u = read_series(cfg.inputs)
    delta = cfg.delta if cfg.delta is not None else u.grid.lz / 4
    rep = boundary_modulus(u, delta)
    write_report(cfg, "modulus", rep.to_dict(), "ok", rep.csv_rows())
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "verify": cmd_verify, "structure": cmd_structure,
            "budget": cmd_budget, "strip": cmd_strip, "modulus": cmd_modulus}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        cfg = load_config(args)
        return COMMANDS[cfg.command](cfg)
    except SnapshotFormatError as e:
        print(f"oflux: {e}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, DomainError, ShapeError, ValueError, TypeError) as e:
        print(f"oflux: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"oflux: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
