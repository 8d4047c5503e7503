"""Command line front end.

Subcommands::

    run <config>             solve one case, write outputs, compare if a reference is set
    sweep <config-dir>       run every *.json case in a directory on a worker pool
    compare <result> <table> compare a frequency CSV against a bundled reference table
    dump-mesh <config>       print the control net of the case patch
    dump-matrices <config>   write K and M in symmetric coordinate text format
    cases                    list the bundled cases

``<config>`` is a path to a JSON case or the name of a bundled case.

Exit codes: 0 pass, 1 comparison failure, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from .assembly import assemble
from .config import ConfigError, build_patch, build_crack, load_config, parse_config, run_case
from .crack import classify
from .geometry import dump_patch
from .material import MaterialError, constitutive_set
from .reference import compare, load_reference
from .solve import ConstraintError, NumericalError, read_modal_csv

log = logging.getLogger("xigaplate")

EXIT_PASS, EXIT_COMPARE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def bundled_cases() -> list[str]:
    d = resources.files("xigaplate").joinpath("data/cases")
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def resolve_case(spec: str, out_dir: str | None = None):
    """Load a case from a path or a bundled name; ``out_dir`` relocates outputs."""
    path = Path(spec)
    if path.is_file():
        cfg = load_config(path)
    elif spec in bundled_cases():
        text = resources.files("xigaplate").joinpath(f"data/cases/{spec}.json").read_text()
        cfg = parse_config(json.loads(text), Path.cwd())
    else:
        raise ConfigError(f"{spec}: no such file or bundled case")
    if out_dir is not None:
        cfg.base_dir = Path(out_dir)
    return cfg


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, ConstraintError, MaterialError, KeyError, OSError)):
        return EXIT_INPUT
    if isinstance(exc, (NumericalError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, ValueError):
        return EXIT_INPUT
    return EXIT_NUMERIC


def _run_one(spec: str, out_dir: str | None) -> tuple[str, int, str]:
    """Worker body; returns ``(name, exit code, text)`` and never raises."""
    try:
        cfg = resolve_case(spec, out_dir)
        result, _ = run_case(cfg)
        lines = [f"{cfg.name}: " + " ".join(f"{v:.4f}" for v in result.normalized)
                 + f" [{result.convention}]"]
        code = EXIT_PASS
        if cfg.reference:
            rep = compare(result.normalized, load_reference(cfg.reference["table"]),
                          cfg.reference["key"])
            lines += rep.lines()
            code = EXIT_PASS if rep.passed else EXIT_COMPARE
        return cfg.name, code, "\n".join(lines)
    except Exception as exc:  # reported per case, sweep continues
        return spec, _exit_code(exc), f"ERROR {spec}: {type(exc).__name__}: {exc}"


def cmd_run(args) -> int:
    name, code, text = _run_one(args.config, args.out)
    print(text)
    return code


def cmd_sweep(args) -> int:
    d = Path(args.config_dir)
    if not d.is_dir():
        raise ConfigError(f"{d}: not a directory")
    specs = sorted(str(p) for p in d.glob("*.json"))
    if not specs:
        raise ConfigError(f"{d}: no *.json cases")
    if args.jobs == 1:
        results = [_run_one(s, args.out) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, specs, [args.out] * len(specs)))
    for _, _, text in results:
        print(text)
    codes = [c for _, c, _ in results]
    n_pass = sum(c == EXIT_PASS for c in codes)
    print(f"sweep: {n_pass}/{len(codes)} cases passed")
    return max(codes)


def cmd_compare(args) -> int:
    path = Path(args.result)
    rows = sorted(read_modal_csv(path))
    if not rows:
        raise ConfigError(f"{path}: no modes in result file")
    values = [r[2] for r in rows]
    convention = rows[0][3]
    key = args.key
    if key is None:
        meta = path.with_suffix(".meta.json")
        if meta.is_file():
            ref = json.loads(meta.read_text()).get("reference") or {}
            key = ref.get("key")
    if key is None:
        raise ConfigError("compare: no --key given and no reference key in the result sidecar")
    table = load_reference(args.table)
    if convention and convention != table.convention:
        raise ConfigError(f"compare: result uses {convention!r}, "
                          f"table {table.name} uses {table.convention!r}")
    try:
        rep = compare(values, table, key)
    except KeyError as exc:
        print(f"FAIL {table.name}[{key}]: {exc.args[0]}")
        return EXIT_COMPARE
    print(rep.summary())
    return EXIT_PASS if rep.passed else EXIT_COMPARE


def cmd_dump_mesh(args) -> int:
    cfg = resolve_case(args.config)
    text = dump_patch(build_patch(cfg))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def write_coo(A, path):
    """Upper triangle of a symmetric sparse matrix as ``i j value`` lines."""
    U = A.tocoo()
    keep = U.row <= U.col
    r, c, v = U.row[keep], U.col[keep], U.data[keep]
    order = np.lexsort((c, r))
    with open(path, "w") as f:
        f.write(f"% symmetric {A.shape[0]} {A.shape[1]} {order.size}\n")
        for i, j, x in zip(r[order], c[order], v[order]):
            f.write(f"{i} {j} {x:.17e}\n")


def cmd_dump_matrices(args) -> int:
    cfg = resolve_case(args.config)
    patch = build_patch(cfg)
    plan = classify(patch, build_crack(cfg))
    system = assemble(patch, constitutive_set(cfg.law), cfg.law.theory, plan,
                      tip_order=cfg.tip_order, tip_mode=cfg.tip_mode,
                      inplane_branch=cfg.inplane_branch)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_coo(system.K, out / f"{cfg.name}_K.txt")
    write_coo(system.M, out / f"{cfg.name}_M.txt")
    print(f"wrote {out / cfg.name}_K.txt and _M.txt ({system.n_dof} unknowns)")
    return EXIT_PASS


def cmd_cases(args) -> int:
    for name in bundled_cases():
        print(name)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xigaplate", description="Free vibration of cracked FGM plates.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log pipeline details")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve one case")
    p.add_argument("config")
    p.add_argument("--out", help="directory for output files (default: next to the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="solve every case in a directory")
    p.add_argument("config_dir")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="compare a result CSV with a reference table")
    p.add_argument("result")
    p.add_argument("table")
    p.add_argument("--key", help="configuration key, e.g. 'a/L=0.5'")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dump-mesh", help="print the control net")
    p.add_argument("config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dump_mesh)

    p = sub.add_parser("dump-matrices", help="write assembled K and M")
    p.add_argument("config")
    p.add_argument("-o", "--output-dir", default=".")
    p.set_defaults(func=cmd_dump_matrices)

    p = sub.add_parser("cases", help="list bundled cases")
    p.set_defaults(func=cmd_cases)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
