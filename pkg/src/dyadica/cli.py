"""Command line front end.

    dyadica suite [names ...] --config cfg --out dir
    dyadica norms --input f.gfn --specs "0,0,2,2; 1,-1,4,2" --out dir
    dyadica paraproduct --symbol sym.csv --inputs f1.gfn,f2.gfn --out dir
    dyadica sparse --inputs b.gfn,g.gfn,f2.gfn --mode intest --out dir
    dyadica testbench --config cfg --out dir
    dyadica theorem-probe --config cfg --out dir

Outputs are CSV tables and two-column plot-data files for offline use.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .config import ExperimentConfig
from .czform import KernelSpec
from .dyadic import DyadicCube, RootBox
from .funcspace import (GridFunction, load_gridfunction, lp_norm,
                        save_gridfunction)
from .paraproduct import ParaproductSpec, apply_paraproduct
from .sparse import StoppingConfig, build_sparse, verify_domination
from .suites import run_suite, run_theorem_probe, suite_testbench, workspace, write_csv
from .tlnorm import NormSpec, tl_norm
from .wavelet import CoefficientTree


def _load_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig.defaults()
    return ExperimentConfig.from_file(path)


def _workspace_for(cfg: ExperimentConfig, root: RootBox | None = None):
    if root is None:
        return workspace(cfg.d, cfg.L, cfg.J, cfg.wavelet_order,
                         cfg.dictionary_size, cfg.refine)
    return workspace(root.d, root.L, root.J, cfg.wavelet_order,
                     cfg.dictionary_size, cfg.refine)


def load_symbol_csv(path, root: RootBox) -> CoefficientTree:
    tree = CoefficientTree(root, dtype=complex)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["cube"]:
            raise ValueError("symbol CSV needs columns cube,re,im")
        for row in reader:
            cube = DyadicCube.from_token(row[0])
            tree[cube] = float(row[1]) + 1j * float(row[2])
    if all(np.allclose(a.imag, 0.0) for a in tree.data.values()):
        real = CoefficientTree(root)
        real.data = {s: a.real.copy() for s, a in tree.data.items()}
        return real
    return tree


def save_symbol_csv(path, tree: CoefficientTree) -> None:
    rows = [[cube.token(), repr(float(np.real(val))), repr(float(np.imag(val)))]
            for cube, val in tree.items()]
    write_csv(path, ["cube", "re", "im"], rows)


def _parse_norm_specs(text: str) -> list[NormSpec]:
    out = []
    for group in text.split(";"):
        group = group.strip()
        if not group:
            continue
        n, m, p, q = (float(tok) if tok.strip().lower() not in ("inf",) else np.inf
                      for tok in group.split(","))
        out.append(NormSpec(n, m, p, q))
    return out


def cmd_suite(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.raw.set("ensemble", "seed", str(args.seed))
    return run_suite(args.names, cfg, args.out)


def cmd_norms(args) -> int:
    cfg = _load_config(args.config)
    f = load_gridfunction(args.input)
    ws = _workspace_for(cfg, f.root)
    coeffs = ws.dictionary.coeff_arrays(f)
    rows = []
    for spec in _parse_norm_specs(args.specs):
        val = tl_norm(f, spec, ws.dictionary, coeffs)
        rows.append([spec.n, spec.m, spec.p, spec.q, repr(val), cfg.config_hash])
    write_csv(os.path.join(args.out, "norms.csv"),
              ["n", "m", "p", "q", "value", "config_hash"], rows)
    for row in rows:
        print(",".join(str(v) for v in row))
    return 0


def cmd_paraproduct(args) -> int:
    cfg = _load_config(args.config)
    inputs = [load_gridfunction(p) for p in args.inputs.split(",")]
    ws = _workspace_for(cfg, inputs[0].root)
    symbol = load_symbol_csv(args.symbol, ws.root)
    spec = ParaproductSpec(ws.basis, symbol, arity=len(inputs))
    out = apply_paraproduct(spec, inputs)
    exps = [float(t) if t.strip().lower() != "inf" else np.inf
            for t in args.exponents.split(",")]
    if len(exps) != len(inputs):
        raise SystemExit("one exponent per input")
    r = ExperimentConfig.holder_r(exps)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "paraproduct_output.gfn")
    save_gridfunction(out_path, GridFunction(ws.root, np.real(out.samples)))
    denom = float(np.prod([lp_norm(f, p) for f, p in zip(inputs, exps)]))
    ratio = lp_norm(out, r) / denom if denom > 0 else float("nan")
    write_csv(os.path.join(args.out, "paraproduct_ratio.csv"),
              ["output_r", "ratio", "output_file", "config_hash"],
              [[r, repr(ratio), out_path, cfg.config_hash]])
    print(f"wrote {out_path}; ratio {ratio}")
    return 0


def cmd_sparse(args) -> int:
    cfg = _load_config(args.config)
    inputs = [load_gridfunction(p) for p in args.inputs.split(",")]
    ws = _workspace_for(cfg, inputs[0].root)
    q0 = ws.root.root_cube
    target = cfg.packing_intest if args.mode == "intest" else cfg.packing_mainiter
    stop_cfg = StoppingConfig(theta=cfg.sparse_theta, packing_target=target,
                              theta_cap=cfg.sparse_theta_cap, mode=args.mode)
    os.makedirs(args.out, exist_ok=True)
    if args.mode == "intest":
        b, g, *fs = inputs
        rep = verify_domination(q0, stop_cfg, ws.dictionary,
                                exponents=cfg.sparse_exponents, b=b, g=g, fs=fs)
        coll = rep.pop("collection")
    else:
        coll = build_sparse(q0, {"f1": inputs[0], "n": 1}, stop_cfg, ws.dictionary)
        rep = {"lhs": "", "rhs": "", "ratio": "", "theta": coll.theta}
    rows = []
    for gen_idx, gen in enumerate([[coll.root_cube]] + coll.generations):
        for cube in gen:
            rows.append([cube.token(), gen_idx,
                         repr(coll.packing_by_parent.get(cube, ""))])
    write_csv(os.path.join(args.out, "sparse_collection.csv"),
              ["cube", "generation", "children_packing_ratio"], rows)
    write_csv(os.path.join(args.out, "sparse_domination.csv"),
              ["lhs", "rhs", "ratio", "theta", "config_hash"],
              [[rep["lhs"], rep["rhs"], rep["ratio"], rep["theta"],
                cfg.config_hash]])
    print(f"collection of {len(rows)} cubes written under {args.out}")
    return 0


def cmd_testbench(args) -> int:
    cfg = _load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    rows = suite_testbench(cfg, args.out)
    bad = [r for r in rows if not r.passed]
    for r in rows:
        print(f"[{'pass' if r.passed else 'FAIL'}] {r.name}: {r.value:.6g}")
    return 1 if bad else 0


def cmd_theorem_probe(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.raw.set("ensemble", "seed", str(args.seed))
    os.makedirs(args.out, exist_ok=True)
    worst, table, _ = run_theorem_probe(cfg, args.out, threads=args.threads)
    print(f"worst growth factor {worst:.4f} over {len(table)} variants "
          f"(cap {cfg.growth_cap})")
    return 0 if worst <= cfg.growth_cap else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dyadica",
        description="dyadic wavelet machinery: norms, paraproducts, sparse "
                    "domination, testing benches")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="INI-style config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("suite", help="run named acceptance suites (all if none)")
    p.add_argument("names", nargs="*", default=[])
    common(p)
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("norms", help="evaluate symbol norms of a function file")
    p.add_argument("--input", required=True)
    p.add_argument("--specs", default="0,0,2,2")
    common(p)
    p.set_defaults(fn=cmd_norms)

    p = sub.add_parser("paraproduct", help="apply a paraproduct to input files")
    p.add_argument("--symbol", required=True, help="symbol CSV (cube,re,im)")
    p.add_argument("--inputs", required=True, help="comma-separated .gfn files")
    p.add_argument("--exponents", default="4,4")
    common(p)
    p.set_defaults(fn=cmd_paraproduct)

    p = sub.add_parser("sparse", help="build a sparse collection and report")
    p.add_argument("--inputs", required=True, help="b,g,f2,... function files")
    p.add_argument("--mode", choices=("intest", "mainiter"), default="intest")
    common(p)
    p.set_defaults(fn=cmd_sparse)

    p = sub.add_parser("testbench", help="kernel registry bench")
    common(p)
    p.set_defaults(fn=cmd_testbench)

    p = sub.add_parser("theorem-probe", help="boundedness ratio sweep")
    common(p)
    p.set_defaults(fn=cmd_theorem_probe)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
