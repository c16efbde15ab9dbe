"""Command line front end.

Exit codes: 0 when every checked inequality holds, 2 when one fails, 1 on
usage or I/O errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from .compose import comp_recover, compose, toy_decoder
from .core import (
    Assignment,
    LabelCoverInstance,
    all_one_swaps,
    assignment_from_json,
    assignment_to_json,
    csp_from_json,
    csp_to_json,
    csp_value,
    lc_from_json,
    lc_to_json,
    opt_bruteforce,
    planted_label_cover,
    random_label_cover,
    value,
)
from .covering import (
    balance,
    ds_opt_bruteforce,
    ds_opt_ilp,
    ds_pad,
    ds_recover,
    ds_transform,
    graph_from_json,
    sc_from_json,
    sc_opt_bruteforce,
    sc_opt_ilp,
    sc_recover,
    sc_transform,
)
from .fixtures import planted_csp_fixture, triangle_pipeline_spec
from .gadgets import build_code, build_set_system, hypercube_set_system
from .ikw import IkwParams, ikw_build, ikw_recover
from .metrics import RandomizedAlgorithm, swap_sensitivity
from .pipeline import PipelineSpec, best_response, run_pipeline
from .reduce import alphabet_reduce, ar_recover, build_package, degree_reduce, dr_recover, dr_shape, reduce_combined
from .rng import BudgetExceeded, SeededCoins, derive_seed
from .store import Cache, Report, canonical, content_hash
from .suites import SUITES, verify_suite

GLOBAL_DEFAULTS = {"seed": 0, "budget": 1 << 22, "out_dir": None, "format": "text"}


class UsageError(Exception):
    pass


def read_config(path: str) -> dict:
    """Line-oriented ``key = value``; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key = value")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _coerce(v: str):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


def _load(path: str) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    return obj.get("instance", obj) if isinstance(obj, dict) else obj


def _load_raw(path: str):
    with open(path) as fh:
        return json.load(fh)


def load_instance(path: str):
    obj = _load(path)
    kind = obj.get("kind")
    if kind == "label_cover":
        return lc_from_json(obj)
    if kind == "two_csp":
        return csp_from_json(obj)
    if kind == "set_cover":
        return sc_from_json(obj)
    if kind == "graph":
        return graph_from_json(obj)
    raise UsageError(f"{path}: unknown instance kind {kind!r}")


def dump_instance(obj) -> dict:
    if isinstance(obj, LabelCoverInstance):
        return lc_to_json(obj)
    if hasattr(obj, "constraints"):
        return csp_to_json(obj)
    return obj.to_json()


def load_solution(path: str):
    obj = _load_raw(path)
    if isinstance(obj, dict):
        obj = obj.get("solution", obj.get("planted", obj))
    if isinstance(obj, dict) and obj.get("kind") == "assignment":
        return assignment_from_json(obj)
    if isinstance(obj, dict) and obj.get("kind") == "selection":
        return frozenset(obj["members"])
    if isinstance(obj, list):
        return tuple(obj)
    raise UsageError(f"{path}: unrecognised solution")


def dump_solution(sol) -> object:
    if isinstance(sol, Assignment):
        return assignment_to_json(sol)
    if isinstance(sol, (set, frozenset)):
        return {"kind": "selection", "members": sorted(sol)}
    return list(sol)


def _emit(args, payload) -> None:
    if isinstance(payload, Report):
        text = payload.to_text() if args.format == "text" else canonical(payload.to_json())
    elif args.format == "json":
        text = canonical(payload)
    else:
        text = "\n".join(f"{k}: {v}" for k, v in payload.items()) if isinstance(payload, dict) else str(payload)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(canonical(payload.to_json() if isinstance(payload, Report) else payload) + "\n")
    else:
        print(text)
    if args.out_dir and not isinstance(payload, Report):
        Cache(args.out_dir).put(payload)


def _set_system(args, m: int):
    if args.set_system == "hypercube":
        return hypercube_set_system(m)
    return build_set_system(m, args.l, args.seed)


def build_transform(kind: str, src, args):
    """Returns (target, recover(solution, coins)); deterministic given args.seed."""
    if kind == "dr":
        pkg = build_package(src, args.d, args.lambda_target, args.seed)
        tgt = degree_reduce(src, args.d, pkg)
        shape = dr_shape(src)
        return tgt, lambda sol, c: dr_recover(tgt, sol, shape, c)
    if kind == "ar":
        tgt = alphabet_reduce(src, build_code(src.sigma_v, Fraction(args.delta)))
        return tgt, lambda sol, c: ar_recover(src, sol, c)
    if kind == "red":
        tgt, handle = reduce_combined(src, Fraction(args.epsilon), Fraction(args.c), args.lambda_target, args.seed)
        return tgt, handle.recover
    if kind == "balance":
        tgt, handle = balance(src, args.balance_mode)
        return tgt, handle.project
    if kind == "compose":
        dec = toy_decoder(max(src.left_degrees()), src.sigma_v)
        tgt = compose(src, dec)
        return tgt, lambda sol, c: comp_recover(tgt, sol, c)
    if kind == "setcover":
        tgt = sc_transform(src, _set_system(args, src.sigma_v))
        return tgt, lambda sol, c: sc_recover(src, sol, c)
    if kind == "domset":
        gamma = args.gamma or max(src.max_set_size(), src.max_frequency())
        tgt = ds_transform(src, gamma)
        return tgt, lambda sol, c: ds_recover(tgt, sol)
    if kind == "pad":
        tgt = ds_pad(src, args.n_target, args.pad_delta or max(1, src.max_degree()))
        return tgt, lambda sol, c: frozenset(sol) & frozenset(range(src.n))
    raise UsageError(f"unknown transform {kind!r}")


def cmd_gen(args):
    coins = SeededCoins(args.seed)
    if args.kind == "planted-csp":
        phi, plant = planted_csp_fixture(args.graph, args.seed, args.sigma, args.density)
        return {"instance": csp_to_json(phi), "planted": list(plant)}
    if args.kind == "planted-lc":
        edges = [(u, (u + j) % args.n_right) for u in range(args.n_left) for j in range(args.degree)]
        inst, plant = planted_label_cover(args.n_left, args.n_right, args.sigma_u, args.sigma_v, edges, coins)
        return {"instance": lc_to_json(inst), "planted": assignment_to_json(plant)}
    inst = random_label_cover(args.n_left, args.n_right, args.sigma_u, args.sigma_v, args.n_edges, coins)
    return {"instance": lc_to_json(inst)}


def cmd_ikw(args):
    phi = load_instance(args.base)
    ikw = _ikw(phi, args)
    return {"instance": lc_to_json(ikw.lc), "n_left": ikw.lc.n_left, "n_right": ikw.lc.n_right,
            "sigma_u": ikw.lc.sigma_u, "mode": ikw.mode}


def _ikw(phi, args):
    mode, n = args.mode, 0
    if mode.startswith("sampled"):
        n = int(mode.split(":")[1]) if ":" in mode else 256
        mode = "sampled"
    return ikw_build(phi, IkwParams(args.k, args.kprime), mode, n, args.seed, args.budget)


def cmd_transform(args):
    src = load_instance(args.input)
    tgt, _ = build_transform(args.type, src, args)
    if args.type == "compose":
        return {"n_left": tgt.n_left, "n_right": tgt.n_right, "sigma_u": tgt.sigma_u, "sigma_v": tgt.sigma_v,
                "edges": len(tgt.edges), "constants": {k: str(v) for k, v in tgt.constants().items()}}
    return {"instance": dump_instance(tgt)}


def cmd_recover(args):
    src = load_instance(args.source)
    sol = load_solution(args.solution)
    coins = SeededCoins(args.seed)
    if args.type == "ikw":
        out = ikw_recover(_ikw(src, args), sol, coins)
        return {"solution": dump_solution(out), "csp_value": str(csp_value(src, out))}
    _, rec = build_transform(args.type, src, args)
    out = rec(sol, coins)
    res = {"solution": dump_solution(out)}
    if isinstance(src, LabelCoverInstance):
        res["value"] = str(value(src, out))
    return res


def cmd_value(args):
    inst = load_instance(args.instance)
    sol = load_solution(args.solution)
    if isinstance(inst, LabelCoverInstance):
        return {"value": str(value(inst, sol))}
    if hasattr(inst, "constraints"):
        return {"value": str(csp_value(inst, sol))}
    if hasattr(inst, "covers"):
        return {"feasible": inst.covers(sol), "size": len(sol)}
    return {"dominating": inst.dominates(sol), "size": len(sol)}


def cmd_opt(args):
    inst = load_instance(args.instance)
    if isinstance(inst, LabelCoverInstance):
        v, pi = opt_bruteforce(inst, args.budget)
        return {"opt": str(v), "solution": dump_solution(pi), "oracle": "bruteforce"}
    is_sc = hasattr(inst, "covers")
    size = inst.m if is_sc else inst.n
    if args.oracle == "bruteforce" or (args.oracle == "auto" and 2**size <= args.budget):
        k, sel = (sc_opt_bruteforce if is_sc else ds_opt_bruteforce)(inst, args.budget)
        return {"opt": k, "solution": dump_solution(sel), "oracle": "bruteforce", "proven": True}
    k, sel, proven = (sc_opt_ilp if is_sc else ds_opt_ilp)(inst)
    return {"opt": k, "solution": dump_solution(sel), "oracle": "ilp", "proven": proven}


def cmd_sens(args):
    inst = load_instance(args.instance)
    if not isinstance(inst, LabelCoverInstance):
        raise UsageError("sens takes a label cover instance")
    alg = RandomizedAlgorithm(best_response, "best-response")
    kinds = tuple(args.kinds.split(","))
    swaps = all_one_swaps(inst, kinds)
    if args.max_swaps and len(swaps) > args.max_swaps:
        coins = SeededCoins(derive_seed(args.seed, 1))
        idx = sorted(coins.sample(range(len(swaps)), args.max_swaps))
        swaps = [swaps[i] for i in idx]
    rep = swap_sensitivity(alg, inst, swaps, args.mode, args.samples, args.seed, args.budget)
    return rep.to_json(content_hash(lc_to_json(inst)))


def cmd_verify(args):
    if args.list:
        return {"suites": sorted(SUITES)}
    names = sorted(SUITES) if args.all else args.suite
    if not names:
        raise UsageError("verify needs --suite NAME, --all or --list")
    combined = Report("verify")
    for name in names:
        try:
            rep = verify_suite(name)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        combined.stages.append({"stage": name, "checks": len(rep.checks), "ok": rep.ok})
        combined.checks.extend(rep.checks)
        combined.measurements.extend(rep.measurements)
    return combined


def cmd_pipeline(args):
    if args.demo:
        spec = triangle_pipeline_spec(args.seed)
    elif args.spec:
        spec = _load_raw(args.spec)
    else:
        raise UsageError("pipeline needs --spec FILE or --demo")
    t0 = time.perf_counter()
    rep = run_pipeline(PipelineSpec.from_json(spec), args.out_dir, args.budget)
    rep.measurements.append({"runtime_seconds": round(time.perf_counter() - t0, 3), "label": "wall clock (float)"})
    return rep


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--budget", type=int)
    common.add_argument("--out-dir")
    common.add_argument("--format", choices=["json", "text"])
    common.add_argument("--config", help="key = value file supplying defaults")
    common.add_argument("--out", help="write the JSON result to this file")

    p = argparse.ArgumentParser(prog="swapsens", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common])
    g.add_argument("--kind", choices=["planted-csp", "planted-lc", "random-lc"], default="planted-csp")
    g.add_argument("--graph", default="triangle")
    g.add_argument("--sigma", type=int, default=2)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--n-left", type=int, default=3)
    g.add_argument("--n-right", type=int, default=2)
    g.add_argument("--sigma-u", type=int, default=2)
    g.add_argument("--sigma-v", type=int, default=2)
    g.add_argument("--degree", type=int, default=2)
    g.add_argument("--n-edges", type=int, default=6)
    g.set_defaults(fn=cmd_gen)

    def ikw_opts(q):
        q.add_argument("--k", type=int, default=2)
        q.add_argument("--kprime", type=int, default=1)
        q.add_argument("--mode", default="exhaustive", help="exhaustive or sampled:M")

    k = sub.add_parser("ikw", parents=[common])
    k.add_argument("--base", required=True)
    ikw_opts(k)
    k.set_defaults(fn=cmd_ikw)

    def transform_opts(q):
        q.add_argument("--d", type=int, default=4)
        q.add_argument("--lambda-target", type=float, default=0.9)
        q.add_argument("--delta", default="1/2", help="code relative distance slack, as a rational")
        q.add_argument("--epsilon", default="1/20")
        q.add_argument("--c", default="16")
        q.add_argument("--balance-mode", choices=["lcm-square", "minimal"], default="minimal")
        q.add_argument("--set-system", choices=["hypercube", "random"], default="hypercube")
        q.add_argument("--l", type=int, default=2)
        q.add_argument("--gamma", type=int, default=0)
        q.add_argument("--n-target", type=int, default=0)
        q.add_argument("--pad-delta", type=int, default=0)

    kinds = ["dr", "ar", "red", "balance", "compose", "setcover", "domset", "pad"]
    t = sub.add_parser("transform", parents=[common])
    t.add_argument("--type", choices=kinds, required=True)
    t.add_argument("--in", dest="input", required=True)
    transform_opts(t)
    t.set_defaults(fn=cmd_transform)

    r = sub.add_parser("recover", parents=[common])
    r.add_argument("--type", choices=["ikw"] + kinds, required=True)
    r.add_argument("--source", required=True, help="instance the transform was applied to")
    r.add_argument("--solution", required=True, help="solution of the transformed instance")
    transform_opts(r)
    ikw_opts(r)
    r.set_defaults(fn=cmd_recover)

    v = sub.add_parser("value", parents=[common])
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", required=True)
    v.set_defaults(fn=cmd_value)

    o = sub.add_parser("opt", parents=[common])
    o.add_argument("--instance", required=True)
    o.add_argument("--oracle", choices=["auto", "bruteforce", "ilp"], default="auto")
    o.set_defaults(fn=cmd_opt)

    s = sub.add_parser("sens", parents=[common])
    s.add_argument("--instance", required=True)
    s.add_argument("--mode", choices=["exact", "sampled"], default="exact")
    s.add_argument("--samples", type=int, default=256)
    s.add_argument("--kinds", default="projection,predicate")
    s.add_argument("--max-swaps", type=int, default=0)
    s.set_defaults(fn=cmd_sens)

    w = sub.add_parser("verify", parents=[common])
    w.add_argument("--suite", action="append")
    w.add_argument("--all", action="store_true")
    w.add_argument("--list", action="store_true")
    w.set_defaults(fn=cmd_verify)

    pl = sub.add_parser("pipeline", parents=[common])
    pl.add_argument("--spec")
    pl.add_argument("--demo", action="store_true", help="run the shipped triangle chain")
    pl.set_defaults(fn=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = read_config(args.config) if args.config else {}
        for key, val in cfg.items():
            if getattr(args, key, None) is None:
                setattr(args, key, _coerce(val))
        for key, val in GLOBAL_DEFAULTS.items():
            if getattr(args, key, None) is None:
                setattr(args, key, val)
        result = args.fn(args)
        _emit(args, result)
    except (UsageError, OSError, ValueError, KeyError, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, Report) and not result.ok:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
