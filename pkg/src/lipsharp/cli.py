"""Command-line front end: ``lipsharp {construct,probe,verify,plot,gradcheck}``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import cubetree, gradcheck, sharpfn, suite
from .cubetree import CubeChain, ParamSequence
from .dyadic import ScaledFloat
from .lorentz import RadialProfile, profile_from_dict

log = logging.getLogger("lipsharp")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    N: int = 2
    j: object = "auto"
    depth: int = 3
    mode: str = "strict"
    q_S: float = 2.0
    profile: dict = field(default_factory=lambda: {"name": "log", "params": {}})
    probe_depth: int = 2
    seed: int = 0
    l: Optional[list] = None
    out: str = "lipsharp-out"

    def params(self) -> ParamSequence:
        if self.j == "auto":
            # relaxed default: steps of 3, small enough for exhaustive oracles
            j = tuple(range(0, 3 * self.depth + 1, 3)) if self.mode == "relaxed" \
                else cubetree.auto_j(self.depth)
        else:
            j = tuple(self.j)
        try:
            return ParamSequence(j, self.N, self.mode, tuple(self.l) if self.l is not None else None)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def make_profile(self) -> RadialProfile:
        data = dict(self.profile)
        params = dict(data.get("params", {}))
        if data.get("name", "log") == "log":
            params.setdefault("dim", self.N)
        data["params"] = params
        try:
            return profile_from_dict(data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = set(RunConfig.__dataclass_fields__)
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
    cfg = RunConfig(**data)
    if not isinstance(cfg.N, int) or cfg.N < 2:
        raise ConfigError("N must be an integer >= 2")
    if cfg.j != "auto" and not (isinstance(cfg.j, list) and all(isinstance(v, int) for v in cfg.j)):
        raise ConfigError("j must be 'auto' or a list of integers")
    if cfg.mode not in ("strict", "relaxed"):
        raise ConfigError("mode must be strict or relaxed")
    if not cfg.q_S > 1:
        raise ConfigError("q_S must exceed 1")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a u64")
    return cfg


# formatting ------------------------------------------------------------------


def fmt_number(x) -> str:
    """Decimal when ``|log2| <= 900``, otherwise ``mantissa*2^exponent``."""
    if isinstance(x, ScaledFloat):
        return str(x)
    if isinstance(x, Fraction):
        return str(ScaledFloat.from_fraction(abs(x), "nearest")) if x >= 0 else "-" + fmt_number(-x)
    return repr(float(x))


def _fraction_json(x: Fraction) -> dict:
    return {"exact": cubetree._fraction_str(x), "approx": fmt_number(x)}


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"schema_version": SCHEMA_VERSION, **data}, indent=2, default=str))


# commands --------------------------------------------------------------------


def cmd_construct(cfg: RunConfig, out: Path) -> int:
    p = cfg.params()
    rep = cubetree.validate_params(p)
    if not rep.ok:
        for v in rep.violations:
            print(f"violation: {v}", file=sys.stderr)
        _write_json(out / "construct.json", {"ok": False, "validation": rep.to_dict()})
        return EXIT_CONFIG
    lb = cubetree.inner_set_lower_bound(p)
    levels = []
    for n in range(p.n_max + 1):
        row = {"n": n, "j": p.j[n], "k": p.k[n], "card": str(p.card(n)),
               "measure": _fraction_json(cubetree.generation_measure(n, p))}
        if n < p.n_max:
            row.update({"l": p.l[n], "a": str(p.a[n]), "children": str(p.counts[n]),
                        "eps": _fraction_json(p.eps[n]),
                        "factor": _fraction_json(cubetree.level_factor(n, p))})
        levels.append(row)
    manifest = {
        "ok": True,
        "mode": p.mode,
        "relaxed": p.mode == "relaxed",
        "N": p.N,
        "j": list(p.j),
        "k": list(p.k),
        "l": list(p.l),
        "levels": levels,
        "inner_set_lower_bound": lb["bound"],
        "floor": lb["floor"],
        "validation": rep.to_dict(),
    }
    _write_json(out / "construct.json", manifest)
    print(json.dumps({"j": manifest["j"], "mode": p.mode, "ok": True}))
    return EXIT_OK


PROBE_HEADER = ["chain_id", "level", "kind", "radius_exp", "bound_mantissa", "bound_exp",
                "witness_kind", "witness_coords", "certified"]


def _probe_rows(ex, chain: CubeChain, depth: int, chain_id: str) -> list:
    rows = []
    for r in sharpfn.lip_probe(ex, chain, depth):
        rows.append([chain_id, r.level, "lip", r.radius_exp, 1.0, r.bound_exp, "", "", True])
    for n in range(1, depth + 1):
        w = sharpfn.nondiff_witness(ex, chain, n)
        coords = ";".join(str(c) for c in w.y)
        rows.append([chain_id, n, "witness", -ex.params.j[n], w.ratio_lower.mantissa,
                     w.ratio_lower.exponent, w.kind, coords, w.certified])
    return rows


def cmd_probe(cfg: RunConfig, out: Path, chain_spec: Optional[str], count: int) -> int:
    p = cfg.params()
    depth = cfg.probe_depth
    if depth > p.n_max - 1:
        log.warning("depth %d exceeds the construction; capped at %d", depth, p.n_max - 1)
        depth = p.n_max - 1
    ex = sharpfn.SharpExample(p, cfg.make_profile(), cfg.q_S)
    rng = random.Random(cfg.seed)
    try:
        prefix = CubeChain.parse(chain_spec or "")
    except ValueError as exc:
        raise ConfigError(f"bad chain spec: {exc}") from exc
    try:
        valid = prefix.is_valid(p)
    except ValueError:
        valid = False
    if len(prefix) > depth + 1 or not valid:
        raise ConfigError("chain spec is not a valid chain prefix")
    chains = []
    for _ in range(count if chain_spec is None else 1):
        c = prefix
        while len(c) < depth + 1:
            c = c.extend(cubetree.random_child(len(c), p, rng))
        chains.append(c)
    # bumps are built once per level before fanning out
    for n in range(depth + 1):
        ex.template(n)
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(lambda ic: _probe_rows(ex, ic[1], depth, f"c{ic[0]}"),
                                enumerate(chains)))
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    with open(out / "probe.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROBE_HEADER)
        for rows in results:
            for row in rows:
                ok &= bool(row[-1])
                w.writerow(row)
    _write_json(out / "probe.json", {"chains": {f"c{i}": c.key() for i, c in enumerate(chains)},
                                     "depth": depth, "all_certified": ok})
    print(f"wrote {out / 'probe.csv'} ({sum(len(r) for r in results)} rows)")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig, out: Path, checks: Optional[str]) -> int:
    p = cfg.params()
    if checks is None:
        names = None
    else:
        names = [c.strip() for c in checks.split(",") if c.strip()]
    try:
        results = suite.run_checks(p, names, cfg.seed, cfg.make_profile(), cfg.q_S)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    failed = [r.name for r in results if not r.passed]
    verdict = {"passed": not failed, "checks_run": len(results), "failed": failed,
               "empty_selection": len(results) == 0, "results": [r.to_dict() for r in results]}
    for r in results:
        if not r.passed and r.name == "params":
            verdict["violations"] = r.detail.get("violations", [])
    _write_json(out / "verify.json", verdict)
    print(json.dumps({k: verdict[k] for k in ("passed", "checks_run", "failed", "empty_selection")}))
    for v in verdict.get("violations", []):
        print(f"violation: {v}", file=sys.stderr)
    if not results:
        print("warning: no checks selected", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def plot_layout(p: ParamSequence, level: int, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Rectangle

    if p.N != 2:
        raise ConfigError("layout plots need N = 2")
    if not 0 <= level < p.n_max:
        raise ConfigError(f"layout level must lie in [0, {p.n_max - 1}]")
    # local units: the cube is [-1, 1]^2 around its centre
    D = p.j[level + 1] - p.j[level]
    unit = 2.0**-D
    inner = 2.0 ** (p.j[level] - p.l[level])
    U, L = p.offset_bounds(level)
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.add_patch(Rectangle((-1, -1), 2, 2, fill=False, lw=1.5, ec="k"))
    count = p.counts[level]
    if count <= 4096:
        for off in cubetree.enumerate_children(level, p):
            ax.add_patch(Rectangle(((off[0] - 1) * unit, (off[1] - 1) * unit), 2 * unit, 2 * unit,
                                   fc="tab:blue", ec="w", lw=0.3, alpha=0.6))
    else:
        outer, hole = (U + 1) * unit, (L - 1) * unit
        ax.add_patch(Rectangle((-outer, -outer), 2 * outer, 2 * outer, fc="tab:blue", alpha=0.4))
        ax.add_patch(Rectangle((-hole, -hole), 2 * hole, 2 * hole, fc="w"))
    ax.add_patch(Rectangle((-inner, -inner), 2 * inner, 2 * inner, fc="tab:orange", ec="k", lw=0.8))
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_aspect("equal")
    ax.set_title(f"level {level}: {count} selected children, inner cube half-side 2^-{p.l[level]}")
    ax.set_xlabel("(x - a) / 2^-j_n")
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_series(xs, log2_ys, ylabel: str, title: str, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, log2_ys, "o-")
    ax.set_xlabel("level n")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.set_xticks(list(xs))
    ax.grid(alpha=0.3)
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_plot(cfg: RunConfig, out: Path, artifacts: Optional[str], level: int) -> int:
    names = ["layout", "lip", "witness"] if artifacts is None else \
        [a.strip() for a in artifacts.split(",") if a.strip()]
    unknown = set(names) - {"layout", "lip", "witness"}
    if unknown:
        raise ConfigError(f"unknown artifacts: {', '.join(sorted(unknown))}")
    if not names:
        print("no artifacts requested")
        return EXIT_OK
    p = cfg.params()
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "layout" in names:
        path = out / f"layout_level{level}.svg"
        plot_layout(p, level, path)
        written.append(path)
    if "lip" in names:
        xs = list(range(p.n_max))
        ys = [p.l[n] - p.k[n + 1] for n in xs]
        path = out / "lip_bounds.svg"
        plot_series(xs, ys, "log2 of small-ball bound", "lip bound 2^(l_n - k_{n+1})", path)
        written.append(path)
    if "witness" in names:
        ex = sharpfn.SharpExample(p, cfg.make_profile(), cfg.q_S)
        depth = min(cfg.probe_depth, p.n_max - 1)
        chain = cubetree.random_chain(p, depth + 1, cfg.seed)
        xs = list(range(1, depth + 1))
        ys = [sharpfn.nondiff_witness(ex, chain, n).ratio_lower.log2() for n in xs]
        path = out / "witness_ratios.svg"
        plot_series(xs, ys, "log2 of certified ratio", "non-differentiability witnesses", path)
        written.append(path)
    for w in written:
        print(f"wrote {w}")
    return EXIT_OK


def cmd_gradcheck(cfg: RunConfig, out: Path, polylines: int, grid: int) -> int:
    bump = suite.gradcheck_bump(cfg.N, cfg.make_profile())
    rng = np.random.default_rng(cfg.seed)
    hook = gradcheck.sphere_breakpoints(bump.center_float, [0.25])
    reports = []
    for _ in range(polylines):
        curve = gradcheck.random_polyline(rng, N=cfg.N, box=0.3)
        reports.append(gradcheck.chain_inequality(bump.values, bump.lip, curve, 256, breakpoints=hook))
    case = suite.bump_grid_case(grid, 1.0, 10_000, cfg.seed, bump)
    G, F, M, pairs, radii = case["g"], case["f"], case["M"], case["pairs"], case["radii"]
    C = gradcheck.minimal_hajlasz_constant(F, M, pairs)
    out.mkdir(parents=True, exist_ok=True)
    G.to_csv(out / "lip_field.csv")
    M.to_csv(out / "maximal_field.csv")
    passed = all(r.passed for r in reports)
    report = {
        "bump": bump.to_dict(),
        "chain": {"count": len(reports), "passed": passed,
                  "min_slack": min(r.slack for r in reports),
                  "reports": [r.to_dict() for r in reports]},
        "hajlasz": {"pairs": len(pairs), "minimal_C": C, "q": case["q"],
                    "violations_at_C2": len(gradcheck.hajlasz_pair_check(F, M, pairs, 2.0))},
        "maximal_lorentz_ratio": gradcheck.maximal_lorentz_ratio(G, 1, radii),
    }
    _write_json(out / "gradcheck.json", report)
    print(json.dumps({"chain_passed": passed, "minimal_C": C}))
    return EXIT_OK if passed else EXIT_FAIL


# entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (schema_version 1)")
    common.add_argument("--depth", type=int, help="probe depth cap")
    common.add_argument("--mode", choices=["strict", "relaxed"])
    common.add_argument("--seed", type=int, help="seed for randomized suites (u64)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lipsharp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("construct", parents=[common], help="write the construction manifest")
    pr = sub.add_parser("probe", parents=[common], help="lip bounds and witnesses on chains")
    pr.add_argument("--chain", help="chain prefix 'o,o/o,o' ('' or 'root' for the root)")
    pr.add_argument("--count", type=int, default=5, help="random chains when --chain is absent")
    ve = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    ve.add_argument("--checks", help=f"comma list from {', '.join(suite.CHECKS)}")
    pl = sub.add_parser("plot", parents=[common], help="emit SVG figures")
    pl.add_argument("--artifacts", help="comma list from layout, lip, witness")
    pl.add_argument("--level", type=int, default=0, help="level for the layout plot")
    gc = sub.add_parser("gradcheck", parents=[common], help="chaining and maximal-function harness")
    gc.add_argument("--polylines", type=int, default=100)
    gc.add_argument("--grid", type=int, default=201)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: seed must be a u64", file=sys.stderr)
        return EXIT_CONFIG
    try:
        overrides = {"mode": args.mode, "seed": args.seed, "out": args.out}
        if args.depth is not None:
            overrides["probe_depth"] = args.depth
        if args.mode == "relaxed" and not args.config:
            overrides["depth"] = 2
        cfg = load_config(args.config, overrides)
        out = Path(cfg.out)
        if args.command == "construct":
            return cmd_construct(cfg, out)
        if args.command == "probe":
            return cmd_probe(cfg, out, args.chain, args.count)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.checks)
        if args.command == "plot":
            return cmd_plot(cfg, out, args.artifacts, args.level)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg, out, args.polylines, args.grid)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
