"""Command-line interface.

Exit codes: 0 success, 1 verification mismatch, 2 input/parse problems,
3 model-order failures, 4 snap failures, 5 realization failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, io
from .errors import (
    AmbiguousParent,
    DisconnectedNetwork,
    EmptySpec,
    FlowtopoError,
    FullDeficiency,
    LabelMismatch,
    NoInternalNodes,
    NonIntegerCutset,
    NoStableOrder,
    NotArborescence,
    NotASpanningTree,
    NotCanonicalizable,
    NotPositiveDefinite,
    NotUnique,
    NoValidPartition,
    ParseError,
    RankZero,
    SnapFailure,
)
from .noise_pipeline import DEFAULT_ALPHA
from .realize import to_dot, verify_against_truth
from .synth import (
    FAMILIES,
    FlowSamplerConfig,
    SnrSetting,
    add_noise,
    family_spec,
    generate_arborescence,
    generate_within,
    sample_flows,
)

_EXIT_PARSE = 2
_EXIT_ORDER = 3
_EXIT_SNAP = 4
_EXIT_REALIZE = 5

_ERROR_CODES: tuple[tuple[type, int], ...] = (
    (ParseError, _EXIT_PARSE),
    (EmptySpec, _EXIT_PARSE),
    (DisconnectedNetwork, _EXIT_PARSE),
    (NoInternalNodes, _EXIT_PARSE),
    (NotPositiveDefinite, _EXIT_PARSE),
    (RankZero, _EXIT_ORDER),
    (FullDeficiency, _EXIT_ORDER),
    (NoValidPartition, _EXIT_ORDER),
    (NoStableOrder, _EXIT_ORDER),
    (NonIntegerCutset, _EXIT_SNAP),
    (SnapFailure, _EXIT_SNAP),
    (NotUnique, _EXIT_REALIZE),
    (NotCanonicalizable, _EXIT_REALIZE),
    (NotArborescence, _EXIT_REALIZE),
    (AmbiguousParent, _EXIT_REALIZE),
    (NotASpanningTree, _EXIT_REALIZE),
    (LabelMismatch, _EXIT_REALIZE),
)


def _exit_code(exc: FlowtopoError) -> int:
    for cls, code in _ERROR_CODES:
        if isinstance(exc, cls):
            return code
    return _EXIT_PARSE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowtopo",
        description="Reconstruct conserved-network topology from steady-state edge flows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="draw a random arborescence network")
    gen.add_argument("--family", choices=FAMILIES, default="binary")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--layers", type=int, nargs=2, metavar=("LO", "HI"))
    gen.add_argument("--children", type=int, nargs=2, metavar=("LO", "HI"))
    gen.add_argument("--max-edges", type=int, help="redraw until the network fits")
    gen.add_argument("--out", type=Path, required=True, help="network JSON path")

    smp = sub.add_parser("sample", help="synthesize flow samples for a network")
    smp.add_argument("--network", type=Path, required=True)
    smp.add_argument("--seed", type=int, default=0)
    group = smp.add_mutually_exclusive_group(required=True)
    group.add_argument("--n-s", type=int, help="sample count")
    group.add_argument("--z", type=int, help="sample count as a multiple of e")
    smp.add_argument("--snr", type=float, help="add noise at this ratio")
    smp.add_argument(
        "--noise-kind", choices=("homoscedastic", "heteroscedastic"),
        default="homoscedastic",
    )
    smp.add_argument("--out", type=Path, required=True, help="output prefix")

    rec = sub.add_parser("reconstruct", help="infer topology from a sample CSV")
    rec.add_argument("--data", type=Path, required=True)
    rec.add_argument("--mode", choices=("exact", "noisy"), default="exact")
    rec.add_argument("--noise", type=Path, help="noise-model JSON (noisy mode)")
    rec.add_argument("--sigma2", type=float, help="shared noise variance (noisy mode)")
    rec.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    rec.add_argument("--zero-tol", type=float, help="singular-value zero threshold")
    rec.add_argument("--transposed", action="store_true")
    rec.add_argument("--allow-undersampled", action="store_true")
    rec.add_argument("--out", type=Path, help="output prefix for JSON + DOT")
    rec.add_argument("--format", choices=("json", "csv", "dot"), default="json")

    ver = sub.add_parser("verify", help="compare a result against a reference network")
    ver.add_argument("--result", type=Path, required=True)
    ver.add_argument("--network", type=Path, required=True)

    swp = sub.add_parser("sweep", help="accuracy sweep over SNR and sample size")
    swp.add_argument("--families", nargs="+", choices=FAMILIES, default=list(FAMILIES))
    swp.add_argument("--networks", type=int, default=8)
    swp.add_argument("--snr", type=float, nargs="+", default=list(harness.DEFAULT_SNR_LIST))
    swp.add_argument("--z-max", type=int, default=50)
    swp.add_argument("--trials", type=int, default=100)
    swp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--threads", type=int, default=1)
    swp.add_argument("--max-edges", type=int, default=300)
    swp.add_argument("--cell-budget", type=float, help="seconds allowed per cell")
    swp.add_argument("--out", type=Path, required=True, help="sweep CSV path")

    ben = sub.add_parser("bench", help="runtime scaling over edge counts")
    ben.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128, 256])
    ben.add_argument("--repeats", type=int, default=3)
    ben.add_argument("--z", type=int, default=2)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--out", type=Path, help="bench JSON path")
    return parser


def _cmd_generate(args) -> int:
    if args.max_edges is not None:
        network = generate_within(
            args.family,
            args.seed,
            max_edges=args.max_edges,
            layer_range=tuple(args.layers) if args.layers else None,
            children_range=tuple(args.children) if args.children else None,
        )
    else:
        spec = family_spec(
            args.family,
            args.seed,
            layer_range=tuple(args.layers) if args.layers else None,
            children_range=tuple(args.children) if args.children else None,
        )
        network = generate_arborescence(spec)
    io.dump_network(network, args.out)
    print(f"{args.family}: {network.edge_count} edges, root {network.node_count}")
    return 0


def _cmd_sample(args) -> int:
    network = io.load_network(args.network)
    n_s = args.n_s if args.n_s is not None else args.z * network.edge_count
    cfg = FlowSamplerConfig(n_s=n_s, seed=args.seed)
    data = sample_flows(network, cfg, allow_undersampled=True)
    prefix = args.out
    if args.snr is not None:
        noisy, model = add_noise(data, SnrSetting(args.snr, args.noise_kind), seed=args.seed + 1)
        io.dump_data_csv(noisy, prefix.with_suffix(".csv"))
        io.dump_noise_model(model, prefix.with_suffix(".noise.json"))
        print(f"wrote {n_s} noisy samples for {network.edge_count} edges")
    else:
        io.dump_data_csv(data, prefix.with_suffix(".csv"))
        print(f"wrote {n_s} exact samples for {network.edge_count} edges")
    return 0


def _cmd_reconstruct(args) -> int:
    mode = args.mode
    if mode == "exact" and (args.noise or args.sigma2 is not None):
        mode = "noisy"
    result = harness.run_pipeline(
        args.data,
        mode=mode,
        noise_file=args.noise,
        sigma2=args.sigma2,
        alpha=args.alpha,
        transposed=args.transposed,
        allow_undersampled=args.allow_undersampled,
        zero_tol=args.zero_tol,
        out_prefix=args.out,
    )
    if args.format == "dot":
        print(to_dot(result))
    elif args.format == "csv":
        for s, t in result.edges:
            print(f"{s},{t}")
    else:
        print(json.dumps(io.result_to_json(result)))
    return 0


def _cmd_verify(args) -> int:
    result = io.load_result(args.result)
    network = io.load_network(args.network)
    if verify_against_truth(result, network):
        print("match")
        return 0
    print("mismatch")
    return 1


def _cmd_sweep(args) -> int:
    config = harness.SweepConfig(
        families=tuple(args.families),
        networks_per_family=args.networks,
        snr_list=tuple(args.snr),
        z_list=tuple(range(1, args.z_max + 1)),
        trials=args.trials,
        alpha=args.alpha,
        base_seed=args.seed,
        max_edges=args.max_edges,
        threads=args.threads,
        cell_budget_s=args.cell_budget,
    )
    result = harness.run_sweep(config, out_path=args.out)
    print(f"wrote {len(result.rows)} sweep rows to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    bench = harness.run_scaling_bench(
        sizes=tuple(args.sizes), repeats=args.repeats, z=args.z, seed=args.seed
    )
    doc = {
        "sizes": list(bench.sizes),
        "m_values": list(bench.m_values),
        "stage_seconds": {k: list(v) for k, v in bench.stage_seconds.items()},
        "slope_total": bench.slope_total,
        "slope_alg2_vs_m": bench.slope_alg2_vs_m,
        "slope_svd": bench.slope_svd,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    print(
        f"total slope {bench.slope_total:.2f}, "
        f"alg2-vs-m slope {bench.slope_alg2_vs_m:.2f}, "
        f"svd slope {bench.slope_svd:.2f}"
    )
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "sample": _cmd_sample,
    "reconstruct": _cmd_reconstruct,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FlowtopoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
