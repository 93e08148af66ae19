"""market-rounds command line: generate instances, run protocols, measure.

Exit codes: 0 ok, 1 configuration error, 2 run failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import instance_gen
from .ca_protocols import k_round_t_restricted, simultaneous_t_restricted
from .ca_reductions import run_xos_pipeline
from .core import (
    ConfigurationError,
    MatchingInstance,
    fraction_to_json,
    load_instance,
    matching_instance_to_json,
    welfare,
    xos_instance_to_json,
)
from .harness import compare_algos, load_config, run_batch
from .matching_oracle import emit_certificate, matching_size, max_matching
from .matching_protocols import (
    auction_matching,
    exact_matching_protocol,
    k_round_matching,
    simultaneous_deterministic_matching,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _parse_params(text: str | None) -> dict:
    out: dict = {}
    if not text:
        return out
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigurationError(f"bad --params entry {part!r}, expected key=value")
        key, value = part.split("=", 1)
        out[key.strip()] = int(value)
    return out


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_gen(args) -> int:
    p = _parse_params(args.params)
    seed = args.seed
    dist = args.dist
    try:
        if dist == "w-random":
            inst, meta = instance_gen.gen_w_random(p["n"], p["w"], seed)
            obj = matching_instance_to_json(inst)
        elif dist == "match-hard":
            inst, meta = instance_gen.gen_matching_hard(p["n"], seed)
            obj = matching_instance_to_json(inst)
        elif dist == "uniform":
            inst, meta = instance_gen.gen_uniform_matching(p["n"], p["degree"], seed)
            obj = matching_instance_to_json(inst)
        elif dist == "hidden-item":
            t_set, s_set, meta = instance_gen.gen_hidden_item(p["n"], p["k"], seed)
            obj = {"kind": "hidden-item", "n": p["n"], "T": sorted(t_set), "S": sorted(s_set)}
        elif dist == "xos-hard":
            players, meta = instance_gen.gen_xos_hard(p["k"], p["t_sets"], seed)
            obj = xos_instance_to_json(players)
        elif dist == "set-seek":
            family, p_set, meta = instance_gen.gen_set_seeking(p["k"], p["t_sets"], seed)
            obj = {
                "kind": "set-seeking",
                "x": meta.hidden["x"],
                "P": sorted(p_set),
                "family": [sorted(t) for t in family],
            }
        elif dist == "planted-t":
            players, meta = instance_gen.gen_planted_t_restricted(
                p["n_active"], p["t"], p["m"], p.get("extra_clauses", 0), seed
            )
            obj = xos_instance_to_json(players)
        elif dist == "random-xos":
            players, meta = instance_gen.gen_random_xos(
                p["n"], p["m"], p.get("clauses", 3), p.get("max_value", 8), seed
            )
            obj = xos_instance_to_json(players)
        else:
            raise ConfigurationError(f"unknown distribution {dist!r}")
    except KeyError as exc:
        raise ConfigurationError(f"missing --params entry {exc.args[0]!r} for {dist}") from exc
    obj["seed"] = seed
    obj["meta"] = meta.to_json()
    _emit(obj, args.out)
    return 0


def _load_matching(path: str) -> MatchingInstance:
    inst = load_instance(path)
    if not isinstance(inst, MatchingInstance):
        raise ConfigurationError("this command needs a matching instance")
    return inst


def _transcript_summary(tr) -> dict:
    return {
        "rounds": tr.total_rounds,
        "total_bits": tr.total_bits,
        "per_round_bits": list(tr.per_round_bits()),
        "max_player_bits": tr.max_player_bits(),
    }


def _cmd_match(args) -> int:
    inst = _load_matching(args.input)
    if args.algo == "simul-det":
        if args.bits is None:
            raise ConfigurationError("simul-det needs --bits (per-player budget l)")
        matching, tr = simultaneous_deterministic_matching(inst, args.bits)
        extra = {}
    elif args.algo == "auction":
        if args.delta is None:
            raise ConfigurationError("auction needs --delta")
        matching, tr, satisfied = auction_matching(
            inst,
            Fraction(args.delta),
            max_rounds=args.max_rounds,
            seed=args.seed,
            extended_budget=args.extended_budget,
        )
        extra = {"satisfied": satisfied, "stop": tr.meta.get("stop")}
    elif args.algo == "k-round":
        if args.k is None:
            raise ConfigurationError("k-round needs --k")
        matching, tr = k_round_matching(inst, args.k, seed=args.seed)
        extra = {}
    elif args.algo == "exact":
        matching, tr = exact_matching_protocol(inst, seed=args.seed)
        extra = {
            "phase1_rounds": tr.meta.get("phase1_rounds"),
            "augmentations": tr.meta.get("augmentations"),
        }
    else:
        raise ConfigurationError(f"unknown algorithm {args.algo!r}")
    result = {
        "algo": args.algo,
        "seed": args.seed,
        "matching": list(matching),
        "size": matching_size(matching),
        **_transcript_summary(tr),
        **extra,
    }
    if args.keep_transcripts:
        result["transcript"] = tr.to_json()
    _emit(result, args.out)
    return 0


def _cmd_opt(args) -> int:
    inst = _load_matching(args.input)
    matching = max_matching(inst)
    cert = emit_certificate(inst, matching)
    result = {
        "size": matching_size(matching),
        "matching": list(matching),
        "certificate": sorted(cert.high_price_items) if cert else None,
    }
    _emit(result, args.out)
    return 0


def _cmd_ca(args) -> int:
    players = load_instance(args.input)
    if isinstance(players, MatchingInstance):
        raise ConfigurationError("this command needs an XOS instance")
    if args.algo == "simul":
        alloc, tr = simultaneous_t_restricted(players, args.t, alloc_mode=args.mode)
    elif args.algo == "k-round":
        if args.k is None:
            raise ConfigurationError("k-round needs --k")
        alloc, tr = k_round_t_restricted(players, args.t, args.k, seed=args.seed)
    else:
        raise ConfigurationError(f"unknown algorithm {args.algo!r}")
    result = {
        "algo": args.algo,
        "t": args.t,
        "seed": args.seed,
        "allocation": [sorted(b) for b in alloc.bundles],
        "welfare": fraction_to_json(welfare(alloc, players)),
        **_transcript_summary(tr),
    }
    if args.keep_transcripts:
        result["transcript"] = tr.to_json()
    _emit(result, args.out)
    return 0


def _cmd_ca_pipeline(args) -> int:
    players = load_instance(args.input)
    if isinstance(players, MatchingInstance):
        raise ConfigurationError("this command needs an XOS instance")
    general = tuple(
        v.to_xos() if hasattr(v, "to_xos") else v for v in players
    )
    alloc, tr, diag = run_xos_pipeline(
        general, inner=args.inner, k=args.k or 1, mode=args.mode, seed=args.seed
    )
    result = {
        "inner": args.inner,
        "seed": args.seed,
        "allocation": [sorted(b) for b in alloc.bundles],
        "welfare": diag["welfare"],
        "chosen_mu": diag["chosen_mu"],
        "chosen_t": diag["chosen_t"],
        **_transcript_summary(tr),
    }
    if args.keep_transcripts:
        result["transcript"] = tr.to_json()
    _emit(result, args.out)
    return 0


def _cmd_batch(args) -> int:
    config = load_config(args.config)
    report = run_batch(config)
    if not config.out:
        _emit(report.to_json(), None)
    else:
        sys.stdout.write(
            f"batch done: {report.aggregates['ok']}/{report.aggregates['seeds']} seeds ok, "
            f"wrote {Path(config.out).with_suffix('.csv')}\n"
        )
    return 2 if report.failed_seeds else 0


def _cmd_compare(args) -> int:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8")) if str(
        args.config
    ).endswith(".json") else None
    if raw is None:
        try:
            import tomllib
        except ImportError:  # pragma: no cover
            import tomli as tomllib
        raw = tomllib.loads(Path(args.config).read_text(encoding="utf-8"))
    algos_raw = raw.pop("algos", None)
    if not algos_raw or len(algos_raw) < 2:
        raise ConfigurationError("compare config needs an 'algos' list with at least two entries")
    algos = [(a["algo"], dict(a.get("algo_params", {}))) for a in algos_raw]
    raw.setdefault("algo", algos[0][0])
    raw.setdefault("algo_params", algos[0][1])
    from .harness import ExperimentConfig

    known = set(ExperimentConfig.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
    config = ExperimentConfig(**raw)
    report = compare_algos(config, algos)
    if not config.out:
        _emit(report.to_json(), None)
    else:
        sys.stdout.write(f"compare done, wrote {Path(config.out).with_suffix('.csv')}\n")
    failed = any(rep.failed_seeds for rep in report.reports)
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="market-rounds", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate an instance")
    p.add_argument("--dist", required=True)
    p.add_argument("--params", default="")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("match", help="run a matching protocol")
    p.add_argument("--algo", required=True, choices=["simul-det", "auction", "k-round", "exact"])
    p.add_argument("--input", required=True)
    p.add_argument("--bits", type=int, default=None, help="per-player bit budget (simul-det)")
    p.add_argument("--delta", default=None, help="price increment, e.g. 1/4 (auction)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--max-rounds", type=int, default=None)
    p.add_argument("--extended-budget", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-transcripts", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("opt", help="exact maximum matching + certificate")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_opt)

    p = sub.add_parser("ca", help="run a t-restricted combinatorial auction protocol")
    p.add_argument("--algo", required=True, choices=["simul", "k-round"])
    p.add_argument("--input", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--mode", default="greedy", choices=["exact", "greedy"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-transcripts", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ca)

    p = sub.add_parser("ca-pipeline", help="level-projection + size-binning pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--inner", default="simul", choices=["simul", "k-round"])
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--mode", default="greedy", choices=["exact", "greedy"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-transcripts", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ca_pipeline)

    p = sub.add_parser("batch", help="seeded batch runs from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("compare", help="paired algorithm comparison from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - run failures map to exit 2
        print(f"run failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
