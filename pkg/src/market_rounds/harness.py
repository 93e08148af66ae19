"""Batch experiment orchestration: seeded runs, ratio statistics, reports.

A batch fixes one distribution and one algorithm, sweeps a seed range, and
measures welfare against ground truth per seed. Ground truth is the matching
oracle for matching runs and exact clause-choice enumeration for small XOS
runs; when enumeration is out of reach the planted welfare stands in and the
report flags the ratio as a lower-bound estimate. Reruns with the same config
produce byte-identical CSV output.
"""
from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Sequence

from . import instance_gen
from .ca_protocols import k_round_t_restricted, simultaneous_t_restricted
from .ca_reductions import run_xos_pipeline
from .core import (
    BinaryXOSValuation,
    ConfigurationError,
    XOSValuation,
    fraction_to_json,
    welfare,
)
from .matching_oracle import matching_size, max_matching
from .matching_protocols import (
    auction_matching,
    exact_matching_protocol,
    k_round_matching,
    simultaneous_deterministic_matching,
)

CSV_SCHEMA = "market-rounds-csv-1"
DEFAULT_COMBO_CAP = 200_000

MATCHING_DISTS = {"w-random", "match-hard", "uniform"}
XOS_DISTS = {"xos-hard", "planted-t", "random-xos"}
MATCHING_ALGOS = {"simul-det", "auction", "k-round", "exact"}
XOS_ALGOS = {"ca-simul", "ca-k-round", "ca-pipeline"}


@dataclass(frozen=True)
class ExperimentConfig:
    dist: str
    dist_params: dict
    algo: str
    algo_params: dict = field(default_factory=dict)
    seed_start: int = 0
    seed_count: int = 1
    out: str | None = None
    combo_cap: int = DEFAULT_COMBO_CAP
    keep_transcripts: bool = False
    workers: int = 1

    def validate(self) -> None:
        if self.seed_count < 1:
            raise ConfigurationError("seed_count must be at least 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if self.dist in MATCHING_DISTS:
            if self.algo not in MATCHING_ALGOS:
                raise ConfigurationError(
                    f"algorithm {self.algo!r} does not run on matching instances"
                )
        elif self.dist in XOS_DISTS:
            if self.algo not in XOS_ALGOS:
                raise ConfigurationError(
                    f"algorithm {self.algo!r} does not run on XOS instances"
                )
        else:
            raise ConfigurationError(f"unknown batchable distribution {self.dist!r}")
        _generate(self, self.seed_start)  # parameter check before the sweep starts


def load_config(path: str | Path) -> ExperimentConfig:
    """Read an ExperimentConfig from a TOML or JSON file."""
    text = Path(path).read_bytes()
    if str(path).endswith(".json"):
        obj = json.loads(text.decode("utf-8"))
    else:
        try:
            import tomllib  # Python >= 3.11
        except ImportError:  # pragma: no cover
            import tomli as tomllib
        obj = tomllib.loads(text.decode("utf-8"))
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    extra = set(obj) - known
    if extra:
        raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
    return ExperimentConfig(**obj)


# ---------------------------------------------------------------------------
# Ground truth


def xos_exact_optimal_welfare(
    players: Sequence[XOSValuation | BinaryXOSValuation], combo_cap: int = DEFAULT_COMBO_CAP
) -> Fraction | None:
    """Exact optimum by enumerating one clause choice per player.

    For a fixed clause choice the valuations are additive, so every item goes
    to its highest bidder; maximizing over all clause-choice combinations is
    exhaustive. Returns None when the combination count exceeds combo_cap.
    """
    counts = []
    for v in players:
        k = len(v.clause_sets) if isinstance(v, BinaryXOSValuation) else len(v.clauses)
        counts.append(max(1, k))
    combos = 1
    for c in counts:
        combos *= c
        if combos > combo_cap:
            return None
    m = players[0].m
    weight_tables = []
    for v in players:
        if isinstance(v, BinaryXOSValuation):
            tables = [{j: v.mu for j in t} for t in v.clause_sets] or [{}]
        else:
            tables = [dict(c.values) for c in v.clauses]
        weight_tables.append(tables)
    best = Fraction(0)
    for choice in product(*(range(len(t)) for t in weight_tables)):
        total = Fraction(0)
        per_item: dict[int, Fraction] = {}
        for i, c in enumerate(choice):
            for j, val in weight_tables[i][c].items():
                if val > per_item.get(j, Fraction(0)):
                    per_item[j] = val
        total = sum(per_item.values(), Fraction(0))
        if total > best:
            best = total
    return best


# ---------------------------------------------------------------------------
# Per-seed execution


@dataclass(frozen=True)
class SeedRecord:
    seed: int
    n: int
    m: int
    welfare_alg: Fraction
    welfare_opt: Fraction | None
    opt_kind: str  # exact | planted | none
    ratio: float | None
    rounds: int
    total_bits: int
    max_player_bits: int
    error: str = ""
    transcript: dict | None = None


def _generate(config: ExperimentConfig, seed: int):
    p = config.dist_params
    if config.dist == "w-random":
        return instance_gen.gen_w_random(int(p["n"]), int(p["w"]), seed)
    if config.dist == "match-hard":
        return instance_gen.gen_matching_hard(int(p["n"]), seed)
    if config.dist == "uniform":
        return instance_gen.gen_uniform_matching(int(p["n"]), int(p["degree"]), seed)
    if config.dist == "xos-hard":
        return instance_gen.gen_xos_hard(int(p["k"]), int(p["t_sets"]), seed)
    if config.dist == "planted-t":
        return instance_gen.gen_planted_t_restricted(
            int(p["n_active"]), int(p["t"]), int(p["m"]), int(p.get("extra_clauses", 0)), seed
        )
    if config.dist == "random-xos":
        return instance_gen.gen_random_xos(
            int(p["n"]), int(p["m"]), int(p.get("clauses", 3)), int(p.get("max_value", 8)), seed
        )
    raise ConfigurationError(f"unknown distribution {config.dist!r}")


def _run_matching(config: ExperimentConfig, inst, seed: int):
    p = config.algo_params
    if config.algo == "simul-det":
        matching, tr = simultaneous_deterministic_matching(inst, int(p["l"]))
    elif config.algo == "auction":
        matching, tr, _ = auction_matching(
            inst,
            Fraction(str(p["delta"])),
            max_rounds=int(p["max_rounds"]) if "max_rounds" in p else None,
            seed=seed,
            extended_budget=bool(p.get("extended_budget", False)),
        )
    elif config.algo == "k-round":
        matching, tr = k_round_matching(inst, int(p["k"]), seed=seed)
    elif config.algo == "exact":
        matching, tr = exact_matching_protocol(inst, seed=seed)
    else:
        raise ConfigurationError(f"unknown matching algorithm {config.algo!r}")
    return Fraction(matching_size(matching)), tr


def _run_xos(config: ExperimentConfig, players, seed: int):
    p = config.algo_params
    if config.algo == "ca-simul":
        alloc, tr = simultaneous_t_restricted(
            players, int(p["t"]), alloc_mode=p.get("mode", "greedy")
        )
    elif config.algo == "ca-k-round":
        alloc, tr = k_round_t_restricted(players, int(p["t"]), int(p["k"]), seed=seed)
    elif config.algo == "ca-pipeline":
        alloc, tr, _ = run_xos_pipeline(
            players,
            inner=p.get("inner", "simul"),
            k=int(p.get("k", 1)),
            mode=p.get("mode", "greedy"),
            seed=seed,
        )
    else:
        raise ConfigurationError(f"unknown XOS algorithm {config.algo!r}")
    return welfare(alloc, players), tr


def run_seed(config: ExperimentConfig, seed: int) -> SeedRecord:
    instance, meta = _generate(config, seed)
    if config.dist in MATCHING_DISTS:
        inst = instance
        alg_welfare, tr = _run_matching(config, inst, seed)
        opt = Fraction(matching_size(max_matching(inst)))
        opt_kind = "exact"
        n, m = inst.n, inst.n
    else:
        players = instance
        alg_welfare, tr = _run_xos(config, players, seed)
        opt = xos_exact_optimal_welfare(players, config.combo_cap)
        if opt is not None:
            opt_kind = "exact"
        elif meta.welfare is not None:
            opt, opt_kind = meta.welfare, "planted"
        else:
            opt_kind = "none"
        n, m = len(players), players[0].m
    ratio = None
    if opt is not None:
        ratio = float(opt / alg_welfare) if alg_welfare > 0 else float("inf")
    return SeedRecord(
        seed=seed,
        n=n,
        m=m,
        welfare_alg=alg_welfare,
        welfare_opt=opt,
        opt_kind=opt_kind,
        ratio=ratio,
        rounds=tr.total_rounds,
        total_bits=tr.total_bits,
        max_player_bits=tr.max_player_bits(),
        transcript=tr.to_json() if config.keep_transcripts else None,
    )


def _run_seed_guarded(config: ExperimentConfig, seed: int) -> SeedRecord:
    try:
        return run_seed(config, seed)
    except Exception as exc:  # per-seed failures recorded, batch continues
        return SeedRecord(
            seed=seed,
            n=0,
            m=0,
            welfare_alg=Fraction(0),
            welfare_opt=None,
            opt_kind="none",
            ratio=None,
            rounds=0,
            total_bits=0,
            max_player_bits=0,
            error=f"{type(exc).__name__}: {exc}",
        )


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    records: tuple[SeedRecord, ...]
    aggregates: dict
    failed_seeds: tuple[int, ...]

    def csv_text(self) -> str:
        return _records_csv(self.records, self.config)

    def to_json(self) -> dict:
        cfg = asdict(self.config)
        out = {
            "schema": CSV_SCHEMA,
            "config": cfg,
            "aggregates": self.aggregates,
            "records": [_record_json(r) for r in self.records],
            "failed_seeds": list(self.failed_seeds),
        }
        return out


def _record_json(r: SeedRecord) -> dict:
    d = {
        "seed": r.seed,
        "n": r.n,
        "m": r.m,
        "welfare_alg": fraction_to_json(r.welfare_alg),
        "welfare_opt": fraction_to_json(r.welfare_opt) if r.welfare_opt is not None else None,
        "opt_kind": r.opt_kind,
        "ratio": r.ratio,
        "rounds": r.rounds,
        "total_bits": r.total_bits,
        "max_player_bits": r.max_player_bits,
        "error": r.error,
    }
    if r.transcript is not None:
        d["transcript"] = r.transcript
    return d


def _fmt_ratio(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.6f}" if x != float("inf") else "inf"


def _records_csv(records: Sequence[SeedRecord], config: ExperimentConfig) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "schema",
            "seed",
            "dist",
            "algo",
            "n",
            "m",
            "welfare_alg",
            "welfare_opt",
            "opt_kind",
            "ratio",
            "rounds",
            "total_bits",
            "max_player_bits",
            "error",
        ]
    )
    for r in records:
        writer.writerow(
            [
                CSV_SCHEMA,
                r.seed,
                config.dist,
                config.algo,
                r.n,
                r.m,
                str(fraction_to_json(r.welfare_alg)),
                str(fraction_to_json(r.welfare_opt)) if r.welfare_opt is not None else "",
                r.opt_kind,
                _fmt_ratio(r.ratio),
                r.rounds,
                r.total_bits,
                r.max_player_bits,
                r.error,
            ]
        )
    return buf.getvalue()


def _aggregate(records: Sequence[SeedRecord]) -> dict:
    ok = [r for r in records if not r.error]
    out: dict = {"seeds": len(records), "ok": len(ok), "failed": len(records) - len(ok)}
    planted = any(r.opt_kind == "planted" for r in ok)
    if planted:
        out["ratio_basis"] = "planted-lower-bound"
    for name, values in (
        ("welfare", [float(r.welfare_alg) for r in ok]),
        ("ratio", [r.ratio for r in ok if r.ratio is not None and r.ratio != float("inf")]),
        ("rounds", [float(r.rounds) for r in ok]),
        ("total_bits", [float(r.total_bits) for r in ok]),
        ("max_player_bits", [float(r.max_player_bits) for r in ok]),
    ):
        if not values:
            continue
        out[name] = {
            "mean": statistics.fmean(values),
            "min": min(values),
            "max": max(values),
            "stddev": statistics.stdev(values) if len(values) > 1 else 0.0,
        }
    return out


def run_batch(config: ExperimentConfig) -> ExperimentReport:
    """Run generator + protocol + oracle per seed and aggregate.

    Per-seed failures are recorded and the batch continues; the report (and
    the CLI exit code) carries the failures.
    """
    config.validate()
    seeds = list(range(config.seed_start, config.seed_start + config.seed_count))
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_seed_guarded, [config] * len(seeds), seeds))
    else:
        records = [_run_seed_guarded(config, s) for s in seeds]
    records.sort(key=lambda r: r.seed)
    failed = tuple(r.seed for r in records if r.error)
    report = ExperimentReport(config, tuple(records), _aggregate(records), failed)
    if config.out:
        _write_report(report, config.out)
    return report


def _write_report(report: ExperimentReport, out: str) -> None:
    base = Path(out)
    base.parent.mkdir(parents=True, exist_ok=True)
    base.with_suffix(".csv").write_text(report.csv_text(), encoding="utf-8")
    base.with_suffix(".json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Paired comparisons


@dataclass(frozen=True)
class ComparisonReport:
    config: ExperimentConfig
    algos: tuple[tuple[str, dict], ...]
    reports: tuple[ExperimentReport, ...]
    paired: dict

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = [name for name, _ in self.algos]
        head = ["schema", "seed"]
        for idx, name in enumerate(names):
            head += [f"algo{idx}_{name}_welfare", f"algo{idx}_{name}_ratio"]
        for idx in range(1, len(names)):
            head.append(f"delta_welfare_{names[idx]}_vs_{names[0]}")
        writer.writerow(head)
        per_algo = [rep.records for rep in self.reports]
        for row_idx in range(len(per_algo[0])):
            row: list = [CSV_SCHEMA, per_algo[0][row_idx].seed]
            for records in per_algo:
                r = records[row_idx]
                row += [str(fraction_to_json(r.welfare_alg)), _fmt_ratio(r.ratio)]
            base_w = per_algo[0][row_idx].welfare_alg
            for records in per_algo[1:]:
                row.append(str(fraction_to_json(records[row_idx].welfare_alg - base_w)))
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "schema": CSV_SCHEMA,
            "config": asdict(self.config),
            "algos": [{"algo": a, "algo_params": p} for a, p in self.algos],
            "paired": self.paired,
            "per_algo_aggregates": [rep.aggregates for rep in self.reports],
        }


def compare_algos(
    config: ExperimentConfig, algos: Sequence[tuple[str, dict]]
) -> ComparisonReport:
    """Run several algorithms over the same seeds and report paired deltas."""
    if len(algos) < 2:
        raise ConfigurationError("compare needs at least two algorithms")
    reports = []
    for name, params in algos:
        sub = ExperimentConfig(
            dist=config.dist,
            dist_params=config.dist_params,
            algo=name,
            algo_params=params,
            seed_start=config.seed_start,
            seed_count=config.seed_count,
            out=None,
            combo_cap=config.combo_cap,
            keep_transcripts=False,
            workers=config.workers,
        )
        reports.append(run_batch(sub))
    paired: dict = {}
    base = reports[0].records
    for idx in range(1, len(reports)):
        deltas = [
            float(r.welfare_alg - b.welfare_alg)
            for r, b in zip(reports[idx].records, base)
            if not r.error and not b.error
        ]
        key = f"{algos[idx][0]}_vs_{algos[0][0]}"
        paired[key] = {
            "mean_delta_welfare": statistics.fmean(deltas) if deltas else 0.0,
            "stderr_delta_welfare": (
                statistics.stdev(deltas) / len(deltas) ** 0.5 if len(deltas) > 1 else 0.0
            ),
        }
    report = ComparisonReport(config, tuple(tuple(a) for a in algos), tuple(reports), paired)
    if config.out:
        base_path = Path(config.out)
        base_path.parent.mkdir(parents=True, exist_ok=True)
        base_path.with_suffix(".csv").write_text(report.csv_text(), encoding="utf-8")
        base_path.with_suffix(".json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return report
