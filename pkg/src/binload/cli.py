"""Command-line harness: estimate | simulate | tables | compare.

Every run resolves its configuration in three layers -- built-in defaults,
then a YAML ``--config`` file, then explicit flags -- and stamps a manifest
(command, resolved configuration, seed, tool version) into every output
file.  JSON files additionally carry a timestamp; CSV files omit it so that
re-running the same command reproduces them byte for byte.

Machine files store raw fractions at full round-trip precision with a '.'
decimal separator; the human tables printed to stdout show three-decimal
percentages.

Exit codes: 0 success, 2 invalid configuration (diagnostic on stderr),
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from binload import __version__
from binload.analytic import DEFAULT_TRUNCATION, PoissonTruncation, run_estimate
from binload.baselines import Baseline, BaselineConfig, run_baseline
from binload.model import (
    AlgorithmSpec,
    EstimateReport,
    InvariantViolation,
    PopulationSpec,
    ValidationError,
)
from binload.sim import SimStats, TrialConfig, aggregate_outcomes, simulate_many

# The four multi-round configurations singled out for the head-to-head
# comparison, each named for what it optimizes.
SCENARIOS: dict[str, AlgorithmSpec] = {
    "min-max-load": AlgorithmSpec(
        rounds=3, messages_per_round=(2, 5, 5), capacity_per_round=(2, 2, 2), ranked=True
    ),
    "min-rounds": AlgorithmSpec(
        rounds=2, messages_per_round=(2, 5), capacity_per_round=(2, 3), ranked=True
    ),
    "min-messages": AlgorithmSpec(
        rounds=3, messages_per_round=(1, 2, 2), capacity_per_round=(2, 3, 3), ranked=True
    ),
    "max-termination": AlgorithmSpec(
        rounds=3, messages_per_round=(1, 4, 5), capacity_per_round=(2, 2, 3), ranked=True
    ),
}

BASELINE_NAMES: tuple[str, ...] = tuple(b.value for b in Baseline)
ALL_COMPARE_NAMES: tuple[str, ...] = tuple(SCENARIOS) + BASELINE_NAMES

TABLE_MESSAGES: tuple[int, ...] = (1, 2, 3, 4, 5, 10, 20)
LIMIT_PROXY_MESSAGES = 200  # stands in for the M -> infinity row, footnoted
TABLE_CAPS: tuple[int, ...] = (2, 3)


# --------------------------------------------------------------------------
# configuration resolution


def _parse_count(value) -> int:
    """Integer flag value, accepting scientific notation like 1e6."""
    if isinstance(value, bool):
        raise ValidationError(f"expected a count, got {value!r}")
    if isinstance(value, int):
        number = float(value)
    else:
        try:
            number = float(str(value))
        except ValueError:
            raise ValidationError(f"not a number: {value!r}") from None
    rounded = int(round(number))
    if not math.isfinite(number) or abs(number - rounded) > 1e-6 * max(1.0, abs(number)):
        raise ValidationError(f"not an integral count: {value!r}")
    return rounded


def _parse_int_tuple(value) -> tuple[int, ...]:
    """Comma list / YAML list / scalar -> tuple of ints."""
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [piece for piece in str(value).split(",") if piece.strip() != ""]
    if not items:
        raise ValidationError(f"empty list: {value!r}")
    return tuple(_parse_count(item) for item in items)


def _parse_name_tuple(value) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        items = [str(v) for v in value]
    else:
        items = [piece.strip() for piece in str(value).split(",")]
    return tuple(item for item in items if item)


_DEFAULTS: dict[str, dict] = {
    "estimate": dict(
        n=10**6, balls=None, M=(1,), L=(2,), ranked=False, seed=0,
        out_dir=None, format="both", epsilon=None, hard_cap=None,
    ),
    "simulate": dict(
        n=10**6, balls=None, M=(1,), L=(2,), ranked=False, trials=1, seed=0,
        out_dir=None, format="both", epsilon=None, hard_cap=None,
    ),
    "tables": dict(
        which="all", n=10**6, balls=None, trials=0, seed=0,
        out_dir=None, format="both", epsilon=None, hard_cap=None,
    ),
    "compare": dict(
        all=False, only=None, n=10**6, balls=None, trials=1, seed=0,
        cap=3, d=5, rounds=3,
        out_dir=None, format="both", epsilon=None, hard_cap=None,
    ),
}


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ValidationError(f"malformed config file {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError(f"config file {path} must hold a mapping")
    return data


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    """defaults <- config file <- explicit flags, with strict key checking."""
    merged = dict(_DEFAULTS[command])
    config_path = getattr(args, "config", None)
    if config_path:
        file_cfg = _load_config_file(config_path)
        unknown = set(file_cfg) - set(merged)
        if unknown:
            raise ValidationError(
                f"unknown config keys for '{command}': {', '.join(sorted(unknown))}"
            )
        merged.update(file_cfg)
    for key in merged:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value

    # normalize numeric shapes
    merged["n"] = _parse_count(merged["n"])
    if merged["n"] < 1:
        raise ValidationError(f"n must be >= 1, got {merged['n']}")
    merged["balls"] = (
        merged["n"] if merged["balls"] is None else _parse_count(merged["balls"])
    )
    merged["seed"] = _parse_count(merged["seed"])
    if "trials" in merged:
        merged["trials"] = _parse_count(merged["trials"])
        if merged["trials"] < 0:
            raise ValidationError(f"trials must be >= 0, got {merged['trials']}")
    if "M" in merged:
        merged["M"] = _parse_int_tuple(merged["M"])
        merged["L"] = _parse_int_tuple(merged["L"])
        merged["M"], merged["L"] = _broadcast(merged["M"], merged["L"])
    if merged.get("epsilon") is not None:
        merged["epsilon"] = float(merged["epsilon"])
    if merged.get("hard_cap") is not None:
        merged["hard_cap"] = _parse_count(merged["hard_cap"])
    if "ranked" in merged:
        merged["ranked"] = bool(merged["ranked"])
    if "which" in merged:
        merged["which"] = str(merged["which"])
        if merged["which"] not in {"1", "2", "3", "4", "all"}:
            raise ValidationError(
                f"--which must be one of 1,2,3,4,all; got {merged['which']!r}"
            )
    if "cap" in merged:
        merged["cap"] = _parse_count(merged["cap"])
        merged["d"] = _parse_count(merged["d"])
        merged["rounds"] = _parse_count(merged["rounds"])
    if merged.get("only") is not None:
        merged["only"] = _parse_name_tuple(merged["only"])
    if merged.get("format") not in {"csv", "json", "both"}:
        raise ValidationError(f"--format must be csv, json or both; got {merged['format']!r}")
    if merged.get("out_dir") is None:
        merged["out_dir"] = os.environ.get("BINLOAD_OUT_DIR", "out")
    return merged


def _broadcast(M: tuple[int, ...], L: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """A singleton --M or --L stretches to the other list's round count."""
    if len(M) == 1 and len(L) > 1:
        M = M * len(L)
    if len(L) == 1 and len(M) > 1:
        L = L * len(M)
    if len(M) != len(L):
        raise ValidationError(
            f"--M and --L disagree on round count: {len(M)} vs {len(L)}"
        )
    return M, L


def _build_spec(cfg: dict) -> AlgorithmSpec:
    return AlgorithmSpec(
        rounds=len(cfg["M"]),
        messages_per_round=cfg["M"],
        capacity_per_round=cfg["L"],
        ranked=cfg["ranked"],
    )


def _build_pop(cfg: dict) -> PopulationSpec:
    return PopulationSpec(bins=cfg["n"], balls=cfg["balls"])


def _build_trunc(cfg: dict) -> PoissonTruncation:
    if cfg.get("epsilon") is None and cfg.get("hard_cap") is None:
        return DEFAULT_TRUNCATION
    return PoissonTruncation(
        epsilon=cfg["epsilon"] if cfg.get("epsilon") is not None else DEFAULT_TRUNCATION.epsilon,
        hard_cap=cfg.get("hard_cap"),
    )


# --------------------------------------------------------------------------
# output plumbing


@dataclass(frozen=True)
class RunManifest:
    """Run metadata attached to every output file."""

    command: str
    version: str
    seed: int
    config: dict

    def as_dict(self, with_timestamp: bool) -> dict:
        payload = {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
        }
        if with_timestamp:
            payload["timestamp"] = datetime.now(timezone.utc).isoformat()
        return payload


def _manifest(command: str, cfg: dict) -> RunManifest:
    serializable = {
        key: (list(value) if isinstance(value, tuple) else value)
        for key, value in sorted(cfg.items())
    }
    return RunManifest(
        command=command, version=__version__, seed=cfg.get("seed", 0), config=serializable
    )


def _fmt(value) -> str:
    """Full-precision cell: repr round-trips floats exactly (<= 17 digits)."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_json(path: Path, manifest: RunManifest, payload: dict) -> None:
    document = {"manifest": manifest.as_dict(with_timestamp=True), **payload}
    path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")


def _write_csv(
    path: Path,
    manifest: RunManifest,
    header: list[str],
    rows: list[list],
    footers: list[str] = (),
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        stamp = json.dumps(manifest.as_dict(with_timestamp=False), sort_keys=True)
        handle.write(f"# manifest: {stamp}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])
        for line in footers:
            handle.write(f"# {line}\n")


def _out_dir(cfg: dict) -> Path:
    path = Path(cfg["out_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(cfg: dict, name: str, manifest: RunManifest, json_payload: dict,
          csv_header: list[str], csv_rows: list[list], csv_footers: list[str] = ()) -> list[Path]:
    directory = _out_dir(cfg)
    written = []
    if cfg["format"] in ("json", "both"):
        target = directory / f"{name}.json"
        _write_json(target, manifest, json_payload)
        written.append(target)
    if cfg["format"] in ("csv", "both"):
        target = directory / f"{name}.csv"
        _write_csv(target, manifest, csv_header, csv_rows, csv_footers)
        written.append(target)
    return written


def _pct(fraction: float) -> str:
    return f"{100.0 * fraction:.3f}"


# --------------------------------------------------------------------------
# estimate


def _summary_stats(summary) -> dict:
    return {
        "mean": summary.mean,
        "min": summary.minimum,
        "max": summary.maximum,
        "stddev": summary.stddev,
    }


def _report_payload(report: EstimateReport) -> dict:
    rounds = []
    for record in report.per_round:
        rounds.append(
            {
                "round": record.state_after.round_index - 1,
                "commit_probability": record.commit_probability,
                "survivor_fraction": record.survivor_fraction,
                "rank_response_probs": (
                    list(record.rank_probabilities)
                    if record.rank_probabilities is not None
                    else None
                ),
                "remaining_fraction_after": record.state_after.remaining_fraction,
                "loads_after": list(record.state_after.loads.fractions),
            }
        )
    return {
        "rounds": rounds,
        "final": {
            "remaining_fraction": report.final_remaining_fraction,
            "expected_remaining_balls": report.final_remaining_expected,
            "failure_probability_bound": report.failure_probability_bound,
            "total_messages_upper_bound": report.total_messages_upper_bound,
            "requests_per_bin": report.requests_per_bin,
            "terminated": report.terminated,
            "concentration_warning": report.concentration_warning,
        },
    }


def cmd_estimate(cfg: dict) -> int:
    spec = _build_spec(cfg)
    pop = _build_pop(cfg)
    report = run_estimate(spec, pop, _build_trunc(cfg))
    manifest = _manifest("estimate", cfg)
    payload = _report_payload(report)

    width = spec.capacity_per_round[-1] + 1
    header = [
        "round", "messages", "capacity", "ranked",
        "commit_probability", "survivor_fraction", "remaining_fraction_after",
    ] + [f"load_{l}" for l in range(width)]
    rows = []
    for index, record in enumerate(report.per_round):
        loads = record.state_after.loads.padded(width - 1).fractions
        rows.append(
            [
                index + 1,
                spec.messages_per_round[index],
                spec.capacity_per_round[index],
                spec.ranked,
                record.commit_probability,
                record.survivor_fraction,
                record.state_after.remaining_fraction,
            ]
            + list(loads)
        )
    final = payload["final"]
    footers = [f"{key}: {_fmt(value)}" for key, value in final.items()]
    files = _emit(cfg, "estimate", manifest, payload, header, rows, footers)

    print(f"iterative estimate for M={list(spec.messages_per_round)} "
          f"L={list(spec.capacity_per_round)} "
          f"({'ranked' if spec.ranked else 'unranked'}), "
          f"n={pop.bins} bins, {pop.balls} balls")
    print("round  messages  capacity  remaining%")
    for index, record in enumerate(report.per_round):
        print(
            f"{index + 1:>5}  {spec.messages_per_round[index]:>8}  "
            f"{spec.capacity_per_round[index]:>8}  "
            f"{_pct(record.state_after.remaining_fraction):>10}"
        )
    final_loads = report.per_round[-1].state_after.loads.fractions
    loads_text = "  ".join(
        f"load {l}: {_pct(f)}%" for l, f in enumerate(final_loads)
    )
    print(f"final bin loads: {loads_text}")
    print(f"expected unplaced balls: {report.final_remaining_expected:.6g}")
    if report.terminated:
        print(
            "termination: expected stragglers < 1 "
            f"(failure probability bound {report.failure_probability_bound:.3g})"
        )
    print(f"messages upper bound: {report.total_messages_upper_bound:.6g} "
          f"({report.total_messages_upper_bound / pop.balls:.4g} per ball)")
    for path in files:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# simulate


def _stats_payload(stats: SimStats) -> dict:
    rounds = []
    for r in range(len(stats.remaining_fraction)):
        rounds.append(
            {
                "round": r + 1,
                "remaining_fraction": _summary_stats(stats.remaining_fraction[r]),
                "load_fractions": [
                    _summary_stats(s) for s in stats.load_fractions[r]
                ],
                "requests_sent": _summary_stats(stats.requests_sent[r]),
                "responses_sent": _summary_stats(stats.responses_sent[r]),
            }
        )
    return {
        "trials": stats.trials,
        "rounds": rounds,
        "commits_total": _summary_stats(stats.commits_total),
        "messages_total": _summary_stats(stats.messages_total),
    }


def _stats_csv(stats: SimStats) -> tuple[list[str], list[list]]:
    header = ["round", "metric", "index", "mean", "min", "max", "stddev"]
    rows: list[list] = []

    def push(round_label, metric, index, summary):
        rows.append(
            [round_label, metric, index, summary.mean, summary.minimum,
             summary.maximum, summary.stddev]
        )

    for r in range(len(stats.remaining_fraction)):
        push(r + 1, "remaining_fraction", "", stats.remaining_fraction[r])
        for l, summary in enumerate(stats.load_fractions[r]):
            push(r + 1, "load_fraction", l, summary)
        push(r + 1, "requests_sent", "", stats.requests_sent[r])
        push(r + 1, "responses_sent", "", stats.responses_sent[r])
    push("all", "commits_total", "", stats.commits_total)
    push("all", "messages_total", "", stats.messages_total)
    return header, rows


def cmd_simulate(cfg: dict) -> int:
    if cfg["trials"] < 1:
        raise ValidationError("simulate needs --trials >= 1")
    spec = _build_spec(cfg)
    pop = _build_pop(cfg)
    stats = simulate_many(
        TrialConfig(spec=spec, pop=pop, seed=cfg["seed"], trials=cfg["trials"])
    )
    manifest = _manifest("simulate", cfg)
    header, rows = _stats_csv(stats)
    files = _emit(cfg, "simulate", manifest, _stats_payload(stats), header, rows)

    print(f"simulated {stats.trials} trial(s) of M={list(spec.messages_per_round)} "
          f"L={list(spec.capacity_per_round)} "
          f"({'ranked' if spec.ranked else 'unranked'}), "
          f"n={pop.bins} bins, {pop.balls} balls, seed={cfg['seed']}")
    print("round  remaining% (avg)  (min)     (max)     (stddev)")
    for r, summary in enumerate(stats.remaining_fraction):
        print(
            f"{r + 1:>5}  {_pct(summary.mean):>15}  {_pct(summary.minimum):>8}  "
            f"{_pct(summary.maximum):>8}  {100.0 * summary.stddev:>9.5f}"
        )
    print(f"messages per ball (avg): {stats.messages_total.mean / pop.balls:.4f}")
    for path in files:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# tables


def _table_rows(ranked: bool, cap: int, cfg: dict) -> list[dict]:
    """One published-style half-table: per M, estimated plus optional sims."""
    pop = _build_pop(cfg)
    trunc = _build_trunc(cfg)
    trials = cfg["trials"]
    rows = []
    for label, messages in [(str(m), m) for m in TABLE_MESSAGES] + [
        ("limit", LIMIT_PROXY_MESSAGES)
    ]:
        spec = AlgorithmSpec(
            rounds=1, messages_per_round=(messages,), capacity_per_round=(cap,),
            ranked=ranked,
        )
        report = run_estimate(spec, pop, trunc)
        entry = {
            "row": label,
            "evaluated_messages": messages,
            "estimated_remaining": report.final_remaining_fraction,
            "estimated_loads": list(report.per_round[-1].state_after.loads.fractions),
            "simulated": None,
        }
        if trials > 0 and label != "limit":
            stats = simulate_many(
                TrialConfig(spec=spec, pop=pop, seed=cfg["seed"], trials=trials)
            )
            entry["simulated"] = {
                "remaining": _summary_stats(stats.remaining_fraction[0]),
                "loads": [_summary_stats(s) for s in stats.load_fractions[0]],
            }
        rows.append(entry)
    return rows


_TABLE_KINDS = {
    "1": ("remaining", False),
    "2": ("loads", False),
    "3": ("remaining", True),
    "4": ("loads", True),
}


def cmd_tables(cfg: dict) -> int:
    selected = ["1", "2", "3", "4"] if cfg["which"] == "all" else [cfg["which"]]
    manifest = _manifest("tables", cfg)
    json_tables: dict[str, dict] = {}
    csv_rows: list[list] = []

    # tables 1/3 and 2/4 share the same half-table sweeps; compute each
    # (ranked, cap) pair once
    needed = sorted({_TABLE_KINDS[t][1] for t in selected})
    sweeps: dict[tuple[bool, int], list[dict]] = {}
    for ranked in needed:
        for cap in TABLE_CAPS:
            sweeps[(ranked, cap)] = _table_rows(ranked, cap, cfg)

    for table in selected:
        kind, ranked = _TABLE_KINDS[table]
        halves = {}
        for cap in TABLE_CAPS:
            rows = sweeps[(ranked, cap)]
            halves[str(cap)] = rows
            for entry in rows:
                simulated = entry["simulated"]
                if kind == "remaining":
                    csv_rows.append(
                        [
                            table, cap, entry["row"], entry["evaluated_messages"], "",
                            entry["estimated_remaining"],
                            simulated["remaining"]["mean"] if simulated else None,
                            simulated["remaining"]["max"] if simulated else None,
                            simulated["remaining"]["stddev"] if simulated else None,
                        ]
                    )
                else:
                    for l, value in enumerate(entry["estimated_loads"]):
                        sim_loads = simulated["loads"] if simulated else None
                        have = sim_loads is not None and l < len(sim_loads)
                        csv_rows.append(
                            [
                                table, cap, entry["row"], entry["evaluated_messages"], l,
                                value,
                                sim_loads[l]["mean"] if have else None,
                                sim_loads[l]["max"] if have else None,
                                sim_loads[l]["stddev"] if have else None,
                            ]
                        )
        json_tables[table] = {
            "kind": kind,
            "ranked": ranked,
            "halves": halves,
            "limit_row_note": f"evaluated at M={LIMIT_PROXY_MESSAGES}",
        }

    header = [
        "table", "capacity", "row", "evaluated_messages", "load",
        "estimated", "sim_avg", "sim_max", "sim_stddev",
    ]
    files = _emit(
        cfg, "tables", manifest, {"tables": json_tables}, header, csv_rows,
        [f"limit rows evaluated at M={LIMIT_PROXY_MESSAGES}"],
    )

    for table in selected:
        kind, ranked = _TABLE_KINDS[table]
        mode = "ranked" if ranked else "unranked"
        for cap in TABLE_CAPS:
            rows = sweeps[(ranked, cap)]
            title = (
                f"table {table}: "
                + ("remaining balls after round one" if kind == "remaining"
                   else "bin-load fractions after round one")
                + f" ({mode}, capacity {cap})"
            )
            print(title)
            if kind == "remaining":
                print("    M  estimated%       avg%       max%")
                for entry in rows:
                    simulated = entry["simulated"]
                    avg = (
                        _pct(simulated["remaining"]["mean"]) if simulated else "-"
                    )
                    top = (
                        _pct(simulated["remaining"]["max"]) if simulated else "-"
                    )
                    print(
                        f"{entry['row']:>5}  {_pct(entry['estimated_remaining']):>10}"
                        f"  {avg:>9}  {top:>9}"
                    )
            else:
                print("    M  " + "  ".join(f"load {l}%" for l in range(cap + 1)))
                for entry in rows:
                    cells = "  ".join(
                        f"{_pct(v):>7}" for v in entry["estimated_loads"]
                    )
                    print(f"{entry['row']:>5}  {cells}")
            print(f"    ('limit' row evaluated at M={LIMIT_PROXY_MESSAGES}; "
                  "simulation columns need --trials > 0 and skip the limit row)")
            print()
    for path in files:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# compare


def _baseline_config(name: str, cfg: dict) -> BaselineConfig:
    algorithm = Baseline(name)
    d = cfg["d"]
    if algorithm in (Baseline.H_RETRY, Baseline.STEMANN):
        d = 2
    rounds = cfg["rounds"]
    if algorithm == Baseline.H_RETRY:
        rounds = 3
    return BaselineConfig(
        algorithm=algorithm, n=cfg["n"], d=d, load_cap=cfg["cap"],
        rounds=rounds, seed=cfg["seed"],
    )


def _run_compare_entry(name: str, cfg: dict) -> SimStats:
    trials = max(1, cfg["trials"])
    pop = PopulationSpec(bins=cfg["n"], balls=cfg["n"])
    if name in SCENARIOS:
        return simulate_many(
            TrialConfig(spec=SCENARIOS[name], pop=pop, seed=cfg["seed"], trials=trials)
        )
    base = _baseline_config(name, cfg)
    trial_seeds = np.random.SeedSequence(cfg["seed"]).generate_state(trials, dtype=np.uint64)
    outcomes = [
        run_baseline(
            BaselineConfig(
                algorithm=base.algorithm, n=base.n, d=base.d,
                load_cap=base.load_cap, rounds=base.rounds, seed=int(s),
            )
        )
        for s in trial_seeds
    ]
    return aggregate_outcomes(outcomes, pop)


def cmd_compare(cfg: dict) -> int:
    if cfg["all"]:
        names = list(ALL_COMPARE_NAMES)
    elif cfg["only"]:
        names = list(cfg["only"])
    else:
        names = []
    if not names:
        raise ValidationError(
            "empty scenario list: pass --all or --only NAME[,NAME...]; "
            f"known names: {', '.join(ALL_COMPARE_NAMES)}"
        )
    unknown = [name for name in names if name not in ALL_COMPARE_NAMES]
    if unknown:
        raise ValidationError(
            f"unknown scenario name(s): {', '.join(unknown)}; "
            f"known names: {', '.join(ALL_COMPARE_NAMES)}"
        )

    results = {name: _run_compare_entry(name, cfg) for name in names}
    manifest = _manifest("compare", cfg)

    json_payload = {"scenarios": {}}
    header = ["scenario", "kind", "index", "mean", "min", "max", "stddev"]
    csv_rows: list[list] = []
    for name, stats in results.items():
        json_payload["scenarios"][name] = {
            "trials": stats.trials,
            "remaining_fraction": [
                _summary_stats(s) for s in stats.remaining_fraction
            ],
            "messages_total": _summary_stats(stats.messages_total),
            "final_load_fractions": [
                _summary_stats(s) for s in stats.load_fractions[-1]
            ],
        }
        for r, summary in enumerate(stats.remaining_fraction):
            csv_rows.append(
                [name, "remaining_fraction", r + 1, summary.mean,
                 summary.minimum, summary.maximum, summary.stddev]
            )
        m = stats.messages_total
        csv_rows.append(
            [name, "messages_total", "", m.mean, m.minimum, m.maximum, m.stddev]
        )
        for l, summary in enumerate(stats.load_fractions[-1]):
            csv_rows.append(
                [name, "final_load_fraction", l, summary.mean,
                 summary.minimum, summary.maximum, summary.stddev]
            )

    files = _emit(cfg, "compare", manifest, json_payload, header, csv_rows)

    n = cfg["n"]
    print(f"comparison at n={n}, trials={max(1, cfg['trials'])}, seed={cfg['seed']} "
          f"(baseline cap={cfg['cap']}, d={cfg['d']})")
    print(f"{'scenario':<18} {'rounds':>6} {'final remaining%':>17} {'msgs/ball':>10}")
    for name, stats in results.items():
        rounds = len(stats.remaining_fraction)
        final_pct = _pct(stats.remaining_fraction[-1].mean)
        per_ball = stats.messages_total.mean / n
        print(f"{name:<18} {rounds:>6} {final_pct:>17} {per_ball:>10.4f}")

    if "min-messages" in results and "stemann" in results and cfg["cap"] == 3:
        ours = results["min-messages"]
        theirs = results["stemann"]
        if len(ours.remaining_fraction) >= 2 and len(theirs.remaining_fraction) >= 2:
            our_two = ours.remaining_fraction[1].mean
            their_two = theirs.remaining_fraction[1].mean
            our_msgs = ours.messages_total.mean
            their_msgs = theirs.messages_total.mean
            wins = our_two <= their_two and our_msgs <= their_msgs
            print(
                "dominance check (min-messages vs stemann at cap 3): "
                f"remaining after two rounds {_pct(our_two)}% vs {_pct(their_two)}%, "
                f"messages/ball {our_msgs / n:.4f} vs {their_msgs / n:.4f} -> "
                + ("min-messages dominates" if wins else "no dominance")
            )
    for path in files:
        print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# wiring


def _add_shared_flags(parser: argparse.ArgumentParser, with_spec: bool, with_trials: bool) -> None:
    parser.add_argument("--n", help="number of bins (accepts 1e6 style)")
    parser.add_argument("--balls", help="number of balls (default: same as --n)")
    if with_spec:
        parser.add_argument("--M", help="messages per round, comma separated")
        parser.add_argument("--L", help="capacity per round, comma separated")
        group = parser.add_mutually_exclusive_group()
        group.add_argument(
            "--ranked", dest="ranked", action="store_const", const=True,
            help="messages carry ranks; bins answer lowest ranks first",
        )
        group.add_argument(
            "--unranked", dest="ranked", action="store_const", const=False,
            help="bins answer a uniform subset (default)",
        )
        parser.set_defaults(ranked=None)
    if with_trials:
        parser.add_argument("--trials", help="number of Monte Carlo trials")
    parser.add_argument("--seed", help="64-bit master seed")
    parser.add_argument("--out-dir", dest="out_dir",
                        help="output directory (default: $BINLOAD_OUT_DIR or ./out)")
    parser.add_argument("--format", choices=["csv", "json", "both"],
                        help="machine file format(s) to write (default both)")
    parser.add_argument("--config", help="YAML file with the same keys as the flags")
    parser.add_argument("--epsilon", help="series truncation tolerance")
    parser.add_argument("--hard-cap", dest="hard_cap",
                        help="hard ceiling on summed series terms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binload",
        description="Iterative estimates and Monte Carlo simulation of "
                    "multi-round balls-into-bins placement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="closed-form per-round expectations")
    _add_shared_flags(p_est, with_spec=True, with_trials=False)

    p_sim = sub.add_parser("simulate", help="Monte Carlo runs of one configuration")
    _add_shared_flags(p_sim, with_spec=True, with_trials=True)

    p_tab = sub.add_parser("tables", help="regenerate the four reference tables")
    p_tab.add_argument("--which", choices=["1", "2", "3", "4", "all"],
                       help="which table to regenerate (default all)")
    _add_shared_flags(p_tab, with_spec=False, with_trials=True)

    p_cmp = sub.add_parser("compare", help="run named scenarios and baselines side by side")
    p_cmp.add_argument("--all", action="store_const", const=True,
                       help="run every known scenario and baseline")
    p_cmp.add_argument("--only", help="comma-separated scenario/baseline names")
    p_cmp.add_argument("--cap", help="baseline per-bin load cap (default 3)")
    p_cmp.add_argument("--d", help="bins contacted by the greedy baselines (default 5)")
    p_cmp.add_argument("--rounds", help="rounds for multi-round baselines (default 3)")
    _add_shared_flags(p_cmp, with_spec=False, with_trials=True)

    return parser


_COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "tables": cmd_tables,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args.command, args)
        return _COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
