"""Scenario files, parameter sweeps, report emission, and the console entry.

A scenario is a JSON document of flat simulation fields plus an optional
``sweep`` block (field -> list of values, run as a cartesian product) and an
optional ``require`` block (rate name -> minimum).  Command-line flags
override file values one-to-one.  Named scenarios ship inside the package so
the standard experiments are one command each.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Mapping, Optional, Sequence

from .adversary import (
    FORGING_RECEIVER_STRATEGIES,
    AdversarySpec,
    RECEIVER_STRATEGIES,
    SENDER_STRATEGIES,
)
from .harness import SCHEMA_VERSION, BatchReport, SimConfig, run_batch

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "name": "adhoc",
    "receivers": 3,
    "distributors": 2,
    "segment_length": 12,
    "sender_input": 1,
    "trials": 1000,
    "seed": 42,
    "p": 0.5,
    "controlled": [],
    "bribed": [],
    "sender_strategy": "honest-mimic",
    "receiver_strategy": "honest-mimic",
    "decide_rule": "literal",
    "output": "human",
    "sweep": {},
    "require": {},
}

SWEEPABLE = ("distributors", "p", "receiver_strategy", "segment_length", "sender_strategy")

#: rate names usable in a ``require`` block, each a minimum bound
REQUIRABLE = ("agreement_rate", "all_abort_rate", "validity_rate", "honest_success_rate")

OUTPUT_MODES = ("human", "machine", "both")

BUILTIN_SCENARIOS = ("all-honest", "equivocating-sender", "forging-receiver", "bribery", "forge-curve")


@dataclass
class Scenario:
    """A validated scenario: base fields, sweep grid, and requirements."""

    name: str
    base: dict
    sweep: dict = field(default_factory=dict)
    require: dict = field(default_factory=dict)
    output: str = "human"

    def points(self) -> list[dict]:
        """Every swept combination as a full field mapping, grid order."""
        if not self.sweep:
            return [dict(self.base)]
        keys = sorted(self.sweep)
        out = []
        for values in itertools.product(*(self.sweep[k] for k in keys)):
            point = dict(self.base)
            point.update(dict(zip(keys, values)))
            out.append(point)
        return out

    def to_document(self) -> dict:
        doc = {"schema_version": SCHEMA_VERSION, "name": self.name, **self.base}
        if self.sweep:
            doc["sweep"] = self.sweep
        if self.require:
            doc["require"] = self.require
        doc["output"] = self.output
        return doc


def build_config(point: Mapping) -> SimConfig:
    """One sweep point's fields -> a SimConfig (participants = receivers + 1)."""
    participants = point["receivers"] + 1
    distributors = point["distributors"]
    bribed = point["bribed"]
    if bribed == "all":
        bribed = list(range(participants + 1, participants + 1 + distributors))
    spec = AdversarySpec(
        controlled=frozenset(point["controlled"]),
        bribed=frozenset(bribed),
        disclosure_probability=point["p"],
        sender_strategy=point["sender_strategy"],
        receiver_strategy=point["receiver_strategy"],
    )
    return SimConfig(
        participants=participants,
        distributors=distributors,
        segment_length=point["segment_length"],
        sender_input=point["sender_input"],
        adversary=spec,
        trials=point["trials"],
        master_seed=point["seed"],
        decide_rule=point["decide_rule"],
    )


def parse_config(document: Mapping, overrides: Optional[Mapping] = None) -> Scenario:
    """Validate a scenario document (plus flag overrides) into a Scenario.

    Unknown keys, unsweepable fields, unknown requirement names, and any
    sweep point that fails SimConfig validation are all rejected with the
    offending name in the message.
    """
    doc = dict(document)
    doc.pop("schema_version", None)
    unknown = sorted(set(doc) - set(DEFAULTS))
    if unknown:
        raise ValueError(f"unknown config keys {unknown}; known keys: {sorted(set(DEFAULTS) - {'schema_version'})}")
    merged = {k: v for k, v in DEFAULTS.items() if k not in ("schema_version",)}
    merged.update(doc)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    sweep = dict(merged.pop("sweep") or {})
    bad = sorted(set(sweep) - set(SWEEPABLE))
    if bad:
        raise ValueError(f"cannot sweep over {bad}; sweepable fields: {list(SWEEPABLE)}")
    for key, values in sweep.items():
        if not isinstance(values, (list, tuple)) or not values:
            raise ValueError(f"sweep values for {key!r} must be a non-empty list")

    require = dict(merged.pop("require") or {})
    bad = sorted(set(require) - set(REQUIRABLE))
    if bad:
        raise ValueError(f"unknown requirement names {bad}; requirable rates: {list(REQUIRABLE)}")

    output = merged.pop("output")
    if output not in OUTPUT_MODES:
        raise ValueError(f"output must be one of {OUTPUT_MODES}, got {output!r}")
    name = merged.pop("name")

    scenario = Scenario(name=name, base=merged, sweep=sweep, require=require, output=output)
    for point in scenario.points():
        try:
            build_config(point).validate()
        except ValueError as exc:
            swept = {k: point[k] for k in sweep}
            where = f" at sweep point {swept}" if swept else ""
            raise ValueError(f"invalid configuration{where}: {exc}") from None
    return scenario


def load_scenario_file(path: str, overrides: Optional[Mapping] = None) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_config(json.load(fh), overrides)


def load_builtin_scenario(name: str, overrides: Optional[Mapping] = None) -> Scenario:
    if name not in BUILTIN_SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; built in: {list(BUILTIN_SCENARIOS)}")
    text = resources.files("dbasim").joinpath("scenarios", f"{name}.json").read_text(encoding="utf-8")
    return parse_config(json.loads(text), overrides)


# --- emission ----------------------------------------------------------------

_COLUMNS = (
    ("n", lambda r: r.config.participants),
    ("d", lambda r: r.config.distributors),
    ("m", lambda r: r.config.segment_length),
    ("p", lambda r: r.config.adversary.disclosure_probability),
    ("sender", lambda r: r.config.adversary.sender_strategy),
    ("receiver", lambda r: r.config.adversary.receiver_strategy),
    ("trials", lambda r: r.trials),
    ("agree", lambda r: _rate(r.agreement_rate)),
    ("abort", lambda r: _rate(r.all_abort_rate)),
    ("valid", lambda r: _rate(r.validity_rate)),
    ("hsucc", lambda r: _rate(r.honest_success_rate)),
    ("forge_emp", lambda r: _rate(r.forge_success_rate)),
    ("forge_exact", lambda r: _rate(float(r.forge_oracle)) if r.forge_oracle is not None else "-"),
    ("forge_est", lambda r: _rate(r.forge_heuristic)),
    ("fullknow", lambda r: _rate(r.full_knowledge_rate)),
    ("fullknow_exact", lambda r: _rate(r.expected_full_knowledge)),
)


def _rate(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.6f}"


def emit_table(reports: Sequence[BatchReport]) -> str:
    """Aligned text table, one row per batch; estimates sit next to measurements."""
    rows = [[str(getter(r)) for _, getter in _COLUMNS] for r in reports]
    headers = [name for name, _ in _COLUMNS]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def emit_report(report: BatchReport, output: str = "machine") -> str:
    """One batch in the requested format; 'both' stacks human then machine."""
    if output == "machine":
        return report.canonical_json() + "\n"
    if output == "human":
        return emit_table([report])
    if output == "both":
        return emit_table([report]) + report.canonical_json() + "\n"
    raise ValueError(f"output must be one of {OUTPUT_MODES}, got {output!r}")


def _check_requirements(scenario: Scenario, reports: Sequence[BatchReport]) -> list[str]:
    """Failure messages for explicit minima plus the no-forging agreement contract."""
    failures: list[str] = []
    for i, rep in enumerate(reports):
        adv = rep.config.adversary
        if adv.receiver_strategy not in FORGING_RECEIVER_STRATEGIES and rep.agreement_count != rep.trials:
            failures.append(
                f"batch {i}: {rep.trials - rep.agreement_count} agreement violations under a non-forging "
                f"adversary (sender={adv.sender_strategy}, receiver={adv.receiver_strategy}); this is a bug"
            )
        for rate_name, minimum in sorted(scenario.require.items()):
            actual = getattr(rep, rate_name)
            if actual is None:
                failures.append(f"batch {i}: required {rate_name} >= {minimum} but the rate is not applicable")
            elif actual < minimum:
                failures.append(f"batch {i}: required {rate_name} >= {minimum}, measured {actual:.6f}")
    return failures


def run_scenario(
    scenario: Scenario,
    stream: Optional[IO[str]] = None,
    dump_trials: Optional[str] = None,
) -> int:
    """Run every sweep point, emit reports, and enforce requirements.

    Returns 0 when all requirements hold, 1 otherwise.  ``dump_trials``
    writes per-trial records with full transcripts, one JSON line each, for
    replay debugging.
    """
    if stream is None:  # bind lazily so stdout redirection is honoured
        stream = sys.stdout
    keep = dump_trials is not None
    reports = [run_batch(build_config(point), keep_trials=keep) for point in scenario.points()]
    if scenario.output in ("human", "both"):
        stream.write(f"scenario {scenario.name}: {len(reports)} batch(es)\n")
        stream.write(emit_table(reports))
    if scenario.output in ("machine", "both"):
        for rep in reports:
            stream.write(rep.canonical_json() + "\n")
    if dump_trials is not None:
        with open(dump_trials, "w", encoding="utf-8") as fh:
            for i, rep in enumerate(reports):
                for trial_rep in rep.trial_reports or ():
                    record = {"batch": i, **trial_rep.to_record()}
                    fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
    failures = _check_requirements(scenario, reports)
    for message in failures:
        stream.write(f"REQUIREMENT FAILED: {message}\n")
    if scenario.output in ("human", "both") and scenario.require and not failures:
        stream.write("all requirements satisfied\n")
    return 1 if failures else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dbasim",
        description="Simulate detectable agreement over distributor-issued correlated reference lists.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--scenario", help=f"built-in scenario name: {', '.join(BUILTIN_SCENARIOS)}")
    source.add_argument("--config", help="path to a scenario JSON file")
    parser.add_argument("--list-scenarios", action="store_true", help="list built-in scenarios and exit")
    parser.add_argument("--receivers", type=int, help="receiver count (participants minus the sender)")
    parser.add_argument("--distributors", type=int, help="distributor count d")
    parser.add_argument("--segment-length", type=int, dest="segment_length", help="per-distributor list length m")
    parser.add_argument("--sender-input", type=int, dest="sender_input", help="the bit the sender broadcasts")
    parser.add_argument("--trials", type=int, help="trials per batch")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--p", type=float, help="per-distributor disclosure probability")
    parser.add_argument("--controlled", help="comma-separated controlled participant indices")
    parser.add_argument("--bribed", help="comma-separated bribed distributor indices, or 'all'")
    parser.add_argument("--sender-strategy", dest="sender_strategy", choices=sorted(SENDER_STRATEGIES))
    parser.add_argument("--receiver-strategy", dest="receiver_strategy", choices=sorted(RECEIVER_STRATEGIES))
    parser.add_argument("--decide-rule", dest="decide_rule", choices=["literal", "merged"])
    parser.add_argument("--output", choices=list(OUTPUT_MODES))
    parser.add_argument("--dump-trials", dest="dump_trials", help="write per-trial JSON records to this file")
    args = parser.parse_args(argv)

    if args.list_scenarios:
        for name in BUILTIN_SCENARIOS:
            print(name)
        return 0

    def parse_indices(text: str) -> list[int]:
        return [int(v) for v in text.split(",") if v.strip()]

    overrides = {
        "receivers": args.receivers,
        "distributors": args.distributors,
        "segment_length": args.segment_length,
        "sender_input": args.sender_input,
        "trials": args.trials,
        "seed": args.seed,
        "p": args.p,
        "controlled": parse_indices(args.controlled) if args.controlled is not None else None,
        "bribed": "all" if args.bribed == "all" else parse_indices(args.bribed) if args.bribed is not None else None,
        "sender_strategy": args.sender_strategy,
        "receiver_strategy": args.receiver_strategy,
        "decide_rule": args.decide_rule,
        "output": args.output,
    }
    try:
        if args.scenario:
            scenario = load_builtin_scenario(args.scenario, overrides)
        elif args.config:
            scenario = load_scenario_file(args.config, overrides)
        else:
            scenario = parse_config({}, overrides)
        return run_scenario(scenario, dump_trials=args.dump_trials)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
