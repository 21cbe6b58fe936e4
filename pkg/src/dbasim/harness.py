"""Seeded Monte Carlo execution of full protocol instances.

One trial is: distributors issue segments, bribery coins resolve, the sender
announces, receivers relay, receivers decide.  Rounds are synchronous and
every message of round r is delivered before round r+1 starts.  All
randomness flows from a master seed through labeled sha256-derived streams,
so any trial can be replayed bit-for-bit in isolation and batches are
reproducible regardless of execution order.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Collection, Mapping, Optional

from scipy.stats import binomtest

from .adversary import (
    ActContext,
    AdversarySpec,
    FORGING_RECEIVER_STRATEGIES,
    Knowledge,
    adversary_act,
    forge_heuristic,
    forge_success_closed_form,
    resolve_bribes,
)
from .listgen import Segment, combined_lists_from_segments, generate_segment
from .protocol import (
    BOT,
    Claim,
    Decision,
    check_claim,
    decide,
    make_claim,
    relay_step,
    render_decision,
    render_message,
    sender_decision,
)

SCHEMA_VERSION = 1


def derive_rng(master_seed: int, *labels: object) -> random.Random:
    """An independent stream keyed by (master seed, labels).

    sha256 over the joined labels gives well-mixed 64-bit seeds, so streams
    with different labels are effectively independent and adding a stream
    never shifts any other stream's draws.
    """
    material = "|".join([str(master_seed), *map(str, labels)]).encode()
    seed = int.from_bytes(hashlib.sha256(material).digest()[:8], "big")
    return random.Random(seed)


@dataclass(frozen=True)
class SimConfig:
    """Everything one batch needs: sizes, input, adversary, seed, rule."""

    participants: int = 4
    distributors: int = 2
    segment_length: int = 12
    sender_input: int = 1
    adversary: AdversarySpec = AdversarySpec()
    trials: int = 1000
    master_seed: int = 42
    decide_rule: str = "literal"

    @property
    def receivers(self) -> tuple[int, ...]:
        return tuple(range(2, self.participants + 1))

    @property
    def distributor_indices(self) -> tuple[int, ...]:
        return tuple(range(self.participants + 1, self.participants + 1 + self.distributors))

    @property
    def combined_length(self) -> int:
        return self.distributors * self.segment_length

    def validate(self) -> None:
        if self.participants < 3:
            raise ValueError(f"participants must be at least 3 (one sender, two receivers), got {self.participants}")
        if self.distributors < 1:
            raise ValueError(f"distributors must be at least 1, got {self.distributors}")
        if self.segment_length <= 0 or self.segment_length % 6 != 0:
            raise ValueError(f"segment length must be a positive multiple of 6, got {self.segment_length}")
        if self.sender_input not in (0, 1):
            raise ValueError(f"sender input must be 0 or 1, got {self.sender_input}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.decide_rule not in ("literal", "merged"):
            raise ValueError(f"decide rule must be 'literal' or 'merged', got {self.decide_rule!r}")
        self.adversary.validate(self.participants, self.distributors)

    def to_record(self) -> dict:
        adv = self.adversary
        return {
            "participants": self.participants,
            "distributors": self.distributors,
            "segment_length": self.segment_length,
            "sender_input": self.sender_input,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "decide_rule": self.decide_rule,
            "controlled": sorted(adv.controlled),
            "bribed": sorted(adv.bribed),
            "disclosure_probability": adv.disclosure_probability,
            "sender_strategy": adv.sender_strategy,
            "receiver_strategy": adv.receiver_strategy,
        }


@dataclass
class TrialReport:
    """One trial's outcome: who was corrupt, what leaked, who decided what."""

    trial: int
    controlled: tuple[int, ...]
    disclosed: tuple[bool, ...]
    decisions: dict[int, Optional[Decision]]
    agreement: bool
    validity: Optional[bool]
    honest_success: Optional[bool]
    forge_attempts: int
    forge_successes: int
    full_knowledge: bool
    transcript: Optional[list[str]] = None

    def to_record(self) -> dict:
        rec = {
            "schema_version": SCHEMA_VERSION,
            "record": "trial",
            "trial": self.trial,
            "controlled": list(self.controlled),
            "disclosed": list(self.disclosed),
            "decisions": {str(p): render_decision(d) for p, d in sorted(self.decisions.items())},
            "agreement": self.agreement,
            "validity": self.validity,
            "honest_success": self.honest_success,
            "forge_attempts": self.forge_attempts,
            "forge_successes": self.forge_successes,
            "full_knowledge": self.full_knowledge,
        }
        if self.transcript is not None:
            rec["transcript"] = list(self.transcript)
        return rec


def eval_agreement(decisions: Mapping[int, Optional[Decision]], honest: Collection[int]) -> bool:
    """All honest parties abort, or all decide the same value."""
    return len({decisions[p].value for p in honest}) <= 1


def eval_validity(
    decisions: Mapping[int, Optional[Decision]],
    honest: Collection[int],
    all_honest: bool,
    sender_input: int,
) -> Optional[bool]:
    """With no corruption at all, everyone must output the sender's input."""
    if not all_honest:
        return None
    return all(decisions[p].value == sender_input for p in honest)


def eval_honest_success(
    decisions: Mapping[int, Optional[Decision]],
    honest: Collection[int],
    sender_honest: bool,
    sender_input: int,
) -> Optional[bool]:
    """With an honest sender, every honest party must output its input."""
    if not sender_honest:
        return None
    return all(decisions[p].value == sender_input for p in honest)


def _perturb_segment(seg: Segment, parties: Collection[int], rng: random.Random) -> Segment:
    """Redraw the given receivers' discord bits; everything else stays put."""
    discord = seg.discord_positions
    sixth = len(discord) // 2
    new_lists = dict(seg.receiver_lists)
    for k in sorted(parties):
        coins = [0] * sixth + [1] * sixth
        rng.shuffle(coins)
        bits = list(new_lists[k])
        for pos, coin in zip(discord, coins):
            bits[pos] = coin
        new_lists[k] = tuple(bits)
    return replace(seg, receiver_lists=new_lists)


def run_trial(
    cfg: SimConfig,
    trial: int,
    capture_transcript: bool = False,
    rerandomize: Optional[Mapping[int, int]] = None,
) -> TrialReport:
    """Execute one protocol instance, deterministically in (master_seed, trial).

    List generation, bribery coins, and each adversary party draw from
    independent derived streams, so changing one stream's consumption never
    disturbs the others.

    ``rerandomize`` maps distributor index -> salt and redraws honest
    receivers' discord bits in those segments after generation.  Controlled
    parties see only their Knowledge value, so redrawing an undisclosed
    segment must leave every adversary message unchanged; the
    confidentiality tests lean on this hook.
    """
    spec = cfg.adversary
    receivers = cfg.receivers
    controlled = spec.controlled
    honest = [p for p in range(1, cfg.participants + 1) if p not in controlled]

    segments = {
        dist: generate_segment(cfg.segment_length, cfg.participants - 1, derive_rng(cfg.master_seed, trial, "segment", dist))
        for dist in cfg.distributor_indices
    }
    if rerandomize:
        honest_receivers = [k for k in receivers if k not in controlled]
        for dist in sorted(rerandomize):
            rng = derive_rng(cfg.master_seed, trial, "perturb", dist, rerandomize[dist])
            segments[dist] = _perturb_segment(segments[dist], honest_receivers, rng)
    ordered = [segments[dist] for dist in cfg.distributor_indices]
    lists = combined_lists_from_segments(ordered)

    knowledge = resolve_bribes(spec, derive_rng(cfg.master_seed, trial, "bribes"), segments)

    # Round 1: the sender announces one claim per receiver.
    transcript: Optional[list[str]] = [] if capture_transcript else None
    if 1 in controlled:
        ctx = ActContext(
            party=1,
            receivers=receivers,
            own_list=knowledge.own_lists[1],
            knowledge=knowledge,
            sender_input=cfg.sender_input,
        )
        round1 = adversary_act("sender", ctx, spec, derive_rng(cfg.master_seed, trial, "adversary", 1)).messages
    else:
        claim = make_claim(cfg.sender_input, lists[1])
        round1 = {k: claim for k in receivers}
    if transcript is not None:
        transcript.extend(f"1 1 {k} {render_message(round1.get(k))}" for k in receivers)
    for k in sorted(controlled):
        if k in receivers:
            knowledge.round1_claims[k] = round1.get(k)

    # Round 2: every receiver relays to every receiver, itself included.
    forge_attempts = 0
    forge_successes = 0
    outbox: dict[int, dict[int, object]] = {}
    for j in receivers:
        if j in controlled:
            ctx = ActContext(
                party=j,
                receivers=receivers,
                own_list=knowledge.own_lists[j],
                knowledge=knowledge,
                received=round1.get(j),
            )
            result = adversary_act("receiver", ctx, spec, derive_rng(cfg.master_seed, trial, "adversary", j))
            outbox[j] = result.messages
            for k in result.forged:
                if k in receivers and k not in controlled:
                    forge_attempts += 1
                    msg = result.messages.get(k)
                    forge_successes += isinstance(msg, Claim) and check_claim(msg, lists[k])
        else:
            msg = relay_step(round1.get(j), lists[j])
            outbox[j] = {k: msg for k in receivers}
    if transcript is not None:
        transcript.extend(f"2 {j} {k} {render_message(outbox[j].get(k))}" for j in receivers for k in receivers)

    # Silence is consumed as the inconsistency flag.
    decisions: dict[int, Optional[Decision]] = {p: None for p in range(1, cfg.participants + 1)}
    for k in receivers:
        if k in controlled:
            continue
        inbox = {j: (outbox[j].get(k) if outbox[j].get(k) is not None else BOT) for j in receivers}
        decisions[k] = decide(inbox, lists[k], receivers=receivers, rule=cfg.decide_rule)
    if 1 not in controlled:
        decisions[1] = sender_decision(cfg.sender_input)

    disclosed = tuple(dist in knowledge.disclosed for dist in cfg.distributor_indices)
    return TrialReport(
        trial=trial,
        controlled=tuple(sorted(controlled)),
        disclosed=disclosed,
        decisions=decisions,
        agreement=eval_agreement(decisions, honest),
        validity=eval_validity(decisions, honest, not controlled, cfg.sender_input),
        honest_success=eval_honest_success(decisions, honest, 1 not in controlled, cfg.sender_input),
        forge_attempts=forge_attempts,
        forge_successes=forge_successes,
        full_knowledge=knowledge.full_disclosure and bool(knowledge.disclosed),
        transcript=transcript,
    )


def wilson_interval(successes: int, total: int, confidence: float = 0.95) -> Optional[tuple[float, float]]:
    """Wilson score interval for a binomial proportion; None when total is 0."""
    if total == 0:
        return None
    ci = binomtest(successes, total).proportion_ci(confidence_level=confidence, method="wilson")
    return (ci.low, ci.high)


@dataclass
class BatchReport:
    """Aggregated counts over one batch, with the exact references alongside.

    ``forge_oracle`` is the exact per-attempt success rate when the
    configuration matches the oracle's model (plain forging, no bribery);
    ``expected_full_knowledge`` is the exact chance that every segment leaks.
    """

    config: SimConfig
    agreement_count: int
    all_abort_count: int
    common_value_count: int
    validity_applicable: int
    validity_count: int
    honest_success_applicable: int
    honest_success_count: int
    forge_attempts: int
    forge_successes: int
    full_knowledge_count: int
    forge_oracle: Optional[Fraction] = None
    trial_reports: Optional[list[TrialReport]] = None

    @property
    def trials(self) -> int:
        return self.config.trials

    @property
    def agreement_rate(self) -> float:
        return self.agreement_count / self.trials

    @property
    def all_abort_rate(self) -> float:
        return self.all_abort_count / self.trials

    @property
    def validity_rate(self) -> Optional[float]:
        return self.validity_count / self.validity_applicable if self.validity_applicable else None

    @property
    def honest_success_rate(self) -> Optional[float]:
        return self.honest_success_count / self.honest_success_applicable if self.honest_success_applicable else None

    @property
    def forge_success_rate(self) -> Optional[float]:
        return self.forge_successes / self.forge_attempts if self.forge_attempts else None

    @property
    def full_knowledge_rate(self) -> float:
        return self.full_knowledge_count / self.trials

    @property
    def expected_full_knowledge(self) -> float:
        adv = self.config.adversary
        if len(adv.bribed) == self.config.distributors:
            return adv.disclosure_probability ** self.config.distributors
        return 0.0

    @property
    def forge_heuristic(self) -> Optional[float]:
        if self.forge_oracle is None:
            return None
        return forge_heuristic(self.config.segment_length, self.config.distributors)

    def to_record(self) -> dict:
        cfg = self.config
        rec = {
            "schema_version": SCHEMA_VERSION,
            "record": "batch",
            "config": cfg.to_record(),
            "agreement_count": self.agreement_count,
            "agreement_rate": self.agreement_rate,
            "agreement_ci": wilson_interval(self.agreement_count, self.trials),
            "all_abort_count": self.all_abort_count,
            "all_abort_rate": self.all_abort_rate,
            "common_value_count": self.common_value_count,
            "validity_applicable": self.validity_applicable,
            "validity_count": self.validity_count,
            "validity_rate": self.validity_rate,
            "validity_ci": wilson_interval(self.validity_count, self.validity_applicable),
            "honest_success_applicable": self.honest_success_applicable,
            "honest_success_count": self.honest_success_count,
            "honest_success_rate": self.honest_success_rate,
            "honest_success_ci": wilson_interval(self.honest_success_count, self.honest_success_applicable),
            "forge_attempts": self.forge_attempts,
            "forge_successes": self.forge_successes,
            "forge_success_rate": self.forge_success_rate,
            "forge_success_ci": wilson_interval(self.forge_successes, self.forge_attempts),
            "full_knowledge_count": self.full_knowledge_count,
            "full_knowledge_rate": self.full_knowledge_rate,
            "expected_full_knowledge": self.expected_full_knowledge,
            "forge_oracle": str(self.forge_oracle) if self.forge_oracle is not None else None,
            "forge_oracle_float": float(self.forge_oracle) if self.forge_oracle is not None else None,
            "forge_heuristic": self.forge_heuristic,
        }
        return rec

    def canonical_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))


def run_batch(cfg: SimConfig, keep_trials: bool = False) -> BatchReport:
    """Run every trial of a batch and aggregate; trials share nothing but the seed."""
    cfg.validate()
    agreement = all_abort = common_value = 0
    validity_app = validity_ok = 0
    honest_app = honest_ok = 0
    attempts = successes = 0
    full_know = 0
    kept: Optional[list[TrialReport]] = [] if keep_trials else None
    honest = [p for p in range(1, cfg.participants + 1) if p not in cfg.adversary.controlled]
    for t in range(cfg.trials):
        rep = run_trial(cfg, t, capture_transcript=keep_trials)
        agreement += rep.agreement
        if rep.agreement:
            if all(rep.decisions[p].aborted for p in honest):
                all_abort += 1
            else:
                common_value += 1
        if rep.validity is not None:
            validity_app += 1
            validity_ok += rep.validity
        if rep.honest_success is not None:
            honest_app += 1
            honest_ok += rep.honest_success
        attempts += rep.forge_attempts
        successes += rep.forge_successes
        full_know += rep.full_knowledge
        if kept is not None:
            kept.append(rep)

    oracle: Optional[Fraction] = None
    adv = cfg.adversary
    forging_receivers = [k for k in adv.controlled if k in cfg.receivers]
    if adv.receiver_strategy in FORGING_RECEIVER_STRATEGIES and forging_receivers and not adv.bribed:
        oracle = forge_success_closed_form(cfg.segment_length, cfg.distributors)

    return BatchReport(
        config=cfg,
        agreement_count=agreement,
        all_abort_count=all_abort,
        common_value_count=common_value,
        validity_applicable=validity_app,
        validity_count=validity_ok,
        honest_success_applicable=honest_app,
        honest_success_count=honest_ok,
        forge_attempts=attempts,
        forge_successes=successes,
        full_knowledge_count=full_know,
        forge_oracle=oracle,
        trial_reports=kept,
    )
