"""Static Byzantine adversary: corruption model, bribery knowledge, forging.

The adversary controls a fixed set of participants chosen before execution
and may bribe distributors, each of which independently leaks its full
segment with a fixed probability.  Everything a strategy does is computed
from a :class:`Knowledge` value (leaked segments plus whatever the
controlled parties legitimately hold), never from ground-truth lists, so
undisclosed discord bits stay out of reach by construction.

The forging attack and its exact success probability live here too.  The
probability is computed two independent ways: an exhaustive enumeration over
small instances (:func:`forge_success_oracle`) and a hypergeometric closed
form (:func:`forge_success_closed_form`) that also covers sizes far beyond
enumeration reach.  The tests hold the two routes equal wherever both apply.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from random import Random
from typing import Mapping, Optional, Sequence

from .listgen import CombinedList, Segment, combine_segments
from .protocol import BOT, Claim, Message, check_claim, make_claim, relay_step

#: receiver strategies that can break agreement with positive probability;
#: everything else must keep the agreement rate at exactly 1
FORGING_RECEIVER_STRATEGIES = frozenset({"forge", "omniscient-forge"})


@dataclass(frozen=True)
class AdversarySpec:
    """Which parties are corrupted and how they behave.

    ``controlled`` holds participant indices (sender is 1), ``bribed`` holds
    distributor indices.  Strategy names dispatch through
    :func:`adversary_act`.
    """

    controlled: frozenset[int] = frozenset()
    bribed: frozenset[int] = frozenset()
    disclosure_probability: float = 0.5
    sender_strategy: str = "honest-mimic"
    receiver_strategy: str = "honest-mimic"

    def validate(self, participants: int, distributors: int) -> None:
        p = self.disclosure_probability
        if not 0.0 < p < 1.0:
            raise ValueError(f"disclosure probability must satisfy 0 < p < 1, got {p}")
        bad = sorted(i for i in self.controlled if not 1 <= i <= participants)
        if bad:
            raise ValueError(f"controlled indices {bad} fall outside participants 1..{participants}")
        lo, hi = participants + 1, participants + distributors
        bad = sorted(i for i in self.bribed if not lo <= i <= hi)
        if bad:
            raise ValueError(f"bribed indices {bad} fall outside distributors {lo}..{hi}")
        honest = participants - len(self.controlled)
        if honest < 3:
            raise ValueError(f"need at least 3 honest participants, have {honest} of {participants}")
        if self.sender_strategy not in SENDER_STRATEGIES:
            raise ValueError(f"unknown sender strategy {self.sender_strategy!r}; known: {sorted(SENDER_STRATEGIES)}")
        if self.receiver_strategy not in RECEIVER_STRATEGIES:
            raise ValueError(
                f"unknown receiver strategy {self.receiver_strategy!r}; known: {sorted(RECEIVER_STRATEGIES)}"
            )


@dataclass
class Knowledge:
    """Everything the adversary can see.

    Leaked segments arrive whole: a disclosing distributor reveals every
    list it generated, so a covered position is known for every party.
    Controlled parties contribute their own combined lists and whatever
    claims they received.  Nothing else is representable here, which is the
    structural guarantee that strategies cannot peek at honest secrets.
    """

    segment_length: int
    distributors: tuple[int, ...]
    disclosed: dict[int, Segment]
    own_lists: dict[int, CombinedList]
    round1_claims: dict[int, Optional[Message]] = field(default_factory=dict)

    @property
    def full_disclosure(self) -> bool:
        return set(self.disclosed) == set(self.distributors)

    def covered_ordinals(self) -> frozenset[int]:
        """Indices (in distributor order) of the leaked segments."""
        return frozenset(i for i, d in enumerate(self.distributors) if d in self.disclosed)

    def known_value(self, party: int, position: int) -> Optional[int]:
        """``party``'s list value at ``position`` if a leak covers it, else None."""
        m = self.segment_length
        dist = self.distributors[position // m]
        seg = self.disclosed.get(dist)
        if seg is None:
            return None
        return seg.party_slice(party)[position % m]

    def known_positions(self, party: int, bit: int) -> list[int]:
        """All positions where ``party`` is known to hold ``bit``, ascending."""
        out: list[int] = []
        m = self.segment_length
        for ordinal, dist in enumerate(self.distributors):
            seg = self.disclosed.get(dist)
            if seg is None:
                continue
            values = seg.party_slice(party)
            base = ordinal * m
            out.extend(base + j for j, v in enumerate(values) if v == bit)
        return out


def resolve_bribes(spec: AdversarySpec, rng: Random, segments: Mapping[int, Segment]) -> Knowledge:
    """Flip each bribed distributor's disclosure coin and assemble Knowledge.

    Coins are independent, one per bribed distributor, drawn in ascending
    distributor order so a fixed rng state reproduces the outcome.  Unbribed
    distributors never leak.
    """
    distributors = tuple(sorted(segments))
    disclosed: dict[int, Segment] = {}
    for dist in distributors:
        if dist in spec.bribed and rng.random() < spec.disclosure_probability:
            disclosed[dist] = segments[dist]
    ordered = [segments[dist] for dist in distributors]
    own_lists = {
        party: combine_segments(party, [seg.party_slice(party) for seg in ordered])
        for party in sorted(spec.controlled)
    }
    return Knowledge(
        segment_length=ordered[0].length,
        distributors=distributors,
        disclosed=disclosed,
        own_lists=own_lists,
    )


def split_sender_claims(
    sender_list: CombinedList, assignment: Mapping[int, Optional[int]]
) -> dict[int, Claim]:
    """Per-receiver claims for a controlled sender.

    Each receiver gets the full honest claim for its assigned bit, so every
    claim individually passes every receiver's consistency check; receivers
    only notice the split when they compare notes in the relay round.  A
    None assignment yields a truncated claim (one position short), which
    fails the length rule and forces that receiver to flag.
    """
    out: dict[int, Claim] = {}
    for k, bit in sorted(assignment.items()):
        if bit is None:
            base = make_claim(0, sender_list)
            out[k] = Claim(bit=base.bit, positions=base.positions[:-1])
        else:
            out[k] = make_claim(bit, sender_list)
    return out


def forge_claim(
    target_bit: int,
    own_list: CombinedList,
    sender_claim: Optional[Claim],
    know: Optional[Knowledge],
    target: int,
    rng: Random,
) -> Claim:
    """Fabricate a claim for ``target_bit`` aimed at ``target``'s list.

    Positions the leaked segments show to carry ``target_bit`` on the
    target's list are used first, in ascending order.  The remainder is
    drawn uniformly from the candidate set: positions of ``target_bit`` on
    the forger's own list, outside the sender's claimed positions, in
    unleaked segments.  Guaranteed-agreement candidates and discord
    candidates look identical to the forger, and the discord ones only match
    the target's hidden bit half the time; that is the whole exposure.

    Always returns a well-formed claim (right length, distinct, in range).
    If the candidate set runs dry, which needs a sender claim overlapping
    the forger's own ``target_bit`` positions, the remainder is drawn from
    whatever positions are left; those picks are expected to fail checking.
    """
    total = len(own_list.entries)
    need = total // 3
    known_good = know.known_positions(target, target_bit) if know is not None else []
    picked = known_good[:need]
    if len(picked) < need:
        covered = know.covered_ordinals() if know is not None else frozenset()
        seg_len = know.segment_length if know is not None else total
        excluded = frozenset(sender_claim.positions) if sender_claim is not None else frozenset()
        pool = [
            x
            for x in range(total)
            if (x // seg_len) not in covered and own_list.entries[x] == target_bit and x not in excluded
        ]
        fill = need - len(picked)
        take = min(fill, len(pool))
        picked.extend(rng.sample(pool, take))
        if take < fill:
            chosen = set(picked)
            leftovers = [x for x in range(total) if x not in chosen]
            picked.extend(rng.sample(leftovers, fill - take))
    return Claim(bit=target_bit, positions=tuple(sorted(picked)))


ORACLE_ENUMERATION_BOUND = 24  # combined length d*m beyond this is impractical to enumerate


def forge_success_oracle(
    m: int,
    d: int,
    knowledge_pattern: Optional[Sequence[bool]] = None,
    targets: int = 1,
) -> Fraction:
    """Exact success probability of :func:`forge_claim`, by brute enumeration.

    Enumerates every balanced assignment of each checker's discord bits
    (independently per checker and per segment) together with every fill
    choice the forger can make, all uniformly weighted, and counts the
    outcomes where the single forged claim, built against the first checker,
    passes checking at all ``targets`` checkers.

    The sender's arrangement and the forger's own discord bits are fixed to
    a canonical layout; success counts depend only on how many candidates of
    each kind the forger holds per segment, and those counts are invariants
    of the list properties.  The forged bit is opposite to the honestly
    announced bit, the only case where forging differs from relaying.

    ``knowledge_pattern`` marks which segments leaked, one flag per
    distributor; None means no disclosure.  Instances are capped at
    d*m <= 24 because the enumeration is exponential.
    """
    if m <= 0 or m % 6 != 0:
        raise ValueError(f"segment length must be a positive multiple of 6, got {m}")
    if d < 1:
        raise ValueError(f"need at least one distributor, got {d}")
    if targets < 1:
        raise ValueError(f"need at least one checker, got {targets}")
    if d * m > ORACLE_ENUMERATION_BOUND:
        raise ValueError(
            f"instance too large for exhaustive enumeration: d*m = {d * m} exceeds {ORACLE_ENUMERATION_BOUND}"
        )
    disclosed = tuple(knowledge_pattern) if knowledge_pattern is not None else (False,) * d
    if len(disclosed) != d:
        raise ValueError(f"knowledge pattern has {len(disclosed)} flags, expected {d}")

    third, sixth = m // 3, m // 6
    need = d * m // 3

    # Canonical per-segment layout: [0, third) sender 0, [third, 2*third)
    # sender 1, [2*third, m) discord.  The sender announced 0, the forger
    # forges 1, and the forger's own discord bits are 1 on the first sixth
    # of each discord block.
    def is_agreement_good(x: int) -> bool:
        return third <= x % m < 2 * third

    fill_pool = [
        s * m + off
        for s in range(d)
        if not disclosed[s]
        for off in [*range(third, 2 * third), *range(2 * third, 2 * third + sixth)]
    ]

    # One balanced assignment per (checker, segment): which local discord
    # offsets hold 1 on that checker's list.
    per_segment = [frozenset(c) for c in itertools.combinations(range(third), sixth)]

    good = 0
    total = 0
    for assign in itertools.product(per_segment, repeat=targets * d):
        by_checker = [assign[t * d : (t + 1) * d] for t in range(targets)]
        known_good = sorted(
            s * m + off
            for s in range(d)
            if disclosed[s]
            for off in range(third, m)
            if off < 2 * third or (off - 2 * third) in by_checker[0][s]
        )
        picked = known_good[:need]
        fill = need - len(picked)
        for extra in itertools.combinations(fill_pool, fill) if fill > 0 else ((),):
            claim = [*picked, *extra]
            total += 1
            ok = True
            for t in range(targets):
                for x in claim:
                    if is_agreement_good(x):
                        continue
                    if (x % m - 2 * third) not in by_checker[t][x // m]:
                        ok = False
                        break
                if not ok:
                    break
            good += ok
    return Fraction(good, total)


def forge_success_closed_form(m: int, d: int) -> Fraction:
    """Exact forging success with no disclosure and one checker, closed form.

    The forger draws M/3 positions uniformly from its candidate set: d*m/3
    guaranteed-agreement positions plus m/6 discord positions per segment.
    Conditioned on drawing j discord candidates in a segment, the checker's
    balanced hidden bits match all j of them with probability
    C(m/3 - j, m/6 - j) / C(m/3, m/6).  Summing over the multivariate
    hypergeometric draw gives the exact rate at any size, far beyond what
    :func:`forge_success_oracle` can enumerate; the tests pin both routes
    equal on every instance small enough to enumerate.
    """
    if m <= 0 or m % 6 != 0:
        raise ValueError(f"segment length must be a positive multiple of 6, got {m}")
    if d < 1:
        raise ValueError(f"need at least one distributor, got {d}")
    third, sixth = m // 3, m // 6
    need = d * m // 3
    agreement = d * third
    acc = Fraction(0)
    for js in itertools.product(range(sixth + 1), repeat=d):
        rest = need - sum(js)
        if rest < 0 or rest > agreement:
            continue
        ways = comb(agreement, rest)
        match = Fraction(1)
        for j in js:
            ways *= comb(sixth, j)
            match *= Fraction(comb(third - j, sixth - j), comb(third, sixth))
        acc += ways * match
    return acc / comb(agreement + d * sixth, need)


def forge_heuristic(m: int, d: int) -> float:
    """The coarse all-discord estimate (1/2)^(M/3), reported next to exact rates."""
    return 0.5 ** (d * m // 3)


# --- strategies -------------------------------------------------------------


@dataclass
class ActContext:
    """Round inputs for one controlled party."""

    party: int
    receivers: tuple[int, ...]
    own_list: CombinedList
    knowledge: Knowledge
    sender_input: Optional[int] = None  # sender role only
    received: Optional[Message] = None  # receiver role only


@dataclass
class ActResult:
    """Outgoing messages per target; None means staying silent.

    ``forged`` lists the targets that were sent a fabricated claim, which is
    what the harness counts as forging attempts.
    """

    messages: dict[int, Optional[Message]]
    forged: tuple[int, ...] = ()


def _sender_honest(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    claim = make_claim(ctx.sender_input, ctx.own_list)
    return ActResult({k: claim for k in ctx.receivers})


def _sender_silent(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    return ActResult({k: None for k in ctx.receivers})


def _sender_flag_always(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    return ActResult({k: BOT for k in ctx.receivers})


def _sender_random_junk(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    total = len(ctx.own_list.entries)
    msgs: dict[int, Optional[Message]] = {}
    for k in ctx.receivers:  # ascending, so the rng stream is reproducible
        bit = rng.randrange(2)
        msgs[k] = Claim(bit, tuple(sorted(rng.sample(range(total), total // 3))))
    return ActResult(msgs)


def _sender_equivocate(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    """Split the receivers: first half get the input, the rest its negation.

    Every claim is individually consistent everywhere, so the split only
    surfaces when receivers compare relays and hit the conflicting-bits
    criterion.
    """
    half = (len(ctx.receivers) + 1) // 2
    assignment = {k: ctx.sender_input if i < half else 1 - ctx.sender_input for i, k in enumerate(ctx.receivers)}
    return ActResult(dict(split_sender_claims(ctx.own_list, assignment)))


def _receiver_honest(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    msg = relay_step(ctx.received, ctx.own_list)
    return ActResult({k: msg for k in ctx.receivers})


def _receiver_silent(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    return ActResult({k: None for k in ctx.receivers})


def _receiver_flag_always(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    return ActResult({k: BOT for k in ctx.receivers})


def _receiver_random_junk(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    total = len(ctx.own_list.entries)
    msgs: dict[int, Optional[Message]] = {}
    for k in ctx.receivers:
        bit = rng.randrange(2)
        msgs[k] = Claim(bit, tuple(sorted(rng.sample(range(total), total // 3))))
    return ActResult(msgs)


def _receiver_forge(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    """Fabricate a claim for the opposite bit, separately per fellow receiver.

    Each target gets its own draw; the claims only check out where the
    target's hidden discord bits happen to cooperate.
    """
    if isinstance(ctx.received, Claim):
        bit = 1 - ctx.received.bit
        sender_claim: Optional[Claim] = ctx.received
    else:
        bit = rng.randrange(2)
        sender_claim = None
    msgs: dict[int, Optional[Message]] = {}
    forged: list[int] = []
    for k in ctx.receivers:
        if k == ctx.party:
            msgs[k] = BOT
            continue
        msgs[k] = forge_claim(bit, ctx.own_list, sender_claim, ctx.knowledge, k, rng)
        forged.append(k)
    return ActResult(msgs, tuple(forged))


def _receiver_omniscient_forge(ctx: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    """Forge only on full disclosure, against a single chosen victim.

    With every segment leaked the fabricated opposite-bit claim is built
    from known-good positions and passes the victim's check with certainty;
    everyone else gets the honest relay, so the victim aborts on conflicting
    consistent bits while the rest decide.  Without full disclosure this
    behaves exactly like an honest receiver.
    """
    honest_peers = [k for k in ctx.receivers if k != ctx.party and k not in spec.controlled]
    if not ctx.knowledge.full_disclosure or not isinstance(ctx.received, Claim) or not honest_peers:
        return _receiver_honest(ctx, spec, rng)
    victim = honest_peers[0]
    honest_msg = relay_step(ctx.received, ctx.own_list)
    msgs: dict[int, Optional[Message]] = {k: honest_msg for k in ctx.receivers}
    msgs[victim] = forge_claim(1 - ctx.received.bit, ctx.own_list, ctx.received, ctx.knowledge, victim, rng)
    return ActResult(msgs, (victim,))


SENDER_STRATEGIES = {
    "honest-mimic": _sender_honest,
    "silent": _sender_silent,
    "random-junk": _sender_random_junk,
    "equivocate": _sender_equivocate,
    "flag-always": _sender_flag_always,
}

RECEIVER_STRATEGIES = {
    "honest-mimic": _receiver_honest,
    "silent": _receiver_silent,
    "random-junk": _receiver_random_junk,
    "forge": _receiver_forge,
    "omniscient-forge": _receiver_omniscient_forge,
    "flag-always": _receiver_flag_always,
}


def adversary_act(role: str, context: ActContext, spec: AdversarySpec, rng: Random) -> ActResult:
    """Dispatch one controlled party's round to its named strategy."""
    if role == "sender":
        table, name = SENDER_STRATEGIES, spec.sender_strategy
    elif role == "receiver":
        table, name = RECEIVER_STRATEGIES, spec.receiver_strategy
    else:
        raise ValueError(f"role must be 'sender' or 'receiver', got {role!r}")
    try:
        strategy = table[name]
    except KeyError:
        raise ValueError(f"unknown {role} strategy {name!r}; known: {sorted(table)}") from None
    return strategy(context, spec, rng)
