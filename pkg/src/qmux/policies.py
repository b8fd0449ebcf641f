"""Link ranking and pairing strategies for the swap and distill phases.

Policies operate on lightweight ``LinkView`` records describing what a node
knows about the links on one of its sides: span in hops, age, and the
channel of the local memory holding the link end.  The engine materialises
views from its state (real links under quasi-local/global knowledge,
per-memory beliefs under fully local knowledge) and executes the returned
plans.

Every ranking is a total order: ties fall through to the secondary metric
and finally to the channel index, so identical inputs always produce
identical plans.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple


class SwapKind(Enum):
    FN = "fn"
    SN = "sn"
    RANDOM = "random"
    PARALLEL = "parallel"
    SN_DOUBLING = "sn-doubling"
    MIXED_WEIGHT = "mixed-weight"
    RANDOM_PRIORITY = "random-priority"
    FN_OPT = "fn-opt"
    SN_OPT = "sn-opt"


class DistillOrdering(Enum):
    NONE = "none"
    DISTILL_SWAP = "distill-swap"
    SWAP_DISTILL = "swap-distill"


@dataclass(frozen=True)
class SwapPolicy:
    kind: SwapKind
    weight: float | None = None  # mixing parameter for MIXED_WEIGHT / RANDOM_PRIORITY

    def __post_init__(self):
        needs_weight = self.kind in (SwapKind.MIXED_WEIGHT, SwapKind.RANDOM_PRIORITY)
        if needs_weight:
            if self.weight is None or not 0.0 <= self.weight <= 1.0:
                raise ValueError(f"{self.kind.value} needs a weight in [0, 1]")
        elif self.weight is not None:
            raise ValueError(f"{self.kind.value} does not take a weight")

    def tag(self) -> str:
        if self.weight is not None:
            return f"{self.kind.value}:{self.weight:g}"
        return self.kind.value


def parse_policy(tag: str) -> SwapPolicy:
    """Parse a policy tag such as ``fn`` or ``mixed-weight:0.4``."""
    name, _, arg = tag.strip().partition(":")
    try:
        kind = SwapKind(name)
    except ValueError:
        raise ValueError(f"unknown swap policy {name!r}") from None
    weight = float(arg) if arg else None
    return SwapPolicy(kind, weight)


def parse_ordering(tag: str) -> DistillOrdering:
    try:
        return DistillOrdering(tag.strip())
    except ValueError:
        raise ValueError(f"unknown distillation ordering {tag!r}") from None


def validate_policy_for_chain(policy: SwapPolicy, n: int) -> None:
    """Doubling only applies to chains with a power-of-two link count."""
    links = n - 1
    if policy.kind is SwapKind.SN_DOUBLING and (links < 1 or links & (links - 1)):
        raise ValueError(
            f"doubling needs 2^N elementary links, chain has {links}"
        )


class LinkView(NamedTuple):
    """One side's knowledge of a link end: span in hops, age, local channel."""

    span: int
    age: int
    channel: int
    cell: tuple = ()  # engine handle (node, side, channel); opaque here


class PlannedPair(NamedTuple):
    left: LinkView
    right: LinkView

    @property
    def new_age(self) -> int:
        return self.left.age + self.right.age

    @property
    def new_span(self) -> int:
        return self.left.span + self.right.span

    @property
    def swap_span(self) -> int:
        # Length of the swap operation: the longer of the two links involved.
        return max(self.left.span, self.right.span)


@dataclass
class SwapPlan:
    pairs: list[PlannedPair] = field(default_factory=list)
    fallback: bool = False  # set when an -OPT search fell back to its heuristic

    def total_anticipated_span(self) -> int:
        return sum(p.new_span for p in self.pairs)

    def total_anticipated_age(self) -> int:
        return sum(p.new_age for p in self.pairs)


# Exhaustive-search bound for the -OPT policies (8! = 40320 matchings).
OPT_SEARCH_BOUND = 8


def rank_links_fn(links) -> list[LinkView]:
    """Longest first; ties to younger, then lower channel."""
    return sorted(links, key=lambda v: (-v.span, v.age, v.channel))


def rank_links_sn(links) -> list[LinkView]:
    """Youngest first; ties to longer, then lower channel."""
    return sorted(links, key=lambda v: (v.age, -v.span, v.channel))


def mixed_weight_rank(links, a: float) -> list[LinkView]:
    """Rank by the blended score a*span - (1-a)*age, descending.

    a = 1 reproduces the length ranking, a = 0 the age ranking; the
    secondary keys are chosen so both limits match exactly, ties included.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {a}")
    return sorted(
        links,
        key=lambda v: (-(a * v.span - (1.0 - a) * v.age), v.age, -v.span, v.channel),
    )


def pair_by_rank(left_ranked, right_ranked, m_star: int) -> SwapPlan:
    """Pair equal ranks, dropping pairs that violate the attempt condition."""
    pairs = [
        PlannedPair(lv, rv)
        for lv, rv in zip(left_ranked, right_ranked)
        if lv.age + rv.age < m_star
    ]
    return SwapPlan(pairs)


def pair_doubling(left, right, m_star: int) -> SwapPlan:
    """Doubling discipline: only equal-span links pair, youngest with youngest."""
    by_span_left: dict[int, list[LinkView]] = {}
    by_span_right: dict[int, list[LinkView]] = {}
    for v in left:
        by_span_left.setdefault(v.span, []).append(v)
    for v in right:
        by_span_right.setdefault(v.span, []).append(v)
    pairs = []
    for span in sorted(set(by_span_left) & set(by_span_right)):
        lv = sorted(by_span_left[span], key=lambda v: (v.age, v.channel))
        rv = sorted(by_span_right[span], key=lambda v: (v.age, v.channel))
        pairs.extend(
            PlannedPair(a, b) for a, b in zip(lv, rv) if a.age + b.age < m_star
        )
    return SwapPlan(pairs)


def random_pairing(left, right, rng, m_star: int) -> SwapPlan:
    """Uniformly random alignment of the two sides, attempt condition applied."""
    lv = sorted(left, key=lambda v: v.channel)
    rv = sorted(right, key=lambda v: v.channel)
    lv = [lv[i] for i in rng.permutation(len(lv))]
    rv = [rv[i] for i in rng.permutation(len(rv))]
    pairs = [
        PlannedPair(a, b) for a, b in zip(lv, rv) if a.age + b.age < m_star
    ]
    return SwapPlan(pairs)


def parallel_pairing(left, right, m_star: int) -> SwapPlan:
    """Non-multiplexed discipline: pair only links on the same channel."""
    right_by_ch = {v.channel: v for v in right}
    pairs = []
    for lv in sorted(left, key=lambda v: v.channel):
        rv = right_by_ch.get(lv.channel)
        if rv is not None and lv.age + rv.age < m_star:
            pairs.append(PlannedPair(lv, rv))
    return SwapPlan(pairs)


def _opt_pairing(left, right, m_star, maximize_span: bool) -> SwapPlan:
    lv = sorted(left, key=lambda v: v.channel)
    rv = sorted(right, key=lambda v: v.channel)
    if len(lv) > len(rv):
        flipped = _opt_pairing(right, left, m_star, maximize_span)
        return SwapPlan(
            [PlannedPair(p.right, p.left) for p in flipped.pairs], flipped.fallback
        )
    best_key = None
    best_pairs: list[PlannedPair] = []
    for assign in itertools.permutations(range(len(rv)), len(lv)):
        pairs = [
            PlannedPair(lv[i], rv[j])
            for i, j in enumerate(assign)
            if lv[i].age + rv[j].age < m_star
        ]
        span_total = sum(p.new_span for p in pairs)
        age_total = sum(p.new_age for p in pairs)
        if maximize_span:
            # Most anticipated span, then most viable pairs, then lexicographic.
            key = (-span_total, -len(pairs), assign)
        else:
            # Most viable pairs, then least anticipated age, then lexicographic.
            key = (-len(pairs), age_total, assign)
        if best_key is None or key < best_key:
            best_key = key
            best_pairs = pairs
    return SwapPlan(best_pairs)


def fn_opt_pairing(left, right, m_star: int, bound: int = OPT_SEARCH_BOUND) -> SwapPlan:
    """Matching that maximises the total anticipated virtual-link span.

    Falls back to the rank-matched length heuristic (flagged) when either
    side exceeds the exhaustive-search bound.
    """
    if len(left) > bound or len(right) > bound:
        plan = pair_by_rank(rank_links_fn(left), rank_links_fn(right), m_star)
        plan.fallback = True
        return plan
    return _opt_pairing(left, right, m_star, maximize_span=True)


def sn_opt_pairing(left, right, m_star: int, bound: int = OPT_SEARCH_BOUND) -> SwapPlan:
    """Matching that minimises total anticipated age over a maximum-size matching."""
    if len(left) > bound or len(right) > bound:
        plan = pair_by_rank(rank_links_sn(left), rank_links_sn(right), m_star)
        plan.fallback = True
        return plan
    return _opt_pairing(left, right, m_star, maximize_span=False)


def resolve_step_policy(policy: SwapPolicy, rng) -> SwapPolicy:
    """Per-step coin flip for random-priority; other policies pass through."""
    if policy.kind is SwapKind.RANDOM_PRIORITY:
        use_fn = rng.random() < policy.weight
        return SwapPolicy(SwapKind.FN if use_fn else SwapKind.SN)
    return policy


def build_plan(policy: SwapPolicy, left, right, m_star: int, rng) -> SwapPlan:
    """Turn one node's two link lists into a concrete swap plan."""
    if not left or not right:
        return SwapPlan()
    kind = policy.kind
    if kind is SwapKind.FN:
        return pair_by_rank(rank_links_fn(left), rank_links_fn(right), m_star)
    if kind is SwapKind.SN:
        return pair_by_rank(rank_links_sn(left), rank_links_sn(right), m_star)
    if kind is SwapKind.MIXED_WEIGHT:
        return pair_by_rank(
            mixed_weight_rank(left, policy.weight),
            mixed_weight_rank(right, policy.weight),
            m_star,
        )
    if kind is SwapKind.RANDOM:
        return random_pairing(left, right, rng, m_star)
    if kind is SwapKind.PARALLEL:
        return parallel_pairing(left, right, m_star)
    if kind is SwapKind.SN_DOUBLING:
        return pair_doubling(left, right, m_star)
    if kind is SwapKind.FN_OPT:
        return fn_opt_pairing(left, right, m_star)
    if kind is SwapKind.SN_OPT:
        return sn_opt_pairing(left, right, m_star)
    if kind is SwapKind.RANDOM_PRIORITY:
        raise ValueError("random-priority must be resolved per step before planning")
    raise ValueError(f"unhandled policy kind {kind}")


def distill_asap_grouping(ages, m_star: int) -> list[list[tuple[int, int]]]:
    """Round structure of distill-asap on links of the given ages, assuming
    every attempt succeeds.

    Each round sorts ascending, pairs neighbours and carries an odd leftover;
    survivors take the distilled age.  Used for analysis and as the oracle
    for the engine's sequential distillation.
    """
    from .distill import distill_age

    rounds: list[list[tuple[int, int]]] = []
    pool = sorted(ages)
    while len(pool) >= 2:
        pairs = [(pool[i], pool[i + 1]) for i in range(0, len(pool) - 1, 2)]
        leftover = [pool[-1]] if len(pool) % 2 else []
        rounds.append(pairs)
        pool = sorted([distill_age(a, b, m_star) for a, b in pairs] + leftover)
    return rounds
