"""Discrete-time state machine for a multiplexed repeater chain.

Each step runs four phases: elementary-link generation, entanglement
swapping, distillation (optional, before or after swapping) and ageing
with discards.  Swap plans are built from a snapshot of the state at phase
start, so swaps attempted at different nodes in the same step are
simultaneous; chains of swaps that share a link merge into one component
whose links all survive or all die together.

Knowledge modes:

* quasi-local -- nodes know the connected segment they belong to; every
  step is charged the span of the longest link involved in a swap or
  distillation that step.
* global -- identical dynamics, but every step costs a full end-to-end
  round of classical communication.
* local -- nodes act only on their own memories.  Each memory keeps the
  age the node ascribes to it (its original elementary link aged forward);
  swap outcomes are never communicated, so failed swaps leave zombie
  memories behind and the real trajectory is tracked separately for
  adjudication by a central relay.  No classical communication is charged
  during the run; one end-to-end round is added at delivery.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .distill import distill_age, distill_fidelity, distill_success_prob
from .noise import fidelity_of_age
from .policies import (
    DistillOrdering,
    LinkView,
    SwapPolicy,
    build_plan,
    resolve_step_policy,
    validate_policy_for_chain,
)

LEFT = "L"
RIGHT = "R"


class CCMode(Enum):
    LOCAL = "local"
    QUASI_LOCAL = "quasi-local"
    GLOBAL = "global"


@dataclass(frozen=True)
class SimParams:
    """Chain configuration: sizes, success probabilities and the clock."""

    n: int
    n_ch: int
    p_l: float
    p_sw: float
    m_star: int
    m0: int = 0
    cc_mode: CCMode = CCMode.QUASI_LOCAL
    t_cc: int = 1
    max_steps: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 nodes, got {self.n}")
        if self.n_ch < 1:
            raise ValueError(f"need at least 1 channel, got {self.n_ch}")
        for name in ("p_l", "p_sw"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.m_star < 1:
            raise ValueError(f"m_star must be >= 1, got {self.m_star}")
        if not 0 <= self.m0 < self.m_star:
            raise ValueError(
                f"m0 must satisfy 0 <= m0 < m_star, got m0={self.m0} m_star={self.m_star}"
            )
        if self.t_cc < 0:
            raise ValueError(f"t_cc must be >= 0, got {self.t_cc}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(slots=True)
class Link:
    """An entangled pair; ends live in the memory cells
    (left, RIGHT-bank, left_ch) and (right, LEFT-bank, right_ch)."""

    uid: int
    left: int
    right: int
    left_ch: int
    right_ch: int
    age: int
    fresh: bool = False  # created by this step's generation phase

    @property
    def span(self) -> int:
        return self.right - self.left


@dataclass
class RunResult:
    """Outcome of one run: CC-inclusive waiting time and delivered age."""

    success: bool
    waiting_time: int
    youngest_end_age: int | None
    swap_length_histogram: dict[int, int]
    steps: int

    def to_record(self) -> dict:
        hist = " ".join(
            f"{length}:{count}"
            for length, count in sorted(self.swap_length_histogram.items())
        )
        return {
            "success": self.success,
            "waiting_time": self.waiting_time,
            "youngest_end_age": self.youngest_end_age,
            "steps": self.steps,
            "histogram": hist,
        }


@lru_cache(maxsize=1 << 16)
def _distill_pair_stats(m1: int, m2: int, m_star: int) -> tuple[float, bool]:
    """(success probability, usefulness) for distilling two ages; cached
    because ages are small integers that repeat constantly."""
    f1 = fidelity_of_age(m1, m_star)
    f2 = fidelity_of_age(m2, m_star)
    return distill_success_prob(f1, f2), distill_fidelity(f1, f2) > max(f1, f2)


@lru_cache(maxsize=1 << 16)
def _distill_age_cached(m1: int, m2: int, m_star: int) -> int:
    return distill_age(m1, m2, m_star)


def cc_cost_of_step(swap_spans, distill_spans, mode: CCMode, n: int) -> int:
    """Classical-communication charge for one step, in per-hop units.

    Quasi-local pays the span of the longest link touched by a swap or a
    distillation this step; global pays a full end-to-end round every step;
    local pays nothing during the run (one final round at delivery).
    """
    if mode is CCMode.GLOBAL:
        return n - 1
    if mode is CCMode.LOCAL:
        return 0
    spans = list(swap_spans) + list(distill_spans)
    return max(spans) if spans else 0


class NetworkState:
    """Mutable chain state; single-threaded for its lifetime."""

    def __init__(self, params: SimParams, rng: np.random.Generator):
        self.p = params
        self.rng = rng
        self.local = params.cc_mode is CCMode.LOCAL
        self.links: dict[int, Link] = {}
        # Real link ends: bank_r[(node, ch)] holds the link whose left
        # endpoint is node; bank_l[(node, ch)] the link whose right endpoint
        # is node.
        self.bank_r: dict[tuple[int, int], int] = {}
        self.bank_l: dict[tuple[int, int], int] = {}
        # Local-mode beliefs: the age each node ascribes to the memory, which
        # never learns about swaps performed elsewhere.
        self.perceived_r: dict[tuple[int, int], int] = {}
        self.perceived_l: dict[tuple[int, int], int] = {}
        self._next_uid = 0
        self.steps = 0
        self.elapsed = 0
        self.swap_length_histogram: Counter = Counter()

    def reset(self) -> None:
        """Back to a fully disconnected chain; uids and rng keep advancing."""
        self.links.clear()
        self.bank_r.clear()
        self.bank_l.clear()
        self.perceived_r.clear()
        self.perceived_l.clear()
        self.steps = 0
        self.elapsed = 0
        self.swap_length_histogram.clear()

    # -- state surgery (setup, tests, oracle mode) -------------------------

    def install_link(
        self, left: int, right: int, left_ch: int, right_ch: int, age: int,
        fresh: bool = False, herald: bool = True,
    ) -> Link:
        if not 0 <= left < right <= self.p.n - 1:
            raise ValueError(f"bad endpoints ({left}, {right})")
        if (left, left_ch) in self.bank_r or (right, right_ch) in self.bank_l:
            raise ValueError("memory cell already occupied")
        uid = self._next_uid
        self._next_uid += 1
        link = Link(uid, left, right, left_ch, right_ch, age, fresh)
        self.links[uid] = link
        self.bank_r[(left, left_ch)] = uid
        self.bank_l[(right, right_ch)] = uid
        if self.local and herald:
            # Heralded creations are known to both end nodes; links produced
            # by unannounced swaps are not (herald=False keeps the old
            # beliefs at the outer memories).
            self.perceived_r[(left, left_ch)] = age
            self.perceived_l[(right, right_ch)] = age
        return link

    def _kill_link(self, uid: int) -> None:
        link = self.links.pop(uid)
        if self.bank_r.get((link.left, link.left_ch)) == uid:
            del self.bank_r[(link.left, link.left_ch)]
        if self.bank_l.get((link.right, link.right_ch)) == uid:
            del self.bank_l[(link.right, link.right_ch)]

    # -- phase 1: elementary link generation --------------------------------

    def generate(self) -> None:
        p = self.p
        occ_r = self.perceived_r if self.local else self.bank_r
        occ_l = self.perceived_l if self.local else self.bank_l
        draw = self.rng.random
        for hop in range(p.n - 1):
            for ch in range(p.n_ch):
                if (hop, ch) in occ_r or (hop + 1, ch) in occ_l:
                    continue
                if draw() < p.p_l:
                    self.install_link(hop, hop + 1, ch, ch, p.m0, fresh=True)

    # -- phase 2: entanglement swapping --------------------------------------

    def _side_views(self, node: int, side: str) -> list[LinkView]:
        views = []
        if self.local:
            perceived = self.perceived_l if side == LEFT else self.perceived_r
            for ch in range(self.p.n_ch):
                age = perceived.get((node, ch))
                if age is not None:
                    views.append(LinkView(1, age, ch, (node, side, ch)))
        else:
            bank = self.bank_l if side == LEFT else self.bank_r
            for ch in range(self.p.n_ch):
                uid = bank.get((node, ch))
                if uid is not None:
                    link = self.links[uid]
                    views.append(LinkView(link.span, link.age, ch, (node, side, ch)))
        return views

    def _consume_end(self, cell) -> int | None:
        """Measure the memory at ``cell``; returns the real link losing an
        end there, if any."""
        node, side, ch = cell
        bank = self.bank_l if side == LEFT else self.bank_r
        uid = bank.pop((node, ch), None)
        if self.local:
            perceived = self.perceived_l if side == LEFT else self.perceived_r
            perceived.pop((node, ch), None)
        return uid

    def swap_phase(self, policy: SwapPolicy) -> list[int]:
        """Plan and execute this step's swaps; returns the swap spans."""
        p = self.p
        step_policy = resolve_step_policy(policy, self.rng)
        planned = []  # (node, PlannedPair) in node order, rank order
        for node in range(1, p.n - 1):
            left_views = self._side_views(node, LEFT)
            right_views = self._side_views(node, RIGHT)
            if not left_views or not right_views:
                continue
            plan = build_plan(step_policy, left_views, right_views, p.m_star, self.rng)
            planned.extend((node, pair) for pair in plan.pairs)
        if not planned:
            return []

        # Execute simultaneously: consume measured ends, then merge chained
        # components, poisoning a whole component on any failed or broken pair.
        parent: dict[int, int] = {}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a: int, b: int) -> None:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra

        spans = []
        joins = []  # (left_uid | None, right_uid | None, success)
        draw = self.rng.random
        histogram = self.swap_length_histogram
        for node, pair in planned:
            span = pair.swap_span
            spans.append(span)
            histogram[span] += 1
            success = draw() < p.p_sw
            lu = self._consume_end((node, LEFT, pair.left.channel))
            ru = self._consume_end((node, RIGHT, pair.right.channel))
            for uid in (lu, ru):
                if uid is not None and uid not in parent:
                    parent[uid] = uid
            joins.append((lu, ru, success))

        for lu, ru, _ in joins:
            if lu is not None and ru is not None:
                union(lu, ru)
        # Poison after all unions so component roots are final: a failed
        # measurement, or one against a junk memory, dooms its whole chain.
        poisoned = {
            find(uid)
            for lu, ru, success in joins
            if not success or lu is None or ru is None
            for uid in (lu, ru)
            if uid is not None
        }

        components: dict[int, list[int]] = {}
        for uid in parent:
            components.setdefault(find(uid), []).append(uid)
        for root in sorted(components):
            members = sorted(components[root], key=lambda u: self.links[u].left)
            if root in poisoned:
                for uid in members:
                    self._kill_link(uid)
                continue
            # Lone members only arise from joins against junk memories, which
            # poison their component, so a clean component is a chain.
            assert len(members) >= 2, "unpoisoned swap component must chain"
            chain = [self.links[u] for u in members]
            for first, second in zip(chain, chain[1:]):
                assert first.right == second.left, "swap component not contiguous"
            new_age = sum(link.age for link in chain)
            for link in chain:
                self._kill_link(link.uid)
            self.install_link(
                chain[0].left, chain[-1].right, chain[0].left_ch,
                chain[-1].right_ch, new_age, herald=False,
            )
        return spans

    # -- phase 3: distillation -----------------------------------------------

    def _distill_groups(self) -> list[list[Link]]:
        groups: dict[tuple[int, int], list[Link]] = {}
        for link in self.links.values():
            if self.local:
                # Without swap-outcome knowledge only freshly heralded
                # elementary links can be matched for distillation.
                if not link.fresh:
                    continue
            groups.setdefault((link.left, link.right), []).append(link)
        return [groups[key] for key in sorted(groups) if len(groups[key]) >= 2]

    def distill_phase(self, force: bool = False) -> list[int]:
        """Run distill-asap on every parallel-link group; returns spans used.

        ``force`` attempts every pair regardless of the usefulness predicate
        (the idealised single-shot experiments assume this; the production
        policy skips pairs that cannot improve on their better input).
        """
        p = self.p
        if self.local and p.m0 == 0:
            return []  # fresh links are perfect; nothing to gain
        spans = []
        for group in self._distill_groups():
            pool = group
            while len(pool) >= 2:
                pool.sort(key=lambda l: (l.age, l.left_ch, l.uid))
                survivors = []
                attempted = False
                i = 0
                while i + 1 < len(pool):
                    a, b = pool[i], pool[i + 1]
                    i += 2
                    eligible = a.age <= p.m_star and b.age <= p.m_star
                    if eligible:
                        success_prob, useful = _distill_pair_stats(
                            a.age, b.age, p.m_star
                        )
                    if not eligible or (not force and not useful):
                        survivors += [a, b]
                        continue
                    attempted = True
                    spans.append(a.span)
                    if self.rng.random() < success_prob:
                        new_age = _distill_age_cached(a.age, b.age, p.m_star)
                        self._kill_link(b.uid)
                        a.age = new_age
                        if self.local:
                            # Adjacent nodes herald the outcome within the step.
                            self.perceived_r[(a.left, a.left_ch)] = new_age
                            self.perceived_l[(a.right, a.right_ch)] = new_age
                            self.perceived_r.pop((b.left, b.left_ch), None)
                            self.perceived_l.pop((b.right, b.right_ch), None)
                        survivors.append(a)
                    else:
                        self._kill_link(a.uid)
                        self._kill_link(b.uid)
                        if self.local:
                            for link in (a, b):
                                self.perceived_r.pop((link.left, link.left_ch), None)
                                self.perceived_l.pop((link.right, link.right_ch), None)
                if i < len(pool):
                    survivors.append(pool[i])
                pool = survivors
                if not attempted:
                    break
        return spans

    # -- phase 4: ageing and discards ------------------------------------------

    def age_and_discard(self, cc_increment: int) -> None:
        if cc_increment < 0:
            raise ValueError("cc_increment must be >= 0")
        increment = 1 + cc_increment
        dead = []
        for uid, link in self.links.items():
            link.age += increment
            link.fresh = False
            if link.age > self.p.m_star:
                dead.append(uid)
        for uid in dead:
            self._kill_link(uid)
        if self.local:
            for perceived, bank in (
                (self.perceived_r, self.bank_r),
                (self.perceived_l, self.bank_l),
            ):
                for cell in sorted(perceived):
                    perceived[cell] += increment
                    if perceived[cell] > self.p.m_star:
                        del perceived[cell]
                        uid = bank.get(cell)
                        if uid is not None:
                            self._kill_link(uid)  # memory released under the qubit
        self.elapsed += increment
        self.steps += 1

    # -- step and run ------------------------------------------------------------

    def step(self, policy: SwapPolicy, ordering: DistillOrdering) -> None:
        self.generate()
        if ordering is DistillOrdering.DISTILL_SWAP:
            distill_spans = self.distill_phase()
            swap_spans = self.swap_phase(policy)
        elif ordering is DistillOrdering.SWAP_DISTILL:
            swap_spans = self.swap_phase(policy)
            distill_spans = self.distill_phase()
        else:
            swap_spans = self.swap_phase(policy)
            distill_spans = []
        cc = self.p.t_cc * cc_cost_of_step(
            swap_spans, distill_spans, self.p.cc_mode, self.p.n
        )
        self.age_and_discard(cc)

    def youngest_end_to_end(self) -> int | None:
        """Age of the youngest usable end-to-end link, if one exists."""
        best = None
        for link in self.links.values():
            if link.left == 0 and link.right == self.p.n - 1 and link.age < self.p.m_star:
                if best is None or link.age < best:
                    best = link.age
        return best

    def check_invariants(self) -> None:
        """Structural invariants; used by the test suite while stepping."""
        per_side: Counter = Counter()
        for (node, ch), uid in self.bank_r.items():
            link = self.links[uid]
            assert link.left == node and link.left_ch == ch
            per_side[(node, RIGHT)] += 1
        for (node, ch), uid in self.bank_l.items():
            link = self.links[uid]
            assert link.right == node and link.right_ch == ch
            per_side[(node, LEFT)] += 1
        assert all(count <= self.p.n_ch for count in per_side.values())
        for link in self.links.values():
            assert 0 <= link.left < link.right <= self.p.n - 1
            assert link.age <= self.p.m_star
        if self.local:
            for perceived, bank in (
                (self.perceived_r, self.bank_r),
                (self.perceived_l, self.bank_l),
            ):
                for cell, age in perceived.items():
                    uid = bank.get(cell)
                    if uid is not None:
                        assert self.links[uid].age >= age, "perceived age ran ahead"


def derive_rng(seed_path) -> np.random.Generator:
    """Deterministic per-run stream from (master seed, batch, run) indices."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(seed_path))))


def run(
    params: SimParams,
    policy: SwapPolicy,
    ordering: DistillOrdering = DistillOrdering.NONE,
    rng: np.random.Generator | None = None,
) -> RunResult:
    """Evolve a fully disconnected chain until an end-to-end link is delivered.

    Returns a censored (success=False) result if max_steps elapse first;
    censored runs are reported separately and never averaged in.
    """
    validate_policy_for_chain(policy, params.n)
    if rng is None:
        rng = derive_rng((params.seed,))
    state = NetworkState(params, rng)
    final_cc = (params.n - 1) * params.t_cc if params.cc_mode is CCMode.LOCAL else 0
    for _ in range(params.max_steps):
        state.step(policy, ordering)
        age = state.youngest_end_to_end()
        if age is not None:
            return RunResult(
                True,
                state.elapsed + final_cc,
                age,
                dict(state.swap_length_histogram),
                state.steps,
            )
    return RunResult(
        False, state.elapsed, None, dict(state.swap_length_histogram), state.steps
    )
