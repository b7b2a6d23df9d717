"""Constraint checker, exhaustive small-instance oracle and comparison baselines."""

from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass
from typing import Optional

from .allocator import SlotEnvironment, mtc_step
from .interference import feasible_for_gaa
from .model import AllocationState, FeasibilityMode, InputError, Tier, channel_label


class CapacityError(RuntimeError):
    """The exhaustive oracle refused an instance above its size guard."""


class ViolationKind(enum.Enum):
    PAL_COLLISION = "PAL_COLLISION"
    GAA_ON_PAL_CHANNEL = "GAA_ON_PAL_CHANNEL"
    UNAVAILABLE_CHANNEL = "UNAVAILABLE_CHANNEL"
    INELIGIBLE_CHANNEL = "INELIGIBLE_CHANNEL"
    INTERFERENCE_EXCEEDED = "INTERFERENCE_EXCEEDED"
    DEMAND_EXCEEDED = "DEMAND_EXCEEDED"


_KIND_RANK = {kind: i for i, kind in enumerate(ViolationKind)}


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    slot: int
    subject: int
    channel: Optional[int] = None

    def __str__(self):
        where = "" if self.channel is None else f" on {channel_label(self.channel)}"
        return f"slot {self.slot}: {self.kind.value} CBSD {self.subject}{where}"


def validate_allocation(env: SlotEnvironment, state: AllocationState,
                        mode: Optional[FeasibilityMode] = None) -> list:
    """Return every constraint the state breaks (empty list when valid).

    Interference is checked per ``mode`` (default: the environment's). In
    PAPER_LITERAL mode the state's assignment order is replayed and each GAA
    is checked against the GAAs placed before it; in MUTUAL mode every GAA
    is checked against everything on its channel in the final state.
    """
    if state.slot != env.t:
        raise InputError(f"state is for slot {state.slot}, environment for slot {env.t}")
    mode = env.feasibility_mode if mode is None else mode
    t = env.t
    found = []
    tiers = state.tiers
    for k, s in state.pairs():
        tier = tiers[k]
        if s not in env.available:
            found.append(Violation(ViolationKind.UNAVAILABLE_CHANNEL, t, k, s))
        if s not in env.pool.eligible(tier):
            found.append(Violation(ViolationKind.INELIGIBLE_CHANNEL, t, k, s))
    for s in range(state.total):
        pals = sorted(state.pals_on(s))
        for k in pals[1:]:
            found.append(Violation(ViolationKind.PAL_COLLISION, t, k, s))
        if pals:
            for k in sorted(state.gaas_on(s)):
                found.append(Violation(ViolationKind.GAA_ON_PAL_CHANNEL, t, k, s))
    gamma = env.r.gamma
    if mode is FeasibilityMode.MUTUAL:
        for s in range(state.total):
            gaas = state.gaas_on(s)
            for k in sorted(gaas):
                row = env.r.row(k)
                if math.fsum(row.get(j, 0.0) for j in gaas if j != k) > gamma:
                    found.append(Violation(ViolationKind.INTERFERENCE_EXCEEDED, t, k, s))
    else:
        placed = {}
        for k, s in state.order:
            if tiers[k] is not Tier.GAA:
                continue
            row = env.r.row(k)
            on_s = placed.setdefault(s, [])
            if math.fsum(row.get(j, 0.0) for j in on_s) > gamma:
                found.append(Violation(ViolationKind.INTERFERENCE_EXCEEDED, t, k, s))
            on_s.append(k)
    for k, chans in state.assign.items():
        if len(chans) > env.demand(k):
            found.append(Violation(ViolationKind.DEMAND_EXCEEDED, t, k))
    found.sort(key=lambda v: (_KIND_RANK[v.kind], v.subject, -1 if v.channel is None else v.channel))
    return found


def _is_move(before: frozenset, after: frozenset, demand: int) -> bool:
    return bool(before) and len(before & after) < min(len(before), demand)


def brute_force_min_moves(env: SlotEnvironment, prev: AllocationState,
                          max_cbsds: int = 6, max_channels: int = 6):
    """Exact minimum-move allocation for a small slot, by exhaustive search.

    Candidates are all MUTUAL-feasible assignments (PAL exclusivity,
    availability, eligibility, demand caps, every GAA within gamma). The
    winner minimises the number of moves relative to ``prev``, then
    maximises served demand, then is the lexicographically smallest
    assignment matrix (rows by ascending CBSD id). Branches that cannot beat
    the incumbent are pruned, which does not change the result.

    Returns ``(state, moves)``.
    """
    ids = sorted(env.cbsds)
    if len(ids) > max_cbsds or len(env.available) > max_channels:
        raise CapacityError(
            f"oracle limited to {max_cbsds} CBSDs and {max_channels} available channels, "
            f"got {len(ids)} and {len(env.available)}")
    total = env.pool.total
    tiers = env.tiers
    gamma = env.r.gamma

    def row_key(subset):
        return tuple(1 if c in subset else 0 for c in range(total))

    options = []
    for k in ids:
        usable = env.usable(tiers[k])
        cap = min(env.demand(k), len(usable))
        subsets = [frozenset(c) for n in range(cap + 1) for c in itertools.combinations(usable, n)]
        subsets.sort(key=row_key)
        before = frozenset(prev.assign.get(k, ()))
        options.append([(sub, _is_move(before, sub, env.demand(k))) for sub in subsets])
    # most demand still servable by CBSDs after position i
    tail = [0] * (len(ids) + 1)
    for i in range(len(ids) - 1, -1, -1):
        tail[i] = tail[i + 1] + max(len(sub) for sub, _ in options[i])

    pal_on = [False] * total
    gaa_on = [[] for _ in range(total)]
    chosen = [None] * len(ids)
    best = {"moves": math.inf, "served": -1, "pick": None}

    def fits(k, sub):
        if tiers[k] is Tier.PAL:
            return all(not pal_on[c] and not gaa_on[c] for c in sub)
        for c in sub:
            if pal_on[c]:
                return False
            members = gaa_on[c] + [k]
            for j in members:
                row = env.r.row(j)
                if math.fsum(row.get(i, 0.0) for i in members if i != j) > gamma:
                    return False
        return True

    def place(k, sub, on):
        for c in sub:
            if tiers[k] is Tier.PAL:
                pal_on[c] = on
            elif on:
                gaa_on[c].append(k)
            else:
                gaa_on[c].remove(k)

    def search(i, moves, served):
        if moves > best["moves"]:
            return
        if moves == best["moves"] and served + tail[i] <= best["served"]:
            return
        if i == len(ids):
            best.update(moves=moves, served=served, pick=list(chosen))
            return
        k = ids[i]
        for sub, moved in options[i]:
            if not fits(k, sub):
                continue
            place(k, sub, True)
            chosen[i] = sub
            search(i + 1, moves + moved, served + len(sub))
            place(k, sub, False)

    search(0, 0, 0)
    state = env.blank_state()
    for k, sub in zip(ids, best["pick"]):
        for s in sorted(sub):
            state.add(k, s)
    return state, int(best["moves"])


def random_allocator(env: SlotEnvironment, prev: AllocationState, seed) -> AllocationState:
    """Continuity-blind random fill: PALs then GAAs, each tier in shuffled order.

    Every demand unit goes to a uniformly random channel among those that
    keep the state feasible.
    """
    rng = random.Random(seed)
    state = env.blank_state()
    for tier in (Tier.PAL, Tier.GAA):
        members = list(env.active_pals if tier is Tier.PAL else env.active_gaas)
        rng.shuffle(members)
        usable = env.usable(tier)
        for k in members:
            for _ in range(env.demand(k)):
                options = [s for s in usable if s not in state.assign[k]]
                rng.shuffle(options)
                pick = None
                for s in options:
                    if state.occupied_by_pal(s):
                        continue
                    if tier is Tier.PAL:
                        if not state.gaas_on(s):
                            pick = s
                            break
                    elif feasible_for_gaa(state, k, s, env.r, env.feasibility_mode):
                        pick = s
                        break
                if pick is None:
                    break
                state.add(k, pick)
    return state


def greedy_fill_allocator(env: SlotEnvironment, prev: AllocationState) -> AllocationState:
    """MTC's channel choice with no memory of the previous slot."""
    return mtc_step(env, AllocationState.zero(env.t - 1, env.pool.total))
