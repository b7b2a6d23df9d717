"""Per-slot MTC allocation: tier-sequential passes with most-suitable-channel choice.

One slot is computed by :func:`mtc_step`, which runs :func:`tbsa` for the
PALs and then for the GAAs. Each pass keeps CBSDs on the channels they held
in the previous slot where possible, re-homes the ones that lost a channel,
and then serves the rest of the demand, choosing every channel with
:func:`msc`.

Ordering is fixed everywhere so results are reproducible: retention scans
(channel, cbsd) pairs in ascending order, displaced CBSDs are re-homed in
ascending (cbsd, channel) order, and channel ties go to the lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional

from .interference import InterferenceMatrix, _fits
from .model import AllocationState, Cbsd, ChannelPool, FeasibilityMode, InputError, Tier


@dataclass(frozen=True)
class SlotEnvironment:
    """Everything the allocator needs to know about slot ``t``.

    ``cbsds`` holds the active devices only; ``demands`` their demand at
    ``t``. ``demand_overrides`` carries sticky per-CBSD demand updates
    between slots and is not read by the allocator.
    """

    t: int
    pool: ChannelPool
    available: frozenset
    r: InterferenceMatrix
    cbsds: Mapping[int, Cbsd] = field(default_factory=dict)
    demands: Mapping[int, int] = field(default_factory=dict)
    feasibility_mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL
    demand_overrides: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "available", self.pool.check_channels(self.available))
        missing = [k for k in self.cbsds if k not in self.demands]
        if missing:
            raise InputError(f"no demand given for active CBSDs {missing}")
        bad = [k for k, d in self.demands.items() if k not in self.cbsds or d < 0]
        if bad:
            raise InputError(f"demands for inactive CBSDs or negative demands: {bad}")

    @cached_property
    def tiers(self) -> dict:
        return {k: self.cbsds[k].tier for k in sorted(self.cbsds)}

    @cached_property
    def active_pals(self) -> tuple:
        return tuple(k for k, tier in self.tiers.items() if tier is Tier.PAL)

    @cached_property
    def active_gaas(self) -> tuple:
        return tuple(k for k, tier in self.tiers.items() if tier is Tier.GAA)

    def tier_input(self, tier: Tier) -> "TierInput":
        members = self.active_pals if tier is Tier.PAL else self.active_gaas
        return TierInput(members, self.pool.eligible(tier), tier)

    def usable(self, tier: Tier) -> tuple:
        """Available channels eligible for ``tier``, ascending."""
        cache = self.__dict__.setdefault("_usable", {})
        if tier not in cache:
            cache[tier] = tuple(sorted(self.available & self.pool.eligible(tier)))
        return cache[tier]

    def demand(self, k: int) -> int:
        return self.demands.get(k, 0)

    def blank_state(self) -> AllocationState:
        return AllocationState(self.t, self.pool.total, self.tiers)


@dataclass(frozen=True)
class TierInput:
    cbsds: tuple
    eligible: frozenset
    tier: Tier


@dataclass
class Classification:
    allocated: list = field(default_factory=list)
    moved: list = field(default_factory=list)
    remaining: list = field(default_factory=list)


def _unmet(env: SlotEnvironment, state: AllocationState, k: int) -> int:
    return max(0, env.demands.get(k, 0) - len(state.assign[k]))


def _retain(env: SlotEnvironment, prev: AllocationState, inp: TierInput,
            working: AllocationState) -> Classification:
    """Write retentions into ``working`` and classify the tier's CBSDs."""
    out = Classification()
    usable = set(env.usable(inp.tier))
    demands = env.demands
    assign = working.assign
    pals_on, gaas_on = working._pals, working._gaas
    gaa = inp.tier is Tier.GAA
    r = env.r
    gamma = r.gamma
    mutual = env.feasibility_mode is FeasibilityMode.MUTUAL
    prev_assign = prev.assign
    held = sorted((s, k) for k in inp.cbsds if k in prev_assign for s in prev_assign[k])
    lost = []
    for s, k in held:
        if len(assign[k]) >= demands[k]:
            continue
        keep = s in usable and not pals_on[s]
        if keep and gaa:
            occupants = gaas_on[s]
            if occupants:
                if mutual:
                    keep = _fits(occupants, k, r, True)
                else:
                    row = r.row(k)
                    keep = math.fsum([row.get(j, 0.0) for j in occupants]) <= gamma
        if keep:
            working._place(k, s)
            out.allocated.append((k, s))
        else:
            lost.append((k, s))
    out.moved = [k for k, _ in sorted(lost)]
    out.remaining = [k for k in inp.cbsds if len(assign[k]) < demands[k]]
    return out


def classify(env: SlotEnvironment, prev: AllocationState, inp: TierInput,
             working: AllocationState) -> Classification:
    """Split a tier into Allocated pairs, Moved and Remaining CBSDs.

    ``working`` is not modified.
    """
    return _retain(env, prev, inp, working.copy())


def _prev_gaa_count(prev: AllocationState, s: int) -> int:
    return len(prev._gaas[s]) if s < prev.total else 0


def msc(env: SlotEnvironment, working: AllocationState, prev: AllocationState, k: int,
        inp: TierInput) -> Optional[int]:
    """Pick the most suitable channel for one more unit of ``k``'s demand.

    PALs take the candidate channel that hosted the fewest GAAs in the
    previous slot. GAAs take the feasible channel with the least co-channel
    interference. Returns None when no channel qualifies.
    """
    mine = working.assign[k]
    candidates = [s for s in env.usable(inp.tier) if not working._pals[s] and s not in mine]
    if not candidates:
        return None
    if inp.tier is Tier.PAL:
        return min(candidates, key=lambda s: (_prev_gaa_count(prev, s), s))

    row = env.r.row(k)
    gamma = env.r.gamma
    mutual = env.feasibility_mode is FeasibilityMode.MUTUAL
    best, best_cost = None, math.inf
    for s in candidates:
        cost = math.fsum([row.get(j, 0.0) for j in working._gaas[s]])
        if cost > gamma or cost >= best_cost:
            continue
        if mutual and not _fits(working._gaas[s], k, env.r, True):
            continue
        best, best_cost = s, cost
    return best


def tbsa(env: SlotEnvironment, prev: AllocationState, inp: TierInput,
         working: AllocationState) -> AllocationState:
    """Allocate one tier into ``working`` (mutated and returned)."""
    groups = _retain(env, prev, inp, working)
    for k in groups.moved:
        if _unmet(env, working, k) > 0:
            s = msc(env, working, prev, k, inp)
            if s is not None:
                working._place(k, s)
    for k in groups.remaining:
        for _ in range(_unmet(env, working, k)):
            s = msc(env, working, prev, k, inp)
            if s is None:
                break
            working._place(k, s)
    return working


def mtc_step(env: SlotEnvironment, prev: AllocationState) -> AllocationState:
    """Compute the slot-``env.t`` allocation from the previous slot's state."""
    if prev.slot != env.t - 1:
        raise InputError(f"previous state is for slot {prev.slot}, expected {env.t - 1}")
    if prev.total not in (0, env.pool.total):
        raise InputError(f"previous state has {prev.total} channels, pool has {env.pool.total}")
    working = env.blank_state()
    tbsa(env, prev, env.tier_input(Tier.PAL), working)
    tbsa(env, prev, env.tier_input(Tier.GAA), working)
    return working
