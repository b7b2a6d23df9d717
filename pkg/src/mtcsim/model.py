"""Domain types shared by the allocator, the baselines and the simulator."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Union

import numpy as np


class InputError(ValueError):
    """A query or operation received an argument outside its domain."""


class ConfigError(ValueError):
    """A scenario or model parameter is invalid."""


class Tier(enum.Enum):
    PAL = "PAL"
    GAA = "GAA"


class FeasibilityMode(enum.Enum):
    # Only the incoming GAA's received interference is checked.
    PAPER_LITERAL = "literal"
    # Co-channel GAAs already on the channel are re-checked as well.
    MUTUAL = "mutual"


def channel_label(s: int) -> str:
    return f"CH{s + 1}"


@dataclass(frozen=True)
class ChannelPool:
    """Channel universe with the PAL-eligible and GAA-eligible subsets.

    Channels are 0-based indices ``0..total-1``; the two subsets may overlap.
    """

    total: int
    pal_set: frozenset
    gaa_set: frozenset

    def __post_init__(self):
        if self.total < 0:
            raise ConfigError("channel total must be non-negative")
        object.__setattr__(self, "pal_set", frozenset(self.pal_set))
        object.__setattr__(self, "gaa_set", frozenset(self.gaa_set))
        for name in ("pal_set", "gaa_set"):
            bad = [s for s in getattr(self, name) if not 0 <= s < self.total]
            if bad:
                raise ConfigError(f"{name} has channels outside 0..{self.total - 1}: {sorted(bad)}")

    def eligible(self, tier: Tier) -> frozenset:
        return self.pal_set if tier is Tier.PAL else self.gaa_set

    @cached_property
    def universe(self) -> frozenset:
        return frozenset(range(self.total))

    def check_channels(self, channels: Iterable[int]) -> frozenset:
        channels = frozenset(channels)
        if channels <= self.universe and not any(isinstance(s, bool) for s in channels):
            return channels
        bad = [s for s in channels if not isinstance(s, (int, np.integer)) or not 0 <= s < self.total]
        if bad:
            raise InputError(f"channels outside 0..{self.total - 1}: {sorted(map(str, bad))}")
        return channels


Demand = Union[int, Mapping[int, int]]


@dataclass(frozen=True)
class Cbsd:
    """A PAL or GAA device.

    ``demand`` is either a constant channel count or a step schedule
    ``{slot: count}``: the value at slot t is the entry with the largest
    key <= t (0 before the first key). Outside ``[arrival, departure)`` the
    demand is 0.
    """

    id: int
    tier: Tier
    demand: Demand = 1
    position: Optional[tuple] = None
    arrival: int = 0
    departure: Optional[int] = None
    name: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.tier, Tier):
            object.__setattr__(self, "tier", Tier(self.tier))
        if isinstance(self.demand, Mapping):
            sched = {int(k): int(v) for k, v in self.demand.items()}
            if any(v < 0 for v in sched.values()):
                raise ConfigError(f"CBSD {self.id}: negative demand")
            object.__setattr__(self, "demand", dict(sorted(sched.items())))
        elif self.demand < 0:
            raise ConfigError(f"CBSD {self.id}: negative demand")
        else:
            object.__setattr__(self, "demand", int(self.demand))
        if self.departure is not None and self.departure <= self.arrival:
            raise ConfigError(f"CBSD {self.id}: departure must come after arrival")
        if self.position is not None:
            object.__setattr__(self, "position", tuple(float(x) for x in self.position))

    @property
    def label(self) -> str:
        return self.name or f"{self.tier.value}{self.id}"

    def active_at(self, t: int) -> bool:
        return self.arrival <= t and (self.departure is None or t < self.departure)

    def demand_at(self, t: int) -> int:
        if not self.active_at(t):
            return 0
        if not isinstance(self.demand, dict):
            return self.demand
        value = 0
        for slot, d in self.demand.items():
            if slot > t:
                break
            value = d
        return value


class AllocationState:
    """Binary CBSD-by-channel assignment for one slot.

    Every CBSD active in the slot has a row (possibly empty). Assignments are
    recorded in the order they were made; PAPER_LITERAL validation replays
    that order.
    """

    def __init__(self, slot: int, total: int, tiers: Optional[Mapping[int, Tier]] = None):
        self.slot = slot
        self.total = total
        self.tiers = dict(sorted((tiers or {}).items()))
        self.assign = {k: set() for k in self.tiers}
        self.order = []
        self._gaas = [[] for _ in range(total)]
        self._pals = [[] for _ in range(total)]

    @classmethod
    def zero(cls, slot: int = -1, total: int = 0) -> "AllocationState":
        return cls(slot, total)

    def _check_channel(self, s: int) -> None:
        if not 0 <= s < self.total:
            raise InputError(f"channel {s} outside 0..{self.total - 1}")

    def _check_cbsd(self, k: int) -> None:
        if k not in self.tiers:
            raise InputError(f"unknown CBSD {k} in slot {self.slot}")

    def add(self, k: int, s: int) -> None:
        self._check_cbsd(k)
        self._check_channel(s)
        if s in self.assign[k]:
            raise InputError(f"CBSD {k} already holds {channel_label(s)}")
        self._place(k, s)

    def _place(self, k: int, s: int) -> None:
        # unchecked add for allocators that already guarantee validity
        self.assign[k].add(s)
        self.order.append((k, s))
        (self._pals if self.tiers[k] is Tier.PAL else self._gaas)[s].append(k)

    def channels(self, k: int) -> frozenset:
        self._check_cbsd(k)
        return frozenset(self.assign[k])

    def holds(self, k: int, s: int) -> bool:
        return s in self.assign.get(k, ())

    def occupied_by_pal(self, s: int) -> bool:
        self._check_channel(s)
        return bool(self._pals[s])

    def pals_on(self, s: int) -> list:
        return list(self._pals[s])

    def gaas_on(self, s: int) -> list:
        return list(self._gaas[s])

    def allocated_count(self, k: int) -> int:
        self._check_cbsd(k)
        return len(self.assign[k])

    def pairs(self) -> list:
        """All (cbsd id, channel) assignments, sorted."""
        return sorted((k, s) for k, chans in self.assign.items() for s in chans)

    def matrix(self, ids: Optional[Iterable[int]] = None) -> np.ndarray:
        ids = list(self.tiers) if ids is None else list(ids)
        out = np.zeros((len(ids), self.total), dtype=np.uint8)
        for row, k in enumerate(ids):
            for s in self.assign.get(k, ()):
                out[row, s] = 1
        return out

    def same_assignment(self, other: "AllocationState") -> bool:
        return self.pairs() == other.pairs()

    def copy(self, slot: Optional[int] = None) -> "AllocationState":
        out = AllocationState(self.slot if slot is None else slot, self.total, self.tiers)
        for k, s in self.order:
            out.add(k, s)
        return out

    def __eq__(self, other):
        if not isinstance(other, AllocationState):
            return NotImplemented
        return (self.slot, self.total, self.tiers, self.pairs()) == (
            other.slot, other.total, other.tiers, other.pairs())

    def __repr__(self):
        body = ", ".join(f"{k}->{channel_label(s)}" for k, s in self.pairs())
        return f"AllocationState(slot={self.slot}, {{{body}}})"


def occupied_by_pal(state: AllocationState, s: int) -> bool:
    return state.occupied_by_pal(s)


def allocated_count(state: AllocationState, k: int) -> int:
    return state.allocated_count(k)


def unmet_demand(state: AllocationState, k: int, demand: int) -> int:
    return max(0, demand - state.allocated_count(k))


def count_moves(prev: AllocationState, cur: AllocationState, demands: Mapping[int, int]) -> dict:
    """CBSDs that changed channels between consecutive slots.

    A CBSD active in both slots counts as one move when it kept fewer of its
    previous channels than its current demand would have let it keep.
    Arrivals and departures are not moves. Returns ``{cbsd id: 1}`` for
    every moved CBSD.
    """
    moved = {}
    for k, before in prev.assign.items():
        if k not in cur.assign or not before:
            continue
        kept = len(before & cur.assign[k])
        if kept < min(len(before), demands.get(k, 0)):
            moved[k] = 1
    return moved

