"""Slot-loop simulation: events, allocator dispatch, traces and metrics."""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .allocator import SlotEnvironment, mtc_step
from .baselines import brute_force_min_moves, greedy_fill_allocator, random_allocator, validate_allocation
from .interference import InterferenceMatrix
from .model import AllocationState, FeasibilityMode, InputError, Tier, channel_label, count_moves

log = logging.getLogger(__name__)


class EventKind(enum.Enum):
    # declaration order is the processing order within a slot
    AVAILABILITY_SET = "availability"
    DEPARTURE = "departure"
    ARRIVAL = "arrival"
    DEMAND_SET = "demand"


_EVENT_RANK = {kind: i for i, kind in enumerate(EventKind)}


@dataclass(frozen=True)
class Event:
    """One scenario change taking effect at the start of ``slot``.

    Payload by kind: AVAILABILITY_SET a channel set, DEPARTURE a CBSD id,
    ARRIVAL a :class:`Cbsd`, DEMAND_SET a ``(cbsd id, demand)`` pair.
    """

    slot: int
    kind: EventKind
    payload: object


class SimulationError(RuntimeError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations)
        super().__init__(f"allocation violates constraints:\n{lines}")


def initial_environment(pool, r: InterferenceMatrix, available=None,
                        mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL) -> SlotEnvironment:
    """The empty environment preceding slot 0."""
    available = range(pool.total) if available is None else available
    return SlotEnvironment(t=-1, pool=pool, available=frozenset(available), r=r,
                           feasibility_mode=mode)


def apply_events(env: SlotEnvironment, events: Iterable[Event]) -> SlotEnvironment:
    """Advance ``env`` one slot, applying that slot's events in canonical order."""
    t = env.t + 1
    events = list(events)
    stray = [e for e in events if e.slot != t]
    if stray:
        raise InputError(f"events for slot {stray[0].slot} applied at slot {t}")
    available = env.available
    cbsds = dict(env.cbsds)
    overrides = dict(env.demand_overrides)
    for e in sorted(events, key=lambda e: _EVENT_RANK[e.kind]):
        if e.kind is EventKind.AVAILABILITY_SET:
            try:
                available = env.pool.check_channels(e.payload)
            except TypeError as exc:
                raise InputError(f"slot {t}: malformed channel set {e.payload!r}") from exc
        elif e.kind is EventKind.DEPARTURE:
            if e.payload not in cbsds:
                raise InputError(f"slot {t}: departure of unknown CBSD {e.payload}")
            del cbsds[e.payload]
            overrides.pop(e.payload, None)
        elif e.kind is EventKind.ARRIVAL:
            cbsd = e.payload
            if cbsd.id in cbsds:
                raise InputError(f"slot {t}: CBSD {cbsd.id} is already active")
            cbsds[cbsd.id] = cbsd
        else:
            k, demand = e.payload
            if k not in cbsds:
                raise InputError(f"slot {t}: demand update for unknown CBSD {k}")
            if demand < 0:
                raise InputError(f"slot {t}: negative demand for CBSD {k}")
            overrides[k] = int(demand)
    cbsds = dict(sorted(cbsds.items()))
    demands = {k: overrides.get(k, c.demand_at(t)) for k, c in cbsds.items()}
    return SlotEnvironment(t=t, pool=env.pool, available=available, r=env.r, cbsds=cbsds,
                           demands=demands, feasibility_mode=env.feasibility_mode,
                           demand_overrides=overrides)


def _mtc(env, prev, seed):
    return mtc_step(env, prev)


def _greedy(env, prev, seed):
    return greedy_fill_allocator(env, prev)


def _random(env, prev, seed):
    return random_allocator(env, prev, f"{seed}:{env.t}")


def _oracle(env, prev, seed):
    return brute_force_min_moves(env, prev)[0]


ALLOCATORS: Mapping[str, Callable] = {
    "mtc": _mtc,
    "greedy": _greedy,
    "random": _random,
    "oracle": _oracle,
}


@dataclass
class SlotRecord:
    slot: int
    available: frozenset
    demands: dict
    state: AllocationState
    retained: frozenset
    moved: dict

    @property
    def order(self) -> list:
        """Assignment order, used to replay PAPER_LITERAL feasibility."""
        return self.state.order

    def served(self, k: int) -> int:
        return min(len(self.state.assign.get(k, ())), self.demands.get(k, 0))

    def blocked(self, k: int) -> int:
        return self.demands.get(k, 0) - self.served(k)


@dataclass
class SlotTrace:
    scenario: str
    allocator: str
    seed: int
    mode: FeasibilityMode
    r: InterferenceMatrix
    tiers: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def state(self, slot: int) -> AllocationState:
        return self.records[slot].state


def _churn_event(rng: random.Random, env: SlotEnvironment, t: int, flip_probability: float):
    flips = [rng.random() < flip_probability for _ in range(env.pool.total)]
    available = frozenset(s for s in range(env.pool.total) if (s in env.available) != flips[s])
    return Event(t, EventKind.AVAILABILITY_SET, available)


def scenario_events(scenario, horizon: int) -> dict:
    """Scripted events plus CBSD arrivals/departures, grouped by slot."""
    by_slot = {}
    for c in scenario.cbsds:
        if c.arrival < horizon:
            by_slot.setdefault(c.arrival, []).append(Event(c.arrival, EventKind.ARRIVAL, c))
        if c.departure is not None and c.departure < horizon:
            by_slot.setdefault(c.departure, []).append(Event(c.departure, EventKind.DEPARTURE, c.id))
    for e in scenario.events:
        if e.slot < horizon:
            by_slot.setdefault(e.slot, []).append(e)
    return by_slot


def run_simulation(scenario, allocator: str = "mtc", horizon: Optional[int] = None,
                   strict: bool = False, seed: Optional[int] = None,
                   feasibility: Optional[FeasibilityMode] = None) -> SlotTrace:
    """Run ``allocator`` over the scenario for ``horizon`` slots.

    With ``strict`` every slot is validated and the first violation aborts
    the run with :class:`SimulationError`.
    """
    horizon = scenario.horizon if horizon is None else horizon
    if horizon < 1:
        raise InputError(f"horizon must be at least 1, got {horizon}")
    try:
        step = ALLOCATORS[allocator]
    except KeyError:
        raise InputError(f"unknown allocator {allocator!r}; choose from {sorted(ALLOCATORS)}") from None
    seed = scenario.seed if seed is None else seed
    mode = scenario.feasibility_mode if feasibility is None else feasibility
    r = scenario.interference_matrix()
    env = initial_environment(scenario.pool, r, scenario.initial_available, mode)
    prev = AllocationState.zero(-1, scenario.pool.total)
    events = scenario_events(scenario, horizon)
    churn = scenario.churn
    churn_rng = random.Random(seed)
    trace = SlotTrace(scenario.name, allocator, seed, mode, r,
                      tiers={c.id: c.tier for c in scenario.cbsds})
    for t in range(horizon):
        slot_events = events.get(t, [])
        if churn is not None and t >= churn.start:
            slot_events = [_churn_event(churn_rng, env, t, churn.flip_probability)] + slot_events
        env = apply_events(env, slot_events)
        state = step(env, prev, seed)
        if strict:
            violations = validate_allocation(env, state)
            if violations:
                raise SimulationError(violations)
        retained = frozenset((k, s) for k, s in state.pairs() if prev.holds(k, s))
        trace.records.append(SlotRecord(t, env.available, dict(env.demands), state, retained,
                                        count_moves(prev, state, env.demands)))
        prev = state
    log.debug("ran %s on %s for %d slots", allocator, scenario.name, horizon)
    return trace


@dataclass
class MetricsReport:
    slots: int
    pal_moves: int
    gaa_moves: int
    moves_per_cbsd: dict
    total_demand: int
    served: int
    blocked: int
    satisfaction: float
    mean_interference: float
    max_interference: float
    jain: float
    series: list

    @property
    def moves(self) -> int:
        return self.pal_moves + self.gaa_moves


def jain_index(values) -> float:
    """Jain fairness index; 1.0 for an empty or all-zero population."""
    values = [float(v) for v in values]
    square_sum = math.fsum(v * v for v in values)
    if not values or square_sum == 0:
        return 1.0
    return math.fsum(values) ** 2 / (len(values) * square_sum)


def _gaa_interference(record: SlotRecord, r: InterferenceMatrix) -> list:
    state = record.state
    out = []
    for k, s in state.pairs():
        if state.tiers[k] is Tier.GAA:
            row = r.row(k)
            out.append(math.fsum(row.get(j, 0.0) for j in state._gaas[s] if j != k))
    return out


def compute_metrics(trace: SlotTrace) -> MetricsReport:
    if not trace.records:
        raise InputError("cannot compute metrics of an empty trace")
    tiers = trace.tiers
    pal_moves = gaa_moves = 0
    per_cbsd = {}
    demand_by = {}
    served_by = {}
    interference = []
    series = []
    for rec in trace.records:
        for k in rec.moved:
            per_cbsd[k] = per_cbsd.get(k, 0) + 1
            if tiers.get(k, rec.state.tiers.get(k)) is Tier.PAL:
                pal_moves += 1
            else:
                gaa_moves += 1
        slot_demand = slot_served = 0
        for k, d in rec.demands.items():
            got = rec.served(k)
            demand_by[k] = demand_by.get(k, 0) + d
            served_by[k] = served_by.get(k, 0) + got
            slot_demand += d
            slot_served += got
        levels = _gaa_interference(rec, trace.r)
        interference.extend(levels)
        series.append((rec.slot, len(rec.moved), slot_served / slot_demand if slot_demand else 1.0,
                       max(levels, default=0.0)))
    total = sum(demand_by.values())
    served = sum(served_by.values())
    ratios = [served_by[k] / d for k, d in sorted(demand_by.items()) if d > 0]
    return MetricsReport(
        slots=len(trace.records),
        pal_moves=pal_moves,
        gaa_moves=gaa_moves,
        moves_per_cbsd=dict(sorted(per_cbsd.items())),
        total_demand=total,
        served=served,
        blocked=total - served,
        satisfaction=served / total if total else 1.0,
        mean_interference=math.fsum(interference) / len(interference) if interference else 0.0,
        max_interference=max(interference, default=0.0),
        jain=jain_index(ratios),
        series=series,
    )


def _fmt(x: float) -> str:
    return format(x, ".10g")


def trace_csv(trace: SlotTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", "cbsd_id", "tier", "channel", "retained"])
    for rec in trace.records:
        for k, s in rec.state.pairs():
            w.writerow([rec.slot, k, rec.state.tiers[k].value, channel_label(s), int((k, s) in rec.retained)])
    return buf.getvalue()


def series_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slot", "moves", "satisfaction", "max_interference"])
    for slot, moves, sat, peak in report.series:
        w.writerow([slot, moves, _fmt(sat), _fmt(peak)])
    return buf.getvalue()


def metrics_text(report: MetricsReport, header: Mapping[str, object] = ()) -> str:
    lines = [f"{key} = {value}" for key, value in dict(header).items()]
    lines += [
        f"slots = {report.slots}",
        f"moves = {report.moves}",
        f"pal_moves = {report.pal_moves}",
        f"gaa_moves = {report.gaa_moves}",
        f"total_demand = {report.total_demand}",
        f"served = {report.served}",
        f"blocked = {report.blocked}",
        f"satisfaction = {_fmt(report.satisfaction)}",
        f"mean_interference = {_fmt(report.mean_interference)}",
        f"max_interference = {_fmt(report.max_interference)}",
        f"jain = {_fmt(report.jain)}",
    ]
    lines += [f"moves.cbsd.{k} = {n}" for k, n in report.moves_per_cbsd.items()]
    return "\n".join(lines) + "\n"
