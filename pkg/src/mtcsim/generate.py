"""Random scenario generation for property tests and benchmarks."""

from __future__ import annotations

import random

from .engine import Event, EventKind
from .interference import PropagationMode, PropagationModel
from .model import Cbsd, ChannelPool, FeasibilityMode, Tier
from .scenario import Churn, Scenario


def _subset(rng: random.Random, universe, p: float) -> frozenset:
    return frozenset(s for s in universe if rng.random() < p)


def random_scenario(rng: random.Random, max_channels: int = 20, max_cbsds: int = 30,
                    max_slots: int = 50, frozen: bool = False, mode=None) -> Scenario:
    """Draw a scenario within the given size limits.

    With ``frozen`` every CBSD arrives at slot 0 with constant demand and no
    event happens after slot 0.
    """
    total = rng.randint(1, max_channels)
    channels = range(total)
    layout = rng.random()
    if layout < 0.4:
        split = rng.randint(0, total)
        pool = ChannelPool(total, range(split), range(split, total))
    elif layout < 0.7:
        pool = ChannelPool(total, _subset(rng, channels, 0.5), _subset(rng, channels, 0.7))
    else:
        pool = ChannelPool(total, channels, channels)
    horizon = rng.randint(1, max_slots)
    n = rng.randint(0, max_cbsds)
    cbsds = []
    for k in range(1, n + 1):
        tier = Tier.PAL if rng.random() < 0.35 else Tier.GAA
        if frozen:
            arrival, departure = 0, None
            demand = rng.randint(0, 3)
        else:
            arrival = rng.randrange(horizon) if rng.random() < 0.5 else 0
            departure = rng.randint(arrival + 1, horizon + 2) if rng.random() < 0.4 else None
            if rng.random() < 0.3:
                demand = {s: rng.randint(0, 3) for s in sorted(rng.sample(range(horizon + 1), rng.randint(1, min(3, horizon + 1))))}
            else:
                demand = rng.randint(0, 3)
        position = (rng.uniform(0, 100), rng.uniform(0, 100))
        cbsds.append(Cbsd(k, tier, demand, position, arrival, departure))

    gaas = [c for c in cbsds if c.tier is Tier.GAA]
    if rng.random() < 0.5:
        model = PropagationModel(PropagationMode.POWER_LAW, tx_power=rng.choice([10.0, 100.0, 1000.0]),
                                 alpha=rng.choice([2.0, 3.0, 3.5]), min_distance=1.0)
        direct = None
        gamma = rng.choice([0.0, 0.05, 0.2, 1.0, 5.0])
    else:
        model = PropagationModel(PropagationMode.DIRECT)
        levels = [0.0, 0.25, 0.5, 1.0, 2.0]
        m = [[0.0] * len(gaas) for _ in gaas]
        for i in range(len(gaas)):
            for j in range(i + 1, len(gaas)):
                m[i][j] = m[j][i] = rng.choice(levels)
        direct = tuple(tuple(row) for row in m)
        gamma = rng.choice([0.0, 0.5, 1.0, 1.5])

    available = _subset(rng, channels, rng.choice([0.5, 0.8, 1.0]))
    events = []
    if not frozen:
        for t in range(1, horizon):
            if rng.random() < 0.3:
                events.append(Event(t, EventKind.AVAILABILITY_SET, _subset(rng, channels, rng.random())))
            if cbsds and rng.random() < 0.2:
                c = rng.choice(cbsds)
                if c.active_at(t):
                    events.append(Event(t, EventKind.DEMAND_SET, (c.id, rng.randint(0, 3))))
    if mode is None:
        mode = rng.choice(list(FeasibilityMode))
    return Scenario(name="random", pool=pool, gamma=gamma, propagation=model, cbsds=tuple(cbsds),
                    horizon=horizon, initial_available=available, direct_r=direct,
                    feasibility_mode=mode, events=tuple(events), seed=rng.randrange(2**31))


def benchmark_scenario(slots: int = 10_000, n_cbsds: int = 50, channels: int = 15, seed: int = 0,
                       flip_probability: float = 0.02) -> Scenario:
    """Large steady-state scenario with light availability churn."""
    rng = random.Random(seed)
    n_pal = n_cbsds // 5
    pool = ChannelPool(channels, range(channels // 3), range(channels // 3, channels))
    cbsds = tuple(
        Cbsd(k, Tier.PAL if k <= n_pal else Tier.GAA, 1,
             (rng.uniform(0, 500), rng.uniform(0, 500)))
        for k in range(1, n_cbsds + 1))
    model = PropagationModel(PropagationMode.POWER_LAW, tx_power=100.0, alpha=2.0, min_distance=1.0)
    return Scenario(name="benchmark", pool=pool, gamma=0.05, propagation=model, cbsds=cbsds,
                    horizon=slots, churn=Churn(1, flip_probability), seed=seed)
