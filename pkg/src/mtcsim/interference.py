"""GAA pairwise interference and the co-channel feasibility test."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import AllocationState, Cbsd, ConfigError, FeasibilityMode, InputError, Tier


class PropagationMode(enum.Enum):
    DIRECT = "direct"
    POWER_LAW = "power_law"


@dataclass(frozen=True)
class PropagationModel:
    mode: PropagationMode = PropagationMode.POWER_LAW
    tx_power: float = 1.0
    alpha: float = 2.0
    min_distance: float = 1.0

    def __post_init__(self):
        if not isinstance(self.mode, PropagationMode):
            object.__setattr__(self, "mode", PropagationMode(self.mode))
        if self.mode is PropagationMode.POWER_LAW:
            for name in ("tx_power", "alpha", "min_distance"):
                value = getattr(self, name)
                if not (value > 0 and math.isfinite(value)):
                    raise ConfigError(f"power-law {name} must be positive, got {value}")


class InterferenceMatrix:
    """Symmetric received-power matrix between GAAs plus the threshold gamma.

    Rows and columns follow ``ids`` (GAA ids, ascending). Lookups for ids
    outside the matrix (e.g. PALs) return 0.
    """

    def __init__(self, ids: Sequence[int], r, gamma: float):
        r = np.asarray(r, dtype=float)
        ids = [int(k) for k in ids]
        n = len(ids)
        if n == 0 and r.size == 0:
            r = r.reshape(0, 0)
        if r.shape != (n, n):
            raise ConfigError(f"interference matrix must be {n}x{n}, got {r.shape}")
        if len(set(ids)) != n:
            raise ConfigError("duplicate GAA id in interference matrix")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ConfigError("interference values must be finite and non-negative")
        if np.any(np.diag(r) != 0):
            raise ConfigError("interference matrix must have a zero diagonal")
        if not np.array_equal(r, r.T):
            i, j = np.argwhere(r != r.T)[0]
            raise ConfigError(f"interference matrix is not symmetric at ({i}, {j}): {r[i, j]} != {r[j, i]}")
        if not (gamma >= 0 and math.isfinite(gamma)):
            raise ConfigError(f"gamma must be a non-negative number, got {gamma}")
        order = np.argsort(ids, kind="stable")
        self.ids = tuple(ids[i] for i in order)
        self.r = r[np.ix_(order, order)]
        self.r.setflags(write=False)
        self.gamma = float(gamma)
        self._index = {k: i for i, k in enumerate(self.ids)}
        rows = self.r.tolist()
        self._lookup = {k: dict(zip(self.ids, rows[i])) for i, k in enumerate(self.ids)}

    @classmethod
    def empty(cls, gamma: float = 0.0) -> "InterferenceMatrix":
        return cls([], np.zeros((0, 0)), gamma)

    def value(self, j: int, k: int) -> float:
        row = self._lookup.get(j)
        if row is None:
            return 0.0
        return row.get(k, 0.0)

    def row(self, j: int) -> dict:
        return self._lookup.get(j, {})

    def restricted(self, ids: Sequence[int]) -> "InterferenceMatrix":
        """Sub-matrix over the given GAA ids (missing ids get zero rows)."""
        ids = sorted(ids)
        r = np.array([[self.value(a, b) for b in ids] for a in ids], dtype=float).reshape(len(ids), len(ids))
        return InterferenceMatrix(ids, r, self.gamma)

    def __eq__(self, other):
        if not isinstance(other, InterferenceMatrix):
            return NotImplemented
        return self.ids == other.ids and self.gamma == other.gamma and np.array_equal(self.r, other.r)

    def __repr__(self):
        return f"InterferenceMatrix(ids={list(self.ids)}, gamma={self.gamma})"


def build_interference_matrix(gaas: Sequence[Cbsd], model: PropagationModel,
                              gamma: float = 0.0) -> InterferenceMatrix:
    """Power-law interference: tx_power * max(distance, min_distance) ** -alpha."""
    if model.mode is not PropagationMode.POWER_LAW:
        raise ConfigError("DIRECT matrices are supplied verbatim, not built")
    ids = [g.id for g in gaas]
    if not gaas:
        return InterferenceMatrix([], np.zeros((0, 0)), gamma)
    missing = [g.id for g in gaas if g.position is None]
    if missing:
        raise ConfigError(f"power-law propagation needs positions; missing for GAA {missing}")
    pos = np.array([g.position for g in gaas], dtype=float)
    dist = np.sqrt(((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=-1))
    r = model.tx_power * np.maximum(dist, model.min_distance) ** (-model.alpha)
    np.fill_diagonal(r, 0.0)
    # exact symmetry regardless of floating-point evaluation order
    r = np.triu(r) + np.triu(r, 1).T
    return InterferenceMatrix(ids, r, gamma)


def _require_gaa(state: AllocationState, k: int) -> None:
    tier = state.tiers.get(k)
    if tier is Tier.PAL:
        raise InputError(f"CBSD {k} is a PAL; co-channel interference is defined for GAAs")
    if tier is None:
        raise InputError(f"unknown CBSD {k} in slot {state.slot}")


def cochannel_interference(state: AllocationState, k: int, s: int, r: InterferenceMatrix) -> float:
    """Interference GAA ``k`` would receive on ``s`` from the other GAAs there."""
    _require_gaa(state, k)
    if not 0 <= s < state.total:
        raise InputError(f"channel {s} outside 0..{state.total - 1}")
    row = r.row(k)
    return math.fsum(row.get(j, 0.0) for j in state._gaas[s] if j != k)


def feasible_for_gaa(state: AllocationState, k: int, s: int, r: InterferenceMatrix,
                     mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL) -> bool:
    """Whether GAA ``k`` may join channel ``s`` under the threshold ``r.gamma``.

    MUTUAL mode also requires every GAA already on ``s`` to stay within the
    threshold once ``k`` joins.
    """
    _require_gaa(state, k)
    if not 0 <= s < state.total:
        raise InputError(f"channel {s} outside 0..{state.total - 1}")
    return _fits(state._gaas[s], k, r, mode is FeasibilityMode.MUTUAL)


def _fits(occupants: list, k: int, r: InterferenceMatrix, mutual: bool) -> bool:
    row = r.row(k)
    if math.fsum([row.get(j, 0.0) for j in occupants if j != k]) > r.gamma:
        return False
    if mutual:
        # fsum over the full co-channel set keeps this bit-identical to a
        # check made on the final state
        for j in occupants:
            if j == k:
                continue
            row = r.row(j)
            received = [row.get(i, 0.0) for i in occupants if i != j]
            received.append(row.get(k, 0.0))
            if math.fsum(received) > r.gamma:
                return False
    return True
