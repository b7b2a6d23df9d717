"""Continuity-preserving CBRS channel allocation for domain-proxy networks."""

from .allocator import SlotEnvironment, TierInput, classify, msc, mtc_step, tbsa
from .baselines import (CapacityError, Violation, ViolationKind, brute_force_min_moves,
                        greedy_fill_allocator, random_allocator, validate_allocation)
from .engine import Event, EventKind, apply_events, compute_metrics, run_simulation
from .interference import (InterferenceMatrix, PropagationMode, PropagationModel,
                           build_interference_matrix, cochannel_interference, feasible_for_gaa)
from .model import (AllocationState, Cbsd, ChannelPool, ConfigError, FeasibilityMode, InputError, Tier,
                    allocated_count, occupied_by_pal, unmet_demand)
from .scenario import Scenario, ScenarioError, dump_scenario, parse_scenario

__version__ = "0.1.0"
