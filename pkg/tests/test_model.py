import pytest

from mtcsim.model import (AllocationState, Cbsd, ChannelPool, ConfigError, InputError, Tier, allocated_count,
                          count_moves, occupied_by_pal, unmet_demand)

from conftest import GAA2, PAL1, ch

TIERS = {PAL1: Tier.PAL, 2: Tier.PAL, GAA2: Tier.GAA}


def state_with(*pairs, total=7, tiers=TIERS):
    st = AllocationState(0, total, tiers)
    for k, s in pairs:
        st.add(k, s)
    return st


class TestChannelPool:
    def test_overlap_allowed(self):
        pool = ChannelPool(7, {0, 1, 2, 3}, {3, 4, 5, 6})
        assert pool.eligible(Tier.PAL) & pool.eligible(Tier.GAA) == {3}

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            ChannelPool(3, {3}, set())

    def test_check_channels(self):
        pool = ChannelPool(3, {0}, {1, 2})
        assert pool.check_channels([2, 0]) == {0, 2}
        with pytest.raises(InputError):
            pool.check_channels([3])


class TestCbsd:
    def test_constant_demand_inside_interval(self):
        c = Cbsd(1, Tier.GAA, 2, arrival=3, departure=5)
        assert [c.demand_at(t) for t in range(7)] == [0, 0, 0, 2, 2, 0, 0]

    def test_step_schedule(self):
        c = Cbsd(1, Tier.PAL, {2: 1, 4: 3})
        assert [c.demand_at(t) for t in range(6)] == [0, 0, 1, 1, 3, 3]

    def test_rejects_negative_demand(self):
        with pytest.raises(ConfigError):
            Cbsd(1, Tier.GAA, -1)
        with pytest.raises(ConfigError):
            Cbsd(1, Tier.GAA, {0: -2})

    def test_rejects_empty_interval(self):
        with pytest.raises(ConfigError):
            Cbsd(1, Tier.GAA, 1, arrival=4, departure=4)


class TestOccupiedByPal:
    def test_pal_on_channel(self):
        assert occupied_by_pal(state_with((PAL1, ch(2))), ch(2))

    def test_empty_state(self):
        st = state_with()
        assert not any(occupied_by_pal(st, s) for s in range(7))

    def test_gaa_does_not_count(self):
        assert not occupied_by_pal(state_with((GAA2, ch(5))), ch(5))

    def test_invalid_channel(self):
        with pytest.raises(InputError):
            occupied_by_pal(state_with(), 7)


class TestAllocatedCount:
    def test_single(self):
        assert allocated_count(state_with((GAA2, ch(5))), GAA2) == 1

    def test_zero(self):
        assert allocated_count(state_with(), GAA2) == 0

    def test_two_channels(self):
        assert allocated_count(state_with((GAA2, ch(5)), (GAA2, ch(6))), GAA2) == 2

    def test_unknown(self):
        with pytest.raises(InputError):
            allocated_count(state_with(), 99)


@pytest.mark.parametrize("demand, held, expected", [(1, 0, 1), (1, 1, 0), (3, 1, 2), (0, 1, 0)])
def test_unmet_demand(demand, held, expected):
    st = state_with(*[(GAA2, ch(4 + i)) for i in range(held)])
    assert unmet_demand(st, GAA2, demand) == expected


def test_add_rejects_duplicates_and_unknowns():
    st = state_with((GAA2, 4))
    with pytest.raises(InputError):
        st.add(GAA2, 4)
    with pytest.raises(InputError):
        st.add(42, 4)


def test_matrix_and_order():
    st = state_with((GAA2, 5), (PAL1, 1))
    assert st.order == [(GAA2, 5), (PAL1, 1)]
    m = st.matrix([PAL1, 2, GAA2])
    assert m.tolist() == [[0, 1, 0, 0, 0, 0, 0], [0] * 7, [0, 0, 0, 0, 0, 1, 0]]
    assert st.copy() == st


class TestCountMoves:
    tiers = {1: Tier.GAA, 2: Tier.GAA}

    def make(self, *pairs, slot=0):
        st = AllocationState(slot, 4, self.tiers)
        for k, s in pairs:
            st.add(k, s)
        return st

    def test_kept_is_not_a_move(self):
        assert count_moves(self.make((1, 0)), self.make((1, 0), slot=1), {1: 1, 2: 1}) == {}

    def test_changed_channel(self):
        assert count_moves(self.make((1, 0)), self.make((1, 1), slot=1), {1: 1, 2: 1}) == {1: 1}

    def test_blocked_counts(self):
        assert count_moves(self.make((1, 0)), self.make(slot=1), {1: 1, 2: 1}) == {1: 1}

    def test_demand_drop_is_not_a_move(self):
        assert count_moves(self.make((1, 0), (1, 1)), self.make((1, 1), slot=1), {1: 1, 2: 0}) == {}

    def test_growth_is_not_a_move(self):
        assert count_moves(self.make((1, 0)), self.make((1, 0), (1, 2), slot=1), {1: 2, 2: 0}) == {}

    def test_arrival_and_departure_are_not_moves(self):
        prev = AllocationState(0, 4, {1: Tier.GAA})
        prev.add(1, 0)
        cur = AllocationState(1, 4, {2: Tier.GAA})
        cur.add(2, 0)
        assert count_moves(prev, cur, {2: 1}) == {}
