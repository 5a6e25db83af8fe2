import dataclasses

import numpy as np
import pytest

from btcabm.calibration import CalibrationSet, miner_probability, traders_target
from btcabm.population import (
    EntrantSchedule,
    HardwareUnit,
    Population,
    Traders,
    assign_population,
    assign_populations,
    entrants_for_step,
    generate_entrant_pool,
    generate_initial_traders,
    pool_size,
)

C = CalibrationSet()


@pytest.fixture
def initial():
    return generate_initial_traders(C, np.random.default_rng(3))


def _by_rank(traders):
    order = np.argsort(-traders.btc[: traders.n])
    return traders.btc[order], traders.cash[order]


def test_initial_btc_adds_up_to_anchor(initial):
    assert initial.btc[: initial.n].sum() == pytest.approx(C.BT0, rel=1e-12)


def test_initial_richest_trader(initial):
    btc, cash = _by_rank(initial)
    # rank 1 holds b1 up to the gap between b1*H_160 (23,283) and BT0 (23,274)
    assert btc[0] == pytest.approx(4117, rel=0.001)
    assert btc[1] == pytest.approx(btc[0] / 2, rel=1e-12)
    assert cash[0] == pytest.approx(20_587, rel=1e-12)


def test_harmonic_sum_near_anchor():
    h = (1.0 / np.arange(1, 161)).sum()
    assert 4117 * h == pytest.approx(23_283, abs=1)


def test_initial_endowment_is_zipf(initial):
    btc, _ = _by_rank(initial)
    slope = np.polyfit(np.log(np.arange(1, btc.shape[0] + 1)), np.log(btc), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)


def test_initial_miners_hold_one_cpu(initial):
    miners = initial.members(Population.MINER)
    assert miners.shape[0] > 0
    for i in miners:
        units = initial.hardware[int(i)]
        assert len(units) == 1
        assert units[0].hash_rate == pytest.approx(0.0173e9)
        assert units[0].power == 75.0
        assert 1 <= initial.next_decision[i] <= 60
    assert np.all(initial.entry_step[: initial.n] == 0)


def test_entrant_pool_cash():
    pool = generate_entrant_pool(C, 1000, np.random.default_rng(0))
    by_rank = dict(zip(pool.rank.tolist(), pool.cash.tolist()))
    assert by_rank[1] == 200_000
    # 32**0.6 == 2**3, so the exact value is 25,000
    assert by_rank[32] == pytest.approx(25_000, rel=1e-12)
    slope = np.polyfit(np.log(pool.rank), np.log(pool.cash), 1)[0]
    assert slope == pytest.approx(-0.6, abs=0.05)


def test_entrant_pool_is_drawn_without_replacement():
    pool = generate_entrant_pool(C, 10, np.random.default_rng(0))
    a, b = pool.take(4), pool.take(6)
    assert sorted(np.concatenate([a, b]).tolist()) == sorted(pool.cash.tolist())
    with pytest.raises(IndexError):
        pool.take(1)


def test_pool_size_has_slack():
    assert pool_size(C) >= int((C.N_end - C.N0) * 1.05)


def test_entrant_schedule_totals():
    sched = EntrantSchedule(C)
    counts = [entrants_for_step(t, sched) for t in range(2, C.horizon + 1)]
    assert min(counts) >= 0
    assert sum(counts) == pytest.approx(39_649 - 160, abs=2)
    assert counts[-1] == pytest.approx(117, abs=2)


def test_entrant_schedule_tracks_curve():
    sched = EntrantSchedule(C)
    total = 0
    for t in range(2, 400):
        total += sched.count(t)
        assert abs(C.N0 + total - traders_target(t)) <= 0.5 + 1e-9


def test_base_scenario_never_gox(rng):
    pops = assign_populations(100, 5000, "base", rng, C)
    assert not np.any(pops == Population.GOX)


def test_gox_stops_at_entry_stop(rng):
    before = assign_populations(C.gox_entry_stop - 1, 5000, "gox", rng, C)
    after = assign_populations(C.gox_entry_stop, 5000, "gox", rng, C)
    assert np.any(before == Population.GOX)
    assert not np.any(after == Population.GOX)


def test_gox_share_of_random_entrants(rng):
    cal = dataclasses.replace(C, p_M=C.p_M.__class__(1e-9, 0.0))
    pops = assign_populations(10, 20_000, "gox", rng, cal)
    gox, rand = np.sum(pops == Population.GOX), np.sum(pops == Population.RANDOM)
    assert gox / (gox + rand) == pytest.approx(0.40, abs=0.02)


def test_miner_frequency_at_start(rng):
    pops = assign_populations(1, 10_000, "base", rng, C)
    assert np.mean(pops == Population.MINER) == pytest.approx(0.94, abs=0.02)


def test_population_frequencies_by_window():
    rng = np.random.default_rng(8)
    for t in range(50, 1857, 100):
        n = 2000
        pops = assign_populations(t, n, "base", rng, C)
        pm = miner_probability(t)
        sd = np.sqrt(pm * (1 - pm) / n)
        assert abs(np.mean(pops == Population.MINER) - pm) <= 3 * sd + 1e-12


def test_assign_population_single(rng):
    assert isinstance(assign_population(1, "base", rng, C), Population)


def test_traders_table_full():
    tr = Traders(1)
    tr.add(Population.RANDOM, 1.0, 0.0, 0)
    with pytest.raises(IndexError):
        tr.add(Population.RANDOM, 1.0, 0.0, 0)


def test_refresh_drops_inactive_units():
    tr = Traders(2)
    i = tr.add(Population.MINER, 10.0, 0.0, 0)
    u1, u2 = HardwareUnit(1, 1e9, 10.0), HardwareUnit(2, 2e9, 5.0)
    tr.add_unit(i, u1, C.epsilon)
    tr.add_unit(i, u2, C.epsilon)
    assert tr.hash[i] == 3e9
    u1.active = False
    tr.refresh_miner(i, C.epsilon)
    assert tr.hash[i] == 2e9 and tr.power[i] == 5.0
    assert tr.elec_cost[i] == pytest.approx(C.epsilon * 5.0 * 24)
    assert len(tr.hardware[i]) == 2
    view = tr.view(i)
    assert view.population == Population.MINER and len(view.hardware) == 2
