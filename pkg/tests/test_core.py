from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regret_forge.core import (
    EtaSchedule,
    Family,
    GainLedger,
    GameConfig,
    GapState,
    Horizon,
    Leader,
    PiecewiseDist,
    PiecewiseRate,
    RegretReport,
    validate_config,
)
from regret_forge.errors import (
    BadDistribution,
    BadExpertCount,
    BadHorizon,
    BadSchedule,
    NonMonotoneSchedule,
    ScheduleDomainError,
)
from regret_forge.serialize import dumps, loads


def test_validate_ok():
    assert validate_config(GameConfig(Horizon.finite(10), 2), EtaSchedule.single(0.1)) is None


def test_validate_bad_delta():
    with pytest.raises(BadHorizon):
        validate_config(GameConfig(Horizon.geometric(0.0), 2), EtaSchedule.single(0.1))


def test_validate_rising_decreasing_schedule():
    sched = EtaSchedule.decreasing(PiecewiseRate((1, 2), (0.1, 0.2)))
    with pytest.raises(NonMonotoneSchedule):
        validate_config(GameConfig(Horizon.finite(10), 2), sched)


def test_weakly_decreasing_is_accepted():
    sched = EtaSchedule.decreasing(PiecewiseRate((1, 5), (0.3, 0.3)))
    validate_config(GameConfig(Horizon.finite(10), 2), sched)


def test_decreasing_checked_elementwise_for_scalar_functions():
    def fn(t):
        if not isinstance(t, int):
            raise TypeError("scalar only")
        return 1.0 / t if t != 4 else 0.9

    with pytest.raises(NonMonotoneSchedule):
        validate_config(GameConfig(Horizon.finite(6), 2), EtaSchedule.decreasing(fn))


@pytest.mark.parametrize("T", [0, -3, 2.5])
def test_bad_steps(T):
    with pytest.raises(BadHorizon):
        Horizon.finite(T)


@pytest.mark.parametrize("delta", [0.0, -0.1, 1.5, float("nan")])
def test_bad_stop_prob(delta):
    with pytest.raises(BadHorizon):
        Horizon.geometric(delta)


def test_delta_one_allowed():
    assert Horizon.geometric(1.0).stop_prob == 1.0


def test_exactly_one_horizon_field():
    with pytest.raises(BadHorizon):
        Horizon("finite", steps=3, stop_prob=0.5)
    with pytest.raises(BadHorizon):
        Horizon("geometric", steps=3, stop_prob=0.5)


def test_expert_count():
    with pytest.raises(BadExpertCount):
        GameConfig(Horizon.finite(3), 1)


def test_schedule_fields_match_family():
    with pytest.raises(BadSchedule):
        EtaSchedule(Family.SINGLE, constant_rate=0.1, rate_fn=lambda t: 0.1)
    with pytest.raises(BadSchedule):
        EtaSchedule(Family.RANDOM, constant_rate=0.1)
    with pytest.raises(BadSchedule):
        EtaSchedule.single(-1.0)


def test_random_weights_checked():
    bad = EtaSchedule.random(lambda t: ((0.1, 0.5), (0.2, 0.4)))
    with pytest.raises(BadDistribution):
        validate_config(GameConfig(Horizon.finite(3), 2), bad)
    near = EtaSchedule.random(lambda t: ((0.1, 0.5), (0.2, 0.5 + 5e-13)))
    validate_config(GameConfig(Horizon.finite(3), 2), near)


def test_rate_fn_errors_become_domain_errors():
    sched = EtaSchedule.arbitrary(lambda t: 1.0 / (t - 3))
    with pytest.raises(ScheduleDomainError):
        sched.rate_at(3)
    with pytest.raises(ScheduleDomainError):
        EtaSchedule.arbitrary(lambda t: -1.0).rate_at(1)


def test_piecewise_rate_lookup():
    f = PiecewiseRate((1, 4, 10), (0.5, 0.25, 0.125))
    assert f(1) == 0.5 and f(3) == 0.5 and f(4) == 0.25 and f(100) == 0.125
    np.testing.assert_array_equal(f(np.array([1, 4, 9, 10])), [0.5, 0.25, 0.25, 0.125])
    with pytest.raises(BadSchedule):
        PiecewiseRate((2,), (0.1,))
    with pytest.raises(BadSchedule):
        PiecewiseRate((1, 1), (0.1, 0.2))


def test_profile_groups_equal_supports():
    d = PiecewiseDist((1, 3), (((0.1, 0.5), (0.2, 0.5)), ((0.3, 1.0),)))
    prof = EtaSchedule.random(d).profile(np.arange(1, 6))
    assert list(prof.index) == [0, 0, 1, 1, 1]
    generic = EtaSchedule.random(lambda t: d(t)).profile(np.arange(1, 6))
    assert list(generic.index) == [0, 0, 1, 1, 1]


def test_gain_ledger_bounds():
    GainLedger((0, 2), 3)
    with pytest.raises(ValueError):
        GainLedger((0, 3), 3)
    with pytest.raises(ValueError):
        GainLedger((-1, 0), 3)


def test_gap_state_tie_iff_zero():
    GapState.tied((1, 1))
    GapState(2, Leader.SINGLE, (1, 2))
    with pytest.raises(ValueError):
        GapState(0, Leader.TEAM_A, (1, 1))
    with pytest.raises(ValueError):
        GapState(1, Leader.TIED, (1, 1))


def test_report_additivity():
    RegretReport(1.0, 0.25, 0.75, 0.1)
    with pytest.raises(ValueError):
        RegretReport(1.0, 0.25, 0.7, 0.1)
    with pytest.raises(ValueError):
        RegretReport(1.0, 0.25, 0.75, 0.1, truncation_bound=-1.0)


def test_report_normalization():
    r = RegretReport.from_parts(3.0, 5.0, Horizon.finite(16))
    assert r.normalized == 2.0
    g = RegretReport.from_parts(3.0, 5.0, Horizon.geometric(0.25))
    assert g.normalized == 4.0


finite_floats = st.floats(min_value=0.0, max_value=50.0, allow_nan=False)


@st.composite
def schedules(draw):
    fam = draw(st.sampled_from(list(Family)))
    if fam is Family.SINGLE:
        return EtaSchedule.single(draw(finite_floats))
    n = draw(st.integers(1, 4))
    starts = tuple(sorted(draw(st.sets(st.integers(2, 100), min_size=n - 1, max_size=n - 1)) | {1}))
    n = len(starts)
    if fam is Family.RANDOM:
        sups = []
        for _ in range(n):
            m = draw(st.integers(1, 3))
            etas = draw(st.lists(finite_floats, min_size=m, max_size=m))
            raw = draw(st.lists(st.integers(1, 9), min_size=m, max_size=m))
            ws = [r / sum(raw) for r in raw]
            ws[-1] = 1.0 - math.fsum(ws[:-1])
            sups.append(tuple(zip(etas, ws)))
        return EtaSchedule.random(PiecewiseDist(starts, tuple(sups)))
    vals = draw(st.lists(finite_floats, min_size=n, max_size=n))
    if fam is Family.DECREASING:
        vals = sorted(vals, reverse=True)
    return EtaSchedule(fam, rate_fn=PiecewiseRate(starts, tuple(vals)))


horizons = st.one_of(
    st.integers(1, 10**9).map(Horizon.finite),
    st.floats(min_value=1e-12, max_value=1.0, exclude_min=True).map(Horizon.geometric),
)


@settings(max_examples=200)
@given(
    st.one_of(
        horizons,
        st.builds(GameConfig, horizons, st.integers(2, 64)),
        schedules(),
        st.builds(
            lambda g, l, s: RegretReport.from_parts(l, s, g, 0.5),
            horizons,
            st.floats(-1e6, 1e6),
            st.floats(-1e6, 1e6),
        ),
        st.builds(lambda gs: GainLedger(tuple(gs), max(gs) + 1), st.lists(st.integers(0, 50), min_size=2, max_size=6)),
        st.builds(lambda d, a, b: GapState(d, Leader.TEAM_B, (a, b)), st.integers(1, 99), st.integers(1, 5), st.integers(1, 5)),
    )
)
def test_json_round_trip(obj):
    back = loads(dumps(obj))
    assert back == obj
    assert type(back) is type(obj)
