from __future__ import annotations

import bisect
import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

import refsim
from regret_forge.adversaries import (
    AdversaryScript,
    build_geometric_loop,
    build_geometric_sl,
    build_geometric_straight,
    build_lsdet,
    build_lsrand,
    build_lsrandpp,
    loop_primitive,
    point_mass,
)
from regret_forge.core import EtaSchedule, Family, GameConfig, Horizon, PiecewiseDist, PiecewiseRate
from regret_forge.errors import BadDelta, EvenK, LengthMismatch, NonPositiveTolerance, ParityError, TooLarge
from regret_forge.regret import (
    DPOraclePolicy,
    Structure,
    best_response_dp_finite,
    best_response_vi_geometric,
    evaluate_adversary,
    exact_regret_distribution,
    exact_regret_script,
    geometric_loop_regret,
    geometric_sl_curve,
    geometric_sl_regret,
    geometric_straight_regret,
    lsdet_regret_formula,
    lsrand_regret_formula,
    lsrandpp_regret_formula,
    monte_carlo_regret,
    mwa_lag_prob,
    odd_lsdet_regret_formula,
    step_regrets,
)
from regret_forge.regret.formulas import lsdet_regret_terms
from regret_forge.regret.oracles import enumerate_paths_regret


def fin(T, k=2):
    return GameConfig(Horizon.finite(T), k)


def geo(delta, k=2):
    return GameConfig(Horizon.geometric(delta), k)


def close(a, b, rel=1e-10):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


# reference value for the lsdet example, summed at 50 digits
with mpmath.workdps(50):
    _e = mpmath.mpf("0.5")
    LSDET_12_4 = float(
        4 * (mpmath.mpf(1) / 2 - 1 / (mpmath.exp(_e) + 1)) + mpmath.fsum(1 / (mpmath.exp(_e * d) + 1) for d in range(4))
    )


# exact_regret_script

def test_empty_script_has_zero_regret():
    empty = AdversaryScript((), (1, 1))
    assert exact_regret_script(empty, EtaSchedule.single(0.7), geo(0.3)).regret == 0.0


def test_lsdet_example_against_references():
    script = build_lsdet(12, 2, 4)
    sched = EtaSchedule.single(0.5)
    ref = refsim.finite_regret(refsim.expand("L*4 S*4"), (1, 1), refsim.const(0.5))
    for method in ("vectorized", "ledger"):
        rep = exact_regret_script(script, sched, fin(12), method=method)
        assert abs(rep.regret - LSDET_12_4) <= 1e-12
        assert abs(rep.regret - ref) <= 1e-12
    assert LSDET_12_4 == pytest.approx(1.8187, abs=1e-4)


@pytest.mark.parametrize("c", [1, 2, 5])
def test_loop_primitive_regret(c):
    eta = 0.8
    rep = exact_regret_script(loop_primitive(2, c), EtaSchedule.single(eta), fin(2 * c))
    assert close(rep.regret, c * (0.5 - 1 / (math.exp(eta) + 1)), 1e-12)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        exact_regret_script(build_lsdet(12, 2, 4), EtaSchedule.single(0.5), fin(13))


# exact_regret_distribution

def test_point_mass_distribution():
    s = build_lsdet(20, 2, 6)
    sched = EtaSchedule.single(0.4)
    a = exact_regret_distribution(point_mass(s), sched, fin(20))
    b = exact_regret_script(s, sched, fin(20))
    assert a.regret == b.regret


def test_lsrand_is_mean_of_its_scripts():
    sched = EtaSchedule.single(0.5)
    d = build_lsrand(9, 2, 2)
    refs = [refsim.finite_regret(refsim.expand(s.to_text()), (1, 1), refsim.const(0.5)) for s, _ in d.support]
    want = math.fsum(refs) / 6
    for use in (True, False):
        assert close(exact_regret_distribution(d, sched, fin(9), use_formulas=use).regret, want, 1e-12)


def test_lsrandpp_zero_is_pure_loop_average():
    sched = EtaSchedule.single(0.5)
    d = build_lsrandpp(9, 2, 2, 0.0)
    loop4 = refsim.finite_regret(refsim.expand("L*4"), (1, 1), refsim.const(0.5))
    # the idle-first script loops with the same cycles shifted by one step
    want = loop4
    assert close(exact_regret_distribution(d, sched, fin(9)).regret, want, 1e-12)


# closed forms

def test_lsdet_formula_examples():
    assert abs(lsdet_regret_formula(12, 4, EtaSchedule.single(0.5)).regret - LSDET_12_4) <= 1e-12
    assert lsdet_regret_formula(12, 4, EtaSchedule.single(0.0)).regret == 2.0
    with pytest.raises(ParityError):
        lsdet_regret_formula(12, 5, EtaSchedule.single(0.5))


def test_odd_formula_examples():
    rep = odd_lsdet_regret_formula(20, 6, 0.0, 3)
    assert rep.loop_part == 0.0 and rep.straight_part == pytest.approx(6 * 2 / 3, abs=1e-14)
    val = odd_lsdet_regret_formula(12, 4, 0.5, 3).regret
    ref = refsim.finite_regret(refsim.expand("L*4 S*4"), (1, 2), refsim.const(0.5))
    assert abs(val - ref) <= 1e-12
    # hand form: loops * [(m+1)/k - (m+1)/(m e^eta + m + 1)] + sum (k-1)/(e^{d eta} + k - 1)
    hand = 4 * (2 / 3 - 2 / (math.exp(0.5) + 2)) + math.fsum(2 / (math.exp(0.5 * d) + 2) for d in range(4))
    assert abs(val - hand) <= 1e-12
    with pytest.raises(EvenK):
        odd_lsdet_regret_formula(12, 4, 0.5, 4)


def test_geometric_sl_examples():
    assert geometric_sl_regret(1.0, 0.7, 0).regret == 0.0
    assert geometric_sl_regret(0.5, 0.0, 0).regret == pytest.approx(1 / 6, abs=1e-15)
    with pytest.raises(BadDelta):
        geometric_sl_regret(0.0, 0.1, 0)


def test_geometric_loop_examples():
    assert geometric_loop_regret(1.0, 0.3).regret == 0.0
    assert geometric_loop_regret(0.5, 0.0).regret == pytest.approx(1 / 6, abs=1e-15)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0, 4.0])
def test_geometric_loop_small_delta(alpha):
    delta = 1e-6
    r = geometric_loop_regret(delta, alpha * math.sqrt(delta)).regret
    assert math.sqrt(delta) * r == pytest.approx(alpha / 8, rel=0.01)


def test_geometric_straight_examples():
    assert geometric_straight_regret(0.5, math.inf).regret == 0.25
    assert geometric_straight_regret(0.5, 0.0).regret == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(NonPositiveTolerance):
        geometric_straight_regret(0.5, 0.1, tail_tol=0.0)


@pytest.mark.parametrize("alpha", [2.0, 4.0, 6.0])
def test_geometric_straight_small_delta(alpha):
    delta = 1e-6
    r = geometric_straight_regret(delta, alpha * math.sqrt(delta), 4).regret
    assert math.sqrt(delta) * r == pytest.approx(math.log(4) / alpha, rel=0.01)


# Monte Carlo

def test_mc_single_trial_is_exact():
    s = build_lsdet(12, 2, 4)
    est, err = monte_carlo_regret(s, EtaSchedule.single(0.5), fin(12), 1, 0)
    assert abs(est - LSDET_12_4) <= 1e-12 and math.isnan(err)


def test_mc_lsrand_agrees():
    sched = EtaSchedule.single(0.5)
    d = build_lsrand(9, 2, 2)
    est, err = monte_carlo_regret(d, sched, fin(9), 100_000, 42)
    exact = exact_regret_distribution(d, sched, fin(9)).regret
    assert abs(est - exact) <= 3 * err


def test_mc_geometric_loop_agrees():
    sched = EtaSchedule.single(0.4)
    est, err = monte_carlo_regret(build_geometric_loop(2), sched, geo(0.1), 100_000, 7)
    assert abs(est - geometric_loop_regret(0.1, 0.4).regret) <= 3 * err


def test_mc_reproducible():
    d = build_lsrand(30, 2, 5)
    a = monte_carlo_regret(d, EtaSchedule.single(0.3), fin(30), 500, 11)
    b = monte_carlo_regret(d, EtaSchedule.single(0.3), fin(30), 500, 11)
    assert a == b


# best-response oracles

def brute_force(policy, T):
    best = -math.inf
    for moves in itertools.product((1, 0, -1), repeat=T):
        d, acc, ok = 0, 0.0, True
        for t, m in enumerate(moves, start=1):
            if d == 0 and m == -1:
                ok = False
                break
            p = float(policy(np.array([d]), t)[0])
            acc += p if m == 1 else (-p if m == -1 else 0.0)
            d += m
        if ok:
            best = max(best, acc)
    return best


def test_dp_single_step():
    res = best_response_dp_finite(DPOraclePolicy.mwa(2.0), 1)
    assert res.regret == 0.5 and res.optimal_path == (0, 1)


@pytest.mark.parametrize("T", range(1, 7))
@pytest.mark.parametrize("eta", [0.3, 1.0])
def test_dp_matches_exhaustive_search(T, eta):
    pol = DPOraclePolicy.mwa(eta)
    res = best_response_dp_finite(pol, T)
    assert res.regret == pytest.approx(brute_force(pol, T), abs=1e-15)
    assert res.regret == pytest.approx(enumerate_paths_regret(pol, T), abs=1e-15)


def test_dp_structure_t50():
    res = best_response_dp_finite(DPOraclePolicy.mwa(0.3), 50)
    assert res.structure is Structure.LOOP_THEN_STRAIGHT and res.stay_steps <= 1


def test_dp_size_guard():
    with pytest.raises(TooLarge):
        best_response_dp_finite(DPOraclePolicy.mwa(0.3), 10**6)


def test_vi_regret_only_at_ties():
    # only ties pay, and stepping back down to a tie is free
    q = 0.9
    res = best_response_vi_geometric(lambda d: np.where(np.asarray(d) == 0, 0.5, 0.0), 1 - q, d_max=50)
    assert res.action_map[0] == 1
    assert res.regret == pytest.approx(q * 0.5 / (1 - q * q), abs=1e-12)


def test_vi_structure_and_value():
    delta, eta = 0.01, 0.22
    res = best_response_vi_geometric(mwa_lag_prob(eta), delta, tol=1e-12)
    assert res.structure is Structure.STRAIGHT_THEN_LOOP and res.threshold is not None
    curve = geometric_sl_curve(delta, eta, 400)
    assert abs(res.regret - curve.max()) <= 1e-9
    assert int(curve.argmax()) == res.threshold


# properties

@st.composite
def finite_schedules(draw, T, families=tuple(Family)):
    fam = draw(st.sampled_from(families))
    rate = st.floats(0.0, 3.0)
    if fam is Family.SINGLE:
        eta = draw(rate)
        return EtaSchedule.single(eta), refsim.const(eta)
    n = draw(st.integers(1, 5))
    starts = sorted({1} | set(draw(st.lists(st.integers(2, max(2, T)), max_size=n - 1))))
    if fam is Family.RANDOM:
        sups = []
        for _ in starts:
            m = draw(st.integers(1, 3))
            etas = draw(st.lists(rate, min_size=m, max_size=m))
            sups.append(tuple((e, 1.0 / m) for e in etas))
        dist = PiecewiseDist(tuple(starts), tuple(sups))

        def support(t, starts=starts, sups=sups):
            return list(sups[bisect.bisect_right(starts, t) - 1])

        return EtaSchedule.random(dist), support
    vals = draw(st.lists(rate, min_size=len(starts), max_size=len(starts)))
    if fam is Family.DECREASING:
        vals = sorted(vals, reverse=True)

    def support(t, starts=starts, vals=vals):
        return [(vals[bisect.bisect_right(starts, t) - 1], 1.0)]

    return EtaSchedule(fam, rate_fn=PiecewiseRate(tuple(starts), tuple(vals))), support


@settings(max_examples=80, deadline=None)
@given(st.data(), st.integers(1, 200))
def test_lsdet_formula_equals_simulation(data, T):
    ell = data.draw(st.integers(0, T).filter(lambda e: (T - e) % 2 == 0))
    k = data.draw(st.sampled_from([2, 4, 6]))
    sched, support = data.draw(finite_schedules(T))
    script = build_lsdet(T, k, ell)
    a = lsdet_regret_formula(T, ell, sched, k).regret
    b = exact_regret_script(script, sched, fin(T, k)).regret
    c = refsim.finite_regret(refsim.expand(script.to_text()), script.split, support)
    assert close(a, b) and close(a, c)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.data())
def test_odd_formula_equals_simulation(T, data):
    ell = data.draw(st.integers(0, T).filter(lambda e: (T - e) % 2 == 0))
    k = data.draw(st.sampled_from([3, 5, 7]))
    eta = data.draw(st.floats(0.0, 3.0))
    script = build_lsdet(T, k, ell)
    a = odd_lsdet_regret_formula(T, ell, eta, k).regret
    b = exact_regret_script(script, EtaSchedule.single(eta), fin(T, k)).regret
    assert close(a, b)


@settings(max_examples=50, deadline=None)
@given(st.integers(5, 200), st.data())
def test_randomized_formulas_equal_enumeration(T, data):
    ell = data.draw(st.integers(0, T - 3))
    k = data.draw(st.sampled_from([2, 3, 4]))
    p = data.draw(st.floats(0.0, 1.0))
    sched, _ = data.draw(finite_schedules(T))
    cfg = fin(T, k)
    d1 = build_lsrand(T, k, ell)
    d2 = build_lsrandpp(T, k, ell, p)
    assert close(lsrand_regret_formula(T, ell, sched, k).regret, exact_regret_distribution(d1, sched, cfg, use_formulas=False).regret)
    assert close(lsrandpp_regret_formula(T, ell, p, sched, k).regret, exact_regret_distribution(d2, sched, cfg, use_formulas=False).regret)


@st.composite
def scripts_with_schedule(draw):
    k = draw(st.integers(2, 6))
    a = draw(st.integers(1, k - 1))
    acts = draw(st.lists(st.sampled_from("ABSI"), min_size=1, max_size=120))
    script = AdversaryScript(tuple((x, 1) for x in acts), (a, k - a))
    sched, support = draw(finite_schedules(len(acts)))
    return script, acts, sched, support


@settings(max_examples=150, deadline=None)
@given(scripts_with_schedule())
def test_simulation_matches_reference(case):
    script, acts, sched, support = case
    T = len(acts)
    ref = refsim.finite_regret(acts, script.split, support)
    for method in ("vectorized", "ledger"):
        rep = exact_regret_script(script, sched, fin(T, script.k), method=method)
        assert close(rep.regret, ref)
        assert close(rep.loop_part + rep.straight_part, rep.regret)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.data())
def test_decreasing_schedule_dominates_constant(T, data):
    ell = data.draw(st.integers(0, T).filter(lambda e: (T - e) % 2 == 0))
    sched, _ = data.draw(finite_schedules(T, (Family.DECREASING,)))
    const = EtaSchedule.single(sched.rate_at(max(T - ell, 1)))
    script = build_lsdet(T, 2, ell)
    r_dec = step_regrets(script, sched, T)
    r_con = step_regrets(script, const, T)
    n_loop = T - ell
    cyc_dec = r_dec[:n_loop].reshape(-1, 2).sum(axis=1)
    cyc_con = r_con[:n_loop].reshape(-1, 2).sum(axis=1)
    assert np.all(cyc_dec >= cyc_con - 1e-15)
    assert np.all(r_dec[n_loop:] >= r_con[n_loop:] - 1e-15)


def test_loop_at_zero_is_the_costliest():
    d = np.arange(0, 300)
    for eta in np.linspace(0.01, 10.0, 200):
        loop = expit(-eta * d) - expit(-eta * (d + 1))
        assert int(np.argmax(loop)) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 14), st.floats(0.0, 2.0), st.data())
def test_oracle_dominates_scripts(T, eta, data):
    acts = data.draw(st.lists(st.sampled_from("ABSI"), min_size=T, max_size=T))
    best = best_response_dp_finite(DPOraclePolicy.mwa(eta), T).regret
    script = AdversaryScript(tuple((x, 1) for x in acts), (1, 1))
    val = exact_regret_script(script, EtaSchedule.single(eta), fin(T)).regret
    assert val <= best + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.9), st.floats(0.0, 3.0), st.integers(0, 30), st.integers(2, 6))
def test_geometric_closed_forms_match_truncated_sums(delta, eta, ell, k):
    sched = EtaSchedule.single(eta)
    cfg = geo(delta, k)
    loop = geometric_loop_regret(delta, eta, k)
    straight = geometric_straight_regret(delta, eta, k, tail_tol=1e-13)
    sim_loop = exact_regret_script(build_geometric_loop(k), sched, cfg, tail_tol=1e-13)
    sim_straight = exact_regret_script(build_geometric_straight(k), sched, cfg, tail_tol=1e-13)
    assert abs(loop.regret - sim_loop.regret) <= sim_loop.truncation_bound + 1e-12
    assert abs(straight.regret - sim_straight.regret) <= sim_straight.truncation_bound + straight.truncation_bound + 1e-12
    if k == 2:
        sl = geometric_sl_regret(delta, eta, ell)
        sim_sl = exact_regret_script(build_geometric_sl(ell), sched, cfg, tail_tol=1e-13)
        assert abs(sl.regret - sim_sl.regret) <= sim_sl.truncation_bound + 1e-12
        n = refsim_steps(delta)
        acts = (["S"] * ell + ["A", "B"] * n)[:n]
        assert abs(sl.regret - refsim.discounted_regret(acts, (1, 1), refsim.const(eta), delta)) <= 1e-10


def refsim_steps(delta, tol=1e-13):
    return int(math.ceil(math.log(tol * delta) / math.log1p(-delta)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400), st.floats(0.0, 3.0), st.sampled_from([2, 4, 8]))
def test_lsdet_loop_part_is_additive(T, eta, k):
    ell = T % 2
    rep = exact_regret_script(build_lsdet(T, k, ell), EtaSchedule.single(eta), fin(T, k))
    loops = (T - ell) // 2
    assert close(rep.loop_part, loops * (0.5 - 1 / (math.exp(eta) + 1)), 1e-12)


def test_evaluate_dispatch_agrees_with_simulation():
    sched = EtaSchedule.single(0.3)
    for adv, cfg in [
        (build_lsdet(40, 2, 10), fin(40)),
        (build_lsdet(40, 4, 9), fin(40, 4)),
        (build_geometric_sl(5), geo(0.05)),
        (build_geometric_loop(3), geo(0.05, 3)),
        (build_geometric_straight(3), geo(0.05, 3)),
    ]:
        a = evaluate_adversary(adv, sched, cfg).regret
        b = exact_regret_script(adv, sched, cfg, tail_tol=1e-14).regret
        assert abs(a - b) <= 1e-11


def test_lsdet_terms_reject_odd_remainder():
    with pytest.raises(ParityError):
        lsdet_regret_terms(11, 4, EtaSchedule.single(0.1))
