import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockurn.report import analyze
from blockurn.urnsim import (
    UrnState,
    aggregate,
    default_schedule,
    expectation,
    expectation_path,
    fit_rate,
    oracle_w_ratio,
    read_traces_csv,
    rng_for,
    run_replications,
    scaled_counts,
    simulate,
    Tolerances,
    step,
    verify,
    write_traces_csv,
)
from conftest import COUNTEREXAMPLE, REPEATED_HALF, ZERO_CHAIN
from helpers import balanced_irreducible, spec


def test_schedule():
    assert default_schedule(5000) == [1024, 2048, 4096, 5000]
    assert default_schedule(2048) == [1024, 2048]
    assert default_schedule(10) == [10]
    assert default_schedule(0) == []


def test_expectation_small_cases():
    s = spec([[0, 1], [1, 0]])
    np.testing.assert_allclose(expectation(s, 1), [1, 1])
    np.testing.assert_allclose(expectation(s, 2), [1.5, 1.5])
    np.testing.assert_allclose(expectation(s, 0), [0.5, 0.5])


def test_expectation_matches_matrix_product(rng):
    s = spec(balanced_irreducible(rng, 4))
    e = np.array(s.initial)
    for n in range(1, 51):
        e = e @ (np.eye(4) + s.matrix / n)
    np.testing.assert_allclose(expectation(s, 50), e, rtol=1e-12)


def test_expectation_total_is_n_plus_one(rng):
    s = spec(balanced_irreducible(rng, 3))
    path = expectation_path(s, [7, 100, 1000])
    np.testing.assert_allclose(path.values.sum(axis=1), [8, 101, 1001], rtol=1e-12)


def test_step_matches_kernel():
    s = spec(REPEATED_HALF)
    n = 5000
    state = UrnState.initial(s)
    rng = rng_for(3, 2)
    for _ in range(n):
        state = step(state, s, rng)
    tr = simulate(s, n, [n], seed=3, replication_id=2)
    np.testing.assert_allclose(tr.final, state.counts, rtol=1e-12)


def test_vector_and_scalar_uniforms_agree():
    a = rng_for(11, 4).random(1000)
    g = rng_for(11, 4)
    b = np.array([g.random() for _ in range(1000)])
    assert np.array_equal(a, b)


def test_simulation_is_deterministic():
    s = spec(REPEATED_HALF)
    a = simulate(s, 200_000, seed=9, replication_id=1)
    b = simulate(s, 200_000, seed=9, replication_id=1)
    assert np.array_equal(a.counts, b.counts)
    c = simulate(s, 200_000, seed=9, replication_id=2)
    assert not np.array_equal(a.counts, c.counts)


def test_checkpoint_split_does_not_change_path():
    s = spec(REPEATED_HALF)
    a = simulate(s, 300_000, [300_000], seed=1)
    b = simulate(s, 300_000, [1, 70_000, 131_072, 300_000], seed=1)
    np.testing.assert_array_equal(a.final, b.final)
    assert b.ns.tolist() == [0, 1, 70_000, 131_072, 300_000]


@settings(max_examples=25)
@given(st.integers(0, 2**31), st.integers(1, 3000))
def test_total_count_invariant(seed, n):
    s = spec(REPEATED_HALF, [0.2, 0.3, 0.5])
    tr = simulate(s, n, [n], seed=seed)
    assert math.fsum(tr.final) == pytest.approx(n + 1, rel=1e-12)
    assert np.all(tr.final >= 0)


def test_bad_checkpoints():
    s = spec(ZERO_CHAIN)
    with pytest.raises(ValueError):
        simulate(s, 10, [11])
    with pytest.raises(ValueError):
        simulate(s, -1)


def test_monte_carlo_mean_matches_expectation():
    s = spec([[0.3, 0.7, 0], [0.2, 0.3, 0.5], [0.5, 0, 0.5]], [0.5, 0.25, 0.25])
    ns = [10, 100, 1000]
    traces = run_replications(s, 1000, ns, seed=5, reps=400, threads=1)
    agg = aggregate(traces)
    E = expectation_path(s, ns).values
    z = np.abs(agg.mean[1:] - E) / agg.stderr[1:]
    assert np.max(z) <= 4


def test_threads_do_not_change_aggregate():
    s = spec(REPEATED_HALF)
    a = aggregate(run_replications(s, 20_000, None, seed=2, reps=6, threads=1))
    b = aggregate(run_replications(s, 20_000, None, seed=2, reps=6, threads=4))
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr, b.stderr, equal_nan=True)


def test_scaled_counts_examples():
    s = spec(REPEATED_HALF)
    plan = analyze(s).plan
    tr = simulate(s, 4096, [1, 4096], seed=0)
    sc = scaled_counts(tr, plan)
    assert np.all(np.isnan(sc.values[0]))
    assert sc.flagged.tolist() == [True, True, False]
    N = 4096
    want = tr.final / np.array([N**0.5, N**0.5 * math.log(N), N])
    np.testing.assert_allclose(sc.values[-1], want, rtol=1e-12)


def test_csv_round_trip(tmp_path):
    s = spec(ZERO_CHAIN)
    traces = run_replications(s, 3000, [100, 3000], seed=4, reps=3, threads=1)
    path = tmp_path / "t.csv"
    write_traces_csv(traces, path)
    back = read_traces_csv(path)
    assert [t.replication_id for t in back] == [0, 1, 2]
    for a, b in zip(traces, back):
        assert np.array_equal(a.ns, b.ns)
        assert np.array_equal(a.counts, b.counts)


def test_fit_rate_recovers_synthetic_exponents():
    ns = np.array([2.0**k for k in range(19, 24)])
    a, b = fit_rate(ns, 3 * ns**0.4 * np.log(ns) ** 2, 0.4, 2)
    assert a == pytest.approx(0.4, abs=1e-12)
    assert b == pytest.approx(2, abs=1e-9)


def test_oracle_ratio_moves_towards_w():
    a = analyze(spec(REPEATED_HALF))
    r_lo = oracle_w_ratio(a.profile, expectation_path(a.spec, [2**12]), 1)
    r_hi = oracle_w_ratio(a.profile, expectation_path(a.spec, [2**20]), 1)
    assert abs(r_hi - 0.5) < abs(r_lo - 0.5)


def test_verify_zero_tolerance_fails_and_skips_on_violation():
    a = analyze(spec(COUNTEREXAMPLE))
    ns = default_schedule(2**14)
    traces = run_replications(a.spec, 2**14, ns, seed=0, reps=4, threads=1)
    rep = verify(a.profile, a.plan, traces, expectation_path(a.spec, ns), Tolerances(0, 0, 0))
    assert not rep.passed
    skipped = [c.name for c in rep.checks if c.passed is None]
    assert "limit[2]" in skipped and "w[2]" in skipped


def test_single_color_forced_draws():
    s = spec([[1.0]], [1.0])
    tr = simulate(s, 2, [1, 2])
    assert tr.counts[:, 0].tolist() == [1.0, 2.0, 3.0]
    state = UrnState.initial(s)
    for n in range(1, 6):
        state = step(state, s, rng_for(0, 0))
        assert state.counts.tolist() == [1.0 + n]


def test_zero_steps_keeps_initial():
    s = spec(ZERO_CHAIN)
    tr = simulate(s, 0)
    assert tr.ns.tolist() == [0]
    np.testing.assert_array_equal(tr.final, s.initial)


def test_counterexample_seed_42_bit_identical():
    s = spec(COUNTEREXAMPLE)
    a = simulate(s, 10**5, seed=42)
    b = simulate(s, 10**5, seed=42)
    assert a.counts.tobytes() == b.counts.tobytes()


def test_other_replication_has_same_marginals():
    # two-sample check: means of replication sets 0..199 and 200..399 agree
    s = spec([[0.3, 0.7, 0], [0.2, 0.3, 0.5], [0.5, 0, 0.5]])
    traces = run_replications(s, 500, [500], seed=8, reps=400, threads=1)
    x = np.stack([t.final for t in traces[:200]])
    y = np.stack([t.final for t in traces[200:]])
    se = np.sqrt(x.var(axis=0, ddof=1) / 200 + y.var(axis=0, ddof=1) / 200)
    assert np.max(np.abs(x.mean(axis=0) - y.mean(axis=0)) / se) <= 4
