import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from endoteleop.analysis import (
    dead_zone_width,
    hysteresis_sweep,
    mann_whitney_u,
    summarize,
)
from endoteleop.errors import InvalidSample, InvalidSweep


# -- independent oracle: U by direct pair counting, p by assignment enumeration --


def u_pair_count(a, b):
    return sum(
        1.0 if x > y else 0.5 if x == y else 0.0
        for x in a for y in b
    )


def exact_p_oracle(a, b):
    pooled = list(a) + list(b)
    n = len(a)
    u_obs = u_pair_count(a, b)
    lo = hi = total = 0
    for combo in itertools.combinations(range(len(pooled)), n):
        in_a = [pooled[i] for i in combo]
        in_b = [pooled[i] for i in range(len(pooled)) if i not in set(combo)]
        u = u_pair_count(in_a, in_b)
        total += 1
        if u <= u_obs + 1e-12:
            lo += 1
        if u >= u_obs - 1e-12:
            hi += 1
    return min(1.0, 2.0 * min(lo, hi) / total)


# -- hysteresis -------------------------------------------------------------------


def test_zero_half_width_has_no_dead_zone():
    profile = hysteresis_sweep(0.0, 30.0)
    assert dead_zone_width(profile) == 0.0


def test_default_half_width_dead_zone_is_twice_half_width():
    profile = hysteresis_sweep(22.5, 60.0, cycles=2, step_deg=1.0)
    assert dead_zone_width(profile) == pytest.approx(45.0, abs=0.5)


def test_dead_zone_rate_independent():
    coarse = dead_zone_width(hysteresis_sweep(22.5, 60.0, step_deg=1.0))
    fine = dead_zone_width(hysteresis_sweep(22.5, 60.0, step_deg=0.5))
    assert abs(coarse - fine) < 1.0


def test_sweep_rejects_degenerate_parameters():
    with pytest.raises(InvalidSweep):
        hysteresis_sweep(10.0, -5.0)
    with pytest.raises(InvalidSweep):
        hysteresis_sweep(10.0, 60.0, cycles=0)
    # Amplitude below the half-width: the tip never moves after a reversal.
    with pytest.raises(InvalidSweep):
        dead_zone_width(hysteresis_sweep(40.0, 20.0))


def test_profile_stays_within_play_envelope():
    profile = hysteresis_sweep(22.5, 60.0)
    for prox, dist in profile.samples:
        assert abs(dist - prox) <= 22.5 + 1e-12


# -- Mann-Whitney U -----------------------------------------------------------------


def test_identical_samples_give_p_one():
    res = mann_whitney_u([5, 5, 5], [5, 5, 5])
    assert res.p_two_sided == 1.0


def test_worked_example_two_by_two():
    res = mann_whitney_u([1, 2], [3, 4])
    assert res.U == 0.0
    assert res.p_two_sided == pytest.approx(1.0 / 3.0)


def test_worked_example_three_by_three():
    res = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert res.U == 0.0
    assert res.p_two_sided == pytest.approx(0.1)


def test_empty_sample_rejected():
    with pytest.raises(InvalidSample):
        mann_whitney_u([], [1.0])


def test_u_complement_identity_no_ties():
    rng = random.Random(2)
    for _ in range(50):
        a = [rng.random() for _ in range(rng.randint(1, 6))]
        b = [rng.random() for _ in range(rng.randint(1, 6))]
        assert mann_whitney_u(a, b).U + mann_whitney_u(b, a).U == pytest.approx(len(a) * len(b))


def test_p_symmetric_under_swap():
    rng = random.Random(3)
    for _ in range(30):
        a = [rng.randint(0, 8) for _ in range(rng.randint(1, 6))]
        b = [rng.randint(0, 8) for _ in range(rng.randint(1, 6))]
        assert mann_whitney_u(a, b).p_two_sided == pytest.approx(
            mann_whitney_u(b, a).p_two_sided)


def test_matches_enumeration_oracle_all_small_sizes():
    """Exhaustive-style check against the pair-count/enumeration oracle for
    every n, m <= 7 (tie-free samples)."""
    rng = random.Random(40)
    for n in range(1, 8):
        for m in range(1, 8):
            pool = rng.sample(range(1000), n + m)
            a, b = [float(x) for x in pool[:n]], [float(x) for x in pool[n:]]
            res = mann_whitney_u(a, b)
            assert res.U == pytest.approx(u_pair_count(a, b))
            assert res.p_two_sided == pytest.approx(exact_p_oracle(a, b))
            assert res.method == "exact"


def test_matches_enumeration_oracle_with_ties():
    rng = random.Random(41)
    for _ in range(40):
        n, m = rng.randint(1, 5), rng.randint(1, 5)
        a = [float(rng.randint(0, 3)) for _ in range(n)]
        b = [float(rng.randint(0, 3)) for _ in range(m)]
        res = mann_whitney_u(a, b)
        assert res.U == pytest.approx(u_pair_count(a, b))
        assert res.p_two_sided == pytest.approx(exact_p_oracle(a, b))


def test_large_samples_use_normal_approximation():
    rng = random.Random(5)
    a = [rng.gauss(0, 1) for _ in range(20)]
    b = [rng.gauss(1.5, 1) for _ in range(20)]
    res = mann_whitney_u(a, b)
    assert res.method == "normal"
    assert 0.0 < res.p_two_sided <= 1.0
    shifted = mann_whitney_u(a, [x + 10 for x in b])
    assert shifted.p_two_sided < res.p_two_sided or res.p_two_sided < 1e-6


def test_degenerate_large_sample_gives_p_one():
    res = mann_whitney_u([3.0] * 10, [3.0] * 10)
    assert res.p_two_sided == 1.0


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.integers(0, 20), min_size=1, max_size=6),
    b=st.lists(st.integers(0, 20), min_size=1, max_size=6),
)
def test_oracle_equivalence_property(a, b):
    res = mann_whitney_u(a, b)
    assert 0.0 <= res.U <= len(a) * len(b)
    assert res.p_two_sided == pytest.approx(exact_p_oracle(a, b))


# -- summaries -----------------------------------------------------------------------


def test_identical_values_zero_reduction():
    s = summarize([100.0], [100.0])
    assert s.pooled_reduction_pct == 0.0


def test_halved_time_is_fifty_percent_reduction():
    s = summarize([100.0], [200.0])
    assert s.pooled_reduction_pct == pytest.approx(50.0)


def test_sample_sd_uses_n_minus_one():
    s = summarize([1.0, 3.0], [2.0, 2.0])
    assert s.sd_a == pytest.approx(2.0 ** 0.5)
    assert s.sd_b == 0.0


def test_subject_pairs_reproduce_reported_reduction_ratios():
    # Per-subject reductions as reported for the six operators; synthetic
    # raw pairs constructed to carry exactly those ratios.
    reported = (44.4, 50.3, 46.8, 51.6, 8.7, 91.3)
    clutch_means = (300.0, 320.0, 280.0, 310.0, 290.0, 330.0)
    pairs = [(c * (1.0 - r / 100.0), c) for r, c in zip(reported, clutch_means)]
    foot_times = [p[0] for p in pairs]
    clutch_times = [p[1] for p in pairs]
    s = summarize(foot_times, clutch_times, subject_pairs=pairs)
    assert s.subject_reductions_pct == pytest.approx(reported)
    assert s.mean_subject_reduction_pct == pytest.approx(sum(reported) / 6.0)
    # The two aggregation conventions genuinely differ on these data.
    assert s.mean_subject_reduction_pct != pytest.approx(s.pooled_reduction_pct, abs=0.5)


def test_empty_group_rejected():
    with pytest.raises(InvalidSample):
        summarize([], [1.0])
