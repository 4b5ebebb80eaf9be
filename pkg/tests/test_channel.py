import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csmalab.channel import (
    ChannelModel,
    ChannelStateSpace,
    ReducibleChainError,
    channel_stationary,
    residual,
    sample_channel_path,
    stationary_from_generator,
    varying_speed,
)


def test_space_validates_levels():
    with pytest.raises(ValueError):
        ChannelStateSpace([0.5, 0.9], 2)
    with pytest.raises(ValueError):
        ChannelStateSpace([1.0, 0.5], 2)
    with pytest.raises(ValueError):
        ChannelStateSpace([0.0, 1.0], 2)


def test_space_encoding_link_zero_most_significant():
    sp = ChannelStateSpace([0.5, 1.0], 3)
    assert sp.size == 8
    assert sp.encode([1, 0, 0]) == 4
    assert sp.joint_states()[4].tolist() == [1, 0, 0]
    assert sp.level_index(0.5) == 0
    with pytest.raises(KeyError):
        sp.level_index(0.7)


def test_symmetric_two_state():
    ch = ChannelModel.two_level(1, up=0.3)
    assert np.allclose(channel_stationary(ch), [0.5, 0.5], atol=1e-15)


@pytest.mark.parametrize("a, b", [(1.0, 1.0), (0.2, 3.0), (5.0, 0.01)])
def test_birth_death_balance(a, b):
    ch = ChannelModel.two_level(1, up=a, down=b)
    assert np.allclose(channel_stationary(ch), [b / (a + b), a / (a + b)], atol=1e-14)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_iid_symmetric_uniform(n):
    pi = channel_stationary(ChannelModel.two_level(n, up=0.7))
    assert np.allclose(pi, 2.0 ** -n, atol=1e-15)


def test_factorization_matches_joint_solve():
    rng = np.random.default_rng(3)
    rates = rng.uniform(0.1, 2.0, size=(3, 3, 3))
    sp = ChannelStateSpace([0.2, 0.6, 1.0], 3)
    fac = ChannelModel(sp, link_rates=rates)
    dense = fac.generator().toarray()
    off = dense.copy()
    np.fill_diagonal(off, 0.0)
    joint = ChannelModel(sp, joint_rates=off)
    pf, pj = channel_stationary(fac), channel_stationary(joint)
    assert np.max(np.abs(pf - pj)) < 1e-13
    # explicit product of marginals
    prod = [np.prod([fac.link_stationary[i][s[i]] for i in range(3)]) for s in sp.joint_states()]
    assert np.max(np.abs(pf - prod)) < 1e-15
    assert np.allclose(joint.link_stationary, fac.link_stationary, atol=1e-13)


def test_varying_speed_examples():
    assert varying_speed(ChannelModel.two_level(1, up=0.4)) == pytest.approx(0.4)
    assert varying_speed(ChannelModel.two_level(5, up=0.4)) == pytest.approx(2.0)
    assert varying_speed(ChannelModel.static(4)) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_ladder_speed_by_enumeration(n):
    ch = ChannelModel.ladder(n, m=10, rate=0.01)
    exits = ch.link_rates[0].sum(axis=1)
    assert exits[0] == exits[-1] == pytest.approx(0.01)
    assert np.allclose(exits[1:-1], 0.02)
    # brute-force oracle over the joint states of a small ladder
    best = max(sum(exits[u] for u in s) for s in itertools.product(range(10), repeat=n))
    assert varying_speed(ch) == pytest.approx(best) == pytest.approx(0.02 * n)


@given(st.permutations(range(4)))
def test_varying_speed_relabeling_invariant(perm):
    rng = np.random.default_rng(11)
    rates = rng.uniform(0, 1, size=(4, 4))
    np.fill_diagonal(rates, 0)
    sp = ChannelStateSpace([0.25, 0.5, 0.75, 1.0], 1)
    p = np.array(perm)
    a = ChannelModel(sp, joint_rates=rates)
    b = ChannelModel(sp, joint_rates=rates[np.ix_(p, p)])
    assert varying_speed(a) == pytest.approx(varying_speed(b), rel=1e-14)


def test_reducible_chain_rejected():
    Q = np.array([[-1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(ReducibleChainError):
        stationary_from_generator(Q)


def test_residual_small():
    ch = ChannelModel.ladder(2, m=4, rate=0.3)
    pi = channel_stationary(ch)
    assert residual(pi, ch.generator().toarray()) < 1e-14


def test_mean_capacity():
    assert np.allclose(ChannelModel.two_level(5).mean_capacity(), 0.75)
    assert np.allclose(ChannelModel.ladder(2).mean_capacity(), 0.55)


def test_zero_rates_constant_path():
    ch = ChannelModel.iid([0.5, 1.0], 2, np.zeros((2, 2)))
    path = sample_channel_path(ch, 100.0, seed=1, initial=[0, 1])
    assert len(path.times) == 1 and path.states[0].tolist() == [0, 1]


def test_path_determinism():
    ch = ChannelModel.two_level(3, up=1.0)
    a = sample_channel_path(ch, 50.0, seed=5)
    b = sample_channel_path(ch, 50.0, seed=5)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)


def test_occupation_within_three_sigma():
    gamma, a, b = 1.0, 1.0, 3.0
    ch = ChannelModel.two_level(1, up=a, down=b)
    T = 1e5 / gamma
    occ = sample_channel_path(ch, T, seed=2).occupation(ch.space)
    p = b / (a + b)
    # asymptotic variance of a two-state occupation fraction: 2 p (1 - p) / ((a + b) T)
    sd = math.sqrt(2 * p * (1 - p) / ((a + b) * T))
    assert abs(occ[0] - p) < 3 * sd
