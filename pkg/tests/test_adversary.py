import math

import numpy as np
import pytest

from onebit_paging import POLICY_NAMES, count_errors, ground_truth, k_phase_partition, opt_cost, run_policy
from onebit_paging.adversary import (
    AdversaryError,
    adaptive_adversary_run,
    block_instance,
    random_trace,
    round_robin,
    three_page_round_instance,
    uniform_random_instance,
)
from onebit_paging.policies import RANDOMIZED

DETERMINISTIC = [p for p in POLICY_NAMES if p not in RANDOMIZED]


def test_adaptive_vs_lru_example():
    t, rep = adaptive_adversary_run("lru", 5, 1005)
    assert rep.faults == 1005
    assert opt_cost(t) <= 5 + math.ceil(1000 / 5) == 205
    assert t.requests[:5].tolist() == [1, 2, 3, 4, 5]
    assert not t.predictions.any()


@pytest.mark.parametrize("name", DETERMINISTIC)
@pytest.mark.parametrize("bit", [0, 1])
def test_adaptive_faults_every_request(name, bit):
    t, rep = adaptive_adversary_run(name, 4, 300, bit)
    assert rep.fault_flags.all()
    assert set(t.requests.tolist()) <= set(range(1, 6))
    assert run_policy(name, t).fault_flags.tolist() == rep.fault_flags.tolist()


@pytest.mark.parametrize("name", DETERMINISTIC)
def test_adaptive_n_equals_k(name):
    _, rep = adaptive_adversary_run(name, 6, 6)
    assert rep.faults == 6


def test_adaptive_rejects_randomized():
    with pytest.raises(AdversaryError):
        adaptive_adversary_run("mark", 3, 10)


def test_uniform_instance():
    t = uniform_random_instance(4, 5000, 11)
    assert set(t.requests.tolist()) == {1, 2, 3, 4, 5}
    assert t.prologue == 4 and t.requests[:4].tolist() == [1, 2, 3, 4]
    assert t == uniform_random_instance(4, 5000, 11)
    assert t != uniform_random_instance(4, 5000, 12)
    assert uniform_random_instance(4, 10, 1, bit=1).predictions[4:].all()


def test_block_instance_structure():
    k, rep = 5, 3
    t = block_instance(k, 6, rep, seed=2)
    assert t == block_instance(k, 6, rep, seed=2)
    assert set(t.requests.tolist()) <= set(range(1, k + 2))
    body = t.requests[k:].tolist()
    per_phase = rep * (k * (k + 1) // 2 - 1)
    assert len(body) == 6 * per_phase
    for ph in range(6):
        chunk = body[ph * per_phase:(ph + 1) * per_phase]
        pos, prev = 0, None
        for i in range(1, k):
            block = chunk[pos:pos + i + 1]
            assert chunk[pos:pos + rep * (i + 1)] == block * rep
            if prev is not None:
                assert set(prev) < set(block) and len(set(block) - set(prev)) == 1
            prev = block
            pos += rep * (i + 1)
    bits = t.predictions[k:].reshape(6, per_phase)
    for row in bits:
        # only the last repetition of the last block of each phase is predicted 1
        assert row[-k:].all() and not row[:-k].any()


def test_block_instance_opt_one_per_phase():
    k = 6
    t = block_instance(k, 50, seed=4)
    assert opt_cost(t) == k + 50


def test_block_instance_errors_per_phase():
    k, phases = 5, 40
    t = block_instance(k, phases, seed=5)
    per_phase = (k + 1) * (k * (k + 1) // 2 - 1)
    for setup in ("discard", "phase"):
        e = count_errors(t.predictions, ground_truth(t, setup), setup)
        f0 = e.eta0_flags[k:].reshape(phases, per_phase).sum(1)
        f1 = e.eta1_flags[k:].reshape(phases, per_phase).sum(1)
        assert (f0 == 0).all()
        assert (f1[:-1] == k - 1).all()


def test_block_instance_validation():
    with pytest.raises(AdversaryError):
        block_instance(1, 3)
    with pytest.raises(AdversaryError):
        block_instance(4, 3, block_repeats=1)


def test_three_page_rounds():
    t = three_page_round_instance(6, 100, 3)
    body = t.requests[6:].reshape(100, 5)
    assert set(body[:, 0].tolist()) == {1, 2, 3}
    assert (body[:, 1:] == np.arange(4, 8)).all()
    bits = t.predictions[6:].reshape(100, 5)
    assert bits[:, 0].all() and not bits[:, 1:].any()
    assert t == three_page_round_instance(6, 100, 3)


def test_three_page_rounds_k3_single_tail_page():
    t = three_page_round_instance(3, 50, 1)
    assert len(t) == 3 + 2 * 50
    assert (t.requests[3:].reshape(50, 2)[:, 1] == 4).all()
    with pytest.raises(AdversaryError):
        three_page_round_instance(2, 5, 1)


def test_round_robin_and_random_trace():
    assert round_robin(3, 9).requests.tolist() == [1, 2, 3, 4, 1, 2, 3, 4, 1]
    t = random_trace(4, 1000, 10, 3, zipf=1.0)
    assert t.requests.min() >= 0 and t.requests.max() < 10
    assert t == random_trace(4, 1000, 10, 3, zipf=1.0)


def test_uniform_phase_length_small():
    t = uniform_random_instance(3, 60000, 8)
    lens = k_phase_partition(t, 3).lengths()[1:-1]
    assert abs(lens.mean() / (4 * (1 + 1 / 2 + 1 / 3)) - 1) < 0.03
