import random

import pytest

from ncsa.decoders import (
    FrameInconsistencyError,
    batched_bp,
    ge_oracle,
    ordinary_bp,
)
from ncsa.frames import Batch, DegreeDistribution, Frame, SystemConfig, sample_frame
from ncsa.gf2 import BitMatrix, combine
from ncsa.pnc import PncModel


def frame_from_batches(payloads, batch_specs, n_slots=None):
    """Hand-build a frame: batch_specs = [(slot, users, transfer_rows)]."""
    payloads = tuple(payloads)
    batches = []
    choices = [[] for _ in payloads]
    top_slot = 0
    for slot, users, rows in batch_specs:
        top_slot = max(top_slot, slot)
        transfer = BitMatrix.from_rows(rows) if rows and rows[0] else BitMatrix(len(users), 0)
        outputs = tuple(combine([payloads[u] for u in users], transfer))
        batches.append(Batch(slot=slot, users=tuple(users), transfer=transfer, outputs=outputs))
        for u in users:
            choices[u].append(slot)
    return Frame(
        n_slots=n_slots or top_slot + 1,
        payload_len=len(payloads[0]) if payloads else 0,
        payloads=payloads,
        slot_choices=tuple(tuple(sorted(c)) for c in choices),
        batches=tuple(batches),
    )


def four_user_frame():
    payloads = [bytes([7 * (i + 1)]) * 3 for i in range(4)]
    rows = [[1, 0], [0, 1], [1, 1], [1, 1]]
    return frame_from_batches(payloads, [(0, (0, 1, 2, 3), rows)])


# --- worked example ----------------------------------------------------------


def test_batched_recovers_second_packet_given_first():
    frame = four_user_frame()
    report = batched_bp(frame, preknown={0: frame.payloads[0]})
    assert report.newly_recovered == {1}
    assert report.recovered[1] == frame.payloads[1]
    assert report.preknown == {0}
    assert set(report.recovered) == {0, 1}
    assert report.field_ops > 0


def test_ordinary_recovers_nothing_on_the_same_batch():
    frame = four_user_frame()
    report = ordinary_bp(frame, preknown={0: frame.payloads[0]})
    assert report.newly_recovered == frozenset()
    assert set(report.recovered) == {0}


def test_no_preknown_leaves_the_batch_stuck():
    frame = four_user_frame()
    assert batched_bp(frame).recovered == {}
    assert ordinary_bp(frame).recovered == {}
    assert ge_oracle(frame) == frozenset()


def test_oracle_with_first_packet_known():
    frame = four_user_frame()
    assert ge_oracle(frame, preknown={0: frame.payloads[0]}) == {0, 1}


# --- small anchors ----------------------------------------------------------


def test_identity_batch_recovers_both():
    payloads = [b"ab", b"cd"]
    frame = frame_from_batches(payloads, [(0, (0, 1), [[1, 0], [0, 1]])])
    report = batched_bp(frame)
    assert set(report.recovered) == {0, 1}
    assert report.per_iteration[0] == 2  # both fall out of the first pass
    assert report.recovered[0] == b"ab" and report.recovered[1] == b"cd"


def test_all_ones_column_recovers_nothing():
    payloads = [b"a", b"b", b"c"]
    frame = frame_from_batches(payloads, [(0, (0, 1, 2), [[1], [1], [1]])])
    assert batched_bp(frame).recovered == {}


def test_single_equation_releases_user():
    payloads = [b"zz"]
    frame = frame_from_batches(payloads, [(0, (0,), [[1]])])
    report = ordinary_bp(frame)
    assert report.recovered == {0: b"zz"}


def test_oracle_beats_bp_on_a_dense_system():
    # pairwise sums plus the triple sum: jointly rank 3 but no single batch
    # ever exposes a unit column, so peeling cannot start
    payloads = [bytes([i + 1]) for i in range(3)]
    frame = frame_from_batches(
        payloads,
        [
            (0, (0, 1), [[1], [1]]),
            (1, (1, 2), [[1], [1]]),
            (2, (0, 2), [[1], [1]]),
            (3, (0, 1, 2), [[1], [1], [1]]),
        ],
    )
    assert batched_bp(frame).recovered == {}
    assert ordinary_bp(frame).recovered == {}
    assert ge_oracle(frame) == {0, 1, 2}


# --- report bookkeeping ----------------------------------------------------


def test_report_iteration_counts_add_up():
    dist = DegreeDistribution({2: 0.6, 3: 0.4})
    model = PncModel.example(5)
    cfg = SystemConfig(users=80, slots=120, dist=dist, model=model, seed=31)
    frame = sample_frame(cfg)
    report = batched_bp(frame)
    assert sum(report.per_iteration) == len(report.recovered) - len(report.preknown)
    assert report.iterations == len(report.per_iteration)
    assert 0.0 <= report.decoded_fraction <= 1.0
    assert report.users == 80


def test_decoded_fraction_counts_preknown():
    frame = four_user_frame()
    report = batched_bp(frame, preknown={0: frame.payloads[0]})
    assert report.decoded_fraction == 0.5  # v1 given + v2 recovered, of four


def test_preknown_validation():
    frame = four_user_frame()
    with pytest.raises(ValueError):
        batched_bp(frame, preknown={9: b"xxx"})
    with pytest.raises(ValueError):
        batched_bp(frame, preknown={0: b"wrong length"})


def test_max_iters_truncates():
    # a chain of pair batches forces one recovery per pass
    payloads = [bytes([i]) * 2 for i in range(5)]
    specs = [(0, (0,), [[1]])]
    for i in range(4):
        specs.append((i + 1, (i, i + 1), [[1], [1]]))
    frame = frame_from_batches(payloads, specs)
    full = batched_bp(frame)
    assert set(full.recovered) == set(range(5))
    cut = batched_bp(frame, max_iters=2)
    assert cut.iterations <= 2
    assert set(cut.recovered) == {0, 1}


# --- properties over random frames -------------------------------------------


def test_dominance_soundness_and_eager_equivalence():
    model = PncModel.example(4)
    dist = DegreeDistribution({1: 0.2, 2: 0.4, 3: 0.4})
    for seed in range(60):
        cfg = SystemConfig(users=30, slots=25, dist=dist, model=model, seed=seed, payload_len=4)
        frame = sample_frame(cfg)
        strict = batched_bp(frame)
        eager = batched_bp(frame, eager=True)
        plain = ordinary_bp(frame)
        oracle = ge_oracle(frame)
        assert set(plain.recovered) <= set(strict.recovered) <= oracle
        assert set(eager.recovered) == set(strict.recovered)
        assert eager.iterations <= strict.iterations
        for u, payload in strict.recovered.items():
            assert payload == frame.payloads[u]
        for u, payload in plain.recovered.items():
            assert payload == frame.payloads[u]


def test_more_side_information_never_hurts():
    model = PncModel.example(4)
    dist = DegreeDistribution({2: 0.5, 3: 0.5})
    rng = random.Random(17)
    for seed in range(20):
        cfg = SystemConfig(users=25, slots=20, dist=dist, model=model, seed=seed, payload_len=2)
        frame = sample_frame(cfg)
        base = set(batched_bp(frame).recovered)
        given = rng.sample(range(25), 4)
        pre = {u: frame.payloads[u] for u in given}
        bigger = set(batched_bp(frame, preknown=pre).recovered)
        assert base | set(given) <= bigger


def test_batch_order_does_not_matter():
    model = PncModel.example(4)
    dist = DegreeDistribution({2: 0.5, 3: 0.5})
    rng = random.Random(5)
    for seed in range(10):
        cfg = SystemConfig(users=30, slots=24, dist=dist, model=model, seed=seed, payload_len=2)
        frame = sample_frame(cfg)
        shuffled = list(frame.batches)
        rng.shuffle(shuffled)
        permuted = Frame(
            n_slots=frame.n_slots,
            payload_len=frame.payload_len,
            payloads=frame.payloads,
            slot_choices=frame.slot_choices,
            batches=tuple(shuffled),
        )
        a = batched_bp(frame)
        b = batched_bp(permuted)
        assert a.recovered == b.recovered
        assert a.per_iteration == b.per_iteration


def test_repeat_runs_identical():
    model = PncModel.example(5)
    dist = DegreeDistribution({3: 1.0})
    cfg = SystemConfig(users=60, slots=90, dist=dist, model=model, seed=2)
    frame = sample_frame(cfg)
    a = batched_bp(frame)
    b = batched_bp(frame)
    assert a.recovered == b.recovered and a.field_ops == b.field_ops


def test_conflicting_batches_raise():
    payloads = [b"x"]
    frame = frame_from_batches(payloads, [(0, (0,), [[1]]), (1, (0,), [[1]])])
    # corrupt the second batch so it claims a different value for user 0
    bad = Batch(slot=1, users=(0,), transfer=frame.batches[1].transfer, outputs=(b"y",))
    corrupted = Frame(
        n_slots=frame.n_slots,
        payload_len=frame.payload_len,
        payloads=frame.payloads,
        slot_choices=frame.slot_choices,
        batches=(frame.batches[0], bad),
    )
    with pytest.raises(FrameInconsistencyError):
        batched_bp(corrupted)
    with pytest.raises(FrameInconsistencyError):
        ordinary_bp(corrupted)


def test_oracle_identity_frame():
    payloads = [bytes([i]) for i in range(6)]
    specs = [(i, (i,), [[1]]) for i in range(6)]
    frame = frame_from_batches(payloads, specs)
    assert ge_oracle(frame) == frozenset(range(6))
