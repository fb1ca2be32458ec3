"""Frame-level Monte Carlo: who transmits where, and what each slot yields.

A frame is n slots; each of K users picks a degree from the distribution,
picks that many distinct slots uniformly, and repeats its packet in them.
Each slot with transmitters draws a transfer matrix from the model's family
for its collision size and exposes the decoded combinations.

Randomness is split into one stream per user and one per slot (spawn keys
off the frame seed), so generation is reproducible and order-independent:
any subset of users or slots can be regenerated in isolation.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from itertools import accumulate

import numpy as np

from .gf2 import BitMatrix, combine
from .pnc import PncModel

_USER_SPACE = 0
_SLOT_SPACE = 1


class DegreeDistribution:
    """Probabilities over user repetition degrees 1..max_degree."""

    def __init__(self, probs):
        """`probs` maps degree -> probability (dict) or lists Λ_1.. in order."""
        if isinstance(probs, dict):
            if not probs:
                raise ValueError("empty distribution")
            top = max(probs)
            arr = [0.0] * top
            for deg, p in probs.items():
                if not isinstance(deg, int) or deg < 1:
                    raise ValueError(f"bad degree {deg!r}")
                arr[deg - 1] = float(p)
        else:
            arr = [float(p) for p in probs]
        while len(arr) > 1 and arr[-1] == 0.0:
            arr.pop()
        if not arr:
            raise ValueError("empty distribution")
        self.p = np.asarray(arr, dtype=float)
        if np.any(self.p < 0):
            raise ValueError("negative probability")
        if abs(float(self.p.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {float(self.p.sum())!r}, not 1")
        self._cum = list(accumulate(float(v) for v in self.p))
        self._cum[-1] = 1.0

    @property
    def max_degree(self) -> int:
        return len(self.p)

    def prob(self, degree: int) -> float:
        return float(self.p[degree - 1]) if 1 <= degree <= len(self.p) else 0.0

    def mean(self) -> float:
        """Average repetition degree (edges per user)."""
        return float(np.arange(1, len(self.p) + 1) @ self.p)

    def node_poly(self, y: float):
        """sum_i Λ_i y^i."""
        acc = 0.0
        for p in self.p[::-1]:
            acc = (acc + p) * y
        return acc

    def node_deriv(self, y: float):
        """sum_i i Λ_i y^(i-1)."""
        acc = 0.0
        for i in range(len(self.p), 0, -1):
            acc = acc * y + i * self.p[i - 1]
        return acc

    def edge_weights(self) -> np.ndarray:
        """Edge-perspective weights i*Λ_i / mean, indexed from degree 1."""
        return np.arange(1, len(self.p) + 1) * self.p / self.mean()

    @classmethod
    def from_edge_weights(cls, weights) -> "DegreeDistribution":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("negative edge weight")
        node = w / np.arange(1, len(w) + 1)
        total = node.sum()
        if total <= 0:
            raise ValueError("edge weights sum to zero")
        return cls(node / total)

    @classmethod
    def from_pairs(cls, text: str) -> "DegreeDistribution":
        """Parse the CLI form "degree:prob,degree:prob", e.g. "2:0.5,3:0.5"."""
        probs = {}
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            deg, _, p = item.partition(":")
            try:
                key = int(deg)
                val = float(p)
            except ValueError:
                raise ValueError(f"bad degree:prob pair {item!r}") from None
            if key in probs:
                raise ValueError(f"degree {key} listed twice")
            probs[key] = val
        return cls(probs)

    def to_pairs(self) -> str:
        return ",".join(f"{i + 1}:{float(p)!r}" for i, p in enumerate(self.p) if p)

    def degree_from_uniform(self, u: float) -> int:
        """Inverse-CDF lookup; callers feed one uniform draw per user."""
        return min(bisect_left(self._cum, u), len(self.p) - 1) + 1


@dataclass(frozen=True)
class SystemConfig:
    """Parameters of one frame draw."""

    users: int
    slots: int
    dist: DegreeDistribution
    model: PncModel
    payload_len: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("need at least one user")
        if self.slots < self.dist.max_degree:
            raise ValueError("slots must be >= the maximum repetition degree")
        if self.payload_len < 0:
            raise ValueError("negative payload length")

    @property
    def rate(self) -> float:
        return self.users / self.slots

    @property
    def offered_load(self) -> float:
        """Mean transmissions per slot: rate times mean degree."""
        return self.rate * self.dist.mean()


@dataclass(frozen=True)
class Batch:
    """One occupied slot: its transmitters and what the receiver decoded.

    `users` is ascending; transfer-matrix row r belongs to users[r].  The
    outputs are payload combinations per transfer column; a matrix with no
    columns means the collision was too big to decode.
    """

    slot: int
    users: tuple[int, ...]
    transfer: BitMatrix
    outputs: tuple[bytes, ...]


@dataclass(frozen=True)
class Frame:
    """A fully drawn frame with ground-truth payloads."""

    n_slots: int
    payload_len: int
    payloads: tuple[bytes, ...]
    slot_choices: tuple[tuple[int, ...], ...]
    batches: tuple[Batch, ...]

    @property
    def users(self) -> int:
        return len(self.payloads)


def _user_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_USER_SPACE, index)))

def _slot_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_SLOT_SPACE, index)))


def _choose_slots(rng: np.random.Generator, degree: int, n: int) -> tuple[int, ...]:
    """Uniform ordered sample of `degree` distinct slots via partial shuffle."""
    chosen = []
    swapped: dict[int, int] = {}
    for j in range(degree):
        r = j + int(rng.integers(0, n - j))
        chosen.append(swapped.get(r, r))
        swapped[r] = swapped.get(j, j)
    return tuple(sorted(chosen))


def sample_frame(config: SystemConfig) -> Frame:
    """Draw one frame deterministically from the config seed."""
    n = config.slots
    model = config.model
    payload_len = config.payload_len
    payloads = []
    choices = []
    occupants: dict[int, list[int]] = {}
    for i in range(config.users):
        rng = _user_rng(config.seed, i)
        degree = config.dist.degree_from_uniform(float(rng.random()))
        slots = _choose_slots(rng, degree, n)
        payloads.append(rng.bytes(payload_len) if payload_len else b"")
        choices.append(slots)
        for t in slots:
            occupants.setdefault(t, []).append(i)

    batches = []
    for t in sorted(occupants):
        users = sorted(occupants[t])
        fam = model.family(len(users))
        if fam.size == 1:
            transfer = fam.entries[0][0]
        else:
            transfer = fam.sample(_slot_rng(config.seed, t))
        outputs = tuple(combine([payloads[u] for u in users], transfer))
        batches.append(Batch(slot=t, users=tuple(users), transfer=transfer, outputs=outputs))

    return Frame(
        n_slots=n,
        payload_len=payload_len,
        payloads=tuple(payloads),
        slot_choices=tuple(choices),
        batches=tuple(batches),
    )


def slot_degree_histogram(frame: Frame) -> np.ndarray:
    """Counts of slots by collision size; index d = number of slots with d transmitters."""
    per_slot = np.zeros(frame.n_slots, dtype=np.int64)
    for slots in frame.slot_choices:
        for t in slots:
            per_slot[t] += 1
    return np.bincount(per_slot)


def global_matrix(frame: Frame) -> BitMatrix:
    """Stack every batch's transfer columns into one users x outputs matrix.

    Column (t, j) has a 1 in row u when user u's packet enters output j of
    slot t.  Rank queries against this matrix bound what any decoder could
    ever recover from the frame.
    """
    masks = []
    for batch in frame.batches:
        for j in range(batch.transfer.cols):
            col = batch.transfer.column_mask(j)
            mask = 0
            pos = 0
            while col:
                if col & 1:
                    mask |= 1 << batch.users[pos]
                col >>= 1
                pos += 1
            masks.append(mask)
    return BitMatrix(frame.users, len(masks), masks)
