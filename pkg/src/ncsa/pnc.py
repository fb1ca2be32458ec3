"""Physical-layer models: which packet combinations a slot yields, and when.

A model assigns to every collision size d a weighted family of transfer
matrices.  A transfer matrix has one row per colliding user and one column
per decoded combination; the receiver of a degree-d slot observes the
products (payload row-vector) x (matrix).  Above the model's cap nothing is
decoded and the family degenerates to the empty matrix.

The stock model (`example_family`) captures a receiver that resolves one or
two XOR combinations out of a collision: either the XOR of everything
(single all-ones column), or two combinations whose rows split the users
into [1,0] / [0,1] / [1,1] patterns.  The family lists every distinct row
arrangement explicitly, all equally likely, so sampling a member also picks
the (uniform) assignment of users to rows.

`gamma_set` is the solvability footprint a decoder cares about: which
subsets of the first d-1 users, once known, let the last user's packet be
solved out of the slot.  Degree-(k) polynomials built from those sets drive
the asymptotic recursion; they are computed here once per model and cached.
"""
from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate
from math import comb
from typing import Iterable, Iterator, Mapping, Sequence

from .gf2 import BitMatrix, in_colspan, rank, select_rows

_T10 = (1, 0)
_T01 = (0, 1)
_T11 = (1, 1)


def _multinomial(n: int, parts: Sequence[int]) -> int:
    total = 0
    out = 1
    for p in parts:
        total += p
        out *= comb(n - (total - p), p)
    if total != n:
        raise ValueError("parts must sum to n")
    return out


def _distinct_permutations(items: Sequence) -> Iterator[tuple]:
    """All distinct orderings of a multiset, in lexicographic order."""
    pool = sorted(set(items))
    counts = {v: 0 for v in pool}
    for it in items:
        counts[it] += 1
    n = len(items)
    slot: list = [None] * n

    def rec(pos: int) -> Iterator[tuple]:
        if pos == n:
            yield tuple(slot)
            return
        for v in pool:
            if counts[v]:
                counts[v] -= 1
                slot[pos] = v
                yield from rec(pos + 1)
                counts[v] += 1

    yield from rec(0)


def _split_specs(d: int) -> list[tuple[int, int, int]]:
    """(count of [0,1] rows, count of [1,0] rows, count of [1,1] rows) for
    every two-column member shape at collision size d."""
    specs = [(a, d - a, 0) for a in range(1, d // 2 + 1)]
    for a1 in range(1, d - 1):
        for a2 in range(a1, d - a1):
            specs.append((a1, a2, d - a1 - a2))
    return specs


def family_size(d: int) -> int:
    """Number of members of the stock family at collision size d (d >= 2)."""
    if d < 2:
        raise ValueError("collision size must be at least 2")
    return 1 + sum(_multinomial(d, [a1, a2, a3]) for a1, a2, a3 in _split_specs(d))


def example_expected_rank(d: int) -> float:
    """Mean decoded-combination count of the stock family at collision size d,
    from the arrangement counts alone: one member yields a single combination,
    every two-column member yields two."""
    if d < 1:
        raise ValueError("collision size must be positive")
    if d == 1:
        return 1.0
    two_col = sum(_multinomial(d, [a1, a2, a3]) for a1, a2, a3 in _split_specs(d))
    return float(Fraction(1 + 2 * two_col, 1 + two_col))


class WeightedMatrixFamily:
    """A probability distribution over transfer matrices of one collision size."""

    def __init__(self, degree: int, entries: Iterable[tuple[BitMatrix, float]]):
        entries = tuple(entries)
        if degree < 1:
            raise ValueError("degree must be positive")
        if not entries:
            raise ValueError("family must not be empty")
        total = 0.0
        for matrix, prob in entries:
            if matrix.rows != degree:
                raise ValueError(f"member has {matrix.rows} rows, expected {degree}")
            if prob < 0:
                raise ValueError("negative probability")
            if matrix.cols and rank(matrix) != matrix.cols:
                raise ValueError("transfer matrices must have full column rank")
            total += prob
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self.degree = degree
        self.entries = entries
        self._cum = list(accumulate(p for _, p in entries))
        self._cum[-1] = 1.0

    @property
    def size(self) -> int:
        return len(self.entries)

    def sample(self, rng) -> BitMatrix:
        idx = bisect_left(self._cum, rng.random())
        return self.entries[min(idx, len(self.entries) - 1)][0]

    def __iter__(self) -> Iterator[tuple[BitMatrix, float]]:
        return iter(self.entries)


def _empty_family(degree: int) -> WeightedMatrixFamily:
    return WeightedMatrixFamily(degree, [(BitMatrix(degree, 0), 1.0)])


def example_family(d: int, cap: int) -> WeightedMatrixFamily:
    """The stock family at collision size d for a receiver capped at `cap`.

    All members are equally likely.  Size 1 gives the packet itself; sizes
    above the cap give the empty matrix (nothing decoded).
    """
    if d < 1:
        raise ValueError("collision size must be positive")
    if cap < 2:
        raise ValueError("cap must be at least 2")
    if d == 1:
        return WeightedMatrixFamily(1, [(BitMatrix.from_rows([[1]]), 1.0)])
    if d > cap:
        return _empty_family(d)
    members = [BitMatrix.from_rows([[1]] * d)]
    for a1, a2, a3 in _split_specs(d):
        types = [_T01] * a1 + [_T10] * a2 + [_T11] * a3
        for arrangement in _distinct_permutations(types):
            members.append(BitMatrix.from_rows(arrangement))
    prob = 1.0 / len(members)
    return WeightedMatrixFamily(d, [(m, prob) for m in members])


def gamma_set(matrix: BitMatrix) -> set[frozenset[int]]:
    """All subsets of rows 1..d-1 (1-based) that unlock the last row's packet.

    A subset V qualifies when, with the packets of rows in V substituted
    out, the value of the last row's packet is determined by the remaining
    linear system: the unit vector at the last row's position lies in the
    column span of the submatrix on the rows outside V.
    """
    d = matrix.rows
    if d < 1:
        raise ValueError("matrix needs at least one row")
    out: set[frozenset[int]] = set()
    for vmask in range(1 << (d - 1)):
        kept = [r for r in range(d - 1) if not (vmask >> r) & 1] + [d - 1]
        sub = select_rows(matrix, kept)
        target = 1 << (len(kept) - 1)
        if in_colspan(sub, target):
            out.add(frozenset(r + 1 for r in range(d - 1) if (vmask >> r) & 1))
    return out


def _gamma_value(matrix: BitMatrix, prob: float, k: int, x: float) -> float:
    total = 0.0
    for subset in gamma_set(matrix):
        s = len(subset)
        total += x**s * (1.0 - x) ** (k - s)
    return prob * total


def gamma_k_enum(model: "PncModel", k: int, x: float) -> float:
    """Degree-k solvability polynomial by brute enumeration of the family.

    Walks every member of family(k+1), enumerates its gamma set, and sums
    the weighted subset polynomial.  Deliberately the slow reference route;
    cost grows with family size times 2^k.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    return sum(_gamma_value(m, p, k, x) for m, p in model.family(k + 1))


def gamma_closed_form(
    d: int,
    g1: float,
    g2: Mapping[int, float],
    g3: Mapping[tuple[int, int], float],
    x: float,
) -> float:
    """Closed-form degree-(d-1) solvability polynomial of the stock family shape.

    Takes the per-shape probabilities: `g1` for the all-ones column, `g2[a]`
    for the two-column split with a rows of [0,1], `g3[(a1, a2)]` for the
    mixed split with a1 rows of [0,1] and a2 rows of [1,0].  Validates that
    the probabilities, multiplied by their arrangement counts, sum to 1.

    Note: for the mixed-split members this formula credits a [0,1]- or
    [1,0]-typed target only with resolution through its own column, not
    through the sum of both columns, so for d >= 3 it undercounts relative
    to `gamma_k_enum`.  It is kept as the compact algebraic reference form;
    the enumeration route is authoritative for decoder-facing predictions.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    total = g1
    for a in range(1, d // 2 + 1):
        total += comb(d, a) * g2[a]
    for a1 in range(1, d - 1):
        for a2 in range(a1, d - a1):
            total += _multinomial(d, [a1, a2, d - a1 - a2]) * g3[(a1, a2)]
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"shape probabilities sum to {total!r}, not 1")

    value = g1 * x ** (d - 1)
    for a in range(1, d // 2 + 1):
        value += g2[a] * (comb(d - 1, a - 1) * x ** (a - 1) + comb(d - 1, a) * x ** (d - a - 1))
    for a1 in range(1, d - 1):
        for a2 in range(a1, d - a1):
            a3 = d - a1 - a2
            value += g3[(a1, a2)] * (
                _multinomial(d - 1, [a1 - 1, a2, a3]) * x ** (d - a2 - 1)
                + _multinomial(d - 1, [a1, a2 - 1, a3]) * x ** (d - a1 - 1)
                + _multinomial(d - 1, [a1, a2, a3 - 1])
                * x ** (d - a1 - a2 - 1)
                * (x**a1 + x**a2 - x ** (a1 + a2))
            )
    return value


@dataclass(frozen=True)
class GammaPoly:
    """Solvability polynomial for one collision size, as plain coefficients.

    coeffs[j] multiplies x**j.  Values are probabilities: within [0, 1] on
    [0, 1] and nondecreasing (more side knowledge never hurts).
    """

    k: int
    coeffs: tuple[float, ...]

    def __call__(self, x):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


def _subset_size_counts(matrix: BitMatrix) -> list[int]:
    """counts[j] = number of qualifying side-knowledge subsets of size j."""
    counts = [0] * matrix.rows
    for subset in gamma_set(matrix):
        counts[len(subset)] += 1
    return counts


def _counts_to_coeffs(k: int, counts: Sequence) -> tuple[float, ...]:
    """Expand sum_j counts[j] * x^j * (1-x)^(k-j) into monomial coefficients."""
    coeffs = [Fraction(0)] * (k + 1)
    for j, n in enumerate(counts):
        if not n:
            continue
        n = Fraction(n)
        for m in range(k - j + 1):
            coeffs[j + m] += n * comb(k - j, m) * (-1) ** m
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(float(c) for c in coeffs)


def _example_gamma_counts(d: int) -> list[Fraction]:
    """Qualifying-subset size counts for the stock family at size d, averaged
    over members.

    Exploits that permuting the first d-1 rows permutes the subsets without
    changing their sizes: within one member shape, every arrangement with the
    same target-row type has identical counts.  One representative per
    (shape, target type) is enumerated and weighted by the number of
    arrangements that share it, which cuts the work from family-size times
    2^(d-1) to a few dozen enumerations.
    """
    weighted = [Fraction(0)] * d

    def add(rep: list[tuple], arrangements: int) -> None:
        counts = _subset_size_counts(BitMatrix.from_rows(rep))
        for j, c in enumerate(counts):
            if c:
                weighted[j] += arrangements * c

    add([(1,)] * d, 1)
    for a1, a2, a3 in _split_specs(d):
        for target, taken in ((_T01, (1, 0, 0)), (_T10, (0, 1, 0)), (_T11, (0, 0, 1))):
            rest = (a1 - taken[0], a2 - taken[1], a3 - taken[2])
            if min(rest) < 0:
                continue
            rep_rows = [_T01] * rest[0] + [_T10] * rest[1] + [_T11] * rest[2] + [target]
            add(rep_rows, _multinomial(d - 1, list(rest)))
    g = Fraction(1, family_size(d))
    return [g * w for w in weighted]


class PncModel:
    """A cap plus per-collision-size matrix families, with cached analysis tables."""

    def __init__(self, max_decodable: int, families: Mapping[int, WeightedMatrixFamily] | None):
        if max_decodable < 1:
            raise ValueError("max_decodable must be at least 1")
        if families is None and max_decodable < 2:
            raise ValueError("the stock model needs a cap of at least 2")
        self.max_decodable = max_decodable
        self._custom: dict[int, WeightedMatrixFamily] | None = None
        self._families: dict[int, WeightedMatrixFamily] = {}
        if families is not None:
            custom = dict(families)
            for d in range(1, max_decodable + 1):
                if d not in custom:
                    raise ValueError(f"family for collision size {d} missing")
            for d, fam in custom.items():
                if fam.degree != d:
                    raise ValueError(f"family keyed {d} has degree {fam.degree}")
                if d > max_decodable and any(m.cols for m, _ in fam):
                    raise ValueError(f"collision size {d} is above the cap but decodes something")
            one = custom[1]
            if one.size != 1 or one.entries[0][0] != BitMatrix.from_rows([[1]]):
                raise ValueError("size-1 family must be the single [1] matrix")
            self._custom = custom
            self._families.update(custom)
        self._gamma: dict[int, GammaPoly] = {}
        self._expected_rank: dict[int, float] = {}

    @classmethod
    def example(cls, max_decodable: int) -> "PncModel":
        """The stock model: uniformly weighted one-or-two-combination families."""
        if max_decodable < 2:
            raise ValueError("the stock model needs a cap of at least 2")
        return cls(max_decodable, None)

    @classmethod
    def from_families(cls, max_decodable: int, families: Mapping[int, WeightedMatrixFamily]) -> "PncModel":
        return cls(max_decodable, families)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PncModel":
        """Build from the JSON shape {"max_decodable": N, "families": {"d": [{"matrix": rows, "prob": p}, ...]}}."""
        cap = data["max_decodable"]
        families = {}
        for key, entries in data["families"].items():
            d = int(key)
            fam = []
            for entry in entries:
                rows = entry["matrix"]
                matrix = BitMatrix.from_rows(rows) if rows and rows[0] else BitMatrix(d, 0)
                if matrix.rows == 0:
                    matrix = BitMatrix(d, 0)
                fam.append((matrix, float(entry["prob"])))
            families[d] = WeightedMatrixFamily(d, fam)
        return cls(cap, families)

    @classmethod
    def from_file(cls, path) -> "PncModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @property
    def is_example(self) -> bool:
        return self._custom is None

    def family(self, d: int) -> WeightedMatrixFamily:
        if d < 1:
            raise ValueError("collision size must be positive")
        fam = self._families.get(d)
        if fam is None:
            if self._custom is not None or d > self.max_decodable:
                fam = _empty_family(d)
            else:
                fam = example_family(d, self.max_decodable)
            self._families[d] = fam
        return fam

    def gamma_poly(self, k: int) -> GammaPoly:
        """Cached solvability polynomial for collision size k+1."""
        if k < 0:
            raise ValueError("k must be nonnegative")
        poly = self._gamma.get(k)
        if poly is not None:
            return poly
        d = k + 1
        if d > self.max_decodable:
            poly = GammaPoly(k, (0.0,))
        elif d == 1:
            poly = GammaPoly(0, (1.0,))
        elif self.is_example:
            poly = GammaPoly(k, _counts_to_coeffs(k, _example_gamma_counts(d)))
        else:
            counts = [0.0] * d
            for matrix, prob in self.family(d):
                for j, c in enumerate(_subset_size_counts(matrix)):
                    counts[j] += prob * c
            poly = GammaPoly(k, _counts_to_coeffs(k, counts))
        self._gamma[k] = poly
        return poly

    def expected_rank(self, d: int) -> float:
        """Mean decoded-combination count (matrix rank) at collision size d."""
        val = self._expected_rank.get(d)
        if val is None:
            val = sum(prob * rank(matrix) for matrix, prob in self.family(d))
            self._expected_rank[d] = val
        return val
