"""Asymptotic recursion for the per-packet recovery probability.

In the large-frame limit the collision size of a random slot is Poisson
with mean equal to the offered load (user/slot ratio times mean repetition
degree).  `resolve_prob` mixes the per-collision-size solvability
polynomials over that law; the edge recursion then tracks the probability
that a repetition of a random packet is resolved after each decoding
iteration, and `fixed_point` follows it to convergence.

`rate_upper_bound` is the capacity-style ceiling: no decoder can recover
more packets per slot than the mean number of independent combinations a
slot delivers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import DegreeDistribution
from .pnc import PncModel, example_expected_rank


def poisson_weights(lam: float, tail_tol: float = 1e-12, min_terms: int = 0) -> np.ndarray:
    """Poisson(lam) pmf values w_0..w_L, untruncated and unnormalized.

    L is the smallest index with tail mass at most `tail_tol` (and at least
    `min_terms`); the returned weights sum to 1 - tail, deliberately left
    as-is so truncation error stays visible to callers.
    """
    if lam <= 0:
        raise ValueError("offered load must be positive")
    if tail_tol <= 0:
        raise ValueError("tail tolerance must be positive")
    weights = [float(np.exp(-lam))]
    cum = weights[0]
    k = 0
    while (1.0 - cum > tail_tol or k < min_terms) and cum < 1.0:
        k += 1
        weights.append(weights[-1] * lam / k)
        cum += weights[-1]
    return np.asarray(weights)


class PoissonMixture:
    """Precomputed sum_k w_k Gamma_k(x) for one (load, model) pair."""

    def __init__(self, lam: float, model: PncModel, tail_tol: float = 1e-12):
        self.lam = lam
        self.model = model
        self.weights = poisson_weights(lam, tail_tol, min_terms=model.max_decodable - 1)
        kmax = min(len(self.weights) - 1, model.max_decodable - 1)
        self._polys = [(float(self.weights[k]), model.gamma_poly(k)) for k in range(kmax + 1)]

    def __call__(self, x):
        value = sum(w * poly(x) for w, poly in self._polys)
        assert np.all((np.asarray(value) >= -1e-9) & (np.asarray(value) <= 1.0 + 1e-9)), \
            f"mixture left [0,1]: {value!r}"
        return value


def resolve_prob(x, lam: float, model: PncModel, tail_tol: float = 1e-12):
    """Probability that a slot resolves a given member packet, the rest of
    the population being known independently with probability x.

    Accepts a scalar or an ndarray of evaluation points.
    """
    return PoissonMixture(lam, model, tail_tol)(x)


def edge_update(x, lam: float, dist: DegreeDistribution, model: PncModel, mixture: PoissonMixture | None = None):
    """One step of the edge recursion: new per-repetition resolve probability."""
    mix = mixture if mixture is not None else PoissonMixture(lam, model)
    return 1.0 - dist.node_deriv(1.0 - mix(x)) / dist.mean()


@dataclass(frozen=True)
class EvolutionResult:
    lam: float
    trajectory: tuple[float, ...]
    z_star: float
    iterations: int
    converged: bool


def evolve(
    dist: DegreeDistribution,
    lam: float,
    iters: int,
    model: PncModel,
    tol: float = 1e-12,
) -> EvolutionResult:
    """Run the edge recursion for `iters` decoder iterations.

    The trajectory holds the per-repetition probabilities z_1..z_(iters-1);
    the headline number is z_star, the fraction of packets recovered after
    the final iteration.  The recursion stops early once successive values
    agree within `tol` (the trajectory is then constant from there on).
    """
    if iters < 1:
        raise ValueError("need at least one iteration")
    mix = PoissonMixture(lam, model)
    trajectory: list[float] = []
    z = 0.0
    converged = False
    for _ in range(iters - 1):
        z_next = float(edge_update(z, lam, dist, model, mix))
        assert -1e-9 <= z_next <= 1.0 + 1e-9, f"edge value left [0,1]: {z_next!r}"
        trajectory.append(z_next)
        if abs(z_next - z) < tol:
            converged = True
            z = z_next
            break
        z = z_next
    z_star = 1.0 - dist.node_poly(1.0 - float(mix(z)))
    return EvolutionResult(
        lam=lam,
        trajectory=tuple(trajectory),
        z_star=float(z_star),
        iterations=len(trajectory),
        converged=converged,
    )


@dataclass(frozen=True)
class FixedPointResult:
    x: float
    decoded_fraction: float
    iterations: int
    converged: bool


def fixed_point(
    dist: DegreeDistribution,
    lam: float,
    model: PncModel,
    tol: float = 1e-10,
    max_iter: int = 10**5,
) -> FixedPointResult:
    """Iterate the edge recursion from zero until it stalls.

    A stall near - but not at - the fixed point is not an error: the result
    reports the x actually reached and whether the tolerance was met.
    """
    mix = PoissonMixture(lam, model)
    x = 0.0
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        x_next = float(edge_update(x, lam, dist, model, mix))
        if abs(x_next - x) < tol:
            x = x_next
            converged = True
            break
        x = x_next
    fraction = 1.0 - dist.node_poly(1.0 - float(mix(x)))
    return FixedPointResult(x=x, decoded_fraction=float(fraction), iterations=iterations, converged=converged)


def rate_upper_bound(lam: float, model: PncModel, tail_tol: float = 1e-12) -> float:
    """Mean decoded combinations per slot: the ceiling on packets per slot.

    Computed by enumerating each family's members and averaging their
    ranks under the Poisson(lam) collision law.  For the stock model the
    same number is recomputed from the closed-form member counts and the
    two routes are required to agree to near machine precision.
    """
    weights = poisson_weights(lam, tail_tol, min_terms=model.max_decodable)
    dmax = min(len(weights) - 1, model.max_decodable)
    generic = sum(float(weights[d]) * model.expected_rank(d) for d in range(1, dmax + 1))
    if model.is_example:
        expanded = sum(float(weights[d]) * example_expected_rank(d) for d in range(1, dmax + 1))
        assert abs(generic - expanded) <= 1e-12, (
            f"rank-sum routes disagree: enumerated {generic!r} vs closed-form {expanded!r}"
        )
    return generic
