"""Network-coded slotted ALOHA: finite-frame simulation and asymptotic design.

Layers, bottom up:

- ``gf2``: bit-packed GF(2) matrices, reduced column echelon form, payload
  replay of column operations.
- ``pnc``: per-collision-size weighted matrix families, the solvability
  (gamma) machinery, and the cached per-model polynomial tables.
- ``frames``: degree distributions, reproducible frame sampling, and the
  per-slot batch structure.
- ``decoders``: batched and ordinary peeling plus the global-elimination
  oracle.
- ``evolution``: asymptotic iteration maps, fixed points, and the rate
  upper bound.
- ``optimize``: LP design of degree distributions and load sweeps.
"""

from .decoders import (
    DecodeReport,
    FrameInconsistencyError,
    batched_bp,
    ge_oracle,
    ordinary_bp,
)
from .evolution import (
    EvolutionResult,
    FixedPointResult,
    PoissonMixture,
    edge_update,
    evolve,
    fixed_point,
    poisson_weights,
    rate_upper_bound,
    resolve_prob,
)
from .frames import (
    Batch,
    DegreeDistribution,
    Frame,
    SystemConfig,
    global_matrix,
    sample_frame,
    slot_degree_histogram,
)
from .gf2 import BitMatrix, ColumnOpTrace, combine, in_colspan, rank, rcef, select_rows
from .optimize import OptimizationResult, SweepPoint, achievable_rate, optimize, sweep
from .pnc import (
    GammaPoly,
    PncModel,
    WeightedMatrixFamily,
    example_family,
    family_size,
    gamma_closed_form,
    gamma_k_enum,
    gamma_set,
)

__version__ = "0.1.0"

__all__ = [
    "Batch",
    "BitMatrix",
    "ColumnOpTrace",
    "DecodeReport",
    "DegreeDistribution",
    "EvolutionResult",
    "FixedPointResult",
    "Frame",
    "FrameInconsistencyError",
    "GammaPoly",
    "OptimizationResult",
    "PncModel",
    "PoissonMixture",
    "SweepPoint",
    "SystemConfig",
    "WeightedMatrixFamily",
    "achievable_rate",
    "batched_bp",
    "combine",
    "edge_update",
    "evolve",
    "example_family",
    "family_size",
    "fixed_point",
    "gamma_closed_form",
    "gamma_k_enum",
    "gamma_set",
    "ge_oracle",
    "global_matrix",
    "in_colspan",
    "optimize",
    "ordinary_bp",
    "poisson_weights",
    "rank",
    "rate_upper_bound",
    "rcef",
    "resolve_prob",
    "sample_frame",
    "select_rows",
    "slot_degree_histogram",
    "sweep",
]
