"""
Monte Carlo frame decoding
==========================

The per-slot decoding cap is the lever: a receiver that needs clean slots
erases every collision, while one that turns collisions of up to N users
into linear combinations keeps delivering far past the classic load limit.
Same user population, same repetition mixture, three receivers.
"""

import numpy as np

from ncsa.decoders import batched_bp
from ncsa.frames import DegreeDistribution, SystemConfig, sample_frame
from ncsa.gf2 import BitMatrix
from ncsa.pnc import PncModel, WeightedMatrixFamily

# cap 1: only uncollided slots carry information; collided slots are lost
clean_only = PncModel(
    max_decodable=1,
    families={1: WeightedMatrixFamily(1, ((BitMatrix.from_rows([[1]]), 1.0),))},
)
receivers = [("clean slots", clean_only),
             ("cap 3", PncModel.example(3)),
             ("cap 8", PncModel.example(8))]

dist = DegreeDistribution({2: 0.5, 3: 0.5})
users = 2000
trials = 3
rates = (0.4, 0.6, 0.8, 1.0, 1.2, 1.4)

print(f"{users} users, repetition mix {dist.to_pairs()}, decoded fraction:")
print(f"{'rate':>12} " + " ".join(f"{r:>6}" for r in rates))
for label, model in receivers:
    row = []
    for rate in rates:
        slots = int(np.ceil(users / rate))
        fracs = []
        for seed in range(trials):
            cfg = SystemConfig(users=users, slots=slots, dist=dist,
                               model=model, seed=seed, payload_len=0)
            fracs.append(batched_bp(sample_frame(cfg)).decoded_fraction)
        row.append(float(np.mean(fracs)))
    print(f"{label:>12} " + " ".join(f"{v:>6.3f}" for v in row))

print()
print("every extra decodable collision size pushes the usable load higher;")
print("the clean-slot receiver is already losing packets at 0.4 users/slot")
