"""
Designing the repetition distribution
=====================================

At a chosen slot load the repetition degrees users draw from are a design
knob.  A linear program picks the distribution with the highest rate that
still decodes almost everything, and a sweep maps the achievable region.
The same runs are available from the command line as `ncsa optimize`,
`ncsa sweep` and `ncsa plot`.
"""

from ncsa.evolution import rate_upper_bound
from ncsa.optimize import optimize, sweep
from ncsa.pnc import PncModel
from ncsa.svg import render_line_chart

model = PncModel.example(10)

res = optimize(1.0, model)
print(f"load 1.0: rate {res.rate:.4f}, delivered rate {res.rate_star:.4f},"
      f" ceiling {rate_upper_bound(1.0, model):.4f}")
print("optimal repetition mix:")
for d in range(1, res.max_degree + 1):
    p = res.dist.prob(d)
    if p > 1e-9:
        print(f"  degree {d}: {p:.4f}")
print("verified on the fine grid:", not res.violations,
      "| local optimality certificate:", res.certificate_ok)

lams = [0.25 * i for i in range(1, 33)]
points = sweep(lams, model)
feasible = [p for p in points if p.feasible]
print(f"\nsweep: {len(feasible)}/{len(points)} loads feasible,"
      f" best delivered rate {max(p.rate_star for p in feasible):.4f}")

chart = render_line_chart(
    {
        "achievable": [(p.lam, p.rate_star) for p in feasible],
        "ceiling": [(p.lam, p.upper_bound) for p in points],
    },
    title="delivered rate vs ceiling",
    x_label="slot load",
    y_label="packets per slot",
)
with open("rate_design.svg", "w", encoding="utf-8") as fh:
    fh.write(chart + "\n")
print("wrote rate_design.svg")
