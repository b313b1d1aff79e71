"""Unconnected neurons relax to the stationary activity N* = 1 / (1 + sigma).

Start from a block of neurons that all fired within the last time unit and
watch the activity oscillate around N* while the oscillation shrinks by at
least a factor sigma per window of length sigma.

    python3 demos/01_linear_relaxation.py
"""

from pathlib import Path

import numpy as np

from elapsed_neurons import ConstantThreshold, ModelConfig, UnitBlock, run
from elapsed_neurons.analysis import classify_trace, convergence_rate, crossing_check
from elapsed_neurons.analytic import linear_stationary_profile, n_star
from elapsed_neurons.cli import render_svg, write_csv

sigma = 0.5
config = ModelConfig(ConstantThreshold(sigma), ds=1e-3, t_max=20.0, initial=UnitBlock())
trace = run(config, snapshot_times=[20.0])
target = n_star(sigma)

print(f"N* = {target:.6f}, N(20) = {trace.N[-1]:.12f}")
print(classify_trace(trace, window=5.0, sigma_plus=sigma).summary())

# The activity has to cross N* in every window of length sigma ...
print("crosses N* in every window:", crossing_check(trace, target, sigma, t_from=1.0))

# ... and the worst deviation per window contracts like sigma^n.
rep = convergence_rate(trace, target, sigma=sigma)
for n, (a, r) in enumerate(zip(rep.window_sups[:10], np.r_[np.nan, rep.ratios()[:9]])):
    print(f"  window {n:2d}: sup|N - N*| = {a:.3e}   ratio {r:.3f}")

# The final density is the stationary profile: flat up to sigma, exponential tail after.
s, n = trace.snapshots[20.0]
l1 = config.ds * np.abs(n - linear_stationary_profile(sigma)(s)).sum()
print(f"L1 distance of n(., 20) to the stationary profile: {l1:.2e}")

out = Path("demo_output")
out.mkdir(exist_ok=True)
write_csv(out / "linear_trace.csv", ("t", "N", "X", "mass"), (trace.t, trace.N, trace.X, trace.mass))
(out / "linear_trace.svg").write_text(render_svg(trace.t, {"N": trace.N}, "t"))
keep = s < 5
(out / "linear_density.svg").write_text(render_svg(s[keep], {"n": n[keep]}, "s"))
print(f"wrote {out}/linear_trace.csv and two SVG plots")
