"""A strongly connected network settles on a sawtooth of period about 2 alpha.

The simulation uses the log-shaped threshold with alpha = 3 and instantaneous
coupling.  After the transient the activity decays from its peak to N+,
follows the locked decay down to N-, sits there, and then fires in one large
discharge.  The shape resembles the flat-state family as p -> 0, so the peak
lies well above N+.

    python3 demos/03_sawtooth_simulation.py
"""

from pathlib import Path

from elapsed_neurons import ModelConfig, PaperThreshold, run
from elapsed_neurons.analysis import classify_trace, detect_jumps
from elapsed_neurons.cli import render_svg
from elapsed_neurons.model import n_minus_plus

alpha = 3.0
config = ModelConfig(PaperThreshold(alpha), J=1.0, ds=1e-3, t_max=60.0)
trace = run(config, snapshot_times=[59.0])
report = classify_trace(trace, window=15.0, sigma_plus=2 * alpha)
lo, hi = n_minus_plus(alpha)

print(report.summary())
print(f"N- = {lo:.5f}, N+ = {hi:.5f}")
for ev in detect_jumps(trace.window(12.0), 1e-2):
    print(f"  discharge at t={ev.t:7.3f}  jump {ev.amplitude:+.4f}")

s, n = trace.snapshots[59.0]
out = Path("demo_output")
out.mkdir(exist_ok=True)
(out / "sawtooth_trace.svg").write_text(render_svg(trace.t, {"N": trace.N}, "t"))
keep = s < 12
(out / "sawtooth_density.svg").write_text(render_svg(s[keep], {"n": n[keep]}, "s"))
print(f"wrote {out}/sawtooth_trace.svg and {out}/sawtooth_density.svg")
