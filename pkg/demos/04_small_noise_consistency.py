"""Does the smoothing MAP recover the truth as the noise vanishes?

A fixed signal path is generated from the double-well diffusion; five
evenly spaced observations are taken with noise level gamma, and the MAP
path is recomputed as gamma shrinks.  The distance between the MAP path
and the signal at the observation times should shrink along with gamma,
roughly linearly: the data pins the path ever harder at those times,
while between them the prior keeps smoothing.

The same harness backs the consistency-noise command; everything derives
from the single seed below.
"""

import _bootstrap
from ompath import (
    OMProblem,
    double_well,
    euler_maruyama,
    smoothing_small_noise,
    substream,
)
from ompath.consistency import write_consistency_report

out = _bootstrap.output_dir("small_noise_consistency")
seed = 0
model = double_well()
t_end, dt = 10.0, 0.04
n = int(t_end / dt)

template = OMProblem("unconditioned", model, 1.0, -1.0, dt, n)
truth = euler_maruyama(model, 1.0, -1.0, dt, n, substream(seed, "truth"))
gammas = (1.0, 0.5, 0.25, 0.125, 0.0625)
report = smoothing_small_noise(template, truth, gammas, seed, n_obs=5, n_starts=4)

print("gamma     error at the observation times")
for g, e in zip(report.abscissa, report.errors):
    bar = "#" * max(1, int(60 * e / report.errors.max()))
    print(f"{g:7.4f}  {e:8.4f}  {bar}")
print(f"\nfitted error ~ {report.fit_c:.3f} * gamma^{report.fit_alpha:.3f}")
print("an exponent near one means the error tracks the noise level")
write_consistency_report(report, out, "noise",
                         config={"seed": seed, "T": t_end, "dt": dt, "J": 5})
print(f"report written to {out}")
