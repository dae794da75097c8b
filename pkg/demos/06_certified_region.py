"""The certified step-size region and its descent certificate.

The convergence theory prescribes, for a given compressor contraction
delta, dual step eta, graph spectrum (rho1, rho2), smoothness L, and
curvature bound M, a lower bound on the penalty theta and an upper bound
on the primal step alpha.  Inside that region a composite potential F_t
(optimality gap + dual residual + disagreement + surrogate gap) is
guaranteed non-increasing.  The certified region is extremely
conservative -- that is the price of a worst-case guarantee -- but it is
computable, and this library both evaluates it and verifies the descent
claim numerically.

Run:  python3 demos/06_certified_region.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ticopd import (
    DATA,
    AlgorithmConfig,
    CompressorSpec,
    LyapunovTracker,
    RngStream,
    admissible_stepsizes,
    build_graph,
    certified_delta,
    quadratic_consensus,
    run,
    spectral_info,
    theorem_constants,
)

OUT = pathlib.Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

n, d = 10, 20
graph = build_graph("ring", n)
sp = spectral_info(graph)
gen = RngStream(0).generator(DATA)
objective = quadratic_consensus(3.0 * gen.standard_normal((n, d)))

print("certified constants on a 10-ring (L=1 quadratic), eta = delta:")
print(f"{'compressor':>16} {'delta':>8} {'delta~':>8} {'delta2':>8} "
      f"{'delta1':>10} {'theta_lb':>12} {'alpha_ub':>12}")
for spec in [
    CompressorSpec(kind="qsgd", d=d, s=1),
    CompressorSpec(kind="qsgd", d=d, s=4),
    CompressorSpec(kind="topk", d=d, k=5),
    CompressorSpec(kind="identity", d=d),
]:
    delta = certified_delta(spec)
    c = theorem_constants(delta=delta, eta=delta, rho1=sp.rho1, rho2=sp.rho2,
                          L=objective.L, n=n, M=sp.M)
    label = f"{spec.kind}" + (f"(s={spec.s})" if spec.s else f"(k={spec.k})" if spec.k else "")
    print(f"{label:>16} {delta:>8.4f} {c.delta_tilde:>8.3f} {c.delta2:>8.3f} "
          f"{c.delta1:>10.3f} {c.theta_lb:>12.4g} {c.alpha_ub:>12.3e}")

# The admissible primal step shrinks as the penalty grows: theta buys
# consensus enforcement at the price of step size.
spec = CompressorSpec(kind="qsgd", d=d, s=4)
delta = certified_delta(spec)
consts = theorem_constants(delta=delta, eta=delta, rho1=sp.rho1, rho2=sp.rho2,
                           L=objective.L, n=n, M=sp.M)
thetas = np.geomspace(consts.theta_lb, 1e3 * consts.theta_lb, 60)
fig, ax = plt.subplots(figsize=(6.2, 4.2))
ax.loglog(thetas, [consts.alpha_ub_at(th) for th in thetas])
ax.set_xlabel(r"penalty $\theta$")
ax.set_ylabel(r"largest certified step $\alpha$")
ax.set_title("Certified step-size frontier (qsgd s=4 on a 10-ring)")
ax.grid(alpha=0.3, which="both")
fig.tight_layout()
fig.savefig(OUT / "06_region.png", dpi=120)
print(f"\nwrote {OUT / '06_region.png'}")

# Run at the corner of the region and track the potential: it must never
# increase (up to floating-point noise) and never go negative.
steps = admissible_stepsizes(consts)
tracker = LyapunovTracker(objective, sp, consts, alpha=steps.alpha,
                          theta=steps.theta, eta=steps.eta)
rec = run(AlgorithmConfig(algorithm="ticopd", T=300, seed=0, steps=steps,
                          compressor=spec), objective, graph,
          stride=1, lyapunov_tracker=tracker)
F = np.array([r.lyapunov for r in rec.rows])
print(f"\ncompliant run: theta={steps.theta:.4g}, alpha={steps.alpha:.3e}")
print(f"potential F_0={F[0]:.6f}, F_300={F[-1]:.6f}, "
      f"max single-step increase={np.max(np.diff(F)):.3e}, min={F.min():.6f}")

fig, ax = plt.subplots(figsize=(6.2, 4.2))
ax.plot(F - F[-1] + 1e-16)
ax.set_yscale("log")
ax.set_xlabel("iteration")
ax.set_ylabel(r"$F_t - F_{300}$")
ax.set_title("Monotone descent of the certified potential")
ax.grid(alpha=0.3, which="both")
fig.tight_layout()
fig.savefig(OUT / "06_descent.png", dpi=120)
print(f"wrote {OUT / '06_descent.png'}")
