"""Convergence diagnostics: consensus error, certified step-size bounds,
the descent certificate, bit accounting, and the metrics record format."""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .objectives import Objective
from .topology import SpectralInfo

CSV_COLUMNS = (
    "t",
    "loss_max",
    "grad_norm_avg",
    "consensus_err",
    "bits_cum",
    "lyapunov",
    "test_acc",
)


def consensus_error(X: np.ndarray) -> float:
    """sum_i ||X_i - mean_j X_j||^2 over the stacked iterate (n, d)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    dev = X - X.mean(axis=0)
    return float((dev * dev).sum())


def auxiliary_v(lam: np.ndarray, objective: Objective, x_bar: np.ndarray,
                alpha: float) -> np.ndarray:
    """Dual-tracking residual v_i = alpha * (lam_i + grad f_i(x_bar)).

    v measures how far the scaled duals sit from the stationarity residual
    at the network average; it vanishes at primal-dual optimal pairs.
    """
    grads = np.stack([objective.grad(i, x_bar) for i in range(objective.n)])
    return alpha * (np.asarray(lam, dtype=np.float64) + grads)


# --------------------------------------------------------------------------
# certified step-size region

@dataclass(frozen=True)
class TheoremConstants:
    """Derived constants of the certified convergence region.

    theta_lb is the smallest admissible consensus penalty; alpha_ub is the
    largest admissible primal step at the evaluated theta.  alpha_ub is
    strictly decreasing in theta, so evaluating at theta_lb (the default)
    gives the widest step.  Note the numerator max(16 eta, delta) is taken
    verbatim from the certified statement even though it loosens the small-
    delta regime relative to delta2's 16 eta / delta scaling; the tension is
    deliberate and not reconciled here.
    """

    delta: float
    eta: float
    rho1: float
    rho2: float
    L: float
    n: int
    M: float
    a: float
    delta_tilde: float
    delta1: float
    delta2: float
    theta_lb: float
    theta: float
    alpha_ub: float

    def alpha_ub_at(self, theta: float) -> float:
        """Largest admissible primal step for a given penalty theta."""
        if theta <= 0:
            raise ValueError("theta must be positive")
        lead = max(16.0 * self.eta, self.delta) / (320.0 * theta * theta)
        return lead * min(
            1.0 / self.M**2, self.n * self.a / self.M**2, 1.0 / self.rho1**2
        )


def theorem_constants(delta: float, eta: float, rho1: float, rho2: float,
                      L: float, n: int, M: float, a: float = 1.0,
                      theta: float | None = None) -> TheoremConstants:
    """Constants of the certified two-timescale step-size region.

    delta_tilde = max{ (1-delta)^2 (1-delta/2)^2 /
                       ((1-delta/2)^2 - (1-delta)^2), 1 }
    delta2      = max{ 16 eta / delta, 1 }
    delta1      = 12 max{ 2, 2 / (rho2 eta), delta2 delta_tilde }
    theta_lb    = max{ 4 L^2 / (n rho2 a),
                       (2/rho2) (1 + 2L + 8 eta rho1^2 / rho2
                                 + delta1 (3/2 + 3 L^2 + eta rho1 + rho1^2/2)) }
    alpha_ub    = max{16 eta, delta} / (320 theta^2)
                  * min{ 1/M^2, n a / M^2, 1/rho1^2 }

    theta defaults to theta_lb for the alpha_ub evaluation.
    """
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if eta <= 0 or rho2 <= 0 or rho1 < rho2 or L <= 0 or n < 2 or M <= 0 or a <= 0:
        raise ValueError("invalid constants: need eta, rho2, L, M, a > 0, rho1 >= rho2, n >= 2")

    one_minus = (1.0 - delta) ** 2
    half = (1.0 - delta / 2.0) ** 2
    delta_tilde = max(one_minus * half / (half - one_minus), 1.0)
    delta2 = max(16.0 * eta / delta, 1.0)
    delta1 = 12.0 * max(2.0, 2.0 / (rho2 * eta), delta2 * delta_tilde)
    theta_lb = max(
        4.0 * L * L / (n * rho2 * a),
        (2.0 / rho2)
        * (
            1.0
            + 2.0 * L
            + 8.0 * eta * rho1 * rho1 / rho2
            + delta1 * (1.5 + 3.0 * L * L + eta * rho1 + rho1 * rho1 / 2.0)
        ),
    )
    theta_eval = theta_lb if theta is None else float(theta)
    if theta_eval <= 0:
        raise ValueError("theta must be positive")
    lead = max(16.0 * eta, delta) / (320.0 * theta_eval**2)
    alpha_ub = lead * min(1.0 / M**2, n * a / M**2, 1.0 / rho1**2)
    return TheoremConstants(
        delta=delta, eta=eta, rho1=rho1, rho2=rho2, L=L, n=int(n), M=M, a=a,
        delta_tilde=delta_tilde, delta1=delta1, delta2=delta2,
        theta_lb=theta_lb, theta=theta_eval, alpha_ub=alpha_ub,
    )


# --------------------------------------------------------------------------
# descent certificate

class LyapunovTracker:
    """Composite potential certifying descent under compliant step sizes.

    With K the mean-subtraction projector, Q the Laplacian pseudo-inverse
    (both acting blockwise), and v the dual-tracking residual,

        F = f(x_bar) - f* + (a / (eta alpha)) ||v||^2_{Q + c K}
            + a ||X||^2_K + delta1 a <X, v>_K + delta2 a ||Xhat - X||^2,

        c = alpha ((delta1/2)(theta + eta) - theta - delta2 theta).

    Requires a known optimal value f*.
    """

    def __init__(self, objective: Objective, spectral: SpectralInfo,
                 constants: TheoremConstants, alpha: float, theta: float,
                 eta: float, a: float = 1.0):
        if objective.f_star is None:
            raise ValueError("lyapunov needs an objective with known f_star")
        if alpha <= 0 or theta <= 0 or eta <= 0 or a <= 0:
            raise ValueError("alpha, theta, eta, a must be positive")
        self.objective = objective
        self.Q = spectral.laplacian_pinv
        self.constants = constants
        self.alpha = float(alpha)
        self.theta = float(theta)
        self.eta = float(eta)
        self.a = float(a)
        d1, d2 = constants.delta1, constants.delta2
        self.c_weight = alpha * ((d1 / 2.0) * (theta + eta) - theta - d2 * theta)

    def value(self, X: np.ndarray, lam: np.ndarray, Xhat: np.ndarray) -> float:
        obj, a = self.objective, self.a
        d1, d2 = self.constants.delta1, self.constants.delta2
        x_bar = X.mean(axis=0)
        V = auxiliary_v(lam, obj, x_bar, self.alpha)
        KX = X - x_bar
        KV = V - V.mean(axis=0)
        # Blockwise quadratic form v^T (Q kron I) v, kept off the BLAS path
        # so results do not depend on thread count.
        QV = (self.Q[:, :, None] * V[None, :, :]).sum(axis=1)
        v_term = (a / (self.eta * self.alpha)) * (
            float((V * QV).sum()) + self.c_weight * float((KV * KV).sum())
        )
        x_term = a * float((KX * KX).sum())
        cross = d1 * a * float((KX * KV).sum())
        gap = Xhat - X
        gap_term = d2 * a * float((gap * gap).sum())
        return (
            obj.global_loss(x_bar) - obj.f_star + v_term + x_term + cross + gap_term
        )


def lyapunov(X, lam, Xhat, objective, spectral, constants, alpha, theta, eta,
             a: float = 1.0) -> float:
    """One-shot evaluation of the descent potential."""
    tracker = LyapunovTracker(objective, spectral, constants, alpha, theta, eta, a)
    return tracker.value(np.asarray(X), np.asarray(lam), np.asarray(Xhat))


def worst_agent_accuracy(X: np.ndarray, objective: Objective,
                         features: np.ndarray, labels: np.ndarray) -> float:
    """Held-out accuracy of the worst agent's parameters."""
    return min(
        objective.accuracy(X[i], features, labels) for i in range(X.shape[0])
    )


# --------------------------------------------------------------------------
# metrics records

@dataclass(frozen=True)
class MetricsRow:
    """One sampled diagnostics row.

    loss_max      max_i f(X_i), the global average loss at the worst agent
    grad_norm_avg ||grad f(x_bar)||^2 at the network average
    consensus_err sum_i ||X_i - x_bar||^2
    bits_cum      network-wide transmitted bits so far (directed messages)
    lyapunov      descent potential, when tracked (else None)
    test_acc      worst-agent held-out accuracy, when available (else None)
    """

    t: int
    loss_max: float
    grad_norm_avg: float
    consensus_err: float
    bits_cum: int
    lyapunov: float | None = None
    test_acc: float | None = None


@dataclass
class RunRecord:
    """Full outcome of one algorithm run."""

    config: dict
    rows: list[MetricsRow]
    status: str  # "completed" | "diverged"
    diverged_at: int | None = None
    bits_per_agent: np.ndarray | None = field(default=None, repr=False)

    @property
    def final(self) -> MetricsRow:
        return self.rows[-1]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def rows_to_csv_text(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.t, r.loss_max, r.grad_norm_avg, r.consensus_err,
                    r.bits_cum, r.lyapunov, r.test_acc,
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(rows, path) -> None:
    """Atomically write a metrics CSV (tmp file + rename)."""
    text = rows_to_csv_text(rows)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path) -> list[MetricsRow]:
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV columns in {path}")
        for rec in reader:
            rows.append(
                MetricsRow(
                    t=int(rec["t"]),
                    loss_max=float(rec["loss_max"]),
                    grad_norm_avg=float(rec["grad_norm_avg"]),
                    consensus_err=float(rec["consensus_err"]),
                    bits_cum=int(rec["bits_cum"]),
                    lyapunov=float(rec["lyapunov"]) if rec["lyapunov"] else None,
                    test_acc=float(rec["test_acc"]) if rec["test_acc"] else None,
                )
            )
    return rows
