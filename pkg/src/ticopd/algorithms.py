"""Decentralized optimization loops.

The main algorithm is a two-timescale compressed primal-dual method: on the
fast timescale agents track their own iterate with a compressed surrogate
that neighbors can reconstruct from bit-exact messages; on the slow
timescale a majorized primal step and a dual ascent step run against those
surrogates,

.. math::

    X_i^{t+1} &= \\beta X_i^t + (1-\\beta)\\hat X_i^t
        - \\alpha\\bigl[\\nabla f_i(X_i^t) + \\tilde\\lambda_i^t
        + \\theta(|N_i|\\hat X_i^t - \\hat X_{i,-i}^t)\\bigr],\\\\
    \\tilde\\lambda_i^{t+1} &= \\tilde\\lambda_i^t
        + \\eta(|N_i|\\hat X_i^t - \\hat X_{i,-i}^t),

with alpha = 1 / (1/alpha_tilde + theta M) and beta = alpha / alpha_tilde.
Both updates read the same pre-update surrogates (Jacobi style).  Baselines:
plain gossip descent with Metropolis mixing, its direct-quantization variant
(no error feedback, does not reach consensus), and an error-feedback gossip
method sharing this module's codec machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .compression import CompressorSpec, EncodedMessage, decode, encode
from .diagnostics import (
    MetricsRow,
    RunRecord,
    TheoremConstants,
    consensus_error,
    worst_agent_accuracy,
)
from .objectives import Objective
from .topology import Graph, neighbor_sets

ALGORITHMS = ("ticopd", "exact_pd", "dgd", "dgd_quantized", "choco")
INIT_MODES = ("zeros", "gaussian", "identical")


class DivergenceError(RuntimeError):
    """Raised when an iterate stops being finite."""


# --------------------------------------------------------------------------
# step sizes

@dataclass(frozen=True)
class StepSizes:
    """Two-timescale step sizes with the derived primal pair.

    alpha = 1 / (1/alpha_tilde + theta * M) and beta = alpha / alpha_tilde,
    so beta in (0, 1] and the primal update is a convex combination plus a
    gradient correction.
    """

    alpha_tilde: float
    theta: float
    eta: float
    gamma: float
    alpha: float
    beta: float


def compute_stepsizes(alpha_tilde: float, theta: float, eta: float,
                      gamma: float, M: float) -> StepSizes:
    """Derive (alpha, beta) from the free parameters and curvature bound M."""
    if alpha_tilde <= 0 or eta <= 0 or M < 0 or theta < 0:
        raise ValueError("need alpha_tilde, eta > 0 and theta, M >= 0")
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    alpha = 1.0 / (1.0 / alpha_tilde + theta * M)
    beta = alpha / alpha_tilde
    return StepSizes(alpha_tilde=alpha_tilde, theta=theta, eta=eta,
                     gamma=gamma, alpha=alpha, beta=beta)


def admissible_stepsizes(constants: TheoremConstants, gamma: float = 1.0) -> StepSizes:
    """Step sizes sitting exactly on the certified region's corner.

    Uses theta from the constants (default: the lower bound) and the largest
    admissible alpha there, then back-solves alpha_tilde.
    """
    alpha = constants.alpha_ub
    theta = constants.theta
    inv_tilde = 1.0 / alpha - theta * constants.M
    if inv_tilde <= 0:
        raise ValueError("certified alpha is incompatible with theta * M")
    return compute_stepsizes(1.0 / inv_tilde, theta, constants.eta, gamma, constants.M)


# --------------------------------------------------------------------------
# network state

@dataclass(frozen=True)
class AgentState:
    """Read-only view of one agent: primal x, dual lam, own surrogate xhat,
    and the aggregate of neighbor surrogates."""

    x: np.ndarray
    lam: np.ndarray
    xhat: np.ndarray
    xhat_neighbors: np.ndarray


@dataclass
class NetworkState:
    """Stacked simulator state.

    copies[i][slot] is agent i's reconstruction of neighbor
    neighbors[i][slot]'s surrogate, advanced only through decoded messages;
    it stays bit-identical to the neighbor's own surrogate because both
    sides apply the same decoded increments.
    """

    X: np.ndarray
    lam: np.ndarray
    Xhat: np.ndarray
    copies: list[np.ndarray]
    neighbors: list[list[int]]
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def neighbor_aggregate(self, i: int) -> np.ndarray:
        """Sum of stored neighbor surrogates, accumulated in sorted order."""
        agg = np.zeros(self.X.shape[1])
        for slot in range(len(self.neighbors[i])):
            agg += self.copies[i][slot]
        return agg

    def agent(self, i: int) -> AgentState:
        return AgentState(
            x=self.X[i].copy(),
            lam=self.lam[i].copy(),
            xhat=self.Xhat[i].copy(),
            xhat_neighbors=self.neighbor_aggregate(i),
        )


def _init_X(objective: Objective, mode: str, streams: _rng.RngStream) -> np.ndarray:
    n, d = objective.n, objective.d
    if mode == "zeros":
        return np.zeros((n, d))
    if mode == "identical":
        row = streams.generator(_rng.INIT, 0).standard_normal(d)
        return np.tile(row, (n, 1))
    if mode == "gaussian":
        return np.stack(
            [streams.generator(_rng.INIT, i).standard_normal(d) for i in range(n)]
        )
    raise ValueError(f"unknown init mode {mode!r}, expected one of {INIT_MODES}")


def init_state(objective: Objective, graph: Graph, mode: str,
               streams: _rng.RngStream) -> NetworkState:
    """Fresh state: duals at zero, surrogates equal to the initial iterate
    (so the first compressed difference is exactly zero), and every
    neighbor copy seeded with the true initial surrogate."""
    if graph.n != objective.n:
        raise ValueError(f"graph has {graph.n} nodes but objective has {objective.n} agents")
    neighbors, degrees = neighbor_sets(graph)
    X = _init_X(objective, mode, streams)
    copies = [np.stack([X[j].copy() for j in neighbors[i]]) for i in range(graph.n)]
    return NetworkState(
        X=X,
        lam=np.zeros_like(X),
        Xhat=X.copy(),
        copies=copies,
        neighbors=neighbors,
        degrees=degrees,
    )


# --------------------------------------------------------------------------
# per-round operations

def surrogate_update(state: NetworkState, spec: CompressorSpec, gamma: float,
                     streams: _rng.RngStream, round_index: int) -> list[EncodedMessage]:
    """One error-feedback tracking round: each agent encodes X_i - Xhat_i,
    advances its own surrogate by gamma times the *decoded* increment, and
    returns the messages for delivery.

    Using the decoded value on the sender side keeps the sender's surrogate
    and every receiver copy in bit-exact agreement.
    """
    msgs: list[EncodedMessage] = []
    for i in range(state.n):
        gen = streams.generator(_rng.COMPRESS, i, round_index)
        diff = state.X[i] - state.Xhat[i]
        m = encode(diff, spec, gen)
        state.Xhat[i] += gamma * decode(m)
        msgs.append(m)
    return msgs


def aggregate_messages(state: NetworkState, msgs: list[EncodedMessage],
                       gamma: float) -> None:
    """Deliver one round of messages: every agent decodes each neighbor's
    message once and advances the stored copy of that neighbor's surrogate.

    Requires exactly one message per agent (the same encoded payload goes to
    all of a sender's neighbors).
    """
    if len(msgs) != state.n:
        raise ValueError(f"expected {state.n} messages, got {len(msgs)}")
    for i in range(state.n):
        for slot, j in enumerate(state.neighbors[i]):
            m = msgs[j]
            if m is None:
                raise ValueError(f"missing message from agent {j}")
            state.copies[i][slot] += gamma * decode(m)


def _laplacian_terms(state: NetworkState) -> np.ndarray:
    """deg_i * Xhat_i - sum of neighbor surrogate copies, stacked."""
    lap = np.empty_like(state.Xhat)
    for i in range(state.n):
        lap[i] = state.degrees[i] * state.Xhat[i] - state.neighbor_aggregate(i)
    return lap


def primal_dual_step(state: NetworkState, objective: Objective,
                     steps: StepSizes) -> None:
    """Simultaneous primal and dual update against the current surrogates.

    Both updates read the same pre-update (X, lam, Xhat); the dual step is
    not applied until the primal step has been formed.
    """
    lap = _laplacian_terms(state)
    G = np.stack([objective.grad(i, state.X[i]) for i in range(state.n)])
    X_new = (
        steps.beta * state.X
        + (1.0 - steps.beta) * state.Xhat
        - steps.alpha * (G + state.lam + steps.theta * lap)
    )
    lam_new = state.lam + steps.eta * lap
    if not (np.isfinite(X_new).all() and np.isfinite(lam_new).all()):
        raise DivergenceError("non-finite iterate after primal-dual step")
    state.X = X_new
    state.lam = lam_new


def metropolis_weights(graph: Graph) -> np.ndarray:
    """Symmetric doubly-stochastic mixing matrix,
    W_ij = 1 / (1 + max(deg_i, deg_j)) on edges."""
    neighbors, degrees = neighbor_sets(graph)
    W = np.zeros((graph.n, graph.n))
    for i, j in graph.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(degrees[i], degrees[j]))
    for i in range(graph.n):
        off = 0.0
        for j in neighbors[i]:
            off += W[i, j]
        W[i, i] = 1.0 - off
    return W


# --------------------------------------------------------------------------
# run configuration

@dataclass(frozen=True)
class AlgorithmConfig:
    """What to run and for how long.

    steps/compressor/inner_steps configure the primal-dual methods;
    stepsize (and gossip for the error-feedback baseline) configure the
    gossip-descent family.
    """

    algorithm: str
    T: int
    seed: int = 0
    steps: StepSizes | None = None
    compressor: CompressorSpec | None = None
    inner_steps: int = 1
    stepsize: float | None = None
    gossip: float | None = None
    init: str = "zeros"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be >= 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}")


# --------------------------------------------------------------------------
# engines: one .step(t) per outer iteration, returning nothing; bits are
# accumulated on the engine.  Attribute conventions let a single driver
# record metrics for every algorithm.

class _TicopdEngine:
    def __init__(self, objective, graph, config: AlgorithmConfig):
        steps = config.steps
        if steps is None or config.compressor is None:
            raise ValueError("ticopd needs steps and a compressor")
        if steps.theta <= 0 or steps.eta <= 0 or steps.alpha <= 0:
            raise ValueError("ticopd needs positive theta, eta, alpha")
        self.objective = objective
        self.steps = steps
        self.spec = config.compressor
        self.K = config.inner_steps
        self.streams = _rng.RngStream(config.seed)
        self.state = init_state(objective, graph, config.init, self.streams)
        self.bits_agent = np.zeros(graph.n, dtype=np.int64)

    @property
    def X(self):
        return self.state.X

    @property
    def lam(self):
        return self.state.lam

    @property
    def Xhat(self):
        return self.state.Xhat

    def step(self, t: int) -> None:
        state, gamma = self.state, self.steps.gamma
        for k in range(self.K):
            msgs = surrogate_update(
                state, self.spec, gamma, self.streams, (t - 1) * self.K + k
            )
            aggregate_messages(state, msgs, gamma)
            for i in range(state.n):
                self.bits_agent[i] += state.degrees[i] * msgs[i].bit_length
        primal_dual_step(state, self.objective, self.steps)


class _ExactPdEngine:
    """Uncompressed primal-dual recursion, implemented directly on stacked
    arrays with no codec, message, or copy machinery.

    The surrogate equals the iterate here (tracked by exact increments), so
    this is the plain recursion the compressed method must reduce to when
    the compressor is the identity.
    """

    lam: np.ndarray

    def __init__(self, objective, graph, config: AlgorithmConfig):
        steps = config.steps
        if steps is None:
            raise ValueError("exact_pd needs steps")
        self.objective = objective
        self.steps = steps
        self.K = config.inner_steps
        streams = _rng.RngStream(config.seed)
        self.neighbors, self.degrees = neighbor_sets(graph)
        self.X = _init_X(objective, config.init, streams)
        self.lam = np.zeros_like(self.X)
        self.Xhat = self.X.copy()
        # uncompressed accounting: one 32-bit real per coordinate and
        # directed edge per tracking round
        self._bits_round = self.degrees * (32 * objective.d)
        self.bits_agent = np.zeros(graph.n, dtype=np.int64)

    def step(self, t: int) -> None:
        s = self.steps
        n, d = self.X.shape
        for _ in range(self.K):
            diff = self.X - self.Xhat
            self.Xhat += s.gamma * diff
            self.bits_agent += self._bits_round
        lap = np.empty_like(self.Xhat)
        for i in range(n):
            agg = np.zeros(d)
            for j in self.neighbors[i]:
                agg += self.Xhat[j]
            lap[i] = self.degrees[i] * self.Xhat[i] - agg
        G = np.stack([self.objective.grad(i, self.X[i]) for i in range(n)])
        X_new = (
            s.beta * self.X
            + (1.0 - s.beta) * self.Xhat
            - s.alpha * (G + self.lam + s.theta * lap)
        )
        lam_new = self.lam + s.eta * lap
        if not (np.isfinite(X_new).all() and np.isfinite(lam_new).all()):
            raise DivergenceError("non-finite iterate after primal-dual step")
        self.X = X_new
        self.lam = lam_new


class _DgdEngine:
    """Gossip descent: X_i <- sum_j W_ij X_j - stepsize * grad f_i(X_i)."""

    lam = None
    Xhat = None

    def __init__(self, objective, graph, config: AlgorithmConfig, quantized: bool):
        if config.stepsize is None or config.stepsize <= 0:
            raise ValueError("gossip descent needs a positive stepsize")
        self.quantized = quantized
        if quantized and config.compressor is None:
            raise ValueError("dgd_quantized needs a compressor")
        self.objective = objective
        self.stepsize = config.stepsize
        self.spec = config.compressor
        self.W = metropolis_weights(graph)
        self.neighbors, self.degrees = neighbor_sets(graph)
        self.streams = _rng.RngStream(config.seed)
        self.X = _init_X(objective, config.init, self.streams)
        self.bits_agent = np.zeros(graph.n, dtype=np.int64)

    def step(self, t: int) -> None:
        n = self.X.shape[0]
        if self.quantized:
            # Direct quantization of the transmitted parameters: neighbors
            # mix decoded values, nobody tracks the quantization error.
            msgs = [
                encode(self.X[j], self.spec,
                       self.streams.generator(_rng.COMPRESS, j, t - 1))
                for j in range(n)
            ]
            shared = [decode(m) for m in msgs]
            for j in range(n):
                self.bits_agent[j] += self.degrees[j] * msgs[j].bit_length
        else:
            shared = [self.X[j] for j in range(n)]
            self.bits_agent += self.degrees * (32 * self.objective.d)
        X_new = np.empty_like(self.X)
        for i in range(n):
            acc = self.W[i, i] * self.X[i]
            for j in self.neighbors[i]:
                acc = acc + self.W[i, j] * shared[j]
            X_new[i] = acc - self.stepsize * self.objective.grad(i, self.X[i])
        if not np.isfinite(X_new).all():
            raise DivergenceError("non-finite iterate after gossip step")
        self.X = X_new


class _ChocoEngine:
    """Error-feedback gossip baseline.

    X_i <- X_i - stepsize * grad f_i(X_i)
           + gossip * sum_j W_ij (Xhat_j - Xhat_i),
    followed by the same compressed surrogate tracking round the primal-dual
    method uses (messages encode X_i - Xhat_i at the new iterate).
    """

    lam = None

    def __init__(self, objective, graph, config: AlgorithmConfig):
        if config.stepsize is None or config.stepsize <= 0:
            raise ValueError("choco needs a positive stepsize")
        if config.gossip is None or not (0.0 < config.gossip <= 1.0):
            raise ValueError("choco needs gossip in (0, 1]")
        if config.compressor is None:
            raise ValueError("choco needs a compressor")
        self.objective = objective
        self.stepsize = config.stepsize
        self.gossip = config.gossip
        self.spec = config.compressor
        self.gamma = config.steps.gamma if config.steps is not None else 1.0
        self.W = metropolis_weights(graph)
        self.streams = _rng.RngStream(config.seed)
        self.state = init_state(objective, graph, config.init, self.streams)

        self.bits_agent = np.zeros(graph.n, dtype=np.int64)

    @property
    def X(self):
        return self.state.X

    @property
    def Xhat(self):
        return self.state.Xhat

    def step(self, t: int) -> None:
        state = self.state
        n, d = state.X.shape
        X_new = np.empty_like(state.X)
        for i in range(n):
            mix = np.zeros(d)
            for slot, j in enumerate(state.neighbors[i]):
                mix += self.W[i, j] * (state.copies[i][slot] - state.Xhat[i])
            X_new[i] = (
                state.X[i]
                - self.stepsize * self.objective.grad(i, state.X[i])
                + self.gossip * mix
            )
        if not np.isfinite(X_new).all():
            raise DivergenceError("non-finite iterate after gossip step")
        state.X = X_new
        msgs = surrogate_update(state, self.spec, self.gamma, self.streams, t - 1)
        aggregate_messages(state, msgs, self.gamma)
        for i in range(n):
            self.bits_agent[i] += state.degrees[i] * msgs[i].bit_length


# --------------------------------------------------------------------------
# driver

def _metrics_row(t, engine, objective, tracker, eval_data) -> MetricsRow:
    # Overflow in a metric of an exploding run is reported as divergence by
    # the driver, so the warnings numpy would emit here are redundant.
    with np.errstate(over="ignore", invalid="ignore"):
        X = engine.X
        x_bar = X.mean(axis=0)
        loss_max = max(objective.global_loss(X[i]) for i in range(objective.n))
        g = objective.global_grad(x_bar)
        lyap = None
        if tracker is not None and engine.lam is not None and engine.Xhat is not None:
            lyap = tracker.value(X, engine.lam, engine.Xhat)
        acc = None
        if eval_data is not None:
            acc = worst_agent_accuracy(X, objective, eval_data[0], eval_data[1])
        return MetricsRow(
            t=t,
            loss_max=float(loss_max),
            grad_norm_avg=float(g @ g),
            consensus_err=consensus_error(X),
            bits_cum=int(engine.bits_agent.sum()),
            lyapunov=lyap,
            test_acc=acc,
        )


def _row_is_finite(row: MetricsRow) -> bool:
    values = [row.loss_max, row.grad_norm_avg, row.consensus_err]
    if row.lyapunov is not None:
        values.append(row.lyapunov)
    return all(math.isfinite(v) for v in values)


def _build_engine(config: AlgorithmConfig, objective: Objective, graph: Graph):
    if config.algorithm == "ticopd":
        return _TicopdEngine(objective, graph, config)
    if config.algorithm == "exact_pd":
        return _ExactPdEngine(objective, graph, config)
    if config.algorithm == "dgd":
        return _DgdEngine(objective, graph, config, quantized=False)
    if config.algorithm == "dgd_quantized":
        return _DgdEngine(objective, graph, config, quantized=True)
    return _ChocoEngine(objective, graph, config)


def run(config: AlgorithmConfig, objective: Objective, graph: Graph, *,
        stride: int = 1, lyapunov_tracker=None, eval_data=None,
        config_snapshot: dict | None = None) -> RunRecord:
    """Execute one algorithm and collect metrics.

    Metrics are recorded at t = 0, every `stride` iterations, and at the
    final iteration.  A non-finite iterate truncates the record and flags
    the run as diverged instead of raising.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if config.compressor is not None and config.compressor.d != objective.d:
        raise ValueError(
            f"compressor dimension {config.compressor.d} != objective dimension {objective.d}"
        )
    engine = _build_engine(config, objective, graph)
    rows = [_metrics_row(0, engine, objective, lyapunov_tracker, eval_data)]
    status, diverged_at = "completed", None
    for t in range(1, config.T + 1):
        try:
            engine.step(t)
        except DivergenceError:
            status, diverged_at = "diverged", t
            break
        if t % stride == 0 or t == config.T:
            row = _metrics_row(t, engine, objective, lyapunov_tracker, eval_data)
            if not _row_is_finite(row):
                status, diverged_at = "diverged", t
                break
            rows.append(row)
    return RunRecord(
        config=config_snapshot or {},
        rows=rows,
        status=status,
        diverged_at=diverged_at,
        bits_per_agent=engine.bits_agent.copy(),
    )
