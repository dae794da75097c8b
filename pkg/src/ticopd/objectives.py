"""Per-agent smooth objectives, data partitioning, and dataset loading.

An objective is a collection of n smooth local losses f_i with analytic
gradients.  The global function is the average f(x) = (1/n) sum_i f_i(x);
algorithms consume the unnormalized per-agent gradients, metrics use the
average.
"""

from __future__ import annotations

import gzip
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from . import rng as _rng

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class Objective:
    """Base class: n local losses over a shared parameter vector in R^d."""

    kind = "base"
    n: int
    d: int
    L: float
    f_star: float | None = None

    def loss(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def global_loss(self, x: np.ndarray) -> float:
        """f(x) = (1/n) sum_i f_i(x)."""
        return sum(self.loss(i, x) for i in range(self.n)) / self.n

    def global_grad(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros(self.d)
        for i in range(self.n):
            g += self.grad(i, x)
        return g / self.n

    def accuracy(self, x: np.ndarray, features: np.ndarray, labels: np.ndarray) -> float:
        raise TypeError(f"{self.kind} objective does not classify")


class QuadraticConsensus(Objective):
    """f_i(x) = 0.5 ||x - c_i||^2 with per-agent targets c_i.

    The global minimizer is the mean target, so optimality and consensus
    error have closed forms; this is the workhorse for exactness tests.
    """

    kind = "quadratic"

    def __init__(self, centers: np.ndarray):
        centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError("centers must be an (n, d) array")
        self.centers = centers
        self.n, self.d = centers.shape
        self.L = 1.0
        self.x_star = centers.mean(axis=0)
        self.f_star = self.global_loss(self.x_star)

    def loss(self, i, x):
        r = x - self.centers[i]
        return 0.5 * float(r @ r)

    def grad(self, i, x):
        return x - self.centers[i]


def quadratic_consensus(centers: np.ndarray) -> QuadraticConsensus:
    return QuadraticConsensus(centers)


class LeastSquares(Objective):
    """f_i(x) = 0.5 ||A_i x - b_i||^2."""

    kind = "least_squares"

    def __init__(self, A_list, b_list):
        if len(A_list) != len(b_list) or not A_list:
            raise ValueError("need matching non-empty A and b lists")
        self.A = [np.atleast_2d(np.asarray(A, dtype=np.float64)) for A in A_list]
        self.b = [np.atleast_1d(np.asarray(b, dtype=np.float64)) for b in b_list]
        self.n = len(self.A)
        self.d = self.A[0].shape[1]
        for A, b in zip(self.A, self.b):
            if A.shape[1] != self.d or A.shape[0] != b.shape[0]:
                raise ValueError("inconsistent shapes across agents")
        self._AtA = [A.T @ A for A in self.A]
        self._Atb = [A.T @ b for A, b in zip(self.A, self.b)]
        self.L = max(float(np.linalg.eigvalsh(G)[-1]) for G in self._AtA)
        G = sum(self._AtA)
        h = sum(self._Atb)
        self.non_unique = int(np.linalg.matrix_rank(G)) < self.d
        self.x_star = np.linalg.lstsq(G, h, rcond=None)[0]
        self.f_star = self.global_loss(self.x_star)

    def loss(self, i, x):
        r = self.A[i] @ x - self.b[i]
        return 0.5 * float(r @ r)

    def grad(self, i, x):
        return self._AtA[i] @ x - self._Atb[i]


def least_squares(A_list, b_list) -> LeastSquares:
    return LeastSquares(A_list, b_list)


# --------------------------------------------------------------------------
# data partitioning

@dataclass(frozen=True)
class DataPartition:
    """Disjoint exact split of sample indices across agents."""

    indices: tuple[np.ndarray, ...]
    mode: str

    @property
    def n(self) -> int:
        return len(self.indices)


def partition_by_label(
    labels: np.ndarray, n: int, mode: str = "label_sorted", seed: int | None = None
) -> DataPartition:
    """Split sample indices across n agents.

    "label_sorted" stable-sorts by label and hands each agent a contiguous
    block of whole classes (maximally heterogeneous shards); it requires at
    least n distinct labels.  "shuffled" permutes with the given seed and
    splits near-equally (near-homogeneous shards).
    """
    labels = np.asarray(labels)
    N = labels.shape[0]
    if n < 1 or n > N:
        raise ValueError(f"cannot split {N} samples across {n} agents")
    if mode == "label_sorted":
        classes = np.unique(labels)
        if classes.shape[0] < n:
            raise ValueError(
                f"label_sorted needs >= {n} distinct labels, found {classes.shape[0]}"
            )
        order = np.argsort(labels, kind="stable")
        class_groups = np.array_split(classes, n)
        parts = []
        start = 0
        for group in class_groups:
            size = int(np.isin(labels, group).sum())
            parts.append(order[start : start + size].copy())
            start += size
        return DataPartition(indices=tuple(parts), mode=mode)
    if mode == "shuffled":
        gen = _rng.RngStream(0 if seed is None else seed).generator(_rng.PARTITION)
        order = gen.permutation(N)
        parts = tuple(p.copy() for p in np.array_split(order, n))
        return DataPartition(indices=parts, mode=mode)
    raise ValueError(f"unknown partition mode {mode!r}")


# --------------------------------------------------------------------------
# classification objectives

def _softmax(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _log_sum_exp(Z: np.ndarray) -> np.ndarray:
    m = Z.max(axis=1)
    return m + np.log(np.exp(Z - m[:, None]).sum(axis=1))


def _check_shards(features, labels, partition: DataPartition):
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValueError("features must be (N, p) aligned with labels")
    classes = np.unique(labels)
    C = int(classes.shape[0])
    if C < 2 or not np.array_equal(classes, np.arange(C)):
        raise ValueError("labels must be 0..C-1 with C >= 2")
    shards = []
    for idx in partition.indices:
        if idx.shape[0] == 0:
            raise ValueError("empty shard")
        shards.append((features[idx], labels[idx].astype(np.int64)))
    return shards, C


class Logistic(Objective):
    """L2-regularized logistic regression on sharded data.

    Two classes use the sigmoid parametrization (d = p); C > 2 classes use
    the softmax with a p x C weight matrix flattened row-major (d = p C).
    The smoothness bound is max_i lmax(F_i^T F_i) / (kappa m_i) + l2 with
    kappa = 4 for the binary case and kappa = 2 for the multiclass one.
    """

    kind = "logistic"

    def __init__(self, features, labels, partition: DataPartition, l2: float = 0.0):
        if l2 < 0:
            raise ValueError("l2 must be >= 0")
        self.shards, self.C = _check_shards(features, labels, partition)
        self.n = len(self.shards)
        p = self.shards[0][0].shape[1]
        self.p = p
        self.l2 = float(l2)
        self.binary = self.C == 2
        self.d = p if self.binary else p * self.C
        kappa = 4.0 if self.binary else 2.0
        self.L = (
            max(
                float(np.linalg.eigvalsh(F.T @ F)[-1]) / (kappa * F.shape[0])
                for F, _ in self.shards
            )
            + self.l2
        )

    def loss(self, i, x):
        F, y = self.shards[i]
        reg = 0.5 * self.l2 * float(x @ x)
        if self.binary:
            z = F @ x
            return float(np.mean(np.logaddexp(0.0, z) - y * z)) + reg
        Z = F @ x.reshape(self.p, self.C)
        return float(np.mean(_log_sum_exp(Z) - Z[np.arange(y.shape[0]), y])) + reg

    def grad(self, i, x):
        F, y = self.shards[i]
        m = F.shape[0]
        if self.binary:
            z = F @ x
            sig = 1.0 / (1.0 + np.exp(-z))
            return F.T @ (sig - y) / m + self.l2 * x
        P = _softmax(F @ x.reshape(self.p, self.C))
        P[np.arange(m), y] -= 1.0
        G = F.T @ P / m + self.l2 * x.reshape(self.p, self.C)
        return G.ravel()

    def accuracy(self, x, features, labels):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
        if self.binary:
            pred = (features @ x > 0).astype(np.int64)
        else:
            pred = np.argmax(features @ x.reshape(self.p, self.C), axis=1)
        return float(np.mean(pred == labels))


def logistic_regression(features, labels, partition, l2: float = 0.0) -> Logistic:
    return Logistic(features, labels, partition, l2)


class TwoLayerMlp(Objective):
    """Two-layer sigmoid network with softmax cross-entropy, hand-coded grads.

    Parameter layout: [W1 (p*h), b1 (h), W2 (h*C), b2 (C)], row-major.  This
    loss is nonconvex; no global smoothness constant exists, so L is a
    user-supplied working bound (default 10, with a warning).
    """

    kind = "mlp"

    def __init__(self, features, labels, partition: DataPartition, hidden: int,
                 L: float | None = None):
        if hidden < 1:
            raise ValueError("hidden width must be >= 1")
        self.shards, self.C = _check_shards(features, labels, partition)
        self.n = len(self.shards)
        self.p = self.shards[0][0].shape[1]
        self.h = int(hidden)
        self.d = self.p * self.h + self.h + self.h * self.C + self.C
        if L is None:
            warnings.warn(
                "no smoothness bound for the nonconvex MLP; using working value L=10",
                RuntimeWarning,
                stacklevel=3,
            )
            L = 10.0
        self.L = float(L)

    def _split(self, x):
        p, h, C = self.p, self.h, self.C
        o1, o2, o3 = p * h, p * h + h, p * h + h + h * C
        return (
            x[:o1].reshape(p, h),
            x[o1:o2],
            x[o2:o3].reshape(h, C),
            x[o3:],
        )

    def forward(self, x, features):
        """Hidden activations and class probabilities for given inputs."""
        W1, b1, W2, b2 = self._split(np.asarray(x, dtype=np.float64))
        hidden = 1.0 / (1.0 + np.exp(-(features @ W1 + b1)))
        probs = _softmax(hidden @ W2 + b2)
        return hidden, probs

    def loss(self, i, x):
        F, y = self.shards[i]
        W1, b1, W2, b2 = self._split(x)
        hidden = 1.0 / (1.0 + np.exp(-(F @ W1 + b1)))
        Z = hidden @ W2 + b2
        return float(np.mean(_log_sum_exp(Z) - Z[np.arange(y.shape[0]), y]))

    def grad(self, i, x):
        F, y = self.shards[i]
        m = F.shape[0]
        W1, b1, W2, b2 = self._split(x)
        hidden = 1.0 / (1.0 + np.exp(-(F @ W1 + b1)))
        P = _softmax(hidden @ W2 + b2)
        P[np.arange(m), y] -= 1.0
        P /= m
        dW2 = hidden.T @ P
        db2 = P.sum(axis=0)
        dH = P @ W2.T
        dZ1 = dH * hidden * (1.0 - hidden)
        dW1 = F.T @ dZ1
        db1 = dZ1.sum(axis=0)
        return np.concatenate([dW1.ravel(), db1, dW2.ravel(), db2])

    def accuracy(self, x, features, labels):
        _, probs = self.forward(x, np.asarray(features, dtype=np.float64))
        return float(np.mean(np.argmax(probs, axis=1) == np.asarray(labels)))


def two_layer_mlp(features, labels, partition, hidden: int, L: float | None = None) -> TwoLayerMlp:
    return TwoLayerMlp(features, labels, partition, hidden, L)


# --------------------------------------------------------------------------
# IDX dataset files

def _open_maybe_gz(path):
    return gzip.open(path, "rb") if str(path).endswith(".gz") else open(path, "rb")


def _parse_image_header(header: bytes):
    if len(header) < 16:
        raise ValueError("image file truncated before header end")
    magic, count, rows, cols = struct.unpack(">IIII", header[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise ValueError(f"bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    return count, rows, cols


def _parse_label_header(header: bytes):
    if len(header) < 8:
        raise ValueError("label file truncated before header end")
    magic, count = struct.unpack(">II", header[:8])
    if magic != IDX_LABEL_MAGIC:
        raise ValueError(f"bad label magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}")
    return count


def load_idx(images_path, labels_path):
    """Read an IDX image/label file pair.

    Returns (features, labels): features are flattened rows*cols vectors
    scaled to [0, 1] by dividing raw bytes by 255, labels are int64.  Both
    big-endian headers are validated (magic, counts, payload sizes) and the
    two counts must agree.
    """
    with _open_maybe_gz(images_path) as f:
        data = f.read()
    count, rows, cols = _parse_image_header(data)
    want = 16 + count * rows * cols
    if len(data) != want:
        raise ValueError(f"image file has {len(data)} bytes, expected {want}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16)
    features = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0

    with _open_maybe_gz(labels_path) as f:
        data = f.read()
    lcount = _parse_label_header(data)
    if len(data) != 8 + lcount:
        raise ValueError(f"label file has {len(data)} bytes, expected {8 + lcount}")
    labels = np.frombuffer(data, dtype=np.uint8, offset=8).astype(np.int64)

    if lcount != count:
        raise ValueError(f"count mismatch: {count} images vs {lcount} labels")
    return features, labels


def synthetic_blobs(classes: int, dim: int, train: int, test: int, seed: int,
                    separation: float = 3.0, noise: float = 1.0):
    """Seeded Gaussian class clusters standing in for an on-disk dataset.

    Returns (train_features, train_labels, test_features, test_labels) with
    labels cycling 0..classes-1, so any split of >= classes samples sees
    every class.
    """
    if classes < 2 or dim < 1 or train < classes or test < 0:
        raise ValueError("need classes >= 2, dim >= 1, train >= classes, test >= 0")
    gen = _rng.RngStream(seed).generator(_rng.DATA)
    scale = 1.0 / np.sqrt(dim)
    means = separation * scale * gen.standard_normal((classes, dim))
    ytr = np.arange(train, dtype=np.int64) % classes
    Xtr = means[ytr] + noise * scale * gen.standard_normal((train, dim))
    yte = np.arange(test, dtype=np.int64) % classes
    Xte = means[yte] + noise * scale * gen.standard_normal((test, dim))
    return Xtr, ytr, Xte, yte


# --------------------------------------------------------------------------
# self-checks used by the CLI and tests

def gradient_check(objective: Objective, trials: int = 20, step: float = 1e-6,
                   seed: int = 0) -> float:
    """Max relative error of analytic directional derivatives vs central
    finite differences over random (agent, point, direction) triples."""
    gen = _rng.RngStream(seed).generator(_rng.CHECK)
    worst = 0.0
    for _ in range(trials):
        i = int(gen.integers(objective.n))
        x = gen.standard_normal(objective.d)
        u = gen.standard_normal(objective.d)
        u /= np.linalg.norm(u)
        fd = (objective.loss(i, x + step * u) - objective.loss(i, x - step * u)) / (2 * step)
        an = float(objective.grad(i, x) @ u)
        worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    return worst


def smoothness_check(objective: Objective, pairs: int = 100, seed: int = 0) -> float:
    """Max of ||grad f_i(x) - grad f_i(y)|| / (L ||x - y||) over random pairs."""
    gen = _rng.RngStream(seed).generator(_rng.CHECK)
    worst = 0.0
    for _ in range(pairs):
        i = int(gen.integers(objective.n))
        x = gen.standard_normal(objective.d)
        y = x + gen.standard_normal(objective.d) * 10.0 ** gen.integers(-3, 1)
        gap = np.linalg.norm(objective.grad(i, x) - objective.grad(i, y))
        worst = max(worst, float(gap / (objective.L * np.linalg.norm(x - y))))
    return worst


def gradient_dispersion(objective: Objective, x: np.ndarray) -> float:
    """sum_i ||grad f_i(x) - mean_j grad f_j(x)||^2, a heterogeneity gauge."""
    grads = np.stack([objective.grad(i, x) for i in range(objective.n)])
    gbar = grads.mean(axis=0)
    return float(((grads - gbar) ** 2).sum())
