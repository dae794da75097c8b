"""Contractive compressors and their bit-exact wire codecs.

All compressors Q here satisfy the contraction property

.. math::

    E \\|Q(x; \\xi) - x\\|^2 \\le (1 - \\delta)^2 \\|x\\|^2,
    \\qquad \\delta \\in (0, 1],

with a certified delta reported by :func:`certified_delta`.  The simulator
never ships floats around informally: every transmitted vector goes through
:func:`encode` / :func:`decode`, and ``decode(encode(x)) == compress(x)``
holds bit-for-bit when both see the same random stream.  That identity is
what keeps sender-side and receiver-side surrogate copies synchronized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("qsgd", "topk", "randk", "identity")


class CodecError(ValueError):
    """Malformed or inconsistent encoded payload."""


@dataclass(frozen=True)
class CompressorSpec:
    """Compressor kind plus its parameters, bound to a fixed dimension d.

    kind    one of "qsgd", "topk", "randk", "identity"
    d       vector dimension the scheme operates on
    s       number of quantization levels (qsgd only), s >= 1
    k       number of kept coordinates (topk / randk only), 1 <= k <= d
    """

    kind: str
    d: int
    s: int | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown compressor kind {self.kind!r}")
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got d={self.d}")
        if self.kind == "qsgd":
            if self.s is None or int(self.s) < 1:
                raise ValueError(f"qsgd needs integer s >= 1, got s={self.s}")
            object.__setattr__(self, "s", int(self.s))
        elif self.kind in ("topk", "randk"):
            if self.k is None or not (1 <= int(self.k) <= self.d):
                raise ValueError(f"{self.kind} needs 1 <= k <= d, got k={self.k}, d={self.d}")
            object.__setattr__(self, "k", int(self.k))


def qsgd_tau(d: int, s: int) -> float:
    """Variance-normalization constant tau = 1 + min(d / s^2, sqrt(d) / s)."""
    return 1.0 + min(d / (s * s), math.sqrt(d) / s)


def certified_delta(spec: CompressorSpec) -> float:
    """Certified contraction parameter delta of the scheme.

    qsgd: 1 / (2 tau).  topk / randk: 1 - sqrt(1 - k/d).  identity: 1.
    """
    if spec.kind == "qsgd":
        return 1.0 / (2.0 * qsgd_tau(spec.d, spec.s))
    if spec.kind in ("topk", "randk"):
        return 1.0 - math.sqrt(1.0 - spec.k / spec.d)
    return 1.0


def _check_input(x: np.ndarray, spec: CompressorSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.d,):
        raise ValueError(f"expected shape ({spec.d},), got {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("input vector has non-finite entries")
    return x


# --------------------------------------------------------------------------
# qsgd quantizer
#
#   Q(x)_i = sign(x_i) * ||x|| / (s tau) * floor(s |x_i| / ||x|| + xi_i),
#
# xi_i ~ U[0,1).  The norm is rounded to float32 before use: it travels as a
# 32-bit field, and using the rounded value on both sides is what makes
# encode/decode an exact round trip.

def _qsgd_quantize(x: np.ndarray, s: int, rng: np.random.Generator):
    norm32 = np.float32(np.linalg.norm(x))
    if not np.isfinite(norm32):
        raise ValueError("vector norm overflows float32")
    xi = rng.random(x.shape[0])  # one draw per coordinate, always consumed
    if norm32 == 0.0:
        levels = np.zeros(x.shape[0], dtype=np.int64)
    else:
        u = s * np.abs(x) / float(norm32)
        levels = np.floor(u + xi).astype(np.int64)
        # Exact arithmetic gives levels <= s almost surely; float rounding of
        # the norm can push the top level one past s, so clamp.
        np.clip(levels, 0, s, out=levels)
    negative = x < 0.0
    return levels, negative, norm32


def _qsgd_reconstruct(levels, negative, norm32, d: int, s: int) -> np.ndarray:
    sign = np.where(negative, -1.0, 1.0)
    scale = float(norm32) / (s * qsgd_tau(d, s))
    return sign * scale * levels.astype(np.float64)


def qsgd_compress(x: np.ndarray, s: int, rng: np.random.Generator) -> np.ndarray:
    """Unbiased-up-to-tau stochastic quantizer; E[Q(x)] = x / tau."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("qsgd_compress expects a 1-d vector")
    if not np.isfinite(x).all():
        raise ValueError("input vector has non-finite entries")
    levels, negative, norm32 = _qsgd_quantize(x, int(s), rng)
    return _qsgd_reconstruct(levels, negative, norm32, x.shape[0], int(s))


# --------------------------------------------------------------------------
# sparsifiers

def _topk_indices(x: np.ndarray, k: int) -> np.ndarray:
    # Sort by descending magnitude, ties broken toward the lower index.
    order = np.lexsort((np.arange(x.shape[0]), -np.abs(x)))
    return np.sort(order[:k])


def _randk_indices(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.choice(d, size=k, replace=False))


def compress(x: np.ndarray, spec: CompressorSpec, rng: np.random.Generator) -> np.ndarray:
    """Apply the compressor to x, drawing any randomness from rng."""
    x = _check_input(x, spec)
    if spec.kind == "qsgd":
        levels, negative, norm32 = _qsgd_quantize(x, spec.s, rng)
        return _qsgd_reconstruct(levels, negative, norm32, spec.d, spec.s)
    if spec.kind == "topk":
        idx = _topk_indices(x, spec.k)
    elif spec.kind == "randk":
        idx = _randk_indices(spec.d, spec.k, rng)
    else:  # identity
        return x.copy()
    out = np.zeros(spec.d)
    out[idx] = x[idx]  # kept coordinates pass through unscaled
    return out


# --------------------------------------------------------------------------
# wire format
#
# qsgd payload, MSB-first within and across bytes:
#   [levels: d fields of ceil(log2(s+1)) bits] [signs: d bits, 1 = negative]
#   [norm: IEEE-754 float32, big-endian]
# topk/randk payload: [indices: k fields of ceil(log2 d) bits]
#   [values: k IEEE-754 float64, big-endian]
# identity payload: d IEEE-754 float64, big-endian.
#
# bit_length is the on-the-wire cost in bits under the accounting convention
# that a full-precision real costs 32 bits.  For qsgd it equals the physical
# payload length exactly; identity/topk/randk payloads physically carry
# float64 values (so decoding reproduces the compressed vector bit-exactly)
# while their bit_length still counts 32 bits per transmitted real.


@dataclass(frozen=True)
class EncodedMessage:
    """Immutable wire message: payload bytes, accounted bit length, scheme."""

    payload: bytes
    bit_length: int
    spec: CompressorSpec


def _level_width(s: int) -> int:
    return int(s).bit_length()  # == ceil(log2(s + 1)) for s >= 1


def _index_width(d: int) -> int:
    return int(d - 1).bit_length()  # == ceil(log2 d), 0 when d == 1


def _pack_fields(values: np.ndarray, width: int) -> np.ndarray:
    """Bit matrix (len(values) * width,) of MSB-first fixed-width fields."""
    if width == 0:
        return np.zeros(0, dtype=np.uint8)
    shifts = np.arange(width - 1, -1, -1)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _unpack_fields(bits: np.ndarray, count: int, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros(count, dtype=np.int64)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return bits.reshape(count, width).astype(np.int64) @ weights


def _float_bits(values: np.ndarray, dtype: str) -> np.ndarray:
    return np.unpackbits(np.frombuffer(np.ascontiguousarray(values, dtype=dtype).tobytes(), np.uint8))


def _bits_to_bytes(bits: np.ndarray) -> bytes:
    return np.packbits(bits).tobytes()


def qsgd_bit_length(d: int, s: int) -> int:
    """Exact payload size: d * ceil(log2(s+1)) + d + 32 bits."""
    return d * _level_width(s) + d + 32


def encode(x: np.ndarray, spec: CompressorSpec, rng: np.random.Generator) -> EncodedMessage:
    """Compress x and serialize the result into a wire message.

    The quantization randomness comes from rng, so encode() and compress()
    agree when opened on the same stream address.
    """
    x = _check_input(x, spec)
    if spec.kind == "qsgd":
        levels, negative, norm32 = _qsgd_quantize(x, spec.s, rng)
        bits = np.concatenate([
            _pack_fields(levels, _level_width(spec.s)),
            negative.astype(np.uint8),
            _float_bits(np.array([norm32]), ">f4"),
        ])
        return EncodedMessage(_bits_to_bytes(bits), qsgd_bit_length(spec.d, spec.s), spec)
    if spec.kind == "identity":
        payload = np.ascontiguousarray(x, dtype=">f8").tobytes()
        return EncodedMessage(payload, 32 * spec.d, spec)
    if spec.kind == "topk":
        idx = _topk_indices(x, spec.k)
    else:
        idx = _randk_indices(spec.d, spec.k, rng)
    w = _index_width(spec.d)
    bits = np.concatenate([
        _pack_fields(idx.astype(np.int64), w),
        _float_bits(x[idx], ">f8"),
    ])
    return EncodedMessage(_bits_to_bytes(bits), spec.k * (w + 32), spec)


def _physical_bits(spec: CompressorSpec) -> int:
    if spec.kind == "qsgd":
        return qsgd_bit_length(spec.d, spec.s)
    if spec.kind == "identity":
        return 64 * spec.d
    return spec.k * (_index_width(spec.d) + 64)


def decode(message: EncodedMessage) -> np.ndarray:
    """Reconstruct the compressed vector from a wire message, bit-exactly.

    Raises :class:`CodecError` on truncated payloads, nonzero padding, or
    field values outside the scheme's range.
    """
    spec = message.spec
    nbits = _physical_bits(spec)
    nbytes = (nbits + 7) // 8
    if len(message.payload) != nbytes:
        raise CodecError(
            f"payload has {len(message.payload)} bytes, expected {nbytes}"
        )
    bits = np.unpackbits(np.frombuffer(message.payload, np.uint8))
    if bits[nbits:].any():
        raise CodecError("nonzero padding bits")
    bits = bits[:nbits]

    if spec.kind == "identity":
        return np.frombuffer(message.payload, dtype=">f8").astype(np.float64)

    if spec.kind == "qsgd":
        w = _level_width(spec.s)
        levels = _unpack_fields(bits[: spec.d * w], spec.d, w)
        if levels.max(initial=0) > spec.s:
            raise CodecError(f"quantization level exceeds s={spec.s}")
        negative = bits[spec.d * w : spec.d * w + spec.d].astype(bool)
        norm32 = np.frombuffer(
            _bits_to_bytes(bits[spec.d * w + spec.d :]), dtype=">f4"
        )[0]
        if not np.isfinite(norm32) or norm32 < 0:
            raise CodecError("invalid norm field")
        return _qsgd_reconstruct(levels, negative, np.float32(norm32), spec.d, spec.s)

    # topk / randk
    w = _index_width(spec.d)
    idx = _unpack_fields(bits[: spec.k * w], spec.k, w)
    if idx.max(initial=0) >= spec.d:
        raise CodecError("index out of range")
    if spec.k > 1 and np.any(np.diff(idx) <= 0):
        raise CodecError("indices must be strictly increasing")
    values = np.frombuffer(_bits_to_bytes(bits[spec.k * w :]), dtype=">f8")
    out = np.zeros(spec.d)
    out[idx] = values.astype(np.float64)
    return out


# --------------------------------------------------------------------------
# statistical certificate

@dataclass(frozen=True)
class ContractionReport:
    """Monte-Carlo check of the contraction inequality on unit vectors."""

    spec: CompressorSpec
    trials: int
    empirical: float
    bound: float
    stderr: float
    passed: bool


def contraction_test(
    spec: CompressorSpec, trials: int, rng: np.random.Generator
) -> ContractionReport:
    """Estimate E||Q(x) - x||^2 over random unit vectors.

    Passes iff the empirical mean is at most (1 - delta)^2 plus three sample
    standard errors; a deterministic scheme must meet the bound outright.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    delta = certified_delta(spec)
    errs = np.empty(trials)
    for t in range(trials):
        v = rng.standard_normal(spec.d)
        nrm = np.linalg.norm(v)
        while nrm == 0.0:  # pragma: no cover - probability zero
            v = rng.standard_normal(spec.d)
            nrm = np.linalg.norm(v)
        v /= nrm
        q = compress(v, spec, rng)
        errs[t] = float(((q - v) ** 2).sum())
    empirical = float(errs.mean())
    stderr = float(errs.std(ddof=1) / math.sqrt(trials))
    bound = (1.0 - delta) ** 2
    return ContractionReport(
        spec=spec,
        trials=trials,
        empirical=empirical,
        bound=bound,
        stderr=stderr,
        passed=empirical <= bound + 3.0 * stderr,
    )
