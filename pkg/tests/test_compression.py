import numpy as np
import pytest

from ticopd.compression import (
    CodecError,
    CompressorSpec,
    certified_delta,
    compress,
    contraction_test,
    decode,
    encode,
    qsgd_bit_length,
    qsgd_tau,
)
from ticopd.rng import CHECK, RngStream


def gen(seed=0):
    return RngStream(seed).generator(CHECK)


def test_spec_validation():
    with pytest.raises(ValueError):
        CompressorSpec(kind="qsgd", d=4)  # missing s
    with pytest.raises(ValueError):
        CompressorSpec(kind="qsgd", d=4, s=0)
    with pytest.raises(ValueError):
        CompressorSpec(kind="topk", d=4, k=5)
    with pytest.raises(ValueError):
        CompressorSpec(kind="randk", d=4, k=0)
    with pytest.raises(ValueError):
        CompressorSpec(kind="huffman", d=4)
    CompressorSpec(kind="identity", d=4)


def test_qsgd_tau_values():
    # tau = 1 + min(d / s^2, sqrt(d) / s)
    assert qsgd_tau(1, 1) == 2.0
    assert qsgd_tau(16, 4) == pytest.approx(2.0)
    assert qsgd_tau(16, 1) == pytest.approx(5.0)  # min(16, 4) = 4
    assert qsgd_tau(256, 4) == pytest.approx(5.0)  # min(16, 4) = 4


def test_certified_deltas():
    assert certified_delta(CompressorSpec(kind="identity", d=8)) == 1.0
    assert certified_delta(CompressorSpec(kind="qsgd", d=1, s=1)) == pytest.approx(0.25)
    # sparsifiers: 1 - sqrt(1 - k/d)
    assert certified_delta(CompressorSpec(kind="topk", d=2, k=1)) == pytest.approx(
        1.0 - np.sqrt(0.5)
    )
    assert certified_delta(CompressorSpec(kind="randk", d=4, k=1)) == pytest.approx(
        1.0 - np.sqrt(0.75)
    )


def test_qsgd_single_coordinate_value():
    # d=1, s=1: norm 3, level 1, reconstruction 3 / (1 * tau) with tau = 2.
    spec = CompressorSpec(kind="qsgd", d=1, s=1)
    q = compress(np.array([3.0]), spec, gen())
    assert q[0] == pytest.approx(1.5)
    q = compress(np.array([-3.0]), spec, gen())
    assert q[0] == pytest.approx(-1.5)


def test_qsgd_zero_vector():
    spec = CompressorSpec(kind="qsgd", d=5, s=4)
    q = compress(np.zeros(5), spec, gen())
    np.testing.assert_array_equal(q, np.zeros(5))


def test_qsgd_unbiased_up_to_tau():
    # E[Q(x)] = x / tau, so tau * mean(Q) should approach x.
    spec = CompressorSpec(kind="qsgd", d=8, s=2)
    tau = qsgd_tau(8, 2)
    x = gen(1).standard_normal(8)
    g = gen(2)
    acc = np.zeros(8)
    trials = 20000
    for _ in range(trials):
        acc += compress(x, spec, g)
    np.testing.assert_allclose(tau * acc / trials, x, atol=0.02)


def test_qsgd_rejects_nonfinite():
    spec = CompressorSpec(kind="qsgd", d=2, s=1)
    with pytest.raises(ValueError):
        compress(np.array([1.0, np.inf]), spec, gen())
    with pytest.raises(ValueError):
        compress(np.array([np.nan, 0.0]), spec, gen())


def test_topk_tie_breaks_to_lowest_index():
    spec = CompressorSpec(kind="topk", d=2, k=1)
    q = compress(np.array([1.0, 1.0]), spec, gen())
    np.testing.assert_array_equal(q, np.array([1.0, 0.0]))


def test_topk_boundary_error_is_half():
    # d=2, k=1, equal magnitudes: squared error is exactly half the energy.
    spec = CompressorSpec(kind="topk", d=2, k=1)
    x = np.array([1.0, -1.0])
    q = compress(x, spec, gen())
    err = float(((q - x) ** 2).sum()) / float((x**2).sum())
    assert err == 0.5


def test_topk_keeps_exact_values():
    spec = CompressorSpec(kind="topk", d=6, k=2)
    x = np.array([0.1, -5.0, 2.0, 0.0, 4.9999, -0.2])
    q = compress(x, spec, gen())
    np.testing.assert_array_equal(q, np.array([0.0, -5.0, 0.0, 0.0, 4.9999, 0.0]))


def test_randk_selection_is_stream_determined():
    spec = CompressorSpec(kind="randk", d=10, k=3)
    x = gen(3).standard_normal(10)
    a = compress(x, spec, RngStream(7).generator(CHECK))
    b = compress(x, spec, RngStream(7).generator(CHECK))
    np.testing.assert_array_equal(a, b)
    assert int((a != 0).sum()) == 3


def test_identity_returns_copy():
    spec = CompressorSpec(kind="identity", d=3)
    x = np.array([1.0, 2.0, 3.0])
    q = compress(x, spec, gen())
    np.testing.assert_array_equal(q, x)
    q[0] = 99.0
    assert x[0] == 1.0


# ---------------------------------------------------------------------------
# wire format


def test_qsgd_bit_length_examples():
    # d * ceil(log2(s+1)) level bits + d sign bits + 32 norm bits
    assert qsgd_bit_length(1, 1) == 34
    assert qsgd_bit_length(4, 3) == 44
    assert qsgd_bit_length(100, 4) == 432
    assert qsgd_bit_length(16, 4) == 16 * 3 + 16 + 32


def test_encode_bit_lengths():
    x = gen(4).standard_normal(16)
    m = encode(x, CompressorSpec(kind="qsgd", d=16, s=4), gen())
    assert m.bit_length == qsgd_bit_length(16, 4)
    m = encode(x, CompressorSpec(kind="identity", d=16), gen())
    assert m.bit_length == 32 * 16  # accounting convention: 32 bits per real
    m = encode(x, CompressorSpec(kind="topk", d=16, k=4), gen())
    assert m.bit_length == 4 * (4 + 32)  # ceil(log2 16) = 4 index bits + value
    m = encode(x, CompressorSpec(kind="randk", d=16, k=4), gen())
    assert m.bit_length == 4 * (4 + 32)


def test_payload_sizes_match_bit_lengths():
    x = gen(5).standard_normal(16)
    m = encode(x, CompressorSpec(kind="qsgd", d=16, s=4), gen())
    assert len(m.payload) == (m.bit_length + 7) // 8


def test_roundtrip_equals_compress_bitwise():
    specs = [
        CompressorSpec(kind="qsgd", d=16, s=1),
        CompressorSpec(kind="qsgd", d=16, s=4),
        CompressorSpec(kind="qsgd", d=7, s=5),
        CompressorSpec(kind="topk", d=16, k=4),
        CompressorSpec(kind="randk", d=16, k=4),
        CompressorSpec(kind="identity", d=16),
    ]
    for spec in specs:
        for trial in range(50):
            x = gen(100 + trial).standard_normal(spec.d) * 10.0
            via_codec = decode(encode(x, spec, RngStream(trial).generator(CHECK)))
            direct = compress(x, spec, RngStream(trial).generator(CHECK))
            assert np.array_equal(via_codec, direct), (spec.kind, trial)


def test_decode_rejects_wrong_length():
    spec = CompressorSpec(kind="qsgd", d=4, s=3)
    m = encode(np.ones(4), spec, gen())
    bad = type(m)(payload=m.payload + b"\x00", bit_length=m.bit_length, spec=m.spec)
    with pytest.raises(CodecError):
        decode(bad)


def test_decode_rejects_nonzero_padding():
    spec = CompressorSpec(kind="qsgd", d=1, s=1)
    m = encode(np.array([2.0]), spec, gen())
    # 34 bits -> 5 bytes with 6 padding bits; set the last one.
    tampered = m.payload[:-1] + bytes([m.payload[-1] | 0x01])
    bad = type(m)(payload=tampered, bit_length=m.bit_length, spec=m.spec)
    with pytest.raises(CodecError):
        decode(bad)


def test_decode_rejects_level_overflow():
    spec = CompressorSpec(kind="qsgd", d=4, s=2)
    m = encode(np.ones(4), spec, gen())
    # level width is 2 bits; force the first field to 3 > s = 2.
    tampered = bytes([m.payload[0] | 0xC0]) + m.payload[1:]
    bad = type(m)(payload=tampered, bit_length=m.bit_length, spec=m.spec)
    with pytest.raises(CodecError):
        decode(bad)


def test_decode_rejects_unsorted_indices():
    spec = CompressorSpec(kind="topk", d=4, k=2)
    m = encode(np.array([1.0, 2.0, 3.0, 4.0]), spec, gen())
    # indices are 2 and 3; rewriting both index fields to 0 duplicates them.
    tampered = bytes([0x00]) + m.payload[1:]
    bad = type(m)(payload=tampered, bit_length=m.bit_length, spec=m.spec)
    with pytest.raises(CodecError):
        decode(bad)


def test_messages_are_deterministic_bytes():
    spec = CompressorSpec(kind="qsgd", d=32, s=4)
    x = gen(9).standard_normal(32)
    a = encode(x, spec, RngStream(5).generator(CHECK))
    b = encode(x, spec, RngStream(5).generator(CHECK))
    assert a.payload == b.payload and a.bit_length == b.bit_length


# ---------------------------------------------------------------------------
# contraction


def test_contraction_qsgd_passes():
    spec = CompressorSpec(kind="qsgd", d=16, s=4)
    report = contraction_test(spec, 2000, gen(11))
    assert report.passed
    assert report.empirical <= report.bound + 3 * report.stderr


def test_contraction_identity_is_exact():
    spec = CompressorSpec(kind="identity", d=8)
    report = contraction_test(spec, 100, gen(12))
    assert report.passed
    assert report.empirical == 0.0


def test_contraction_topk_has_zero_variance_at_boundary():
    # d=2, k=1 on unit vectors: worst case is exactly the bound.
    spec = CompressorSpec(kind="topk", d=2, k=1)
    report = contraction_test(spec, 500, gen(13))
    assert report.passed
    delta = certified_delta(spec)
    assert report.bound == pytest.approx((1.0 - delta) ** 2)
    assert report.empirical <= report.bound + 1e-12
