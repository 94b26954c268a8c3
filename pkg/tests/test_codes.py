import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from udcs.codes import (BitReader, MalformedCodeword, StreamExhausted,
                        decode_delta_signed, decode_fixed, decode_gamma_plus,
                        delta_signed_length, delta_signed_length_array,
                        elias_delta_plus, elias_delta_signed, elias_gamma_plus,
                        fixed_binary, pack_bits, unpack_bits)


@pytest.mark.parametrize("k,bits", [(1, "1"), (2, "010"), (3, "011"), (4, "00100")])
def test_gamma(k, bits):
    assert elias_gamma_plus(k) == bits


@pytest.mark.parametrize("k,bits", [(1, "1"), (2, "0100"), (3, "0101"), (4, "01100")])
def test_delta_plus(k, bits):
    assert elias_delta_plus(k) == bits


@pytest.mark.parametrize("k,bits", [(0, "1"), (-1, "0101"), (1, "0100"), (2, "01100"), (3, "01110")])
def test_delta_signed(k, bits):
    assert elias_delta_signed(k) == bits


@pytest.mark.parametrize("k,n", [(0, 1), (-1, 4), (2, 5)])
def test_length_examples(k, n):
    assert delta_signed_length(k) == n


def test_domain_errors():
    for f in (elias_gamma_plus, elias_delta_plus):
        with pytest.raises(ValueError):
            f(0)
    with pytest.raises(ValueError):
        fixed_binary(4, 2)


def test_fixed():
    assert fixed_binary(3, 2) == "11"
    assert fixed_binary(3, 4) == "0011"
    assert fixed_binary(0, 0) == ""
    assert decode_fixed(BitReader("0011"), 4) == 3


def test_length_law_dense():
    # every |k| <= 1e5, scalar and vectorised forms
    ks = np.arange(-100_000, 100_001)
    emitted = np.array([len(elias_delta_signed(int(k))) for k in ks])
    assert np.array_equal(emitted, delta_signed_length_array(ks))
    assert all(delta_signed_length(int(k)) == e for k, e in zip(ks[::97], emitted[::97]))


@settings(max_examples=500)
@given(st.integers(-10**6, 10**6))
def test_roundtrip(k):
    w = elias_delta_signed(k)
    r = BitReader(w + "1011")
    assert decode_delta_signed(r) == k
    assert r.pos == len(w)


@settings(max_examples=300)
@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_prefix_free(a, b):
    if a == b:
        return
    x, y = elias_delta_signed(a), elias_delta_signed(b)
    assert not x.startswith(y) and not y.startswith(x)


def test_prefix_free_bulk(rng):
    a = rng.integers(-10**6, 10**6, 100_000)
    b = rng.integers(-10**6, 10**6, 100_000)
    for x, y in zip(a.tolist(), b.tolist()):
        if x != y:
            u, v = elias_delta_signed(x), elias_delta_signed(y)
            assert not u.startswith(v) and not v.startswith(u)


def test_kraft():
    ks = np.arange(-(2**20), 2**20 + 1)
    assert np.sum(np.exp2(-delta_signed_length_array(ks).astype(float))) <= 1.0


def test_reader_errors():
    with pytest.raises(StreamExhausted):
        decode_delta_signed(BitReader(""))
    with pytest.raises(StreamExhausted):
        decode_gamma_plus(BitReader("0001"))
    with pytest.raises(MalformedCodeword) as e:
        decode_gamma_plus(BitReader("0" * 70 + "1"))
    assert e.value.offset == 0
    r = BitReader("1")
    assert decode_gamma_plus(r) == 1 and r.at_end()
    with pytest.raises(ValueError):
        BitReader("012")


def test_delta_signed_consumes_exactly():
    r = BitReader("0101" + "1")
    assert decode_delta_signed(r) == -1 and r.pos == 4


@given(st.text(alphabet="01", max_size=80))
def test_pack_roundtrip(bits):
    data = pack_bits(bits)
    assert len(data) == (len(bits) + 7) // 8
    out = unpack_bits(data)
    assert out[: len(bits)] == bits and set(out[len(bits):]) <= {"0"}


def test_pack_fig2_triple():
    assert pack_bits("111" * 5) == bytes([0xFF, 0xFE])
