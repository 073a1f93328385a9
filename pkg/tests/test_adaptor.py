import pytest
from hypothesis import given, settings, strategies as st

import oracles
from ptlc_swap.adaptor import (
    ExtractionError,
    PreSignature,
    check_commitment,
    commit_secret,
    complete,
    extract_secret,
    presign,
    verify_presignature,
)
from ptlc_swap.group import SECP256K1, TOY
from ptlc_swap.schnorr import Signature, keygen, keypair_from_secret, sign_with_nonce, verify

M3 = b"\x03"


def toy_example() -> PreSignature:
    return presign(TOY, keypair_from_secret(TOY, 5), M3, 4, nonce=7)


@pytest.mark.parametrize("s_a, C", [(4, 8), (19, 0)])
def test_toy_commitments(s_a, C):
    assert commit_secret(TOY, s_a) == bytes([C])
    assert commit_secret(TOY, s_a) == commit_secret(TOY, s_a)


def test_zero_secret_rejected(group):
    with pytest.raises(ValueError):
        commit_secret(group, 0)


def test_toy_presign_example():
    ps = toy_example()
    assert oracles.toy_presign(5, 7, 3, 4) == (7, 14, 4, 8)
    assert (ps.nonce_point, ps.partial, ps.adaptor_point, ps.commitment) == (7, 14, 4, bytes([8]))
    # the bare pre-signature is not a valid signature
    assert not verify(TOY, Signature(7, 14), 5, M3)


def test_toy_verify_presignature_examples():
    assert verify_presignature(TOY, PreSignature(7, 14, 4, bytes([8])), 5, M3)
    assert not verify_presignature(TOY, PreSignature(7, 13, 4, bytes([8])), 5, M3)


def test_identity_adaptor_point_limit(group):
    kp = keygen(group, b"k")
    sig = sign_with_nonce(group, kp, b"m", 11)
    ps = PreSignature(sig.nonce_point, sig.scalar, group.identity, b"")
    assert verify_presignature(group, ps, kp.public, b"m")


def test_toy_complete_examples():
    ps = toy_example()
    good = complete(TOY, ps, 4)
    assert good.scalar == 18 and verify(TOY, good, 5, M3)
    bad = complete(TOY, ps, 5)
    assert bad.scalar == 19 and not verify(TOY, bad, 5, M3)
    assert complete(TOY, ps, 0).scalar == ps.partial


@pytest.mark.parametrize("s_final, s_star, s_a", [(18, 14, 4), (3, 20, 6)])
def test_toy_extract(s_final, s_star, s_a):
    ps = PreSignature(7, s_star, s_a, commit_secret(TOY, s_a))
    assert extract_secret(TOY, Signature(7, s_final), ps) == s_a


def test_extract_requires_same_nonce(group):
    kp = keygen(group, b"k")
    ps = presign(group, kp, b"m", 5, nonce=9)
    with pytest.raises(ExtractionError):
        extract_secret(group, Signature(group.base_mul(10), 1), ps)


def test_toy_check_commitment():
    assert check_commitment(TOY, 4, bytes([8]), 4)
    assert not check_commitment(TOY, 5, bytes([8]), 4)
    assert not check_commitment(TOY, 4, bytes([8]), 5)


def test_toy_exhaustive_adaptor_algebra():
    for x in range(1, 23):
        kp = keypair_from_secret(TOY, x)
        for k in range(1, 23):
            for s_a in range(1, 23):
                ps = presign(TOY, kp, M3, s_a, nonce=k)
                assert (ps.nonce_point, ps.partial) == oracles.toy_presign(x, k, 3, s_a)[:2]
                assert verify_presignature(TOY, ps, kp.public, M3)
                final = complete(TOY, ps, s_a)
                assert verify(TOY, final, kp.public, M3)
                assert extract_secret(TOY, final, ps) == s_a


def test_toy_every_wrong_delta_fails():
    kp = keypair_from_secret(TOY, 5)
    for s_a in range(1, 23):
        ps = presign(TOY, kp, M3, s_a, nonce=7)
        for d in range(23):
            assert verify(TOY, complete(TOY, ps, d), 5, M3) == (d == s_a)


@settings(max_examples=40, deadline=None)
@given(st.binary(min_size=1, max_size=16), st.integers(1, SECP256K1.q - 1), st.binary(max_size=40))
def test_secp_round_trip(seed, s_a, m):
    g = SECP256K1
    kp = keygen(g, seed)
    ps = presign(g, kp, m, s_a)
    assert verify_presignature(g, ps, kp.public, m)
    final = complete(g, ps, s_a)
    assert verify(g, final, kp.public, m)
    assert extract_secret(g, final, ps) == s_a
    assert check_commitment(g, s_a, ps.commitment, ps.adaptor_point)
    assert not verify(g, complete(g, ps, (s_a + 1) % g.q), kp.public, m)


def test_presignature_bytes_round_trip(group):
    ps = presign(group, keygen(group, b"k"), b"m", 3)
    assert PreSignature.from_bytes(group, ps.to_bytes(group)) == ps
