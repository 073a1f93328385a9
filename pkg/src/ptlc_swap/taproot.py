"""Swap-bound key tweaking and the combined Taproot spend check.

The output key is the maker's base key tweaked by
``t = TagHash("TapTweak", P || m_swap)``, so ``P_tweak = P + tG`` and
``x_tweak = x + t``. A spend is accepted only if the completed signature
verifies under ``P_tweak``, the revealed unlocking value opens the hash
commitment (and matches the adaptor point), and the oracle signed an unlock
message carrying the same commitment. There is no script interpreter: these
checks are plain validation logic called by the chain simulator.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields

from .adaptor import PreSignature, check_commitment
from .group import DecodeError, Group, Point
from .oracle import UnlockMessage
from .schnorr import KeyPair, Signature, signing_secret, verify

ADDRESS_LEN = 20
SWAP_ID_LEN = 32

# field name -> byte width; commitment width comes from the group
_FIXED_WIDTHS = {
    "asset_amount_btc": 8,
    "asset_amount_eth": 32,
    "timeout_btc": 4,
    "timeout_eth": 8,
}


class NonceMismatch(ValueError):
    pass


def address_of(group: Group, P: Point, label: bytes = b"") -> bytes:
    """20-byte account/address identifier for a public key.

    ``label`` separates accounts of different roles; in the toy group there
    are only 23 keys, so unlabelled addresses would collide often.
    """
    data = b"PTLC/address" + len(label).to_bytes(1, "big") + label + group.encode_point(P)
    return hashlib.sha256(data).digest()[-ADDRESS_LEN:]


@dataclass(frozen=True)
class SwapMetadata:
    """Swap parameters bound into the output key.

    Every field has a fixed width, so concatenating the field encodings is
    already injective.
    """

    asset_amount_btc: int
    asset_amount_eth: int
    timeout_btc: int
    timeout_eth: int
    commitment: bytes
    btc_recipient: bytes
    swap_id: bytes

    def __post_init__(self):
        for name, width in _FIXED_WIDTHS.items():
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value < 1 << (8 * width):
                raise ValueError(f"{name} out of range for {width}-byte field")
        if len(self.btc_recipient) != ADDRESS_LEN:
            raise ValueError("btc_recipient must be a 20-byte address")
        if len(self.swap_id) != SWAP_ID_LEN:
            raise ValueError("swap_id must be 32 bytes")

    def field_chunks(self) -> list[bytes]:
        chunks = [getattr(self, n).to_bytes(w, "big") for n, w in _FIXED_WIDTHS.items()]
        return chunks + [self.commitment, self.btc_recipient, self.swap_id]

    def to_bytes(self) -> bytes:
        return b"".join(self.field_chunks())

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "SwapMetadata":
        widths = list(_FIXED_WIDTHS.values()) + [group.commitment_byte_len, ADDRESS_LEN, SWAP_ID_LEN]
        if len(data) != sum(widths):
            raise DecodeError("bad swap metadata length")
        values, pos = [], 0
        for i, w in enumerate(widths):
            chunk = data[pos : pos + w]
            values.append(int.from_bytes(chunk, "big") if i < len(_FIXED_WIDTHS) else bytes(chunk))
            pos += w
        return cls(*values)

    @classmethod
    def create(
        cls,
        *,
        asset_amount_btc: int,
        asset_amount_eth: int,
        timeout_btc: int,
        timeout_eth: int,
        commitment: bytes,
        btc_recipient: bytes,
        salt: bytes,
    ) -> "SwapMetadata":
        """Build metadata with ``swap_id`` derived from the other parameters."""
        body = (
            asset_amount_btc.to_bytes(8, "big")
            + asset_amount_eth.to_bytes(32, "big")
            + timeout_btc.to_bytes(4, "big")
            + timeout_eth.to_bytes(8, "big")
            + commitment
            + btc_recipient
        )
        swap_id = hashlib.sha256(b"PTLC/swap-id" + body + salt).digest()
        return cls(asset_amount_btc, asset_amount_eth, timeout_btc, timeout_eth,
                   commitment, btc_recipient, swap_id)

    @staticmethod
    def field_names() -> list[str]:
        return [f.name for f in fields(SwapMetadata)]


@dataclass(frozen=True)
class TweakedKeyPair:
    base: KeyPair
    tweak: int
    tweaked_secret: int
    tweaked_public: Point

    @property
    def keypair(self) -> KeyPair:
        return KeyPair(self.tweaked_secret, self.tweaked_public)


@dataclass(frozen=True)
class TaprootSpend:
    final_sig: Signature
    unlock_value: int
    oracle_sig: Signature
    oracle_msg: bytes


def derive_tweak(group: Group, P: Point, m_swap: SwapMetadata) -> int:
    return group.hash_to_scalar("TapTweak", [group.key_bytes(P), *m_swap.field_chunks()])


def tweak_public(group: Group, P: Point, t: int) -> Point:
    # x-only groups tweak the even-y lift, as BIP-341 does
    return group.point_add(group.lift_even(P), group.base_mul(t))


def tweak_keypair(group: Group, kp: KeyPair, m_swap: SwapMetadata) -> TweakedKeyPair:
    t = derive_tweak(group, kp.public, m_swap)
    return TweakedKeyPair(
        base=kp,
        tweak=t,
        tweaked_secret=group.scalar_add(signing_secret(group, kp), t),
        tweaked_public=tweak_public(group, kp.public, t),
    )


def spend_message(swap_id: bytes, value: int, recipient: bytes) -> bytes:
    """Digest of the simulated spend transaction (outpoint, value, payee)."""
    return hashlib.sha256(
        b"PTLC/spend" + swap_id + value.to_bytes(8, "big") + recipient
    ).digest()


def taproot_spend_checks(
    group: Group,
    spend: TaprootSpend,
    ps: PreSignature,
    P_tweak: Point,
    m: bytes,
    C: bytes,
    O: Point,
    swap_id: bytes | None = None,
) -> dict[str, bool]:
    """Evaluate the three spend conditions individually."""
    if spend.final_sig.nonce_point != ps.nonce_point:
        raise NonceMismatch("final signature nonce point differs from the pre-signature")
    results = {
        "final_signature": verify(group, spend.final_sig, P_tweak, m),
        "commitment": check_commitment(group, spend.unlock_value, C, ps.adaptor_point),
    }
    try:
        unlock = UnlockMessage.from_bytes(spend.oracle_msg)
        embeds = unlock.commitment == C and (swap_id is None or unlock.swap_id == swap_id)
    except DecodeError:
        embeds = False
    results["oracle_signature"] = embeds and verify(group, spend.oracle_sig, O, spend.oracle_msg)
    return results


def verify_taproot_spend(
    group: Group,
    spend: TaprootSpend,
    ps: PreSignature,
    P_tweak: Point,
    m: bytes,
    C: bytes,
    O: Point,
    swap_id: bytes | None = None,
) -> bool:
    return all(taproot_spend_checks(group, spend, ps, P_tweak, m, C, O, swap_id).values())
