"""Known-answer vectors for the signature, adaptor and tweak primitives.

One JSON object per line::

    {"profile": "toy", "op": "sign", "inputs": {...}, "expected": {...}}

Byte strings, points and scalars are hex in their group encoding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .adaptor import PreSignature, commit_secret, complete, extract_secret, presign, verify_presignature
from .group import Group, get_group
from .schnorr import Signature, keypair_from_secret, sign_with_nonce, verify
from .taproot import SwapMetadata, tweak_keypair

OPS = ("sign", "presign", "complete", "extract", "tweak")


def _h(b: bytes) -> str:
    return b.hex()


def _scalar(g: Group, hexstr: str) -> int:
    return g.decode_scalar(bytes.fromhex(hexstr))


def _point(g: Group, hexstr: str):
    return g.decode_point(bytes.fromhex(hexstr))


def compute(profile: str, op: str, inputs: dict) -> dict:
    """Evaluate one vector's operation from its inputs."""
    g = get_group(profile)
    es, ep = g.encode_scalar, g.encode_point
    if op == "sign":
        kp = keypair_from_secret(g, _scalar(g, inputs["secret"]))
        m = bytes.fromhex(inputs["message"])
        sig = sign_with_nonce(g, kp, m, _scalar(g, inputs["nonce"]))
        return {"public": _h(ep(kp.public)), "R": _h(ep(sig.nonce_point)), "s": _h(es(sig.scalar)),
                "valid": verify(g, sig, kp.public, m)}
    if op == "presign":
        kp = keypair_from_secret(g, _scalar(g, inputs["secret"]))
        m = bytes.fromhex(inputs["message"])
        ps = presign(g, kp, m, _scalar(g, inputs["adaptor_secret"]), nonce=_scalar(g, inputs["nonce"]))
        return {"R": _h(ep(ps.nonce_point)), "s_star": _h(es(ps.partial)),
                "adaptor_point": _h(ep(ps.adaptor_point)), "commitment": _h(ps.commitment),
                "valid": verify_presignature(g, ps, kp.public, m)}
    if op == "complete":
        ps = PreSignature.from_bytes(g, bytes.fromhex(inputs["presignature"]))
        sig = complete(g, ps, _scalar(g, inputs["unlock_value"]))
        return {"R": _h(ep(sig.nonce_point)), "s": _h(es(sig.scalar))}
    if op == "extract":
        ps = PreSignature.from_bytes(g, bytes.fromhex(inputs["presignature"]))
        sig = Signature.from_bytes(g, bytes.fromhex(inputs["signature"]))
        return {"adaptor_secret": _h(es(extract_secret(g, sig, ps)))}
    if op == "tweak":
        kp = keypair_from_secret(g, _scalar(g, inputs["secret"]))
        md = SwapMetadata.from_bytes(g, bytes.fromhex(inputs["metadata"]))
        tk = tweak_keypair(g, kp, md)
        return {"tweak": _h(es(tk.tweak)), "tweaked_public": _h(ep(tk.tweaked_public)),
                "tweaked_secret": _h(es(tk.tweaked_secret))}
    raise ValueError(f"unknown op {op!r}")


def _scalars(g: Group, label: str, n: int) -> list[int]:
    return [g.random_scalar(f"vectors/{g.name}/{label}/{i}".encode()) for i in range(n)]


def generate(profiles=("toy", "secp256k1"), per_op: int = 4) -> list[dict]:
    records = []

    def add(profile, op, inputs):
        records.append({"profile": profile, "op": op, "inputs": inputs,
                        "expected": compute(profile, op, inputs)})

    for profile in profiles:
        g = get_group(profile)
        es = g.encode_scalar
        xs, ks, sas = _scalars(g, "x", per_op), _scalars(g, "k", per_op), _scalars(g, "sa", per_op)
        for i in range(per_op):
            m = hashlib.sha256(f"vector message {i}".encode()).digest()
            x, k, s_a = xs[i], ks[i], sas[i]
            add(profile, "sign", {"secret": _h(es(x)), "nonce": _h(es(k)), "message": _h(m)})
            add(profile, "presign", {"secret": _h(es(x)), "nonce": _h(es(k)), "message": _h(m),
                                     "adaptor_secret": _h(es(s_a))})
            ps = presign(g, keypair_from_secret(g, x), m, s_a, nonce=k)
            add(profile, "complete", {"presignature": _h(ps.to_bytes(g)), "unlock_value": _h(es(s_a))})
            final = complete(g, ps, s_a)
            add(profile, "extract", {"presignature": _h(ps.to_bytes(g)),
                                     "signature": _h(final.to_bytes(g))})
            md = SwapMetadata.create(
                asset_amount_btc=1000 * (i + 1), asset_amount_eth=10**6 * (i + 1),
                timeout_btc=12 + i, timeout_eth=14_400, commitment=commit_secret(g, s_a),
                btc_recipient=hashlib.sha256(b"recipient" + bytes([i])).digest()[:20],
                salt=bytes([i]),
            )
            add(profile, "tweak", {"secret": _h(es(x)), "metadata": _h(md.to_bytes())})
    return records


def write(path, records: list[dict]) -> None:
    Path(path).write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))


@dataclass
class VerifyReport:
    total: int
    failures: list[tuple[int, str]]

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_file(path) -> VerifyReport:
    """Recompute every vector; failures are ``(line_number, reason)``."""
    failures, total = [], 0
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        total += 1
        try:
            rec = json.loads(line)
            got = compute(rec["profile"], rec["op"], rec["inputs"])
        except (ValueError, KeyError, TypeError) as exc:
            failures.append((lineno, f"unreadable vector: {exc}"))
            continue
        bad = [k for k, v in rec["expected"].items() if got.get(k) != v]
        if bad:
            failures.append((lineno, f"{rec['op']} mismatch in {', '.join(bad)}"))
    return VerifyReport(total, failures)
