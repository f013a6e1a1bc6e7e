"""Deterministic seed derivation shared by every stochastic operation.

All randomness in the package flows through 64-bit seeds produced by
``derive_seed``. Independent sub-streams are derived by mixing context
parts (record index, source signature, stage name, ...) into the master
seed, so results never depend on iteration order, worker count, or the
process hash seed.
"""

import hashlib


def derive_seed(*parts) -> int:
    """Mix arbitrary context parts into a stable 64-bit seed.

    Parts are hashed via their repr, so ints, strings, and tuples of
    those are all fine. blake2b keeps the mix stable across processes
    and platforms (unlike the built-in salted hash()).
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")
