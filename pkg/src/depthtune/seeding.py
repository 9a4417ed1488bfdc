"""Stable child-seed derivation.

``derive_seed(master, "env")`` hashes the decimal/str forms of its arguments,
joined by ``"/"``, with BLAKE2b and returns the first 8 digest bytes read as
a little-endian unsigned integer. The result is identical across processes
and platforms, unlike Python's salted ``hash``.
"""

import hashlib


def derive_seed(*parts):
    key = "/".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")
