import hashlib


def derive_seed(master_seed: int, index: int, role: str) -> int:
    """Stable 63-bit seed for the stream ``role`` of replicate ``index``.

    SHA-256 of a fixed text encoding, so results do not depend on Python's
    hash randomization or platform.
    """
    text = f"{int(master_seed)}:{int(index)}:{role}".encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "big") >> 1
