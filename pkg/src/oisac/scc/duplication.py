"""Repetition coding for the velocity bytes.

The high nibble of each byte is sent five times per bit and the low nibble
three times. Copies are grouped (b0 b0 b0 b0 b0 b1 ...); ``interleave`` turns
that into the bit-adjacent round-robin order instead.
"""

from __future__ import annotations

import numpy as np

BYTE_REPEATS = (5, 5, 5, 5, 3, 3, 3, 3)
BLOCK_BITS = sum(BYTE_REPEATS)


def byte_to_bits(byte: int, width: int = 8) -> list[int]:
    if not 0 <= byte < (1 << width):
        raise ValueError(f"value {byte} does not fit in {width} bits")
    return [(byte >> (width - 1 - i)) & 1 for i in range(width)]


def bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def repeat_bits(bits, repeats) -> list[int]:
    out: list[int] = []
    for b, r in zip(bits, repeats, strict=True):
        out.extend([int(b)] * r)
    return out


def vote(block, repeats) -> tuple[list[int], list[int]]:
    """Majority vote over grouped repeats; returns (bits, votes_for - votes_against per bit)."""
    block = np.asarray(block, dtype=int)
    if block.size != sum(repeats):
        raise ValueError(f"expected {sum(repeats)} bits, got {block.size}")
    bits, margins = [], []
    start = 0
    for r in repeats:
        ones = int(block[start : start + r].sum())
        start += r
        bit = 1 if 2 * ones > r else 0
        bits.append(bit)
        # margin is counted in favour of the decided bit value
        margins.append(abs(2 * ones - r))
    return bits, margins


def expand_bits(byte: int) -> list[int]:
    return repeat_bits(byte_to_bits(byte), BYTE_REPEATS)


def collapse_bits(block) -> tuple[int, list[int]]:
    bits, margins = vote(block, BYTE_REPEATS)
    return bits_to_int(bits), margins


def interleave(bits, repeats) -> list[int]:
    """Reorder grouped repeats into round-robin order (first copies of all bits, then second copies...)."""
    groups, start = [], 0
    for r in repeats:
        groups.append(list(bits[start : start + r]))
        start += r
    out = []
    for k in range(max(repeats)):
        out.extend(g[k] for g in groups if k < len(g))
    return out
