from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class QuantizerSpec:
    lo: float
    hi: float
    n_bits: int = 8

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("quantizer needs hi > lo")
        if self.n_bits < 1:
            raise ValueError("quantizer needs at least one bit")

    @property
    def levels(self) -> int:
        return 1 << self.n_bits

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.levels

    @property
    def error_bound(self) -> float:
        """Worst round-to-nearest error for interior values: (hi - lo) / 2^(n+1)."""
        return 0.5 * self.step


def quantize(value: float, spec: QuantizerSpec) -> int:
    code = math.floor((value - spec.lo) / spec.step + 0.5)
    return min(max(code, 0), spec.levels - 1)


def dequantize(code: int, spec: QuantizerSpec) -> float:
    return spec.lo + code * spec.step


def velocity_quantizers(v_max: float, omega_max: float, n_bits: int = 8) -> tuple[QuantizerSpec, QuantizerSpec]:
    """Linear speed over [0, v_max]; turn rate over the symmetric [-omega_max, omega_max]."""
    return QuantizerSpec(0.0, v_max, n_bits), QuantizerSpec(-omega_max, omega_max, n_bits)
