"""Bit <-> pixel-block modulation for the data matrix.

FFT mode carries one bit on the real part and one on the imaginary part of
each coefficient slot. Slots skip DC and the top quarter of the band in each
axis, are ordered low frequency first, and are mirrored so that the inverse
transform is real. DIRECT mode paints each bit as a dark (1) or light (0)
cell.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import CapacityExceeded

FFT = "fft"
DIRECT = "direct"
MODES = (FFT, DIRECT)
SLOT_TABLE_VERSION = 1


def _band_limit(n: int) -> int:
    # keep |k| < 3n/8
    return int(np.ceil(3 * n / 8)) - 1


@lru_cache(maxsize=None)
def slot_table(rows: int, cols: int) -> tuple[tuple[int, int], ...]:
    """Half-plane coefficient positions (ky, kx), lowest radial frequency first."""
    ry, rx = _band_limit(rows), _band_limit(cols)
    slots = []
    for ky in range(0, ry + 1):
        for kx in range(-rx, rx + 1):
            if ky == 0 and kx <= 0:
                continue
            slots.append((ky, kx))
    slots.sort(key=lambda k: (k[0] ** 2 + k[1] ** 2, k[0], k[1]))
    return tuple(slots)


def capacity(rows: int, cols: int, mode: str) -> int:
    if mode == FFT:
        return 2 * len(slot_table(rows, cols))
    if mode == DIRECT:
        return rows * cols
    raise ValueError(f"unknown modulation mode {mode!r}")


def spectrum(bits, rows: int, cols: int) -> np.ndarray:
    """Hermitian-symmetric coefficient grid carrying ``bits`` as +-1 on real/imag parts."""
    bits = np.asarray(bits, dtype=int)
    if bits.size > capacity(rows, cols, FFT):
        raise CapacityExceeded(f"{bits.size} bits exceed FFT capacity {capacity(rows, cols, FFT)}")
    X = np.zeros((rows, cols), dtype=complex)
    symbols = 2.0 * bits - 1.0
    if symbols.size % 2:
        symbols = np.append(symbols, 0.0)
    for i, (ky, kx) in enumerate(slot_table(rows, cols)[: symbols.size // 2]):
        c = complex(symbols[2 * i], symbols[2 * i + 1])
        X[ky % rows, kx % cols] = c
        X[-ky % rows, -kx % cols] = c.conjugate()
    return X


def _cell_means(block: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Average the central half of every cell (robust to resampling at cell borders)."""
    block = np.asarray(block, dtype=float)
    h, w = block.shape
    ch, cw = h / rows, w / cols
    ys = np.arange(rows) * ch
    xs = np.arange(cols) * cw
    if ch < 2 and cw < 2:
        if (h, w) != (rows, cols):
            raise ValueError("block is smaller than the symbol grid")
        return block
    out = np.empty((rows, cols))
    y0 = np.floor(ys + ch / 4).astype(int)
    y1 = np.maximum(np.ceil(ys + 3 * ch / 4).astype(int), y0 + 1)
    x0 = np.floor(xs + cw / 4).astype(int)
    x1 = np.maximum(np.ceil(xs + 3 * cw / 4).astype(int), x0 + 1)
    for i in range(rows):
        band = block[y0[i] : y1[i]]
        for j in range(cols):
            out[i, j] = band[:, x0[j] : x1[j]].mean()
    return out


def modulate(bits, rows: int, cols: int, mode: str = FFT, cell: int = 1) -> np.ndarray:
    """Map bits to a real (rows*cell, cols*cell) block with values in [0, 255]."""
    bits = np.asarray(bits, dtype=int)
    if bits.size > capacity(rows, cols, mode):
        raise CapacityExceeded(f"{bits.size} bits exceed {mode} capacity {capacity(rows, cols, mode)}")
    if mode == FFT:
        x = np.fft.ifft2(spectrum(bits, rows, cols)).real
        lo, hi = x.min(), x.max()
        grid = np.full((rows, cols), 127.5) if hi - lo < 1e-15 else (x - lo) * (255.0 / (hi - lo))
    else:
        flat = np.zeros(rows * cols)
        flat[: bits.size] = bits
        grid = np.where(flat.reshape(rows, cols) > 0, 0.0, 255.0)
    if cell > 1:
        grid = np.kron(grid, np.ones((cell, cell)))
    return grid


def demodulate(block, rows: int, cols: int, n_bits: int, mode: str = FFT) -> np.ndarray:
    """Invert ``modulate``; ``block`` may be any size that tiles into rows x cols cells."""
    if n_bits > capacity(rows, cols, mode):
        raise CapacityExceeded(f"{n_bits} bits exceed {mode} capacity {capacity(rows, cols, mode)}")
    grid = _cell_means(block, rows, cols)
    if mode == FFT:
        Y = np.fft.fft2(grid)
        slots = slot_table(rows, cols)[: (n_bits + 1) // 2]
        vals = np.array([Y[ky % rows, kx % cols] for ky, kx in slots])
        soft = np.column_stack([vals.real, vals.imag]).ravel()[:n_bits]
        return (soft > 0).astype(int)
    return (grid.ravel()[:n_bits] < 127.5).astype(int)


def demodulate_batch(blocks: np.ndarray, rows: int, cols: int, n_bits: int) -> np.ndarray:
    """Vectorized FFT-mode demodulation of a stack of (rows, cols) symbol grids."""
    Y = np.fft.fft2(np.asarray(blocks, dtype=float), axes=(-2, -1))
    slots = slot_table(rows, cols)[: (n_bits + 1) // 2]
    ky = np.array([k[0] % rows for k in slots])
    kx = np.array([k[1] % cols for k in slots])
    vals = Y[..., ky, kx]
    soft = np.stack([vals.real, vals.imag], axis=-1).reshape(*vals.shape[:-1], -1)[..., :n_bits]
    return (soft > 0).astype(int)
