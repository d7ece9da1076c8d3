"""Discrete-spectrum peak localization with sub-bin refinement."""

from __future__ import annotations

import numpy as np

__all__ = ["magnitude_spectrum", "interpolated_peaks"]


def magnitude_spectrum(x, fs: float, pad_factor: int = 4):
    """One-sided magnitude spectrum with zero padding for finer bin spacing."""
    x = np.asarray(x, dtype=float)
    nfft = int(len(x) * pad_factor)
    mag = np.abs(np.fft.rfft(x, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / fs)
    return freqs, mag


def interpolated_peaks(x, fs: float, n_peaks: int | None = None,
                       pad_factor: int = 4, dominance_ratio: float = 0.25,
                       floor_ratio: float = 1e-9):
    """Locate dominant spectral peaks of a real signal.

    Local maxima of the zero-padded magnitude spectrum are refined by
    parabolic interpolation on the log magnitude. Peaks below
    floor_ratio * max(spectrum) are treated as numerical noise; among the
    rest, only peaks within dominance_ratio of the strongest survive
    (unless n_peaks explicitly asks for the top n by magnitude).

    Returns a list of (frequency_hz, magnitude) in descending magnitude.
    """
    freqs, mag = magnitude_spectrum(x, fs, pad_factor)
    if len(mag) < 3:
        return []
    interior = (mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:])
    idx = np.where(interior)[0] + 1

    floor = floor_ratio * float(np.max(mag)) if np.max(mag) > 0 else 0.0
    idx = idx[mag[idx] > max(floor, 0.0)]
    if idx.size == 0:
        return []

    if n_peaks is not None:
        order = np.argsort(mag[idx])[::-1]
        idx = idx[order[:n_peaks]]
    else:
        keep = mag[idx] >= dominance_ratio * float(np.max(mag[idx]))
        idx = idx[keep]

    df = freqs[1] - freqs[0]
    out = []
    for i in sorted(int(v) for v in idx):
        lo, mid, hi = mag[i - 1], mag[i], mag[i + 1]
        if lo > 0 and hi > 0 and mid > 0:
            la, lb, lc = np.log(lo), np.log(mid), np.log(hi)
            denom = la - 2.0 * lb + lc
            off = 0.5 * (la - lc) / denom if denom != 0 else 0.0
            off = float(np.clip(off, -0.5, 0.5))
        else:
            off = 0.0
        out.append(((i + off) * df, float(mid)))
    out.sort(key=lambda p: -p[1])
    return out
