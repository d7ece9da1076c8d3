"""Local spatial-frequency estimation via a lognormal quadrature filter bank.

The bank covers the admissible wavenumber range with octave-spaced
lognormal radial profiles, split into signed-axis direction sectors whose
squared-cosine weights sum to one over the sphere. For a locally plane
wave of spatial frequency nu, the ratio of magnitude responses of two
adjacent filters depends only on nu, so inverting the ratio per voxel and
averaging pairs with amplitude weights estimates nu(x) independent of
wave direction and of any global scaling of the input.

A mild Tukey taper is applied before the FFT: the ratio estimator is
insensitive to slowly varying amplitude, while the taper suppresses the
box-truncation leakage that otherwise biases mid-band estimates by tens
of percent (measured on synthetic plane waves).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = ["FilterBankParams", "fill_masked", "local_frequency"]


@dataclass(frozen=True)
class FilterBankParams:
    """Radial/directional layout of the estimation bank.

    Defaults were tuned on synthetic plane waves spanning the admissible
    band: 8 octave-spaced centers starting at one cycle per volume extent,
    1.5-octave filter bandwidth and a 0.3 Tukey taper keep the interior
    median of E within a few percent mid-band.
    """

    n_centers: int = 8
    bandwidth_octaves: float = 1.5
    nu_min: float | None = None   # cycles/m; default 1 / max extent
    nu_max: float | None = None   # cycles/m; default 1 / (4 h)
    window_alpha: float = 0.3     # Tukey taper fraction per axis

    def resolve(self, shape, spacing: float) -> tuple[np.ndarray, float]:
        """Concrete center frequencies [cycles/m] and lognormal sigma."""
        extent = max(n * spacing for n in shape)
        nu_min = self.nu_min if self.nu_min is not None else 1.0 / extent
        nu_max = self.nu_max if self.nu_max is not None else 1.0 / (4.0 * spacing)
        if nu_max <= nu_min:
            raise ValueError(
                f"admissible band is empty: nu_min {nu_min:.2f} >= nu_max "
                f"{nu_max:.2f} cycles/m; grid too small or too coarse")
        centers = nu_min * 2.0 ** np.arange(self.n_centers)
        centers = centers[centers <= nu_max * 1.0000001]
        if centers.size < 2:
            centers = np.array([nu_min, min(2.0 * nu_min, nu_max)])
        sigma = (self.bandwidth_octaves * np.log(2.0)
                 / (2.0 * np.sqrt(2.0 * np.log(2.0))))
        return centers, float(sigma)


_DIRECTIONS = np.array([
    [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0], [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0], [0.0, 0.0, -1.0],
])


def _tukey(n: int, alpha: float) -> np.ndarray:
    if alpha <= 0 or n < 3:
        return np.ones(n)
    w = np.ones(n)
    edge = int(np.floor(alpha * (n - 1) / 2.0))
    if edge > 0:
        t = np.arange(edge + 1)
        ramp = 0.5 * (1.0 + np.cos(np.pi * (2.0 * t / (alpha * (n - 1)) - 1.0)))
        w[:edge + 1] = ramp
        w[-(edge + 1):] = ramp[::-1]
    return w


def fill_masked(volume: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace masked-out voxels with their nearest valid neighbor's value.

    Keeps the spectral content of thin valid regions from being swamped by
    the window discontinuity a zero fill would introduce.
    """
    if mask.all():
        return volume
    if not mask.any():
        raise ValueError("mask has no valid voxels to extend from")
    idx = ndimage.distance_transform_edt(~mask, return_distances=False,
                                         return_indices=True)
    return volume[tuple(idx)]


def local_frequency(channels, spacing: float, mask: np.ndarray | None = None,
                    params: FilterBankParams | None = None,
                    weights_in=None):
    """Amplitude-fused local spatial frequency [cycles/m] of complex volumes.

    channels: iterable of complex volumes sharing one grid (for example the
    three curl components at one excitation frequency). Returns
    (nu, confidence, in_band): the fused frequency estimate, the summed
    amplitude weight (scaled by weights_in when given), and a per-voxel
    flag marking estimates inside the admissible band.
    """
    channels = [np.asarray(c) for c in channels]
    if not channels:
        raise ValueError("need at least one input channel")
    shape = channels[0].shape
    params = params or FilterBankParams()
    centers, sigma = params.resolve(shape, spacing)

    taper = np.ones(shape)
    for ax, n in enumerate(shape):
        shp = [1, 1, 1]
        shp[ax] = n
        taper = taper * _tukey(n, params.window_alpha).reshape(shp)

    freq_axes = [np.fft.fftfreq(n, d=spacing) for n in shape]
    kx, ky, kz = np.meshgrid(*freq_axes, indexing="ij")
    k_mag = np.sqrt(kx**2 + ky**2 + kz**2)
    k_safe = np.where(k_mag > 0, k_mag, 1.0)
    k_unit = np.stack([kx, ky, kz], axis=-1) / k_safe[..., None]

    log_k = np.where(k_mag > 0, np.log(np.maximum(k_mag, 1e-300)), 0.0)
    radial = []
    for c in centers:
        r = np.exp(-((log_k - np.log(c)) ** 2) / (2.0 * sigma**2))
        r[k_mag == 0] = 0.0
        radial.append(r)
    sectors = [np.maximum(0.0, k_unit @ d) ** 2 for d in _DIRECTIONS]

    ratio_const = np.exp(-np.log(2.0) ** 2 / (2.0 * sigma**2))
    exponent = sigma**2 / np.log(2.0)
    nu_lo, nu_hi = centers[0] / 2.0, centers[-1] * 2.0

    nu_num = np.zeros(shape)
    nu_den = np.zeros(shape)
    conf = np.zeros(shape)
    for ch in channels:
        data = ch
        if mask is not None and not mask.all():
            data = fill_masked(np.where(mask, ch, 0.0), mask)
        spec = np.fft.fftn(data * taper)
        mags = []
        for r in radial:
            m = np.zeros(shape)
            for d in sectors:
                m += np.abs(np.fft.ifftn(spec * r * d))
            mags.append(m)
        ch_num = np.zeros(shape)
        ch_den = np.zeros(shape)
        for i in range(len(centers) - 1):
            ratio = mags[i + 1] / np.maximum(mags[i], 1e-300)
            nu_est = centers[i] * (ratio / ratio_const) ** exponent
            nu_est = np.clip(nu_est, nu_lo, nu_hi)
            w = mags[i] * mags[i + 1]
            ch_num += w * nu_est
            ch_den += w
        ch_weight = sum(mags)
        if weights_in is not None:
            ch_weight = ch_weight * weights_in
        nu_ch = ch_num / np.maximum(ch_den, 1e-300)
        nu_num += ch_weight * nu_ch
        nu_den += ch_weight
        conf += ch_weight

    nu = nu_num / np.maximum(nu_den, 1e-300)
    in_band = (nu >= centers[0] / np.sqrt(2.0)) & (nu <= centers[-1] * np.sqrt(2.0))
    return nu, conf, in_band
