"""Periodograms and the exact expected periodogram of a modulated series.

The expected periodogram is the finite-N mean of the periodogram of the
modulated sample,

    Sbar(w) = 2 Re{ sum_{tau=0}^{N-1} cbar(tau) e^{-i w tau} } - cbar(0),
    cbar(tau) = c_g(tau) * c_X(tau),

evaluated on the Fourier grid via one length-2N FFT.  A dense-covariance
quadratic form oracle is kept for ground truth on small
N, together with the Fejer kernel and the classical smoothed-spectrum
approximation used only in comparison experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Series, fourier_grid, _to_grid_order
from .models import LatentModel, autocov_sequence, sdf_sampled
from .modulation import CgSequence, Modulator

__all__ = [
    "Periodogram",
    "ExpectedPeriodogram",
    "periodogram",
    "expected_acv",
    "expected_periodogram",
    "expected_periodogram_values",
    "brute_force_expected_periodogram",
    "fejer_kernel",
    "dunsmuir_spectrum",
    "exponential_qq",
]

ORACLE_CAP = 256
_NEG_CLAMP = 1e-8
_TINY = 1e-300


@dataclass(frozen=True)
class Periodogram:
    """|J(w)|^2 on the Fourier grid (grid order, radians per sample)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ExpectedPeriodogram:
    """Exact mean of the periodogram on the Fourier grid for one theta."""

    values: np.ndarray
    theta: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


def periodogram(series: Series) -> Periodogram:
    """Shat(w) = (1/N) |sum_t x_t e^{-iwt}|^2 on the Fourier grid."""
    x = np.asarray(series.values)
    n = x.size
    vals = np.abs(_to_grid_order(np.fft.fft(x))) ** 2 / n
    return Periodogram(values=vals)


def expected_acv(cg: CgSequence | np.ndarray, model: LatentModel) -> np.ndarray:
    """cbar(tau) = c_g(tau) * c_X(tau) at lags 0..N-1."""
    cg_vals = cg.values if isinstance(cg, CgSequence) else np.asarray(cg)
    cx = autocov_sequence(model, cg_vals.size)
    return cg_vals * cx


def expected_periodogram_values(cbar: np.ndarray) -> np.ndarray:
    """Lag-to-frequency transform of an expected autocovariance sequence.

    One zero-padded length-2N FFT; grid values are the even-indexed bins.
    Raises when a value drops below -1e-8 (an invalid cbar, e.g. a non-PSD
    covariance snuck in); round-off negatives above that are clamped to a
    tiny positive number so downstream logs stay finite.
    """
    cbar = np.asarray(cbar)
    n = cbar.size
    if n < 1:
        raise ValueError("expected autocovariance sequence is empty")
    c0 = cbar[0]
    if np.iscomplexobj(cbar):
        if abs(c0.imag) > 1e-10 * max(1.0, abs(c0.real)):
            raise ValueError("cbar(0) must be real")
        c0 = c0.real
    big = np.fft.fft(cbar, 2 * n)
    vals = 2.0 * big[::2].real - c0
    vals = _to_grid_order(vals)
    if np.min(vals) < -_NEG_CLAMP * max(1.0, float(np.max(np.abs(vals)))):
        raise ValueError("expected periodogram is significantly negative; "
                         "the expected autocovariance input is invalid")
    return np.maximum(vals, _TINY)


def expected_periodogram(cg: CgSequence | np.ndarray, model: LatentModel) -> ExpectedPeriodogram:
    """Exact expected periodogram for a latent model and precomputed c_g."""
    vals = expected_periodogram_values(expected_acv(cg, model))
    return ExpectedPeriodogram(values=vals, theta=np.array(model.params.values))


def brute_force_expected_periodogram(mod: Modulator, model: LatentModel,
                                     cap: int = ORACLE_CAP) -> ExpectedPeriodogram:
    """Ground-truth expected periodogram from the dense covariance matrix.

    Sbar(w) = (1/N) e_w^H C_Y e_w with C_Y[t,s] = g_t conj(g_s) c_X(t-s) and
    e_w[t] = e^{iwt}.  O(N^2) per frequency; refuses N above `cap` to guard
    against accidental O(N^3) runs.
    """
    n = mod.n
    if n > cap:
        raise ValueError(f"oracle refuses N={n} > cap={cap}")
    g = np.asarray(mod.g, dtype=complex)
    cx = np.asarray(autocov_sequence(model, n), dtype=complex)
    idx = np.subtract.outer(np.arange(n), np.arange(n))
    cmat = np.where(idx >= 0, cx[np.abs(idx)], np.conj(cx[np.abs(idx)]))
    cy = np.outer(g, np.conj(g)) * cmat
    grid = fourier_grid(n)
    e = np.exp(1j * np.outer(np.arange(n), grid.frequencies))
    vals = np.real(np.sum(np.conj(e) * (cy @ e), axis=0)) / n
    return ExpectedPeriodogram(values=vals, theta=np.array(model.params.values))


def fejer_kernel(n: int, lam) -> np.ndarray | float:
    """sin^2(N*lam/2) / (2*pi*N*sin^2(lam/2)); N/(2*pi) at lam = 0 (mod 2*pi)."""
    if n < 1:
        raise ValueError("kernel order must be positive")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    half = np.mod(lam_arr / 2.0, np.pi)
    at_zero = np.isclose(np.minimum(half, np.pi - half), 0.0, atol=1e-14)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.sin(n * lam_arr / 2.0) ** 2 / (2.0 * np.pi * n * np.sin(lam_arr / 2.0) ** 2)
    vals = np.where(at_zero, n / (2.0 * np.pi), vals)
    return vals if np.ndim(lam) else float(vals[0])


def dunsmuir_spectrum(model: LatentModel, mod: Modulator) -> np.ndarray:
    """Classical approximation: convolve the model sdf with the modulator's
    spectral window on the Fourier grid.

    On the f_X scale used in this package,
    Stilde(w) = (1/N^2) sum_{lam in grid} f_X(w - lam) |G(lam)|^2,
    with G the plain DFT of g.  Kept O(N^2) for comparison experiments only
    (it ignores leakage bias, unlike the exact expected periodogram).
    """
    n = mod.n
    window = np.abs(np.fft.fft(np.asarray(mod.g, dtype=complex))) ** 2
    # f_X is 2*pi-periodic and both w and lam live on the grid, so every
    # difference reduces to one of the N frequencies 2*pi*m/N
    f_std = sdf_sampled(model, 2.0 * np.pi * np.arange(n) / n)
    out_std = np.empty(n)
    for k in range(n):
        out_std[k] = f_std[(k - np.arange(n)) % n] @ window
    return _to_grid_order(out_std) / (n * n)


def exponential_qq(pgram: Periodogram, sbar: ExpectedPeriodogram) -> np.ndarray:
    """QQ pairs of sorted Shat/Sbar ratios against Exp(1) order statistics.

    Returns an (n, 2) array with theoretical quantiles
    E[X_(k)] = sum_{j<=k} 1/(n-j+1) in column 0 and sorted ratios in column 1.
    """
    if pgram.n != sbar.n:
        raise ValueError("periodogram and expected periodogram grids differ")
    if pgram.n == 0:
        raise ValueError("empty grid")
    if np.any(sbar.values <= 0):
        raise ValueError("expected periodogram must be positive for the QQ ratio")
    ratios = np.sort(pgram.values / sbar.values)
    n = ratios.size
    theo = np.cumsum(1.0 / (n - np.arange(n)))
    return np.column_stack((theo, ratios))
