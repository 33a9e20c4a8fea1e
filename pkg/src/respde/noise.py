"""Cylindrical Wiener process, smoothing operator and iterated Ito objects.

The driving noise is W(t,x) = sum_k W_k(t) e^{ikx} with complex Brownian
coefficients whose real and imaginary parts are independent standard Brownian
motions, so E|W_k(t)|^2 = 2t (the two-independent-components convention).  A
Fourier-diagonal smoothing operator multiplies mode k by Phi_k.

Everything stochastic in this package derives from one BrownianPath sampled at
a fine resolution: coarse increments are exact sums of the fine increments
they cover, which is what couples a scheme run to its reference run.  Fine
stochastic integrals use left-endpoint (Ito) sums; Lebesgue-in-time integrands
use the trapezoidal rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .spectral import Multiplier, SpectralField, TorusGrid, analyze, synth

__all__ = [
    "SmoothingOperator",
    "BrownianPath",
    "ManakovStepNoise",
    "StepNoise",
    "sample_path",
    "split_seed",
    "step_chi",
    "double_ito",
    "triple_ito",
    "time_weighted_integrals",
    "manakov_step_noise",
    "weighted_trace",
    "build_step_noise",
]

MANAKOV_PAIRS = ((1, 2), (1, 3), (2, 3))


@dataclass
class SmoothingOperator:
    """Fourier-diagonal coefficients Phi_k of the Hilbert-Schmidt smoother."""

    grid: TorusGrid
    values: np.ndarray  # shape grid.mode_shape

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.mode_shape:
            raise ValueError("Phi values must cover the retained mode lattice")

    @classmethod
    def from_decay(
        cls, grid: TorusGrid, sigma_phi: float, amplitude: float = 1.0
    ) -> "SmoothingOperator":
        """Default profile Phi_k = amplitude * (1+|k|^2)^(-sigma_phi/2)."""
        return cls(grid, amplitude * (1.0 + grid.k2) ** (-sigma_phi / 2.0))

    @classmethod
    def zero(cls, grid: TorusGrid) -> "SmoothingOperator":
        return cls(grid, np.zeros(grid.mode_shape))

    @property
    def tr_phi_phistar(self) -> float:
        """Tr(Phi Phi*) = sum_k Phi_k conj(Phi_k) on the truncated grid."""
        return float(np.sum(np.abs(self.values) ** 2))

    @property
    def tr_lap_phi_sq(self) -> float:
        """Tr((Lap Phi)^2) = sum_k |Phi_k|^2 k^4."""
        return float(np.sum(np.abs(self.values) ** 2 * self.grid.k2**2))

    @property
    def tr_lap2_phi_sq(self) -> float:
        """Tr((Lap^2 Phi)^2) = sum_k |Phi_k|^2 k^8."""
        return float(np.sum(np.abs(self.values) ** 2 * self.grid.k2**4))

    def is_real_nonnegative(self) -> bool:
        return bool(np.all(self.values.imag == 0) and np.all(self.values.real >= 0))


def weighted_trace(phi: SmoothingOperator, m: Multiplier) -> float:
    """sum_k m(k) Phi_k conj(Phi_k) over retained modes."""
    vals = m.values(phi.grid)
    out = np.sum(vals * np.abs(phi.values) ** 2)
    return float(out.real)


def split_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Per-sample seed: SeedSequence(master, spawn_key=(index,)).

    Monte Carlo samples are independent, reproducible and order-free, so a
    harness may evaluate them concurrently.
    """
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


@dataclass
class BrownianPath:
    """Fine-resolution Brownian increments, the single source of randomness.

    ``increments`` holds the complex per-mode increments with shape
    (n_fine, n_modes) over the flattened mode lattice, each component of
    variance dt_fine.  ``manakov_increments`` holds the three real scalar
    Brownian increments used by the Manakov system, shape (n_fine, 3).
    """

    grid: TorusGrid
    T: float
    n_fine: int
    seed: object
    increments: np.ndarray
    manakov_increments: np.ndarray

    @property
    def dt_fine(self) -> float:
        return self.T / self.n_fine

    def fine_per_step(self, n_coarse: int) -> int:
        if self.n_fine % n_coarse != 0:
            raise ValueError(
                f"coarse step count {n_coarse} does not divide n_fine={self.n_fine}"
            )
        return self.n_fine // n_coarse

    def coarse_increments(self, n_coarse: int) -> np.ndarray:
        """Exact per-coarse-step sums of the covered fine increments."""
        sub = self.fine_per_step(n_coarse)
        return self.increments.reshape(n_coarse, sub, -1).sum(axis=1)

    def segment(self, ell: int, n_coarse: int) -> np.ndarray:
        """Fine increments covered by coarse step ell, shape (sub, n_modes)."""
        sub = self.fine_per_step(n_coarse)
        return self.increments[ell * sub : (ell + 1) * sub]

    def manakov_coarse_increments(self, n_coarse: int) -> np.ndarray:
        sub = self.fine_per_step(n_coarse)
        return self.manakov_increments.reshape(n_coarse, sub, 3).sum(axis=1)

    def endpoint(self) -> np.ndarray:
        """W(T) - W(0) per mode."""
        return self.increments.sum(axis=0)


def sample_path(
    grid: TorusGrid, T: float, n_fine: int, seed: int | np.random.SeedSequence
) -> BrownianPath:
    """Draw a reproducible fine path: identical (seed, grid, n_fine) give
    bitwise identical increments."""
    if n_fine < 1:
        raise ValueError("need at least one fine step")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    dt = T / n_fine
    raw = rng.standard_normal((n_fine, grid.n_modes, 2))
    incr = np.sqrt(dt) * (raw[..., 0] + 1j * raw[..., 1])
    manakov = np.sqrt(dt) * rng.standard_normal((n_fine, 3))
    return BrownianPath(grid, T, n_fine, seed, incr, manakov)


def _phi_flat(phi: SmoothingOperator) -> np.ndarray:
    return phi.values.reshape(-1)


def step_chi(path: BrownianPath, ell: int, t: float, phi: SmoothingOperator) -> SpectralField:
    """Normalised increment field Phi chi_ell with coefficients
    Phi_k (W_k(t_{ell+1}) - W_k(t_ell)) / sqrt(t)."""
    n_coarse = _coarse_count(path, t)
    seg = path.segment(ell, n_coarse)
    coeff = (_phi_flat(phi) * seg.sum(axis=0) / np.sqrt(t)).reshape(path.grid.mode_shape)
    return SpectralField(path.grid, coeff[np.newaxis])


def _coarse_count(path: BrownianPath, t: float) -> int:
    n_coarse = int(round(path.T / t))
    if abs(n_coarse * t - path.T) > 1e-9 * max(path.T, 1.0):
        raise ValueError(f"coarse step {t} does not tile the horizon {path.T}")
    path.fine_per_step(n_coarse)
    return n_coarse


def _physical_square_minus_trace(
    chi_field: SpectralField, phi: SmoothingOperator, M: int
) -> np.ndarray:
    vals = synth(chi_field.coeff, chi_field.grid, M)
    return vals[0] ** 2 - phi.tr_phi_phistar


def double_ito(chi_field: SpectralField, t: float, phi: SmoothingOperator) -> SpectralField:
    """Double iterated integral of the smoothed noise over one step,
    (t/2) * ((Phi chi)(x)^2 - Tr(Phi Phi*)), as a spectral field.

    The trace subtraction follows the per-mode real-Brownian pairing; the
    noise-check report measures how far the complex modes sit from it.
    """
    grid = chi_field.grid
    M = grid.pad_size(2)
    sq = _physical_square_minus_trace(chi_field, phi, M)
    coeff = analyze((0.5 * t) * sq[np.newaxis], grid, M)
    return SpectralField(grid, coeff)


def triple_ito(chi_field: SpectralField, t: float, phi: SmoothingOperator) -> SpectralField:
    """Triple iterated integral over one step,
    t^{3/2} * ((1/6)(Phi chi)(x)^3 - (1/2) sum_k |Phi_k|^2 chi_k)."""
    grid = chi_field.grid
    M = grid.pad_size(3)
    vals = synth(chi_field.coeff, grid, M)[0]
    corr = triple_trace_correction(chi_field, phi)
    cube = vals**3 / 6.0 - 0.5 * corr
    coeff = analyze(t**1.5 * cube[np.newaxis], grid, M)
    return SpectralField(grid, coeff)


def triple_trace_correction(chi_field: SpectralField, phi: SmoothingOperator) -> complex:
    """sum_k |Phi_k|^2 chi_k where chi_k = (Phi chi)_k / Phi_k."""
    phi_flat = _phi_flat(phi)
    chi_flat = chi_field.coeff[0].reshape(-1)
    raw = np.zeros_like(chi_flat)
    nz = phi_flat != 0
    raw[nz] = chi_flat[nz] / phi_flat[nz]
    return complex(np.sum(np.abs(phi_flat) ** 2 * raw))


def time_weighted_integrals(
    path: BrownianPath,
    ell: int,
    t: float,
    phi: SmoothingOperator,
    weight_tag: str,
    allow_coarse: bool = False,
) -> np.ndarray:
    """Per-mode stochastic integrals over coarse step ell.

    weight_tag selects the integrand:
      "one":  int_0^t s Phi_k dW_k(s)           (left Ito sums)
      "grad": int_0^t s (i k) Phi_k dW_k(s)                 (d=1)
      "lap":  int_0^t s (-k^2) Phi_k dW_k(s)
      "time_avg": int_0^t (W_k(s) - W_k(t_ell)) ds   (trapezoid, no Phi)

    Times s are measured from the step start.  Fewer than 4 fine points per
    coarse step is rejected unless ``allow_coarse`` (the internal reference
    builder runs at one fine step per coarse step, where these integrals
    degenerate to their left-endpoint value).
    """
    n_coarse = _coarse_count(path, t)
    sub = path.fine_per_step(n_coarse)
    if sub < 4 and not allow_coarse:
        raise ValueError(
            f"fine path too coarse: {sub} fine steps per coarse step (need >= 4)"
        )
    seg = path.segment(ell, n_coarse)
    dt = path.dt_fine
    flat_shape = (path.grid.n_modes,)
    if weight_tag == "time_avg":
        cums = np.cumsum(seg, axis=0)
        # trapezoid of C_j = W(s_j) - W(t_ell): C_0 = 0, C_j = cums[j-1]
        weights = np.full(sub, dt)
        weights[-1] = dt / 2.0
        return (weights[:, np.newaxis] * cums).sum(axis=0).reshape(flat_shape)
    s_left = dt * np.arange(sub)
    base = (s_left[:, np.newaxis] * seg).sum(axis=0)
    phi_flat = _phi_flat(phi)
    if weight_tag == "one":
        return base * phi_flat
    if weight_tag in ("grad", "lap"):
        if path.grid.d != 1:
            raise ValueError(f"weight {weight_tag!r} is defined for d=1 only")
        k = path.grid.modes.astype(float)
        w = 1j * k if weight_tag == "grad" else -(k**2)
        return base * phi_flat * w
    raise ValueError(f"unknown weight tag {weight_tag!r}")


@dataclass
class ManakovStepNoise:
    """The three normalised Gaussian increments and their pair combinations."""

    chis: np.ndarray  # shape (3,), chi_n = (W_n(t_{ell+1}) - W_n(t_ell))/sqrt(t)
    pair_terms: dict  # {(n, m): 0.5*(chi_n^2 - 1) + chi_n chi_m for n < m}

    @property
    def combination_sum(self) -> float:
        return float(sum(self.pair_terms.values()))


def manakov_step_noise(path: BrownianPath, ell: int, t: float) -> ManakovStepNoise:
    n_coarse = _coarse_count(path, t)
    sub = path.fine_per_step(n_coarse)
    seg = path.manakov_increments[ell * sub : (ell + 1) * sub]
    chis = seg.sum(axis=0) / np.sqrt(t)
    pairs = {
        (n, m): 0.5 * (chis[n - 1] ** 2 - 1.0) + chis[n - 1] * chis[m - 1]
        for n, m in MANAKOV_PAIRS
    }
    return ManakovStepNoise(chis, pairs)


@dataclass
class StepNoise:
    """Everything a scheme step draws from the path over one coarse step.

    All entries are derived from the same BrownianPath, so runs at different
    step counts stay pathwise coupled.  ``phi_chi`` carries Phi, the raw
    integrals (``s_dw``, ``time_avg``) do not; the steppers attach weights.
    """

    ell: int
    t: float
    phi_chi: np.ndarray | None = None  # flat modes, Phi_k dW_k / sqrt(t)
    s_dw: np.ndarray | None = None  # flat modes, int s dW_k (no Phi)
    time_avg: np.ndarray | None = None  # flat modes, int (W_k(s)-W_k(t_ell)) ds
    triple_corr: complex | None = None  # sum_k |Phi_k|^2 chi_k
    manakov: ManakovStepNoise | None = None

    @classmethod
    def zero(cls, grid: TorusGrid, t: float, high_order: bool = False) -> "StepNoise":
        n = grid.n_modes
        return cls(
            ell=0,
            t=t,
            phi_chi=np.zeros(n, dtype=complex),
            s_dw=np.zeros(n, dtype=complex) if high_order else None,
            time_avg=np.zeros(n, dtype=complex) if high_order else None,
            triple_corr=0.0 if high_order else None,
        )


def build_step_noise(
    path: BrownianPath,
    ell: int,
    n_coarse: int,
    phi: SmoothingOperator | None,
    scheme: str,
    allow_coarse: bool = False,
) -> StepNoise:
    """Assemble the noise objects one step of ``scheme`` consumes."""
    t = path.T / n_coarse
    if scheme == "manakov":
        return StepNoise(ell, t, manakov=manakov_step_noise(path, ell, t))
    if phi is None:
        raise ValueError("NLS schemes need a smoothing operator")
    seg = path.segment(ell, n_coarse)
    phi_flat = _phi_flat(phi)
    chi = seg.sum(axis=0) / np.sqrt(t)
    noise = StepNoise(ell, t, phi_chi=phi_flat * chi)
    if scheme == "nls_high":
        sub = path.fine_per_step(n_coarse)
        if sub < 4 and not allow_coarse:
            raise ValueError(
                f"fine path too coarse for the high-order scheme: {sub} fine steps"
            )
        dt = path.dt_fine
        s_left = dt * np.arange(sub)
        noise.s_dw = (s_left[:, np.newaxis] * seg).sum(axis=0)
        cums = np.cumsum(seg, axis=0)
        weights = np.full(sub, dt)
        weights[-1] = dt / 2.0
        noise.time_avg = (weights[:, np.newaxis] * cums).sum(axis=0)
        noise.triple_corr = complex(np.sum(np.abs(phi_flat) ** 2 * chi))
    return noise


def exact_joint_increment_sample(
    rng: np.random.Generator, t: float, n_modes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Standalone sample of (W(t)-W(0), int_0^t s dW) per mode with the exact
    2x2 covariance [[t, t^2/2], [t^2/2, t^3/3]] per real component.

    Used by the simulate command when no fine path is wanted; the convergence
    harness never calls this (it derives everything from the shared path).
    """
    cov = np.array([[t, t**2 / 2.0], [t**2 / 2.0, t**3 / 3.0]])
    chol = np.linalg.cholesky(cov)
    raw = rng.standard_normal((n_modes, 2, 2))  # (mode, re/im, component)
    mixed = raw @ chol.T
    dw = mixed[:, 0, 0] + 1j * mixed[:, 1, 0]
    s_dw = mixed[:, 0, 1] + 1j * mixed[:, 1, 1]
    return dw, s_dw
