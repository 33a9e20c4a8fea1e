"""Torus grids, spectral/physical transforms, Fourier multipliers and norms.

Fields live on the d-dimensional torus [0, 2pi)^d and are represented by their
truncated Fourier coefficients on the symmetric band |k_i| <= K,

    u(x) = sum_{|k_i| <= K} u_k exp(i k.x).

Coefficients are stored in centered order (index i <-> k = i - K along each
axis) with a leading component axis, so arrays have shape (c, 2K+1, ..., 2K+1).
Transforms go through zero-padded FFTs of length M >= 2K+1; with enough
padding the spectral coefficients of a pointwise product equal the exact
truncated convolution of the factors, which is the dealiasing contract the
time steppers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "TorusGrid",
    "SpectralField",
    "PhysicalField",
    "Multiplier",
    "GridMismatchError",
    "to_physical",
    "to_spectral",
    "apply_multiplier",
    "free_propagator",
    "identity_multiplier",
    "phi1_multiplier",
    "filter_psi",
    "filtered_gradient_symbol",
    "pointwise_mul",
    "conjugate_field",
    "sobolev_norm",
]


class GridMismatchError(ValueError):
    """Raised when an operation combines fields on different grids."""


def _fast_len(n: int) -> int:
    """Smallest 5-smooth integer >= n (friendly FFT length)."""
    m = n
    while True:
        r = m
        for p in (2, 3, 5):
            while r % p == 0:
                r //= p
        if r == 1:
            return m
        m += 1


@dataclass(frozen=True)
class TorusGrid:
    """Mode truncation of the torus: frequencies k with |k_i| <= K, d in {1,2,3}.

    The physical resolution is not fixed here; every transform chooses its own
    M >= 2K+1 so products can be padded per use.
    """

    d: int
    K: int

    def __post_init__(self) -> None:
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.K < 1:
            raise ValueError(f"need at least one nonzero mode, got K={self.K}")

    @property
    def n_axis(self) -> int:
        return 2 * self.K + 1

    @property
    def mode_shape(self) -> tuple[int, ...]:
        return (self.n_axis,) * self.d

    @property
    def n_modes(self) -> int:
        return self.n_axis**self.d

    @property
    def modes(self) -> np.ndarray:
        """Frequencies along one axis in centered order, -K..K."""
        return np.arange(-self.K, self.K + 1)

    def k_components(self) -> list[np.ndarray]:
        """Per-axis frequency arrays broadcastable over ``mode_shape``."""
        out = []
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.n_axis
            out.append(self.modes.reshape(shape))
        return out

    @property
    def k2(self) -> np.ndarray:
        """|k|^2 over the mode lattice."""
        acc = np.zeros(self.mode_shape)
        for comp in self.k_components():
            acc = acc + comp.astype(float) ** 2
        return acc

    def pad_size(self, degree: int = 2) -> int:
        """FFT length that dealiases products of ``degree`` band-K factors.

        A product of m fields reaches frequency m*K; wrap-around stays out of
        the retained band when M > (m+1)*K.
        """
        return _fast_len((degree + 1) * self.K + 1)

    def scatter_indices(self, M: int) -> list[np.ndarray]:
        """Positions of centered modes inside a length-M FFT array, per axis."""
        if M < self.n_axis:
            raise ValueError(f"M={M} cannot hold modes up to K={self.K}")
        return [self.modes % M for _ in range(self.d)]


@dataclass
class SpectralField:
    """Truncated Fourier coefficients of a (possibly 2-component) field."""

    grid: TorusGrid
    coeff: np.ndarray  # complex, shape (c,) + grid.mode_shape

    def __post_init__(self) -> None:
        self.coeff = np.asarray(self.coeff, dtype=complex)
        expected = self.grid.mode_shape
        if self.coeff.shape == expected:
            self.coeff = self.coeff[np.newaxis]
        if self.coeff.ndim != self.grid.d + 1 or self.coeff.shape[1:] != expected:
            raise ValueError(
                f"coefficient array shape {self.coeff.shape} does not match "
                f"(c,) + {expected}"
            )
        if self.coeff.shape[0] not in (1, 2):
            raise ValueError("component count must be 1 or 2")

    @property
    def c(self) -> int:
        return self.coeff.shape[0]

    @classmethod
    def zeros(cls, grid: TorusGrid, c: int = 1) -> "SpectralField":
        return cls(grid, np.zeros((c,) + grid.mode_shape, dtype=complex))

    @classmethod
    def single_mode(
        cls, grid: TorusGrid, k, amplitude: complex = 1.0, c: int = 1, comp: int = 0
    ) -> "SpectralField":
        """Field with one excited frequency (k is an int for d=1, tuple else)."""
        f = cls.zeros(grid, c)
        idx = np.atleast_1d(np.asarray(k, dtype=int)) + grid.K
        f.coeff[(comp, *idx)] = amplitude
        return f

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeff.copy())

    def check_finite(self) -> "SpectralField":
        if not np.all(np.isfinite(self.coeff)):
            raise FloatingPointError("spectral field contains NaN/Inf")
        return self


@dataclass
class PhysicalField:
    """Samples of a field on the uniform grid x_j = 2 pi j / M."""

    grid: TorusGrid
    M: int
    values: np.ndarray  # complex, shape (c,) + (M,)*d

    @property
    def c(self) -> int:
        return self.values.shape[0]


def synth(coeff: np.ndarray, grid: TorusGrid, M: int) -> np.ndarray:
    """Raw synthesis of centered coefficients (c, modes) to samples (c, M^d)."""
    pos = grid.scatter_indices(M)
    arr = np.zeros(coeff.shape[:1] + (M,) * grid.d, dtype=complex)
    arr[(slice(None),) + np.ix_(*pos)] = coeff
    axes = tuple(range(1, grid.d + 1))
    return np.fft.ifftn(arr, axes=axes) * (M**grid.d)


def analyze(values: np.ndarray, grid: TorusGrid, M: int) -> np.ndarray:
    """Raw analysis of samples (c, M^d) back to centered coefficients."""
    axes = tuple(range(1, grid.d + 1))
    hat = np.fft.fftn(values, axes=axes) / (M**grid.d)
    pos = grid.scatter_indices(M)
    return hat[(slice(None),) + np.ix_(*pos)]


def to_physical(f: SpectralField, M: int | None = None) -> PhysicalField:
    """Evaluate the truncated Fourier series on an M-point grid per axis."""
    M = f.grid.n_axis if M is None else M
    return PhysicalField(f.grid, M, synth(f.coeff, f.grid, M))


def to_spectral(g: PhysicalField, grid: TorusGrid | None = None) -> SpectralField:
    """Invert :func:`to_physical`; frequencies beyond K are discarded."""
    grid = g.grid if grid is None else grid
    return SpectralField(grid, analyze(g.values, grid, g.M))


@dataclass(frozen=True)
class Multiplier:
    """A Fourier-diagonal operator: a pure map k -> complex scalar.

    ``fn`` receives the grid and returns the multiplier values over the mode
    lattice; ``tag`` identifies the operator in logs and reports.
    """

    tag: str
    fn: Callable[[TorusGrid], np.ndarray]

    def values(self, grid: TorusGrid) -> np.ndarray:
        return np.asarray(self.fn(grid), dtype=complex)


def identity_multiplier() -> Multiplier:
    return Multiplier("one", lambda grid: np.ones(grid.mode_shape, dtype=complex))


def free_propagator(t: float) -> Multiplier:
    """exp(i t Laplacian): the unitary group, exp(-i t |k|^2) per mode."""
    return Multiplier(f"exp(-i*{t}*k^2)", lambda grid: np.exp(-1j * t * grid.k2))


def _phi1(sigma: np.ndarray) -> np.ndarray:
    """(e^sigma - 1)/sigma with the removable singularity at 0."""
    out = np.ones_like(sigma, dtype=complex)
    nz = sigma != 0
    out[nz] = np.expm1(sigma[nz]) / sigma[nz]
    return out


def phi1_multiplier(t: float) -> Multiplier:
    """Resonance factor (exp(2 i k^2 t) - 1)/(2 i k^2 t), equal to 1 at k=0.

    Applied to the conjugated field it realises the closed-form integral
    -i t * m(k1) = -(exp(2 i k1^2 t) - 1)/(2 k1^2) of the dominant cubic phase.
    """
    return Multiplier(
        f"phi1(2i*k^2*{t})", lambda grid: _phi1(2j * grid.k2 * np.float64(t))
    )


def filter_psi(p: int, t: float) -> Multiplier:
    """Order-p filter ((e^{itk}-1)/(itk))^p, bounded by 1, equal to 1 at k=0.

    One-dimensional only: the gradient it regularises has no canonical scalar
    symbol in d > 1.
    """
    if p < 1:
        raise ValueError("filter order must be a positive integer")

    def fn(grid: TorusGrid) -> np.ndarray:
        if grid.d != 1:
            raise ValueError("filter functions are defined for d=1 only")
        k = grid.modes.astype(float)
        return _phi1(1j * t * k) ** p

    return Multiplier(f"psi{p}(it*k)", fn)


def filtered_gradient_symbol(t: float) -> Multiplier:
    """Unnormalised filter (e^{itk}-1)/(it) = k + O(t k^2), bounded by |k|."""

    def fn(grid: TorusGrid) -> np.ndarray:
        if grid.d != 1:
            raise ValueError("filtered gradient is defined for d=1 only")
        k = grid.modes.astype(float)
        return k * _phi1(1j * t * k)

    return Multiplier(f"k*psi1(it*k)", fn)


def apply_multiplier(f: SpectralField, m: Multiplier) -> SpectralField:
    vals = m.values(f.grid)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"multiplier {m.tag!r} is not finite on the grid")
    return SpectralField(f.grid, f.coeff * vals[np.newaxis])


def pointwise_mul(a: SpectralField, b: SpectralField, dealias: bool = True) -> SpectralField:
    """Spectral coefficients of the pointwise product of two fields.

    With ``dealias`` the product is formed on a padded grid, so the retained
    band equals the exact truncated convolution sum_{k = k1 + k2} a_{k1} b_{k2}.
    """
    if a.grid != b.grid:
        raise GridMismatchError("pointwise product needs a common grid")
    if a.c != b.c:
        raise GridMismatchError("pointwise product needs matching components")
    M = a.grid.pad_size(2) if dealias else a.grid.n_axis
    va = synth(a.coeff, a.grid, M)
    vb = synth(b.coeff, b.grid, M)
    return SpectralField(a.grid, analyze(va * vb, a.grid, M))


def conjugate_field(f: SpectralField) -> SpectralField:
    """Coefficients of the complex conjugate field: out_k = conj(f_{-k})."""
    axes = tuple(range(1, f.grid.d + 1))
    return SpectralField(f.grid, np.conj(np.flip(f.coeff, axis=axes)))


def sobolev_norm(f: SpectralField, s: float, p: float = 2) -> float:
    """Sobolev norm of the truncated field.

    For p=2 this is the Fourier-weighted convention
    (sum_k (1+|k|^2)^s |f_k|^2)^{1/2}, summed over components.  For general
    p >= 1 (d=1, integer s >= 0) it is the W^{s,p} norm: weak derivatives are
    synthesised with multiplier (ik)^l and integrated by the trapezoidal rule
    with cell weight 2 pi / M.
    """
    if p < 1:
        raise ValueError(f"integrability index must satisfy p >= 1, got {p}")
    if p == 2:
        w = (1.0 + f.grid.k2) ** s
        return float(np.sqrt(np.sum(w[np.newaxis] * np.abs(f.coeff) ** 2)))
    if f.grid.d != 1:
        raise NotImplementedError("W^{s,p} norms with p != 2 are implemented for d=1")
    if s != int(s) or s < 0:
        raise ValueError("p != 2 requires integer regularity s >= 0")
    M = f.grid.pad_size(2)
    k = f.grid.modes.astype(float)
    total = 0.0
    for ell in range(int(s) + 1):
        dcoeff = f.coeff * (1j * k) ** ell
        vals = synth(dcoeff, f.grid, M)
        total += float(np.sum(np.abs(vals) ** p)) * (2.0 * np.pi / M)
    return total ** (1.0 / p)
