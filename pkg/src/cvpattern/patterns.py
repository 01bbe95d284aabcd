"""Joint homodyne probability densities binned into 24x24 correlation patterns.

For each singled-out mode k the remaining modes are combined on balanced beam
splitters (one for three parties, an ascending two-splitter cascade for four)
and the joint density of (quadrature of k, quadrature of the mixed output M)
is evaluated on the grid by the midpoint rule, for the four quadrature pairs
(X,X), (X,P), (P,X), (P,P). Stored grids always have axis 0 = singled mode,
axis 1 = mixed mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .fock import StateEnsemble, apply_matrix_on_modes
from .gaussian import beam_splitter_unitary

QPAIRS = (("x", "x"), ("x", "p"), ("p", "x"), ("p", "p"))
DEFAULT_GRID_BINS = 24
DEFAULT_GRID_RANGE = (-6.0, 6.0)
LOW_MASS_THRESHOLD = 0.95
# cap on the transient amplitude tensor while accumulating densities
_CHUNK_BYTES = 128 * 1024 * 1024


@dataclass(frozen=True)
class QuadGrid:
    """Uniform quadrature binning shared by both grid axes."""

    n_bins: int = DEFAULT_GRID_BINS
    x_min: float = DEFAULT_GRID_RANGE[0]
    x_max: float = DEFAULT_GRID_RANGE[1]

    def __post_init__(self):
        if self.n_bins < 2 or self.x_max <= self.x_min:
            raise ConfigError(f"invalid grid {self!r}")

    @property
    def width(self) -> float:
        return (self.x_max - self.x_min) / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_bins) + 0.5) * self.width


def quadrature_wavefunction(n: int, x: float, which: str = "x") -> complex:
    """<q|n> at a single point; see wavefunction_matrix for the conventions."""
    if n < 0:
        raise ConfigError("Fock level must be >= 0")
    return complex(wavefunction_matrix(n + 1, (float(x),), which)[0, n])


def wavefunction_matrix(dim: int, xs, which: str = "x") -> np.ndarray:
    """Matrix W[u, n] = <q_u|n> for q the X or P quadrature.

    X: psi_n(x) = (2 pi)^(-1/4) (2^n n!)^(-1/2) H_n(x/sqrt 2) exp(-x^2/4),
    evaluated by the normalized recurrence
    psi_{n+1} = (x psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1).
    P: <p|n> = (-i)^n psi_n(p), the eigenfunction phase forced by
    p = i(a^dag - a).
    """
    if which not in ("x", "p"):
        raise ConfigError(f"quadrature must be 'x' or 'p', got {which!r}")
    xs = np.asarray(xs, dtype=np.float64)
    out = np.empty((xs.size, dim), dtype=np.float64)
    out[:, 0] = (2.0 * math.pi) ** (-0.25) * np.exp(-(xs**2) / 4.0)
    if dim > 1:
        out[:, 1] = xs * out[:, 0]
    for n in range(1, dim - 1):
        out[:, n + 1] = (xs * out[:, n] - math.sqrt(n) * out[:, n - 1]) / math.sqrt(n + 1)
    if which == "x":
        return out.astype(np.complex128)
    phases = (-1j) ** np.arange(dim)
    return out * phases[None, :]


@lru_cache(maxsize=256)
def _cached_wavefunctions(dim: int, grid: QuadGrid) -> np.ndarray:
    """Stacked (2*n_bins, dim) matrix: X rows then P rows, at grid centers."""
    wx = wavefunction_matrix(dim, grid.centers, "x")
    wp = wavefunction_matrix(dim, grid.centers, "p")
    return np.vstack([wx, wp])


def mixed_mode_state(ens: StateEnsemble, k: int, parties: int | None = None):
    """Apply the balanced mixing cascade to every mode except k.

    Returns (ensemble, m_index) where m_index is the mixed output mode (the
    lowest-labelled non-k mode). Output modes are stored at enlarged cutoffs
    so the truncated beam splitters are exact isometries (zero leakage).
    """
    m = ens.n_modes
    parties = m if parties is None else parties
    if parties != m or parties not in (3, 4):
        raise ConfigError(f"mixing cascade expects 3 or 4 modes, got {m} (parties={parties})")
    if not 0 <= k < m:
        raise ConfigError(f"singled mode {k} out of range")
    others = [mode for mode in range(m) if mode != k]
    weights, matrix = ens.stack()
    batch = matrix.reshape((-1,) + ens.dims)
    dims = list(ens.dims)

    def mix(batch, i, j):
        d1, d2 = dims[i], dims[j]
        d_out = d1 + d2 - 1
        bs = beam_splitter_unitary(math.pi / 4, 0.0, dim_in=(d1, d2), dim_out=d_out)
        batch = apply_matrix_on_modes(batch, bs.entries, (i, j), out_dims=(d_out, d_out))
        dims[i] = dims[j] = d_out
        return batch

    if m == 3:
        batch = mix(batch, others[0], others[1])
    else:
        batch = mix(batch, others[0], others[1])
        batch = mix(batch, others[0], others[2])
    out = StateEnsemble.from_stack(weights, batch.reshape(len(weights), -1), tuple(dims))
    return out, others[0]


def _density_pair(mixed: StateEnsemble, k: int, m_index: int, grid: QuadGrid) -> np.ndarray:
    """Densities for all four quadrature pairs at once.

    Returns (4, n_bins, n_bins) ordered per QPAIRS, axis order (singled, mixed).
    """
    nb = grid.n_bins
    weights, matrix = mixed.stack()
    dims = mixed.dims
    w_k = _cached_wavefunctions(dims[k], grid)
    w_m = _cached_wavefunctions(dims[m_index], grid)
    bytes_per_member = (2 * nb) ** 2 * 16 * math.prod(
        d for mode, d in enumerate(dims) if mode not in (k, m_index)
    )
    chunk = max(1, _CHUNK_BYTES // max(1, bytes_per_member))
    acc = np.zeros((2 * nb, 2 * nb), dtype=np.float64)
    for start in range(0, len(weights), chunk):
        stop = min(start + chunk, len(weights))
        batch = matrix[start:stop].reshape((-1,) + dims)
        batch = apply_matrix_on_modes(batch, w_k, (k,), out_dims=(2 * nb,))
        batch = apply_matrix_on_modes(batch, w_m, (m_index,), out_dims=(2 * nb,))
        # axes: (member, ..., k-axis at position k+1, m-axis at position m_index+1, ...)
        probs = (batch.real**2 + batch.imag**2)
        sum_axes = tuple(
            ax for ax in range(1, probs.ndim) if ax not in (1 + k, 1 + m_index)
        )
        if sum_axes:
            probs = probs.sum(axis=sum_axes)
        if k > m_index:
            probs = probs.transpose(0, 2, 1)
        acc += np.tensordot(weights[start:stop], probs, axes=(0, 0))
    return np.stack(
        [
            acc[:nb, :nb],  # (X, X)
            acc[:nb, nb:],  # (X, P)
            acc[nb:, :nb],  # (P, X)
            acc[nb:, nb:],  # (P, P)
        ]
    )


def joint_density_grid(
    ens: StateEnsemble, k: int, qpair: tuple[str, str], grid: QuadGrid | None = None
) -> np.ndarray:
    """Binned joint probability for one singled mode and one quadrature pair:
    entry (u, v) = density(q_u on mode k, q_v on mixed output) * width^2."""
    grid = grid or QuadGrid()
    if tuple(qpair) not in QPAIRS:
        raise ConfigError(f"quadrature pair must be one of {QPAIRS}, got {qpair}")
    mixed, m_index = mixed_mode_state(ens, k)
    densities = _density_pair(mixed, k, m_index, grid)
    return densities[QPAIRS.index(tuple(qpair))] * grid.width**2


@dataclass
class PatternSet:
    """Stack of correlation patterns: one group of four grids per singled mode.

    grids has shape (parties, 4, n_bins, n_bins): group k holds the four
    quadrature-pair grids for singled mode k, ordered per QPAIRS.
    """

    parties: int
    grids: np.ndarray
    grid: QuadGrid = field(default_factory=QuadGrid)
    low_mass: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        expected = (self.parties, len(QPAIRS), self.grid.n_bins, self.grid.n_bins)
        if self.grids.shape != expected:
            raise ConfigError(f"pattern grids shape {self.grids.shape}, expected {expected}")

    @property
    def n_grids(self) -> int:
        return self.parties * len(QPAIRS)

    def masses(self) -> np.ndarray:
        return self.grids.sum(axis=(2, 3))


def pattern_set(ens: StateEnsemble, parties: int | None = None, grid: QuadGrid | None = None) -> PatternSet:
    """All groups (singled mode ascending) of all four quadrature-pair grids:
    12 grids for three parties, 16 for four."""
    grid = grid or QuadGrid()
    parties = ens.n_modes if parties is None else parties
    if parties != ens.n_modes:
        raise ConfigError(f"ensemble has {ens.n_modes} modes, expected {parties}")
    area = grid.width**2
    groups = []
    flagged = []
    for k in range(parties):
        mixed, m_index = mixed_mode_state(ens, k)
        densities = _density_pair(mixed, k, m_index, grid) * area
        for q, dens in enumerate(densities):
            if dens.sum() < LOW_MASS_THRESHOLD:
                flagged.append((k, q))
        groups.append(densities)
    return PatternSet(parties, np.stack(groups), grid, flagged)
