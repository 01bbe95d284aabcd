"""Gaussian unitaries (squeeze, displace, beam splitter) and the loss channel,
all realized as dense matrices in the truncated Fock space.

Unitaries are matrix exponentials of the truncated generators at a padded
dimension; see conventions.CONVENTIONS for the sign conventions. Beam
splitters may be built with an enlarged output cutoff (an exact isometry on
inputs whose total photon number fits the output), which is how the pattern
module mixes modes without truncation loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError
from .fock import (
    FockConfig,
    OperatorMatrix,
    PureStateVector,
    annihilation_matrix,
    apply_matrix_on_modes,
    embed_on_modes,
)


@dataclass(frozen=True)
class Squeeze:
    mode: int
    s: float
    phi: float = 0.0


@dataclass(frozen=True)
class Displace:
    mode: int
    alpha: complex


@dataclass(frozen=True)
class BeamSplitter:
    mode_i: int
    mode_j: int
    theta: float
    phi: float = 0.0


CircuitElement = Squeeze | Displace | BeamSplitter


@dataclass
class GaussianCircuit:
    """Ordered element list; earlier elements act on the state first."""

    elements: list[CircuitElement] = field(default_factory=list)

    def modes(self) -> set[int]:
        out: set[int] = set()
        for el in self.elements:
            if isinstance(el, BeamSplitter):
                out.update((el.mode_i, el.mode_j))
            else:
                out.add(el.mode)
        return out

    def validate_bounds(self, s_max: float, alpha_max: float) -> None:
        for el in self.elements:
            if isinstance(el, Squeeze) and not 0 <= el.s <= s_max:
                raise ConfigError(f"squeeze magnitude {el.s} outside [0, {s_max}]")
            if isinstance(el, Displace) and abs(el.alpha) > alpha_max:
                raise ConfigError(f"displacement |{el.alpha}| exceeds {alpha_max}")
            if isinstance(el, BeamSplitter) and not 0 <= el.theta <= math.pi / 2:
                raise ConfigError(f"beam splitter angle {el.theta} outside [0, pi/2]")


def _exp_banded(c: complex, dim: int, step: int, raising: bool) -> np.ndarray:
    """Exact truncation of exp(c a^dag^step) (raising) or exp(c a^step).

    Entry connecting levels n -> n + step*k carries c^k/k! sqrt((n+step*k)!/n!);
    the truncated matrix equals the projection of the true operator because
    the series is banded.
    """
    out = np.eye(dim, dtype=np.complex128)
    for n in range(dim):
        coeff = 1.0 + 0.0j
        fac = 1.0
        for k in range(1, dim):
            m = n + step * k
            if m >= dim:
                break
            fac *= math.prod(range(m - step + 1, m + 1))
            coeff = coeff * c / k
            val = coeff * math.sqrt(fac)
            if raising:
                out[m, n] = val
            else:
                out[n, m] = val
    return out


def squeeze_unitary(s: float, phi: float, dim: int) -> OperatorMatrix:
    """exp((conj(xi) a^2 - xi a^dag^2)/2), xi = s e^{i phi}, as the exact
    Fock-space projection via the normal-ordered factorization
    S = exp(-(t/2)e^{i phi} a^dag^2) sech(s)^{n+1/2} exp((t/2)e^{-i phi} a^2),
    t = tanh s.

    Matrix elements (in particular the squeezed-vacuum column) equal the true
    operator's exactly; columns near the cutoff are sub-isometric by exactly
    the probability the true dynamics sends above the truncation.
    """
    if s < 0:
        raise ConfigError("squeeze magnitude must be >= 0")
    t = math.tanh(s)
    e_up = _exp_banded(-0.5 * np.exp(1j * phi) * t, dim, 2, True)
    e_dn = _exp_banded(0.5 * np.exp(-1j * phi) * t, dim, 2, False)
    diag = np.cosh(s) ** -(np.arange(dim) + 0.5)
    return OperatorMatrix.square(e_up @ (diag[:, None] * e_dn), (dim,))


def displace_unitary(alpha: complex, dim: int) -> OperatorMatrix:
    """exp(alpha a^dag - conj(alpha) a) as the exact Fock-space projection via
    D = e^{-|alpha|^2/2} exp(alpha a^dag) exp(-conj(alpha) a)."""
    e_up = _exp_banded(alpha, dim, 1, True)
    e_dn = _exp_banded(-np.conj(alpha), dim, 1, False)
    return OperatorMatrix.square(math.exp(-abs(alpha) ** 2 / 2) * (e_up @ e_dn), (dim,))


@lru_cache(maxsize=64)
def _bs_full(theta: float, phi: float, dim: int) -> np.ndarray:
    a = annihilation_matrix(dim).entries
    adag = a.conj().T
    gen = theta * (
        np.exp(1j * phi) * np.kron(adag, a) - np.exp(-1j * phi) * np.kron(a, adag)
    )
    return expm(gen)


def beam_splitter_unitary(
    theta: float,
    phi: float = 0.0,
    dim_in: int | tuple[int, int] = 2,
    dim_out: int | None = None,
    pair: tuple[int, int] | None = None,
) -> OperatorMatrix:
    """Two-mode beam splitter block for the ordered pair (i, j).

    The block is the exponential of the truncated generator at dim_out per
    mode (default: the larger input dimension), with input columns restricted
    to dim_in levels per mode (a pair (d_i, d_j) is allowed). For
    dim_out >= d_i + d_j - 1 the block is an exact isometry on every input:
    total photon number is conserved and every reachable number subspace is
    fully contained in the output space.
    """
    if pair is not None and pair[0] == pair[1]:
        raise ConfigError(f"beam splitter needs two distinct modes, got {pair}")
    d1, d2 = (dim_in, dim_in) if isinstance(dim_in, int) else (dim_in[0], dim_in[1])
    if min(d1, d2) < 2:
        raise ConfigError("beam splitter needs input dims >= 2")
    dim_out = max(d1, d2) if dim_out is None else int(dim_out)
    if dim_out < max(d1, d2):
        raise ConfigError("dim_out must be >= the input dims")
    full = _bs_full(float(theta), float(phi), dim_out)
    if (d1, d2) == (dim_out, dim_out):
        entries = full
    else:
        cols = full.reshape(dim_out * dim_out, dim_out, dim_out)[:, :d1, :d2]
        entries = cols.reshape(dim_out * dim_out, d1 * d2)
    return OperatorMatrix(
        entries,
        in_dims=(d1, d2),
        out_dims=(dim_out, dim_out),
        mode_scope=pair,
        unitary=d1 == d2 == dim_out,
    )


@dataclass
class ChannelKrausSet:
    """Photon-loss channel of transmissivity eta as a finite Kraus list."""

    kraus: list[np.ndarray]
    eta: float

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]


def loss_channel(eta: float, dim: int) -> ChannelKrausSet:
    """K_k = sqrt((1-eta)^k / k!) eta^{n/2} a^k for k = 0..dim-1.

    Completeness sum_k K^dag K = I holds exactly on the truncated space.
    """
    if not 0.0 <= eta <= 1.0:
        raise ConfigError(f"transmissivity {eta} outside [0, 1]")
    a = annihilation_matrix(dim).entries
    n = np.arange(dim, dtype=np.float64)
    # 0^0 = 1 so eta = 0 collapses everything onto the vacuum.
    eta_half = np.where(n == 0, 1.0, eta ** (n / 2.0))
    kraus = []
    a_pow = np.eye(dim, dtype=np.complex128)
    for k in range(dim):
        coeff = math.sqrt((1.0 - eta) ** k / math.factorial(k)) if k else 1.0
        kraus.append(coeff * (eta_half[:, None] * a_pow))
        a_pow = a @ a_pow
    return ChannelKrausSet(kraus, eta)


def element_unitary(el: CircuitElement, dim: int) -> OperatorMatrix:
    """Single element as a block at per-mode dimension `dim`, scope set."""
    if isinstance(el, Squeeze):
        u = squeeze_unitary(el.s, el.phi, dim)
        return OperatorMatrix.square(u.entries, (dim,), mode_scope=(el.mode,))
    if isinstance(el, Displace):
        u = displace_unitary(el.alpha, dim)
        return OperatorMatrix.square(u.entries, (dim,), mode_scope=(el.mode,))
    if isinstance(el, BeamSplitter):
        return beam_splitter_unitary(
            el.theta, el.phi, dim_in=dim, pair=(el.mode_i, el.mode_j)
        )
    raise ConfigError(f"unknown circuit element {el!r}")


def compile_circuit(circ: GaussianCircuit, config: FockConfig) -> OperatorMatrix:
    """Ordered dense product of the element blocks at the padded dimension.

    Builds the full-register matrix, so it is limited to small registers;
    generation applies elements one by one instead (same product).
    """
    dims = config.padded_dims
    total = math.prod(dims)
    product = np.eye(total, dtype=np.complex128)
    all_unitary = True
    for el in circ.elements:
        block = element_unitary(el, config.padded_cutoff)
        all_unitary = all_unitary and block.unitary
        embedded = embed_on_modes(block, block.mode_scope, dims)
        product = embedded.entries @ product
    return OperatorMatrix.square(
        product, dims, mode_scope=tuple(range(config.n_modes)), unitary=all_unitary
    )


def apply_circuit(state: PureStateVector, circ: GaussianCircuit):
    """Apply elements in order via mode-local contractions.

    The state should already live at the padded dimension. Returns
    (normalized state, survival) where survival is the squared norm kept after
    the whole product (mass the true dynamics sent above the cutoff is lost by
    the exact-projection squeeze/displacement blocks).
    """
    dim = state.dims[0]
    if any(d != dim for d in state.dims):
        raise ConfigError("apply_circuit expects uniform per-mode dims")
    batch = state.tensor()[None]
    for el in circ.elements:
        block = element_unitary(el, dim)
        batch = apply_matrix_on_modes(batch, block.entries, block.mode_scope)
    out = PureStateVector(batch.ravel(), state.dims)
    survival = out.norm() ** 2
    if survival <= 0.0:
        raise ConfigError("circuit annihilated the state (all mass truncated)")
    return out.normalized(), survival
