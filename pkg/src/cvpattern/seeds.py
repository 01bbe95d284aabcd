"""Random seed-state generation: bounded-rank core states, random Gaussian
circuits, per-mode loss, and the partial-transpose inseparability gate.

A seed is a mixed m-mode state built as (loss channels) o (random Gaussian
unitary) acting on a random core state whose Fock support is restricted to
total photon number <= r. Entangled seeds must pass an NPT check across every
internal bipartition before they are used as building blocks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GenerationError
from .fock import (
    FockConfig,
    PureStateVector,
    StateEnsemble,
    apply_channel,
    compress_ensemble,
)
from .gaussian import (
    BeamSplitter,
    Displace,
    GaussianCircuit,
    Squeeze,
    apply_circuit,
    loss_channel,
)

MAX_STELLAR_RANK = 3
DEFAULT_NU_MIN = 0.01
DEFAULT_MAX_TRIES = 100
DEFAULT_COMPRESS_TOL = 1e-12
# Maximum fraction of probability a draw may lose to truncation before it is
# redrawn. At the default cutoffs this cannot be tiny: a single-mode squeezed
# vacuum at s = 0.8 already has 5.2e-3 of its mass above Fock level 9, and
# rank-3 cores pushed through strong squeezing lose several percent.
DEFAULT_SEED_LEAK_TOL = 0.2

# Reduced per-mode cutoffs for the dense partial-transpose certificate.
VERIFY_CUTOFFS = {2: 8, 3: 6, 4: 5}


@dataclass(frozen=True)
class SeedBounds:
    """Parameter ranges for random circuits and loss draws."""

    s_max: float = 0.8
    alpha_max: float = 1.5
    eta_min: float = 0.6
    eta_max: float = 1.0

    def __post_init__(self):
        if self.s_max < 0 or self.alpha_max < 0:
            raise ConfigError("bounds must be nonnegative")
        if not 0.0 <= self.eta_min <= self.eta_max <= 1.0:
            raise ConfigError(f"invalid eta range [{self.eta_min}, {self.eta_max}]")


@dataclass(frozen=True)
class SeedSpec:
    m: int
    r: int
    bounds: SeedBounds = SeedBounds()

    def __post_init__(self):
        if not 1 <= self.m <= 4:
            raise ConfigError(f"seed mode count must be 1..4, got {self.m}")
        if not 0 <= self.r <= MAX_STELLAR_RANK:
            raise ConfigError(f"stellar rank must be 0..{MAX_STELLAR_RANK}, got {self.r}")


@dataclass
class SeedInfo:
    """Generation bookkeeping surfaced into logs/provenance."""

    etas: list[float]
    leakage: float
    dropped_weight: float
    tries: int
    r: int


@dataclass
class VerifiedSeed:
    state: StateEnsemble
    m: int
    insep_certificate: dict[tuple[int, ...], float]
    info: SeedInfo | None = None


def core_support(m: int, r: int) -> list[tuple[int, ...]]:
    """Occupations with total photon number <= r, lexicographic order."""
    return [
        occ for occ in itertools.product(range(r + 1), repeat=m) if sum(occ) <= r
    ]


def sample_core_state(
    m: int, r: int, rng: np.random.Generator, cutoff: int, max_tries: int = DEFAULT_MAX_TRIES
) -> PureStateVector:
    """Random core state: iid standard complex Gaussian coefficients on the
    bounded-total-photon support, normalized, with the top shell required to
    carry an amplitude of modulus >= 0.1 (guaranteeing the stated rank).

    The global phase is fixed by making the first nonzero amplitude real and
    positive, so r = 0 returns the vacuum exactly.
    """
    if r >= cutoff:
        raise ConfigError(f"rank {r} needs cutoff > r, got {cutoff}")
    support = core_support(m, r)
    top = [i for i, occ in enumerate(support) if sum(occ) == r]
    dims = (cutoff,) * m
    for _ in range(max_tries):
        coeffs = rng.standard_normal(len(support)) + 1j * rng.standard_normal(len(support))
        coeffs /= np.linalg.norm(coeffs)
        if np.abs(coeffs[top]).max() < 0.1:
            continue
        first = np.flatnonzero(np.abs(coeffs) > 0)[0]
        coeffs *= np.conj(coeffs[first]) / abs(coeffs[first])
        amps = np.zeros(cutoff**m, dtype=np.complex128)
        for c, occ in zip(coeffs, support):
            amps[np.ravel_multi_index(occ, dims)] = c
        return PureStateVector(amps, dims)
    raise GenerationError(f"core-state sampling failed after {max_tries} tries")


def stellar_polynomial_roots(state: PureStateVector) -> np.ndarray:
    """Roots of sum_n c_n z^n / sqrt(n!) for a single-mode state (the zero
    count of this polynomial is the stellar rank of a finite-support state)."""
    if state.n_modes != 1:
        raise ConfigError("stellar polynomial defined here for single-mode states")
    c = state.amplitudes / np.sqrt(
        np.array([math.factorial(n) for n in range(state.dim)], dtype=np.float64)
    )
    c = np.trim_zeros(c, trim="b")
    if len(c) <= 1:
        return np.zeros(0, dtype=np.complex128)
    return np.roots(c[::-1])


def sample_gaussian_circuit(
    m: int, bounds: SeedBounds, rng: np.random.Generator
) -> GaussianCircuit:
    """Per-mode squeeze and displacement, then beam splitters on every pair.

    Draw order equals circuit order: squeezes (mode ascending; s then phi),
    displacements (mode ascending; magnitude then argument), beam splitters
    (pairs lexicographic; theta then phi).
    """
    elements: list = []
    for mode in range(m):
        s = rng.uniform(0.0, bounds.s_max)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        elements.append(Squeeze(mode, s, phi))
    for mode in range(m):
        mag = rng.uniform(0.0, bounds.alpha_max)
        arg = rng.uniform(0.0, 2.0 * math.pi)
        elements.append(Displace(mode, mag * np.exp(1j * arg)))
    for i, j in itertools.combinations(range(m), 2):
        theta = rng.uniform(0.0, math.pi / 2)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        elements.append(BeamSplitter(i, j, theta, phi))
    return GaussianCircuit(elements)


def sample_seed_state(
    spec: SeedSpec,
    config: FockConfig,
    rng: np.random.Generator,
    max_tries: int = DEFAULT_MAX_TRIES,
    compress_tol: float | None = DEFAULT_COMPRESS_TOL,
    leak_tol: float = DEFAULT_SEED_LEAK_TOL,
) -> tuple[StateEnsemble, SeedInfo]:
    """Draw one seed ensemble: core state -> random circuit (applied at the
    padded cutoff, truncated back with a leakage gate) -> per-mode loss.

    Losing more than leak_tol of the probability mass to truncation triggers a
    fresh draw of circuit and efficiencies, bounded by max_tries. Ensembles
    are compressed (density-preserving) between loss channels unless
    compress_tol is None.
    """
    if config.n_modes != spec.m:
        raise ConfigError("config mode count must match the seed spec")
    dims = config.dims
    for attempt in range(1, max_tries + 1):
        core = sample_core_state(spec.m, spec.r, rng, config.cutoff)
        circuit = sample_gaussian_circuit(spec.m, spec.bounds, rng)
        etas = rng.uniform(spec.bounds.eta_min, spec.bounds.eta_max, size=spec.m)
        padded, survival = apply_circuit(core.pad(config.padded_dims), circuit)
        psi, trunc_leak = padded.truncate(dims)
        leakage = 1.0 - survival * (1.0 - trunc_leak)
        if leakage > leak_tol:
            continue
        ens = StateEnsemble.from_pure(psi)
        dropped = 0.0
        for mode in range(spec.m):
            channel = loss_channel(float(etas[mode]), config.cutoff)
            ens, d = apply_channel(ens, channel.kraus, mode)
            dropped += d
            if compress_tol is not None:
                ens = compress_ensemble(ens, compress_tol)
        info = SeedInfo(
            etas=[float(e) for e in etas],
            leakage=leakage,
            dropped_weight=dropped,
            tries=attempt,
            r=spec.r,
        )
        return ens, info
    raise GenerationError(f"seed sampling exhausted {max_tries} truncation retries")


def bipartitions(m: int) -> list[tuple[int, ...]]:
    """Canonical bipartition representatives: every subset containing mode 0
    with size < m (2^(m-1) - 1 cuts)."""
    cuts = []
    for size in range(1, m):
        for subset in itertools.combinations(range(1, m), size - 1):
            cuts.append((0,) + subset)
    return cuts


def partial_transpose(rho: np.ndarray, dims, modes) -> np.ndarray:
    """Transpose the given mode subsystems of a dense density matrix."""
    dims = tuple(dims)
    m = len(dims)
    tensor = rho.reshape(dims + dims)
    perm = list(range(2 * m))
    for mode in modes:
        perm[mode], perm[m + mode] = perm[m + mode], perm[mode]
    return tensor.transpose(perm).reshape(rho.shape)


def negativity(ens: StateEnsemble, bipartition, cutoff: int | None = None) -> float:
    """Sum of |negative eigenvalues| of the partial transpose across the cut.

    `cutoff` truncates each mode before densifying (certificate use); local
    Fock projection cannot create entanglement, so a positive value at reduced
    cutoff certifies the untruncated state is NPT across the cut.
    """
    bipartition = tuple(sorted(set(int(b) for b in bipartition)))
    m = ens.n_modes
    if not bipartition or len(bipartition) >= m or any(not 0 <= b < m for b in bipartition):
        raise ConfigError(f"invalid bipartition {bipartition} for {m} modes")
    if cutoff is None:
        dims = ens.dims
    else:
        dims = tuple(min(d, cutoff) for d in ens.dims)
    rho = ens.density_matrix(dims=dims)
    rho_pt = partial_transpose(rho, dims, bipartition)
    eigvals = np.linalg.eigvalsh(rho_pt)
    return float(-eigvals[eigvals < 0].sum())


def verify_fully_inseparable(
    ens: StateEnsemble,
    nu_min: float = DEFAULT_NU_MIN,
    cutoff: int | None = None,
    info: SeedInfo | None = None,
) -> VerifiedSeed | None:
    """Accept iff negativity > nu_min across every bipartition of the modes.

    Returns the certificate on acceptance and None on rejection (the caller
    resamples). Verification runs at a reduced cutoff per VERIFY_CUTOFFS.
    """
    m = ens.n_modes
    if m < 2:
        raise ConfigError("inseparability verification needs at least 2 modes")
    cut_dim = cutoff if cutoff is not None else VERIFY_CUTOFFS[m]
    certificate: dict[tuple[int, ...], float] = {}
    for cut in bipartitions(m):
        nu = negativity(ens, cut, cutoff=cut_dim)
        if nu <= nu_min:
            return None
        certificate[cut] = nu
    return VerifiedSeed(state=ens, m=m, insep_certificate=certificate, info=info)


def sample_verified_seed(
    spec: SeedSpec,
    config: FockConfig,
    rng: np.random.Generator,
    nu_min: float = DEFAULT_NU_MIN,
    max_tries: int = DEFAULT_MAX_TRIES,
    compress_tol: float | None = DEFAULT_COMPRESS_TOL,
) -> VerifiedSeed:
    """Rejection-sample seeds until one passes the full-inseparability gate."""
    if spec.m < 2:
        raise ConfigError("verified seeds need m >= 2")
    rejected = 0
    for _ in range(max_tries):
        ens, info = sample_seed_state(
            spec, config, rng, max_tries=max_tries, compress_tol=compress_tol
        )
        verified = verify_fully_inseparable(ens, nu_min=nu_min, info=info)
        if verified is not None:
            info.tries += rejected
            return verified
        rejected += 1
    raise GenerationError(
        f"no fully inseparable {spec.m}-mode seed found in {max_tries} tries"
    )
