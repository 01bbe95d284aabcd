"""Truncated-Fock-space linear algebra: states, ensembles, operators, channels.

Index convention (see conventions.CONVENTIONS): mode 0 is the most significant
digit of the composite index, i.e. amplitudes reshape to (D_0, ..., D_{m-1})
in C order with axis i belonging to mode i. Per-mode dimensions may differ
(beam-splitter outputs are stored at enlarged cutoffs), so states carry a
`dims` tuple; `FockConfig` describes the common uniform-cutoff case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidChannelError, TruncationOverflowError

# Hard caps keeping dense objects inside a laptop-class memory budget.
STATE_DIM_BUDGET = 1 << 22
OPERATOR_DIM_BUDGET = 4096

DEFAULT_LEAK_TOL = 1e-6
DEFAULT_BRANCH_TOL = 1e-12
DEFAULT_WORKING_PAD = 6


def default_cutoff(n_modes: int) -> int:
    """Default per-mode Fock dimension: 10 up to three modes, 7 for four."""
    return 10 if n_modes <= 3 else 7


@dataclass(frozen=True)
class FockConfig:
    """Uniform truncation for an n-mode register plus the working pad used
    while applying Gaussian unitaries."""

    n_modes: int
    cutoff: int
    working_pad: int = DEFAULT_WORKING_PAD

    def __post_init__(self):
        if not 1 <= self.n_modes <= 4:
            raise ConfigError(f"n_modes must be 1..4, got {self.n_modes}")
        if self.cutoff < 2:
            raise ConfigError(f"cutoff must be >= 2, got {self.cutoff}")
        if self.working_pad < 0:
            raise ConfigError("working_pad must be >= 0")
        if self.cutoff**self.n_modes > STATE_DIM_BUDGET:
            raise ConfigError(
                f"total dimension {self.cutoff}^{self.n_modes} exceeds budget {STATE_DIM_BUDGET}"
            )

    @classmethod
    def default(cls, n_modes: int) -> "FockConfig":
        return cls(n_modes, default_cutoff(n_modes))

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.cutoff,) * self.n_modes

    @property
    def dim(self) -> int:
        return self.cutoff**self.n_modes

    @property
    def padded_cutoff(self) -> int:
        return self.cutoff + self.working_pad

    @property
    def padded_dims(self) -> tuple[int, ...]:
        return (self.padded_cutoff,) * self.n_modes


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ConfigError(f"invalid dims {dims}")
    if math.prod(dims) > STATE_DIM_BUDGET:
        raise ConfigError(f"dims {dims} exceed dimension budget")
    return dims


@dataclass
class PureStateVector:
    """Normalized pure state over the truncated multimode Fock basis."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        self.dims = _check_dims(self.dims)
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128).ravel()
        if self.amplitudes.size != math.prod(self.dims):
            raise ConfigError(
                f"amplitude length {self.amplitudes.size} does not match dims {self.dims}"
            )

    @classmethod
    def from_amplitudes(cls, amplitudes, dims, normalize: bool = True) -> "PureStateVector":
        state = cls(np.asarray(amplitudes, dtype=np.complex128), tuple(dims))
        return state.normalized() if normalize else state

    @classmethod
    def from_occupation(cls, dims, occupation) -> "PureStateVector":
        dims = _check_dims(dims)
        occupation = tuple(int(n) for n in occupation)
        if len(occupation) != len(dims) or any(
            not 0 <= n < d for n, d in zip(occupation, dims)
        ):
            raise ConfigError(f"occupation {occupation} out of range for dims {dims}")
        amps = np.zeros(math.prod(dims), dtype=np.complex128)
        amps[np.ravel_multi_index(occupation, dims)] = 1.0
        return cls(amps, dims)

    @classmethod
    def vacuum(cls, dims) -> "PureStateVector":
        return cls.from_occupation(dims, (0,) * len(dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureStateVector":
        n = self.norm()
        if n == 0.0:
            raise ConfigError("cannot normalize the zero vector")
        return PureStateVector(self.amplitudes / n, self.dims)

    def overlap(self, other: "PureStateVector") -> complex:
        if self.dims != other.dims:
            raise ConfigError("overlap requires matching dims")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def pad(self, new_dims) -> "PureStateVector":
        """Zero-embed into larger per-mode dimensions."""
        new_dims = _check_dims(new_dims)
        if len(new_dims) != self.n_modes or any(
            nd < d for nd, d in zip(new_dims, self.dims)
        ):
            raise ConfigError(f"pad target {new_dims} smaller than {self.dims}")
        out = np.zeros(new_dims, dtype=np.complex128)
        out[tuple(slice(0, d) for d in self.dims)] = self.tensor()
        return PureStateVector(out.ravel(), new_dims)

    def truncate(self, new_dims, leak_tol: float | None = None):
        """Project onto smaller per-mode dimensions and renormalize.

        Returns (state, leakage) with leakage = 1 - (norm of the projection)^2.
        Raises TruncationOverflowError when leak_tol is given and exceeded.
        """
        new_dims = _check_dims(new_dims)
        if len(new_dims) != self.n_modes or any(
            nd > d for nd, d in zip(new_dims, self.dims)
        ):
            raise ConfigError(f"truncate target {new_dims} larger than {self.dims}")
        kept = self.tensor()[tuple(slice(0, d) for d in new_dims)].ravel()
        kept_norm = float(np.linalg.norm(kept))
        leakage = max(0.0, 1.0 - kept_norm**2)
        if leak_tol is not None and leakage > leak_tol:
            raise TruncationOverflowError(leakage, leak_tol)
        if kept_norm == 0.0:
            raise TruncationOverflowError(1.0, leak_tol if leak_tol is not None else 0.0)
        return PureStateVector(kept / kept_norm, new_dims), leakage


@dataclass
class StateEnsemble:
    """Mixed state as a weighted list of pure members sharing one dims tuple."""

    members: list[tuple[float, PureStateVector]] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ConfigError("ensemble needs at least one member")
        dims = self.members[0][1].dims
        for w, state in self.members:
            if w <= 0:
                raise ConfigError(f"member weight {w} must be positive")
            if state.dims != dims:
                raise ConfigError("ensemble members must share dims")

    @classmethod
    def from_pure(cls, state: PureStateVector) -> "StateEnsemble":
        return cls([(1.0, state)])

    @classmethod
    def from_stack(cls, weights, matrix, dims) -> "StateEnsemble":
        dims = tuple(dims)
        members = [
            (float(w), PureStateVector(row.copy(), dims))
            for w, row in zip(weights, matrix)
        ]
        return cls(members)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.members[0][1].dims

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def __len__(self) -> int:
        return len(self.members)

    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.members))

    def stack(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights (n,) and amplitude matrix (n, dim)."""
        weights = np.array([w for w, _ in self.members], dtype=np.float64)
        matrix = np.stack([s.amplitudes for _, s in self.members])
        return weights, matrix

    def validate(self, tol: float = 1e-10) -> None:
        if abs(self.total_weight() - 1.0) > tol:
            raise ConfigError(f"ensemble weights sum to {self.total_weight()}, not 1")
        for _, state in self.members:
            if abs(state.norm() - 1.0) > tol:
                raise ConfigError("ensemble member is not normalized")

    def density_matrix(self, dims=None) -> np.ndarray:
        """Dense density matrix, optionally truncated to smaller per-mode dims
        (projection renormalized to unit trace). Small systems only."""
        dims = self.dims if dims is None else _check_dims(dims)
        dim = math.prod(dims)
        if dim > OPERATOR_DIM_BUDGET:
            raise ConfigError(f"density matrix dimension {dim} exceeds budget")
        rho = np.zeros((dim, dim), dtype=np.complex128)
        for w, state in self.members:
            vec = state.tensor()[tuple(slice(0, d) for d in dims)].ravel()
            rho += w * np.outer(vec, vec.conj())
        trace = float(np.trace(rho).real)
        if trace <= 0:
            raise ConfigError("density matrix has vanishing trace after truncation")
        return rho / trace


@dataclass
class OperatorMatrix:
    """Dense operator block acting on a subset of modes.

    `entries` has shape (prod(out_dims), prod(in_dims)); out_dims may exceed
    in_dims for isometries such as beam splitters stored at enlarged output
    cutoffs. `mode_scope` records which modes the block addresses (None means
    positional / decided at application time).
    """

    entries: np.ndarray
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    mode_scope: tuple[int, ...] | None = None
    unitary: bool = False

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        self.in_dims = tuple(int(d) for d in self.in_dims)
        self.out_dims = tuple(int(d) for d in self.out_dims)
        expected = (math.prod(self.out_dims), math.prod(self.in_dims))
        if self.entries.shape != expected:
            raise ConfigError(
                f"operator shape {self.entries.shape} does not match dims {expected}"
            )

    @classmethod
    def square(cls, entries, dims, mode_scope=None, unitary=False) -> "OperatorMatrix":
        dims = tuple(dims)
        return cls(np.asarray(entries), dims, dims, mode_scope, unitary)

    @property
    def dims(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def unitarity_defect(self) -> float:
        """max |U^dag U - I| on the input space (0 for exact isometries)."""
        gram = self.entries.conj().T @ self.entries
        return float(np.abs(gram - np.eye(gram.shape[0])).max())

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(
            self.entries.conj().T, self.out_dims, self.in_dims, self.mode_scope, self.unitary
        )


def annihilation_matrix(dim: int) -> OperatorMatrix:
    """Single-mode annihilation operator: a[n-1, n] = sqrt(n)."""
    if dim < 2:
        raise ConfigError(f"annihilation operator needs dim >= 2, got {dim}")
    return OperatorMatrix.square(np.diag(np.sqrt(np.arange(1.0, dim)), k=1), (dim,))


def creation_matrix(dim: int) -> OperatorMatrix:
    return annihilation_matrix(dim).dagger()


def number_matrix(dim: int) -> OperatorMatrix:
    return OperatorMatrix.square(np.diag(np.arange(float(dim))), (dim,))


def apply_matrix_on_modes(batch: np.ndarray, op: np.ndarray, modes, out_dims=None) -> np.ndarray:
    """Contract `op` onto the given modes of a batch of state tensors.

    batch: (n, *dims) complex array; op: (prod(out_dims), prod(in_dims)) where
    in_dims are the current dims at `modes` (in the order given). Returns the
    transformed batch with those axes resized to out_dims.
    """
    modes = tuple(modes)
    n_modes = batch.ndim - 1
    if len(set(modes)) != len(modes) or any(not 0 <= m < n_modes for m in modes):
        raise ConfigError(f"invalid mode selection {modes} for {n_modes} modes")
    dims = batch.shape[1:]
    in_sel = tuple(dims[m] for m in modes)
    out_sel = in_sel if out_dims is None else tuple(out_dims)
    d_in, d_out = math.prod(in_sel), math.prod(out_sel)
    if op.shape != (d_out, d_in):
        raise ConfigError(f"operator shape {op.shape} does not match modes {modes}")
    n_rest = n_modes - len(modes)
    tail = list(range(1 + n_rest, 1 + n_modes))
    moved = np.moveaxis(batch, [1 + m for m in modes], tail)
    lead_shape = moved.shape[: 1 + n_rest]
    out = moved.reshape(-1, d_in) @ op.T
    out = out.reshape(lead_shape + out_sel)
    return np.moveaxis(out, tail, [1 + m for m in modes])


def embed_on_modes(op: OperatorMatrix, modes, dims) -> OperatorMatrix:
    """Dense full-register operator op (x) identity on the remaining modes."""
    if isinstance(dims, FockConfig):
        dims = dims.dims
    dims = _check_dims(dims)
    modes = tuple(modes)
    n_modes = len(dims)
    if len(set(modes)) != len(modes) or any(not 0 <= m < n_modes for m in modes):
        raise ConfigError(f"invalid mode selection {modes} for dims {dims}")
    in_sel = tuple(dims[m] for m in modes)
    if op.in_dims != in_sel or op.out_dims != in_sel:
        raise ConfigError(
            f"operator dims in={op.in_dims} out={op.out_dims} do not match modes {modes} of {dims}"
        )
    dim = math.prod(dims)
    if dim > OPERATOR_DIM_BUDGET:
        raise ConfigError(f"embedded operator dimension {dim} exceeds budget")
    rest = tuple(m for m in range(n_modes) if m not in modes)
    rest_dims = tuple(dims[m] for m in rest)
    block = op.entries.reshape(in_sel + in_sel)
    eye = np.eye(math.prod(rest_dims) if rest_dims else 1, dtype=np.complex128)
    eye = eye.reshape(rest_dims + rest_dims)
    # outer axes: (out_sel.., in_sel.., out_rest.., in_rest..) -> mode order
    full = np.multiply.outer(block, eye)
    k, r = len(modes), len(rest)

    def out_pos(mode):
        return modes.index(mode) if mode in modes else 2 * k + rest.index(mode)

    def in_pos(mode):
        return k + modes.index(mode) if mode in modes else 2 * k + r + rest.index(mode)

    perm = [out_pos(m) for m in range(n_modes)] + [in_pos(m) for m in range(n_modes)]
    full = full.transpose(perm).reshape(dim, dim)
    return OperatorMatrix.square(full, dims, mode_scope=tuple(range(n_modes)), unitary=op.unitary)


def apply_unitary(
    state: PureStateVector,
    u: OperatorMatrix,
    out_dims=None,
    leak_tol: float = DEFAULT_LEAK_TOL,
):
    """Apply a unitary (or isometry) block and optionally truncate.

    `u` acts on u.mode_scope (all modes when None, requiring matching total
    dims). Returns (state, leakage); leakage beyond leak_tol raises
    TruncationOverflowError so callers can resample parameters.
    """
    modes = u.mode_scope if u.mode_scope is not None else tuple(range(state.n_modes))
    batch = state.tensor()[None]
    out = apply_matrix_on_modes(batch, u.entries, modes, out_dims=u.out_dims)[0]
    new_dims = list(state.dims)
    for m, d in zip(modes, u.out_dims):
        new_dims[m] = d
    result = PureStateVector(out.ravel(), tuple(new_dims))
    if out_dims is None:
        leakage = max(0.0, 1.0 - result.norm() ** 2)
        if leakage > leak_tol:
            raise TruncationOverflowError(leakage, leak_tol)
        return result.normalized(), leakage
    return result.truncate(out_dims, leak_tol=leak_tol)


def kraus_completeness_defect(kraus: list[np.ndarray]) -> float:
    """max |sum_k K^dag K - I| over the truncated single-block space."""
    dim = kraus[0].shape[1]
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for k in kraus:
        acc += k.conj().T @ k
    return float(np.abs(acc - np.eye(dim)).max())


def apply_channel(
    ens: StateEnsemble,
    kraus: list[np.ndarray],
    mode: int,
    branch_tol: float = DEFAULT_BRANCH_TOL,
    completeness_tol: float = 1e-9,
):
    """Expand every member through a single-mode Kraus set.

    Branches below branch_tol are dropped and the surviving weights are
    renormalized to the input total weight. Returns (ensemble, dropped_weight).
    """
    defect = kraus_completeness_defect(kraus)
    if defect > completeness_tol:
        raise InvalidChannelError(
            f"Kraus completeness defect {defect:.2e} exceeds {completeness_tol:.0e}"
        )
    weights, matrix = ens.stack()
    dims = ens.dims
    batch = matrix.reshape((-1,) + dims)
    out_weights, out_rows = [], []
    for k in kraus:
        branch = apply_matrix_on_modes(batch, np.asarray(k, dtype=np.complex128), (mode,))
        branch = branch.reshape(len(weights), -1)
        norms_sq = np.einsum("ij,ij->i", branch, branch.conj()).real
        out_weights.append(weights * norms_sq)
        out_rows.append(branch)
    all_weights = np.concatenate(out_weights)
    all_rows = np.concatenate(out_rows)
    keep = all_weights >= branch_tol
    if not keep.any():
        raise ConfigError("channel output has no branch above the pruning tolerance")
    kept_w = all_weights[keep]
    kept_rows = all_rows[keep]
    total_in = float(weights.sum())
    dropped = float(all_weights[~keep].sum())
    kept_w = kept_w * (total_in / kept_w.sum())
    kept_rows = kept_rows / np.linalg.norm(kept_rows, axis=1)[:, None]
    return StateEnsemble.from_stack(kept_w, kept_rows, dims), dropped


def partial_trace_expectation(ens: StateEnsemble, proj_modes, proj_vectors) -> float:
    """Born-rule density for projecting some modes and tracing the rest.

    proj_vectors[i][n] = <q_i|n> for the projection on proj_modes[i] (the
    values quadrature wavefunction helpers produce); they are contracted
    directly, without conjugation. Returns
    sum_members w * sum_{traced Fock basis} |<proj (x) basis | psi>|^2.
    """
    proj_modes = tuple(proj_modes)
    weights, matrix = ens.stack()
    tensor = matrix.reshape((-1,) + ens.dims)
    for mode, vec in sorted(zip(proj_modes, proj_vectors), reverse=True):
        vec = np.asarray(vec, dtype=np.complex128)
        if vec.size != ens.dims[mode]:
            raise ConfigError(f"projection vector length mismatch on mode {mode}")
        tensor = np.tensordot(tensor, vec, axes=([1 + mode], [0]))
    amps = tensor.reshape(len(weights), -1)
    per_member = np.einsum("ij,ij->i", amps, amps.conj()).real
    return float(np.dot(weights, per_member))


def mode_expectation(ens: StateEnsemble, op: np.ndarray, mode: int) -> complex:
    """Ensemble expectation value of a single-mode operator."""
    weights, matrix = ens.stack()
    batch = matrix.reshape((-1,) + ens.dims)
    acted = apply_matrix_on_modes(batch, np.asarray(op, dtype=np.complex128), (mode,))
    acted = acted.reshape(len(weights), -1)
    vals = np.einsum("ij,ij->i", matrix.conj(), acted)
    return complex(np.dot(weights, vals))


def compress_ensemble(ens: StateEnsemble, tol: float = 1e-12) -> StateEnsemble:
    """Re-decompose the ensemble into the eigenbasis of its density operator.

    Preserves the density operator up to eigenvalue mass < tol (total weight is
    renormalized onto the kept branches), so every Born-rule quantity is
    unchanged at that level while the member count drops to the numerical rank.
    Member phases and ordering are fixed deterministically.
    """
    if len(ens) <= 1:
        return ens
    weights, matrix = ens.stack()
    scaled = np.sqrt(weights)[:, None] * matrix
    _, s, vh = np.linalg.svd(scaled, full_matrices=False)
    eigvals = s**2
    keep = eigvals >= tol
    if not keep.any():
        keep[0] = True
    kept = eigvals[keep]
    rows = vh[keep]
    # deterministic phase: first significant entry of each row made real >= 0
    for row in rows:
        idx = np.argmax(np.abs(row) > 1e-10)
        z = row[idx]
        if z != 0:
            row *= np.conj(z) / abs(z)
    total = float(weights.sum())
    kept = kept * (total / kept.sum())
    return StateEnsemble.from_stack(kept, rows, ens.dims)


def tensor_product_ensemble(parts: list[StateEnsemble]) -> StateEnsemble:
    """Product ensemble over consecutive mode blocks (weights multiply)."""
    if not parts:
        raise ConfigError("need at least one factor")
    members = [(1.0, np.ones(1, dtype=np.complex128))]
    dims: tuple[int, ...] = ()
    for part in parts:
        new_members = []
        for w0, amp0 in members:
            for w1, state in part.members:
                new_members.append((w0 * w1, np.kron(amp0, state.amplitudes)))
        members = new_members
        dims = dims + part.dims
    return StateEnsemble([(w, PureStateVector(a, dims)) for w, a in members])
