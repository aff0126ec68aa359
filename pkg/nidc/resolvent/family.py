"""
Resolvent family R(t, s) and its s-derivative on a time grid.

For each base node τ_j the matrix IVP

    ∂²R/∂t²(t, τ_j) = A(t) R(t, τ_j) + ∫_{τ_j}^t ζ(t, τ) R(τ, τ_j) dτ
    R(τ_j, τ_j) = 0,  ∂R/∂t(τ_j, τ_j) = I

is integrated with the two-step central-difference (Störmer) scheme and a
trapezoid memory sum. D = ∂R/∂s satisfies the same equation with
D(τ_j, τ_j) = -I and ∂D/∂t(τ_j, τ_j) = 0. All base indices advance
together, one time row per step.

When every A(τ_i) and ζ(τ_i, τ_k) sample is diagonal the family is stored
as per-mode scalars, shape (K+1, K+1, M); otherwise as full matrices,
shape (K+1, K+1, M, M). Entries above the diagonal are zero and unused.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import DomainError, NonFiniteSampleError, ResolventBlowUpError
from ..model.spec import ProblemSpec
from .grid import TimeGrid

logger = logging.getLogger(__name__)

SCHEME_ORDER = 2


@dataclass(frozen=True, eq=False)
class OperatorSamples:
    """A(τ_i) and ζ(τ_i, τ_k), k <= i, sampled on a grid."""

    a_samples: np.ndarray
    kernel_samples: Optional[np.ndarray]
    diagonal: bool

    @property
    def has_memory(self) -> bool:
        return self.kernel_samples is not None


@dataclass(frozen=True, eq=False)
class ResolventGrid:
    """R(τ_i, τ_j) and ∂R/∂s(τ_i, τ_j) for i >= j."""

    grid: TimeGrid
    R: np.ndarray
    dsR: np.ndarray
    diagonal: bool
    state_dim: int
    scheme_order: int = SCHEME_ORDER
    memory_free: bool = False
    content_hash: str = ""

    def _array(self, which: str) -> np.ndarray:
        if which == "R":
            return self.R
        if which == "dsR":
            return self.dsR
        raise ValueError(f"unknown resolvent component '{which}'")

    def node_matrix(self, which: str, i: int, j: int) -> np.ndarray:
        """Stored M×M matrix at node pair (i, j), i >= j."""
        if j > i:
            raise DomainError(f"node pair ({i}, {j}) lies above the diagonal")
        value = self._array(which)[i, j]
        return np.diag(value) if self.diagonal else value

    def row_matrices(self, which: str, i: int) -> np.ndarray:
        """X(τ_i, τ_k) for k = 0..K as full matrices (zero for k > i)."""
        row = self._array(which)[i]
        if self.diagonal:
            out = np.zeros((row.shape[0], self.state_dim, self.state_dim))
            idx = np.arange(self.state_dim)
            out[:, idx, idx] = row
            return out
        return row

    def convolve(self, which: str, weights: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """out[i] = Σ_k weights[i, k] X(τ_i, τ_k) vectors[k]"""
        X = self._array(which)
        if self.diagonal:
            return np.einsum('ik,ika,ka->ia', weights, X, vectors)
        return np.einsum('ik,ikab,kb->ia', weights, X, vectors)

    def row_apply(self, which: str, i: int, weights: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """Σ_k weights[k] X(τ_i, τ_k) vectors[k] for a single row i."""
        row = self._array(which)[i]
        if self.diagonal:
            return np.einsum('k,ka,ka->a', weights, row, vectors)
        return np.einsum('k,kab,kb->a', weights, row, vectors)

    def column_apply(self, which: str, j: int, vector: np.ndarray) -> np.ndarray:
        """out[i] = X(τ_i, τ_j) v for every i (zero for i < j)."""
        column = self._array(which)[:, j]
        if self.diagonal:
            return column * vector[None, :]
        return column @ vector

    def row_transpose_apply(self, which: str, i: int, vector: np.ndarray) -> np.ndarray:
        """out[k] = X(τ_i, τ_k)ᵀ v for every k."""
        row = self._array(which)[i]
        if self.diagonal:
            return row * vector[None, :]
        return np.einsum('kba,b->ka', row, vector)


# =============================================================================
# Sampling
# =============================================================================

def _checked(value, name: str, where: str, shape: Tuple[int, ...]) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise DomainError(f"{name} at {where} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteSampleError(name, where)
    return arr


def _off_diagonal_zero(stack: np.ndarray) -> bool:
    dim = stack.shape[-1]
    if dim == 1:
        return True
    mask = ~np.eye(dim, dtype=bool)
    return not np.any(stack[..., mask])


def sample_operators(spec: ProblemSpec, grid: TimeGrid, include_kernel: bool = True) -> OperatorSamples:
    """
    Evaluate A on every node and ζ on every node pair k <= i.

    The kernel is dropped (memory-free stepping) when include_kernel is False
    or every sample is zero.
    """
    dim = spec.state_dim
    nodes = grid.nodes
    size = grid.size

    a_samples = np.array([_checked(spec.a_op(t), "a_op", f"t={t:.6g}", (dim, dim)) for t in nodes])
    diagonal = _off_diagonal_zero(a_samples)

    if not include_kernel or getattr(spec.kernel, "vanishes", False):
        return OperatorSamples(a_samples=a_samples, kernel_samples=None, diagonal=diagonal)

    kernel = np.zeros((size, size, dim, dim))
    for i, t in enumerate(nodes):
        row = np.array([spec.kernel(t, s) for s in nodes[:i + 1]], dtype=float)
        if row.shape != (i + 1, dim, dim):
            raise DomainError(f"kernel at t={t:.6g} has shape {row.shape[1:]}, expected {(dim, dim)}")
        if not np.all(np.isfinite(row)):
            k = int(np.argwhere(~np.isfinite(row))[0][0])
            raise NonFiniteSampleError("kernel", f"(t, s)=({t:.6g}, {nodes[k]:.6g})")
        kernel[i, :i + 1] = row

    if not np.any(kernel):
        logger.debug("Kernel vanishes on the grid; memory term skipped")
        return OperatorSamples(a_samples=a_samples, kernel_samples=None, diagonal=diagonal)

    diagonal = diagonal and _off_diagonal_zero(kernel)
    return OperatorSamples(a_samples=a_samples, kernel_samples=kernel, diagonal=diagonal)


# =============================================================================
# Time stepping
# =============================================================================

def _blow_up_check(R_row: np.ndarray, D_row: np.ndarray, t: float, cap: float, grid: TimeGrid) -> None:
    peak = max(float(np.max(np.abs(R_row))), float(np.max(np.abs(D_row))))
    if not np.isfinite(peak) or peak > cap:
        raise ResolventBlowUpError(
            f"resolvent norm {peak:.3e} exceeds cap {cap:.1e} at t={t:.6g}; "
            f"refine grid_step (currently {grid.step_max:.3e})"
        )


def _step_diagonal(samples: OperatorSamples, grid: TimeGrid, cap: float) -> Tuple[np.ndarray, np.ndarray]:
    h = grid.steps
    size = grid.size
    a = np.einsum('kaa->ka', samples.a_samples)
    dim = a.shape[1]
    z = np.einsum('ikaa->ika', samples.kernel_samples) if samples.has_memory else None

    R = np.zeros((size, size, dim))
    D = np.zeros((size, size, dim))
    diag = np.arange(size)
    D[diag, diag] = -1.0

    for i in range(size - 1):
        hi = h[i]
        z_ii = z[i, i] if z is not None else 0.0
        da = (a[i + 1] - a[i]) / hi

        R[i + 1, i] = hi + hi ** 3 / 6.0 * a[i] + hi ** 4 / 24.0 * (2.0 * da + z_ii)
        D[i + 1, i] = -1.0 - hi ** 2 / 2.0 * a[i] - hi ** 3 / 6.0 * (da + z_ii)

        if i >= 1:
            hp = h[i - 1]
            Ri, Rm = R[i, :i], R[i - 1, :i]
            Di, Dm = D[i, :i], D[i - 1, :i]
            FR = a[i] * Ri
            FD = a[i] * Di
            if z is not None:
                w = grid.trapezoid_weights(i)
                wz = w[:, None] * z[i, :i + 1]
                FR = FR + np.einsum('ka,kja->ja', wz, R[:i + 1, :i])
                FD = FD + np.einsum('ka,kja->ja', wz, D[:i + 1, :i])
                # k = j endpoint: weight h_j/2 instead of the interior weight, D(τ_j, τ_j) = -1
                FD = FD + (w[:i] - h[:i] / 2.0)[:, None] * z[i, :i]
            coef = hi * (hi + hp) / 2.0
            R[i + 1, :i] = Ri + (hi / hp) * (Ri - Rm) + coef * FR
            D[i + 1, :i] = Di + (hi / hp) * (Di - Dm) + coef * FD

        _blow_up_check(R[i + 1], D[i + 1], grid.nodes[i + 1], cap, grid)

    return R, D


def _step_full(samples: OperatorSamples, grid: TimeGrid, cap: float) -> Tuple[np.ndarray, np.ndarray]:
    h = grid.steps
    size = grid.size
    A = samples.a_samples
    dim = A.shape[1]
    Z = samples.kernel_samples
    eye = np.eye(dim)

    R = np.zeros((size, size, dim, dim))
    D = np.zeros((size, size, dim, dim))
    diag = np.arange(size)
    D[diag, diag] = -eye

    for i in range(size - 1):
        hi = h[i]
        Z_ii = Z[i, i] if Z is not None else 0.0
        dA = (A[i + 1] - A[i]) / hi

        R[i + 1, i] = hi * eye + hi ** 3 / 6.0 * A[i] + hi ** 4 / 24.0 * (2.0 * dA + Z_ii)
        D[i + 1, i] = -eye - hi ** 2 / 2.0 * A[i] - hi ** 3 / 6.0 * (dA + Z_ii)

        if i >= 1:
            hp = h[i - 1]
            Ri, Rm = R[i, :i], R[i - 1, :i]
            Di, Dm = D[i, :i], D[i - 1, :i]
            FR = np.einsum('ab,jbc->jac', A[i], Ri)
            FD = np.einsum('ab,jbc->jac', A[i], Di)
            if Z is not None:
                w = grid.trapezoid_weights(i)
                wZ = w[:, None, None] * Z[i, :i + 1]
                FR = FR + np.einsum('kab,kjbc->jac', wZ, R[:i + 1, :i])
                FD = FD + np.einsum('kab,kjbc->jac', wZ, D[:i + 1, :i])
                FD = FD + (w[:i] - h[:i] / 2.0)[:, None, None] * Z[i, :i]
            coef = hi * (hi + hp) / 2.0
            R[i + 1, :i] = Ri + (hi / hp) * (Ri - Rm) + coef * FR
            D[i + 1, :i] = Di + (hi / hp) * (Di - Dm) + coef * FD

        _blow_up_check(R[i + 1], D[i + 1], grid.nodes[i + 1], cap, grid)

    return R, D


def build_from_samples(
    samples: OperatorSamples,
    grid: TimeGrid,
    cap: float = 1e8,
    content_hash: str = "",
) -> ResolventGrid:
    """Integrate the resolvent IVPs for pre-sampled operators."""
    dim = samples.a_samples.shape[1]
    mode = "diagonal" if samples.diagonal else "full-matrix"
    logger.info(
        f"🚀 Building resolvent: M={dim}, K={grid.size - 1}, step_max={grid.step_max:.3e}, "
        f"{mode}, memory={'on' if samples.has_memory else 'off'}"
    )
    if samples.diagonal:
        R, D = _step_diagonal(samples, grid, cap)
    else:
        R, D = _step_full(samples, grid, cap)

    R.setflags(write=False)
    D.setflags(write=False)
    return ResolventGrid(
        grid=grid,
        R=R,
        dsR=D,
        diagonal=samples.diagonal,
        state_dim=dim,
        memory_free=not samples.has_memory,
        content_hash=content_hash,
    )


def build_resolvent_grid(spec: ProblemSpec, grid: TimeGrid, cap: float = 1e8) -> ResolventGrid:
    """R and ∂R/∂s for the spec's A and ζ on the grid."""
    return build_from_samples(sample_operators(spec, grid), grid, cap)


def build_sine_family(spec: ProblemSpec, grid: TimeGrid, cap: float = 1e8) -> ResolventGrid:
    """Memory-free family S(t, s): same stepper with ζ switched off."""
    return build_from_samples(sample_operators(spec, grid, include_kernel=False), grid, cap)


# =============================================================================
# Interpolation
# =============================================================================

def _corner(res: ResolventGrid, which: str, a: int, b: int) -> np.ndarray:
    """Stored value, extended above the diagonal by R(τ_i, τ_{i+1}) := -R(τ_{i+1}, τ_i)."""
    if b <= a:
        return res.node_matrix(which, a, b)
    mirrored = res.node_matrix(which, b, a)
    return -mirrored if which == "R" else mirrored


def _interpolate(res: ResolventGrid, which: str, t: float, s: float) -> np.ndarray:
    if s > t:
        raise DomainError(f"resolvent evaluated above the diagonal: s={s} > t={t}")
    grid = res.grid
    i, wt = grid.bracket(t)
    j, ws = grid.bracket(s)

    # snap to exact nodes so node pairs return the stored matrix unchanged
    if wt == 1.0:
        i, wt = i + 1, 0.0
    if ws == 1.0:
        j, ws = j + 1, 0.0
    if wt == 0.0 and ws == 0.0:
        return res.node_matrix(which, i, j).copy()

    i1 = min(i + 1, grid.size - 1)
    j1 = min(j + 1, grid.size - 1)
    return (
        (1.0 - wt) * (1.0 - ws) * _corner(res, which, i, j)
        + (1.0 - wt) * ws * _corner(res, which, i, j1)
        + wt * (1.0 - ws) * _corner(res, which, i1, j)
        + wt * ws * _corner(res, which, i1, j1)
    )


def eval_R(res: ResolventGrid, t: float, s: float) -> np.ndarray:
    """R(t, s) by bilinear interpolation, 0 <= s <= t <= ℓ."""
    return _interpolate(res, "R", t, s)


def eval_dsR(res: ResolventGrid, t: float, s: float) -> np.ndarray:
    """∂R/∂s(t, s) by bilinear interpolation, 0 <= s <= t <= ℓ."""
    return _interpolate(res, "dsR", t, s)
