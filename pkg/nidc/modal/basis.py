"""
Dirichlet sine basis on (0, 2π).

    ϑ_m(y) = sin(m y)/√π,  m = 1..M,  eigenvalues -m² of ∂²/∂y²

Projections use composite Gauss–Legendre quadrature; the panel count is
doubled until the Gram matrix of the first 2M basis functions equals the
identity to 1e-10.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import DomainError, NonFiniteSampleError

logger = logging.getLogger(__name__)

DOMAIN_LENGTH = 2.0 * np.pi
POINTS_PER_PANEL = 16
GRAM_TOL = 1e-10
MAX_PANELS = 4096


def basis_functions(modes: Sequence[int], y: np.ndarray) -> np.ndarray:
    """Matrix [ϑ_m(y_i)], shape (len(y), len(modes))."""
    y = np.asarray(y, dtype=float)
    m = np.asarray(modes, dtype=float)
    return np.sin(np.outer(y, m)) / np.sqrt(np.pi)


def composite_gauss_legendre(panels: int, points: int = POINTS_PER_PANEL):
    """Nodes and weights on [0, 2π] with `panels` equal panels."""
    ref_nodes, ref_weights = leggauss(points)
    edges = np.linspace(0.0, DOMAIN_LENGTH, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """First M sine modes with their quadrature."""

    mode_count: int
    eigenvalues: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    panels: int

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.mode_count + 1)

    @property
    def evaluation(self) -> np.ndarray:
        """[ϑ_m(y_i)] at the quadrature nodes, shape (nodes, M)."""
        return basis_functions(self.modes, self.nodes)

    def gram_error(self, extra_modes: int = 0) -> float:
        """max |⟨ϑ_m, ϑ_n⟩_quad - δ_mn| over the first M + extra_modes modes."""
        values = basis_functions(np.arange(1, self.mode_count + extra_modes + 1), self.nodes)
        gram = values.T @ (self.weights[:, None] * values)
        return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))

    def sample(self, field: Callable, name: str = "field") -> np.ndarray:
        """field evaluated at the quadrature nodes (vectorized when possible)."""
        try:
            values = np.asarray(field(self.nodes), dtype=float)
        except (TypeError, ValueError):
            values = None
        if values is None or values.shape != self.nodes.shape:
            values = np.array([float(field(y)) for y in self.nodes])
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise NonFiniteSampleError(name, f"y={self.nodes[bad[0]]:.6g}")
        return values

    def l2_norm(self, field: Callable) -> float:
        values = self.sample(field)
        return float(np.sqrt(np.dot(self.weights, values ** 2)))


def build_mode_basis(mode_count: int, points_per_panel: int = POINTS_PER_PANEL, gram_tol: float = GRAM_TOL) -> ModeBasis:
    """
    Sine basis with a quadrature resolving products of the first 2M modes.

    Raises:
        DomainError: mode_count < 1, or no panel count up to MAX_PANELS meets gram_tol
    """
    if mode_count < 1:
        raise DomainError(f"mode_count must be >= 1, got {mode_count}")

    panels = max(4, 2 * mode_count)
    while panels <= MAX_PANELS:
        nodes, weights = composite_gauss_legendre(panels, points_per_panel)
        basis = ModeBasis(
            mode_count=mode_count,
            eigenvalues=-np.arange(1, mode_count + 1, dtype=float) ** 2,
            nodes=nodes,
            weights=weights,
            panels=panels,
        )
        error = basis.gram_error(extra_modes=mode_count)
        if error <= gram_tol:
            logger.debug(f"Mode basis: M={mode_count}, {panels} panels, Gram error {error:.1e}")
            return basis
        panels *= 2
    raise DomainError(f"quadrature did not resolve {2 * mode_count} modes to {gram_tol:g}")


def project_field(basis: ModeBasis, field: Callable) -> np.ndarray:
    """Coefficients ⟨field, ϑ_m⟩, m = 1..M."""
    values = basis.sample(field)
    return basis.evaluation.T @ (basis.weights * values)


def reconstruct_field(basis: ModeBasis, coeffs: Sequence[float], points: Sequence[float]) -> np.ndarray:
    """Σ_m coeffs_m ϑ_m(y) at each point."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.mode_count,):
        raise DomainError(f"expected {basis.mode_count} coefficients, got shape {coeffs.shape}")
    return basis_functions(basis.modes, np.asarray(points, dtype=float)) @ coeffs
