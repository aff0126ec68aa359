"""
Controllability Gramian Γ = ∫₀^ℓ R(ℓ, s) ββᵀ R(ℓ, s)ᵀ ds, the regularized
resolvent V(ε, Γ) = (εI + Γ)⁻¹ and the approximate-controllability test
εV(ε, Γ) → 0.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg

from ..errors import DomainError
from ..resolvent.family import ResolventGrid

logger = logging.getLogger(__name__)

POSITIVE_VERDICT = "approximately controllable (truncation)"
NEGATIVE_VERDICT = "negative"


@dataclass(frozen=True, eq=False)
class GramianPackage:
    """Γ with eigenvalues in descending order and matching orthonormal eigenvectors (columns)."""

    gramian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    quadrature_step: float

    @property
    def state_dim(self) -> int:
        return int(self.gramian.shape[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    def is_positive_definite(self, rank_tol: float = 1e-10) -> bool:
        """λ_min > rank_tol·λ_max (and λ_max > 0)."""
        return self.lambda_max > 0.0 and self.lambda_min > rank_tol * self.lambda_max


def assemble_gramian(res: ResolventGrid, b_op: np.ndarray) -> GramianPackage:
    """Trapezoid quadrature of R(ℓ, τ_k) ββᵀ R(ℓ, τ_k)ᵀ over the grid."""
    b_op = np.atleast_2d(np.asarray(b_op, dtype=float))
    last = res.grid.size - 1
    weights = res.grid.trapezoid_weights()
    BBt = b_op @ b_op.T
    row = res.R[last]

    if res.diagonal:
        gramian = np.einsum('k,ka,ab,kb->ab', weights, row, BBt, row)
    else:
        gramian = np.einsum('k,kab,bc,kdc->ad', weights, row, BBt, row)
    gramian = 0.5 * (gramian + gramian.T)

    eigenvalues, eigenvectors = linalg.eigh(gramian)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    for arr in (gramian, eigenvalues, eigenvectors):
        arr.setflags(write=False)
    logger.info(
        f"Gramian assembled: λ_max={eigenvalues[0]:.4e}, λ_min={eigenvalues[-1]:.4e}"
    )
    return GramianPackage(
        gramian=gramian,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        quadrature_step=res.grid.step_max,
    )


@dataclass(frozen=True, eq=False)
class RegularizedResolvent:
    """z ↦ (εI + Γ)⁻¹ z applied through the eigendecomposition."""

    package: GramianPackage
    epsilon: float

    def filter_factors(self) -> np.ndarray:
        """1/(ε + λ_i); eigenvalues below zero are round-off and clipped."""
        return 1.0 / (self.epsilon + np.clip(self.package.eigenvalues, 0.0, None))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        Q = self.package.eigenvectors
        return Q @ (self.filter_factors() * (Q.T @ np.asarray(z, dtype=float)))

    def matrix(self) -> np.ndarray:
        Q = self.package.eigenvectors
        return (Q * self.filter_factors()) @ Q.T

    def scaled(self, z: np.ndarray) -> np.ndarray:
        """εV(ε, Γ) z"""
        return self.epsilon * self(z)


def regularized_resolvent(package: GramianPackage, eps: float) -> RegularizedResolvent:
    if not eps > 0.0:
        raise DomainError(f"regularization parameter must be positive, got {eps}")
    return RegularizedResolvent(package=package, epsilon=float(eps))


@dataclass
class ControllabilityReport:
    """‖εV(ε, Γ)z‖ per probe (columns) and ε (rows)."""

    epsilons: List[float]
    probe_norms: List[float]
    table: np.ndarray
    verdict: str
    positive_definite: bool
    lambda_min: float
    lambda_max: float
    normalized_final: List[float] = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return self.verdict == POSITIVE_VERDICT


def default_probes(package: GramianPackage, count: int = 5, seed: int = 0) -> np.ndarray:
    """
    Probe directions: the eigenvector of λ_min (kernel probe) followed by
    seeded random unit vectors. Rows are probes.
    """
    rng = np.random.default_rng(seed)
    dim = package.state_dim
    probes = [package.eigenvectors[:, -1]]
    while len(probes) < max(count, 1):
        v = rng.standard_normal(dim)
        probes.append(v / np.linalg.norm(v))
    return np.array(probes)


def test_linear_controllability(
    package: GramianPackage,
    eps_sequence: Sequence[float],
    probe_vectors: np.ndarray,
    decay_tol: float = 0.1,
    rank_tol: float = 1e-10,
) -> ControllabilityReport:
    """
    Tabulate ‖εV(ε, Γ)z‖ and decide approximate controllability of the truncation.

    The verdict is positive iff every probe's value at the smallest ε is at
    most decay_tol·‖z‖. The spectral criterion λ_min > rank_tol·λ_max is
    reported alongside; a disagreement is logged.
    """
    eps_sequence = [float(e) for e in eps_sequence]
    if not eps_sequence:
        raise DomainError("epsilon sequence must not be empty")
    if any(e <= 0.0 for e in eps_sequence):
        raise DomainError("epsilons must be positive")
    if any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise DomainError("epsilon sequence must be strictly decreasing")

    probes = np.atleast_2d(np.asarray(probe_vectors, dtype=float))
    norms = np.linalg.norm(probes, axis=1)
    table = np.zeros((len(eps_sequence), probes.shape[0]))
    for r, eps in enumerate(eps_sequence):
        V = regularized_resolvent(package, eps)
        for c, z in enumerate(probes):
            table[r, c] = float(np.linalg.norm(V.scaled(z)))

    safe = np.where(norms > 0.0, norms, 1.0)
    normalized = table[-1] / safe
    decays = bool(np.all(normalized <= decay_tol))
    spd = package.is_positive_definite(rank_tol)
    if decays != spd:
        logger.warning(
            f"⚠️  Decay verdict ({decays}) and spectral criterion λ_min > {rank_tol:g}·λ_max ({spd}) disagree; "
            f"extend the ε sequence or adjust decay_tol"
        )

    return ControllabilityReport(
        epsilons=eps_sequence,
        probe_norms=norms.tolist(),
        table=table,
        verdict=POSITIVE_VERDICT if decays else NEGATIVE_VERDICT,
        positive_definite=spd,
        lambda_min=package.lambda_min,
        lambda_max=package.lambda_max,
        normalized_final=normalized.tolist(),
    )

