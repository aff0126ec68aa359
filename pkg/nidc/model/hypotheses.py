"""
Sampled estimates of the hypothesis constants and the existence check.

Sample sets (all deterministic):

- (t, s) pairs: grid nodes for the resolvent bounds; a fixed subset of at
  most PROBE_TIMES grid nodes for kernel and nonlinearity constants.
- State probes: the origin plus radii r·k/2^level (k = 1..2^level) along
  ±unit vectors and the first 2^level directions of a seeded random
  sequence. Raising the level only adds probes, so every estimate is
  non-decreasing in the level.

The graph norm on D(A) is taken as ‖x‖_A = (‖x‖² + ‖A(0)x‖²)^{1/2}.
"""

import logging
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from ..errors import NonFiniteSampleError
from ..resolvent.bounds import verify_resolvent_bounds
from ..resolvent.family import ResolventGrid, build_sine_family
from ..resolvent.grid import TimeGrid
from .segment import HistorySegment
from .spec import ProblemSpec

logger = logging.getLogger(__name__)

PROBE_TIMES = 17
LATTICE_SEED = 0


class HypothesisReport(BaseModel):
    """Sampled constants; sample_counts maps constant name -> number of samples behind it."""

    model_config = ConfigDict(frozen=True)

    M1_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    M2_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    LR_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    MR_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    sigma_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    r1_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    r2_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    L2_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    dq_est: List[float] = Field(default_factory=list)
    eq_est: List[float] = Field(default_factory=list)
    lambda_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    h1_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    h2_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    Lzeta_est: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    existence_lhs: float = Field(default=0.0, allow_inf_nan=False)
    probe_radius: float = Field(default=1.0, gt=0.0)
    probe_level: int = Field(default=0, ge=0)
    sample_counts: Dict[str, int] = Field(default_factory=dict)


class ExistenceVerdict(BaseModel):
    """Outcome of the sufficient existence condition lhs < 1."""

    model_config = ConfigDict(frozen=True)

    verdict: str
    lhs: float
    terms: Dict[str, float]
    under_probed: List[str] = Field(default_factory=list)


# =============================================================================
# Sampling helpers
# =============================================================================

def probe_lattice(dim: int, radius: float, level: int, seed: int = LATTICE_SEED) -> np.ndarray:
    """Nested state probes (rows), origin first."""
    count = 2 ** level
    eye = np.eye(dim)
    random = np.random.default_rng(seed).standard_normal((count, dim))
    random /= np.linalg.norm(random, axis=1, keepdims=True)
    directions = np.vstack([eye, -eye, random])
    radii = radius * np.arange(1, count + 1) / count
    shells = (radii[:, None, None] * directions[None, :, :]).reshape(-1, dim)
    return np.vstack([np.zeros((1, dim)), shells])


def probe_time_indices(grid: TimeGrid) -> np.ndarray:
    count = min(PROBE_TIMES, grid.size)
    return np.unique(np.linspace(0, grid.size - 1, count).round().astype(int))


def _sample(value, name: str, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteSampleError(name, where)
    return arr


def _graph_norm_inverse(spec: ProblemSpec) -> np.ndarray:
    """W = (I + A(0)ᵀA(0))^{-1/2}, so that ‖Wy‖ = ‖x‖_A when y = (I + A(0)ᵀA(0))x."""
    A0 = _sample(spec.a_op(0.0), "a_op", "t=0")
    gram = np.eye(spec.state_dim) + A0.T @ A0
    mu, Q = linalg.eigh(gram)
    return (Q / np.sqrt(mu)) @ Q.T


def _spectral(matrix: np.ndarray) -> float:
    return float(np.linalg.norm(matrix, ord=2))


# =============================================================================
# Estimators
# =============================================================================

def _forcing_constants(spec, times, probes, radius):
    norms = np.linalg.norm(probes, axis=1)
    inside = norms <= radius * (1.0 + 1e-12)
    nu = np.zeros(len(times))
    for a, t in enumerate(times):
        for x in probes[inside]:
            value = _sample(spec.f1(t, x), "f1", f"t={t:.6g}, x={np.array2string(x, precision=3)}")
            nu[a] = max(nu[a], float(np.linalg.norm(value)))
    if len(times) > 1:
        weights = np.zeros(len(times))
        h = np.diff(times)
        weights[:-1] += h / 2.0
        weights[1:] += h / 2.0
        nu_l2 = float(np.sqrt(np.dot(weights, nu ** 2)))
    else:
        nu_l2 = float(nu[0]) * np.sqrt(spec.horizon)
    return nu_l2 / radius, int(inside.sum())


def _neutral_constants(spec, times, probes, window):
    norms = np.linalg.norm(probes, axis=1)
    segments = [HistorySegment.constant(x, window=window) for x in probes]
    values = np.zeros((len(times), len(probes), spec.state_dim))
    for a, t in enumerate(times):
        for b, segment in enumerate(segments):
            values[a, b] = _sample(spec.f2(t, segment), "f2", f"t={t:.6g}, probe {b}")
    magnitudes = np.linalg.norm(values, axis=-1)

    r1 = float(np.max(magnitudes[:, 0]))
    nonzero = norms > 0.0
    r2 = 0.0
    if np.any(nonzero):
        r2 = float(max(0.0, np.max((magnitudes[:, nonzero] - r1) / norms[nonzero])))

    # Lipschitz pairs: origin, antipode and the outermost probe of the same direction
    outer = np.max(norms)
    L2, pairs = 0.0, 0
    index = {tuple(np.round(p, 12)): b for b, p in enumerate(probes)}
    for b in np.flatnonzero(nonzero):
        x = probes[b]
        partners = [0]
        antipode = index.get(tuple(np.round(-x, 12)))
        if antipode is not None:
            partners.append(antipode)
        far = index.get(tuple(np.round(x * outer / norms[b], 12)))
        if far is not None and far != b:
            partners.append(far)
        for c in partners:
            gap = float(np.linalg.norm(probes[b] - probes[c]))
            if gap == 0.0:
                continue
            pairs += 1
            L2 = max(L2, float(np.max(np.linalg.norm(values[:, b] - values[:, c], axis=-1))) / gap)
    return r1, r2, L2, pairs


def _impulse_constants(spec, probes):
    norms = np.linalg.norm(probes, axis=1)
    dq, eq = [], []
    for q, (I_q, J_q) in enumerate(zip(spec.impulses.jump_state, spec.impulses.jump_velocity), start=1):
        d = e = 0.0
        for x, n in zip(probes, norms):
            d = max(d, float(np.linalg.norm(_sample(I_q(x), f"I_{q}", f"‖x‖={n:.4g}"))) / (n + 1.0))
            e = max(e, float(np.linalg.norm(_sample(J_q(x), f"J_{q}", f"‖x‖={n:.4g}"))) / (n + 1.0))
        dq.append(d)
        eq.append(e)
    return dq, eq


def _kernel_constants(spec, grid, time_idx):
    """ħ₁ and L_ζ over probe-time pairs s <= t, in the graph norm of A(0)."""
    if getattr(spec.kernel, "vanishes", False):
        return 0.0, 0.0, 0
    W = _graph_norm_inverse(spec)
    nodes = grid.nodes
    h1 = Lz = 0.0
    pairs = 0
    for a, i in enumerate(time_idx):
        for j in time_idx[:a + 1]:
            Z = _sample(spec.kernel(nodes[i], nodes[j]), "kernel", f"(t, s)=({nodes[i]:.6g}, {nodes[j]:.6g})")
            h1 = max(h1, _spectral(Z @ W))
            pairs += 1
            if a > 0 and time_idx[a - 1] >= j:
                t_prev = nodes[time_idx[a - 1]]
                Z_prev = np.asarray(spec.kernel(t_prev, nodes[j]), dtype=float)
                Lz = max(Lz, _spectral((Z - Z_prev) @ W) / (nodes[i] - t_prev))
    return h1, Lz, pairs


def _memory_sine_constant(spec, grid, time_idx, sine_family: Optional[ResolventGrid]):
    """ħ₂ = max ‖∫_η^t S(t, s) ζ(s, η) ds‖ over probe-time pairs η <= t."""
    if getattr(spec.kernel, "vanishes", False):
        return 0.0, 0
    S = sine_family if sine_family is not None else build_sine_family(spec, grid)
    nodes = grid.nodes
    h = grid.steps
    h2 = 0.0
    pairs = 0
    for eta in time_idx:
        column = np.array([spec.kernel(s, nodes[eta]) for s in nodes[eta:]])
        for t in time_idx[time_idx >= eta]:
            if t == eta:
                pairs += 1
                continue
            w = np.zeros(t - eta + 1)
            w[:-1] += h[eta:t] / 2.0
            w[1:] += h[eta:t] / 2.0
            S_row = S.row_matrices("R", t)[eta:t + 1]
            integral = np.einsum('k,kab,kbc->ac', w, S_row, column[:t - eta + 1])
            h2 = max(h2, _spectral(integral))
            pairs += 1
    return h2, pairs


def estimate_constants(
    spec: ProblemSpec,
    grid: TimeGrid,
    resolvent: ResolventGrid,
    probe_radius: float,
    level: int = 3,
    control=None,
    sine_family: Optional[ResolventGrid] = None,
) -> HypothesisReport:
    """
    Sampled hypothesis constants for the spec on the grid.

    Args:
        spec: Problem description
        grid: Grid the resolvent was built on
        resolvent: Resolvent family of the spec
        probe_radius: Radius r of the state-probe lattice
        level: Lattice level (2**level shells)
        control: Optional ControlSignal; gives λ = max‖u‖/r
        sine_family: Optional pre-built memory-free family for ħ₂

    Raises:
        NonFiniteSampleError: a map returned NaN/inf; names the map and the probe point
    """
    bounds = verify_resolvent_bounds(resolvent)
    probes = probe_lattice(spec.state_dim, probe_radius, level)
    time_idx = probe_time_indices(grid)
    times = grid.nodes[time_idx]
    window = max(spec.history.memory_window, grid.horizon)

    sigma, sigma_count = _forcing_constants(spec, times, probes, probe_radius)
    r1, r2, L2, pair_count = _neutral_constants(spec, times, probes, window)
    dq, eq = _impulse_constants(spec, probes)
    h1, Lz, kernel_pairs = _kernel_constants(spec, grid, time_idx)
    h2, memory_pairs = _memory_sine_constant(spec, grid, time_idx, sine_family)
    lam = control.sup_norm() / probe_radius if control is not None else 0.0

    counts = {
        'resolvent': bounds.node_pairs,
        'sigma': sigma_count * len(times),
        'r1': len(times),
        'r2': len(probes) * len(times),
        'L2': pair_count,
        'dq': len(probes) if dq else 0,
        'eq': len(probes) if eq else 0,
    }
    if kernel_pairs:
        counts['h1'] = kernel_pairs
        counts['Lzeta'] = kernel_pairs
    if memory_pairs:
        counts['h2'] = memory_pairs

    fields = dict(
        M1_est=bounds.M1,
        M2_est=bounds.M2,
        LR_est=bounds.LR,
        MR_est=bounds.MR,
        sigma_est=sigma,
        r1_est=r1,
        r2_est=r2,
        L2_est=L2,
        dq_est=dq,
        eq_est=eq,
        lambda_est=lam,
        h1_est=h1,
        h2_est=h2,
        Lzeta_est=Lz,
        probe_radius=probe_radius,
        probe_level=level,
        sample_counts={k: v for k, v in counts.items() if k not in ('dq', 'eq') or v},
    )
    lhs = sum(existence_terms(HypothesisReport(**fields), spec).values())
    report = HypothesisReport(**fields, existence_lhs=lhs)
    logger.info(
        f"Hypothesis constants: M1={bounds.M1:.4g}, M2={bounds.M2:.4g}, σ={sigma:.4g}, "
        f"r2={r2:.4g}, L2={L2:.4g}, Σd={sum(dq):.4g}, Σe={sum(eq):.4g}, existence lhs={lhs:.4g}"
    )
    return report


def existence_terms(report: HypothesisReport, spec: ProblemSpec) -> Dict[str, float]:
    """Summands of 2M₁ + M₂ + r₂K₂ + M₁ℓσ + M₁‖β‖λℓ + M₁Σe_q + M₂Σd_q with K₂ = 1."""
    beta_norm = _spectral(spec.b_op) if spec.b_op.size else 0.0
    ell = spec.horizon
    return {
        '2M1': 2.0 * report.M1_est,
        'M2': report.M2_est,
        'r2K2': report.r2_est,
        'M1*ell*sigma': report.M1_est * ell * report.sigma_est,
        'M1*|beta|*lambda*ell': report.M1_est * beta_norm * report.lambda_est * ell,
        'M1*sum_e': report.M1_est * float(sum(report.eq_est)),
        'M2*sum_d': report.M2_est * float(sum(report.dq_est)),
    }


def check_existence_condition(report: HypothesisReport, spec: ProblemSpec, min_probes: int = 8) -> ExistenceVerdict:
    """
    "holds" iff the left-hand side is below 1, "fails" otherwise;
    "inconclusive" when any constant rests on fewer than min_probes samples.
    """
    terms = existence_terms(report, spec)
    lhs = float(sum(terms.values()))
    under = sorted(name for name, count in report.sample_counts.items() if count < min_probes)
    if under:
        verdict = "inconclusive"
    elif lhs < 1.0:
        verdict = "holds"
    else:
        verdict = "fails"
    return ExistenceVerdict(verdict=verdict, lhs=lhs, terms=terms, under_probed=under)
