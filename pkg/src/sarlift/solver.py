"""Trace-minimization over the PSD cone via dual ascent with projection.

The constrained problem (minimize a trace-weighted strictly convex
objective subject to data consistency and positive semi-definiteness)
is solved by alternating a closed-form primal update with a dual
gradient step:

    rho^k  = project_psd(reshape(F^H xi^k) - lambda * I)
    xi^k+1 = xi^k + beta * (data - F vec(rho^k))

starting from xi^0 = 0 (hence rho^0 = 0).  The primal update is an
eigenvalue shift-and-clamp; at a fixed point the iterate is data
consistent and the dual certifies optimality.

Step-size rules:
  * "auto"   - beta = safety * min(1/sigma, 2/sigma^2) with sigma the
               largest singular value of F.  The 2/sigma^2 branch is the
               provably convergent dual-ascent bound; conservative.
  * "scaled" - beta = c / sigma^2.  Values of c well above 2 are the
               practical choice: the worst-case bound is loose because
               the iterates live on low-rank faces of the cone where the
               effective curvature is far smaller than sigma^2.
  * "fixed"  - beta given literally.
"""

from dataclasses import dataclass, field

import warnings

import numpy as np

from .errors import (
    DimensionError,
    DivergenceError,
    EigendecompositionError,
    InvalidConfigError,
)
from .forward import largest_singular_value
from .metrics import numerical_rank_from_eigenvalues
from .scene import KroneckerMatrix


@dataclass
class SolverConfig:
    trace_weight: float = 20.0        # lambda, weight of the trace term
    step_rule: str = "auto"           # "auto" | "scaled" | "fixed"
    step_size: float = None           # beta for "fixed", c for "scaled"
    step_safety: float = 0.9
    max_iterations: int = 5000
    data_tolerance: float = 0.0       # stop when E_d <= this (0 = run full)
    rank_threshold: float = 1e-3      # relative eigenvalue cutoff for rank
    log_stride: int = 10
    divergence_factor: float = 10.0   # abort when E_d grows this much per 100 its

    def __post_init__(self):
        if not self.trace_weight > 0:
            raise InvalidConfigError("trace_weight must be > 0")
        if self.max_iterations < 1:
            raise InvalidConfigError("max_iterations must be >= 1")
        if self.step_rule not in ("auto", "scaled", "fixed"):
            raise InvalidConfigError("step_rule must be auto, scaled or fixed")
        if self.step_rule in ("scaled", "fixed") and not self.step_size:
            raise InvalidConfigError(f"step_rule {self.step_rule!r} needs step_size")
        if self.log_stride < 1:
            raise InvalidConfigError("log_stride must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    trace: float
    numerical_rank: int
    data_error: float  # E_d; NaN when the data vector is zero


@dataclass
class SolverState:
    iterate: np.ndarray               # current rho^k (npix x npix)
    dual: np.ndarray                  # current xi^k (MP,)
    history: list = field(default_factory=list)


def resolve_step_size(config, operator):
    """Translate the configured step rule into a numeric beta."""
    if config.step_rule == "fixed":
        return float(config.step_size)
    sigma = largest_singular_value(operator)
    if sigma == 0.0:
        raise InvalidConfigError("operator has zero norm; cannot derive a step")
    if config.step_rule == "scaled":
        return float(config.step_size) / sigma ** 2
    return config.step_safety * min(1.0 / sigma, 2.0 / sigma ** 2)


def _eigh_checked(h):
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        fro = float(np.linalg.norm(h))
        raise EigendecompositionError(
            f"eigendecomposition failed (matrix {h.shape}, fro norm {fro:.3e}, "
            f"max |entry| {np.max(np.abs(h)):.3e}): {exc}") from exc


def psd_project(matrix):
    """Frobenius-nearest PSD matrix to the Hermitian part of the input.

    Hermitizes, clamps negative eigenvalues to zero, and reassembles.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError("psd_project needs a square matrix")
    h = 0.5 * (matrix + matrix.conj().T)
    w, q = _eigh_checked(h)
    return _reassemble(w, q, matrix.shape[0])[0]


def _reassemble(w, q, n):
    """Rebuild sum_j max(w_j, 0) q_j q_j^H; returns (matrix, clamped eigvals)."""
    wp = np.clip(w, 0.0, None)
    pos = np.nonzero(wp)[0]
    if pos.size == 0:
        return np.zeros((n, n), dtype=complex), wp
    qp = q[:, pos]
    out = (qp * wp[pos]) @ qp.conj().T
    return 0.5 * (out + out.conj().T), wp


def _primal_update(operator, dual, trace_weight):
    """rho = project_psd(reshape(F^H xi) - lambda I), plus its eigenpairs."""
    h = operator.adjoint_matrix(dual)
    h = 0.5 * (h + h.conj().T)
    np.fill_diagonal(h, h.diagonal() - trace_weight)
    w, q = _eigh_checked(h)
    rho, wp = _reassemble(w, q, h.shape[0])
    return rho, wp, q


def _model_data(operator, wp, q):
    """F vec(rho) computed from the eigenpairs of the current iterate."""
    pos = np.nonzero(wp)[0]
    if pos.size == 0:
        return np.zeros(operator.shape[0], dtype=complex)
    return operator.apply_lifted(q[:, pos], wp[pos])


def uzawa_step(state, operator, data, config, step_size=None):
    """One primal-dual update; returns a new SolverState (history shared)."""
    if step_size is None:
        step_size = resolve_step_size(config, operator)
    data = np.asarray(data, dtype=complex)
    rho, wp, q = _primal_update(operator, state.dual, config.trace_weight)
    residual = data - _model_data(operator, wp, q)
    return SolverState(iterate=rho, dual=state.dual + step_size * residual,
                       history=state.history)


def solve(operator, data, config, grid=None):
    """Run the dual-ascent iteration to data consistency.

    Returns (KroneckerMatrix, history).  History records (iteration,
    trace, numerical rank, E_d) every config.log_stride iterations plus
    the final iterate; E_d is NaN for a zero data vector.  Raises
    DivergenceError when E_d both grows by more than the configured
    factor over 100 iterations and exceeds the trivial-iterate level
    (healthy runs can rebound off an early transient dip, which is not
    divergence).
    """
    data = np.asarray(data, dtype=complex).reshape(-1)
    if data.size != operator.shape[0]:
        raise DimensionError("data length does not match the operator")
    beta = resolve_step_size(config, operator)
    norm_data = float(np.linalg.norm(data))
    dual = np.zeros(data.size, dtype=complex)
    history = []
    errors = np.empty(config.max_iterations + 1)
    final_rho = None
    for k in range(config.max_iterations + 1):
        rho, wp, q = _primal_update(operator, dual, config.trace_weight)
        residual = data - _model_data(operator, wp, q)
        res_norm = float(np.linalg.norm(residual))
        e_d = res_norm / norm_data if norm_data > 0 else float("nan")
        errors[k] = e_d
        trace = float(wp.sum())
        rank = numerical_rank_from_eigenvalues(wp, config.rank_threshold)
        last = (k == config.max_iterations)
        stop = (res_norm == 0.0
                or (config.data_tolerance > 0 and np.isfinite(e_d)
                    and e_d <= config.data_tolerance))
        if k % config.log_stride == 0 or last or stop:
            history.append(IterationRecord(k, trace, rank, e_d))
        if stop or last:
            final_rho = rho
            break
        if not np.isfinite(e_d) and norm_data > 0:
            raise DivergenceError(
                f"non-finite data error at iteration {k}", history)
        if (k >= 100 and np.isfinite(e_d)
                and e_d > config.divergence_factor * errors[k - 100]
                and e_d > 2.0):
            raise DivergenceError(
                f"data error grew from {errors[k - 100]:.3e} to {e_d:.3e} "
                f"over 100 iterations (iteration {k}); step size {beta:.3e} "
                "is likely unstable", history)
        dual = dual + beta * residual
    return KroneckerMatrix(final_rho, grid), history


def extract_reflectivity(kron, grid=None):
    """Leading-eigenpair reflectivity estimate from a Kronecker scene.

    Returns sqrt(lam1) * v1 with the global phase rotated so the
    largest-magnitude entry is real and positive (ties broken by lowest
    index).  A non-positive leading eigenvalue yields an all-zero image
    with a warning.
    """
    entries = kron.entries if isinstance(kron, KroneckerMatrix) else np.asarray(kron)
    h = 0.5 * (entries + entries.conj().T)
    w, q = _eigh_checked(h)
    lam1 = w[-1]
    n = h.shape[0]
    if lam1 <= 0:
        warnings.warn("leading eigenvalue is not positive; returning an "
                      "empty scene", RuntimeWarning)
        values = np.zeros(n, dtype=complex)
    else:
        v = q[:, -1]
        j = int(np.argmax(np.abs(v)))  # argmax takes the lowest index on ties
        phase = np.exp(-1j * np.angle(v[j])) if v[j] != 0 else 1.0
        values = np.sqrt(lam1) * v * phase
    target_grid = grid if grid is not None else getattr(kron, "grid", None)
    if target_grid is None:
        return values
    from .scene import ReflectivityImage
    return ReflectivityImage(target_grid, values)
