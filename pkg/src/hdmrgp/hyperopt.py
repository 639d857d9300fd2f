"""Maximum-likelihood tuning of kernel length scales (and optionally delta).

Derivative-free simplex search (Nelder-Mead) in log-parameter space, run from
one or more seeded starting points under a global evaluation budget.  The
first start is always the kernel's current hyperparameters, so the returned
model can never be worse than the fixed-hyperparameter fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import get_lapack_funcs, solve_triangular
from scipy.optimize import minimize

from .gpr import TrainedModel, TrainingError, train
from .hdmr import HdmrKernelSpec, esp_from_power_sums
from .kernels import values_from_sqdist

MODES = ("shared", "per-term")

#: Simplex search degrades in high dimension; above this many per-term
#: parameters the search is refused with guidance to use shared mode.
MAX_PER_TERM_PARAMS = 64

#: Initial simplex step in log-length space (each vertex doubles one
#: parameter).  The scipy default of 5 percent is far too small for
#: order-of-magnitude hyperparameter scales.
_SIMPLEX_STEP = math.log(2.0)

#: Upper bound on the per-dimension squared-distance cache used to speed up
#: repeated Gram builds during the search.
_CACHE_LIMIT_BYTES = 2 << 30

_LOG_2PI = math.log(2.0 * math.pi)


class OptimizationError(RuntimeError):
    """Every objective evaluation failed (no factorizable Gram matrix found)."""


class _BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class OptimizationSpec:
    """Search configuration: mode, bounds, budget, restarts, seed.

    ``mode`` is "shared" (one length for every term) or "per-term" (one
    length per kernel term).  Bounds are in natural (not log) units.
    """

    mode: str = "shared"
    optimize_delta: bool = False
    length_bounds: tuple[float, float] = (1e-2, 1e2)
    delta_bounds: tuple[float, float] = (1e-8, 1e-1)
    budget: int = 200
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        for name, (lo, hi) in (("length", self.length_bounds), ("delta", self.delta_bounds)):
            if not (0.0 < lo < hi and math.isfinite(hi)):
                raise ValueError(f"{name}_bounds must satisfy 0 < lo < hi, got ({lo}, {hi})")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


@dataclass
class OptimizationResult:
    """Best hyperparameters found, the retrained model, and the evaluation trace.

    ``trace`` rows are (evaluation index, parameter values in natural units,
    log marginal likelihood); failed evaluations record NaN.  ``log_ml`` is
    exactly the maximum over the trace.
    """

    lengths: np.ndarray
    delta: float
    log_ml: float
    model: TrainedModel
    n_evaluations: int
    trace: list[tuple] = field(repr=False, default_factory=list)


def _start_lengths(spec: HdmrKernelSpec, mode: str) -> np.ndarray:
    lengths = np.array([t.kernel.length for t in spec.terms])
    if mode == "per-term":
        return lengths
    return np.array([float(np.exp(np.mean(np.log(lengths))))])


class _GramCache:
    """Per-dimension squared-distance bands for repeated Gram assembly.

    Stores the lower-triangular part of each coordinate's squared-difference
    matrix once, then reassembles the kernel matrix for new hyperparameters
    with the same elementwise arithmetic as the plain builder, so cached and
    uncached log-likelihood values agree bit for bit.  Only the lower
    triangle is filled; the factorization never reads the upper part.
    """

    def __init__(self, X: np.ndarray, dims: list[int], block: int = 512):
        m = X.shape[0]
        self.m = m
        self.bands = [(i0, min(i0 + block, m)) for i0 in range(0, m, block)]
        self.sq = {}
        for dim in dims:
            bands = []
            for i0, i1 in self.bands:
                diff = X[i0:i1, dim, None] - X[None, :i1, dim]
                bands.append(diff * diff)
            self.sq[dim] = bands

    @classmethod
    def build_if_small(cls, X: np.ndarray, spec: HdmrKernelSpec) -> Optional["_GramCache"]:
        dims = sorted({i for t in spec.terms for i in t.subset})
        m = X.shape[0]
        if len(dims) * m * m * 4 > _CACHE_LIMIT_BYTES:
            return None
        return cls(X, dims)

    def _band_fast(self, spec, band_index):
        order = len(spec.terms[0].subset)
        amplitude = spec.terms[0].amplitude
        length = spec.terms[0].kernel.length
        scale = -0.5 / (length * length)
        first = True
        for dim in range(spec.dim):
            z = np.exp(self.sq[dim][band_index] * scale)
            if first:
                power_sums = np.zeros((order,) + z.shape)
                first = False
            zp = z.copy()
            power_sums[0] += zp
            for k in range(1, order):
                zp *= z
                power_sums[k] += zp
        return amplitude * esp_from_power_sums(power_sums)

    def _band_naive(self, spec, band_index):
        out = None
        for term in spec.terms:
            d2 = self.sq[term.subset[0]][band_index].copy()
            for dim in term.subset[1:]:
                d2 += self.sq[dim][band_index]
            contrib = term.amplitude * values_from_sqdist(term.kernel, d2)
            out = contrib if out is None else out.__iadd__(contrib)
        return out

    def gram_lower(self, spec: HdmrKernelSpec, delta: float) -> np.ndarray:
        build = self._band_fast if spec.fast_path_ok else self._band_naive
        gram = np.empty((self.m, self.m))
        for b, (i0, i1) in enumerate(self.bands):
            gram[i0:i1, :i1] = build(spec, b)
        if delta > 0.0:
            gram[np.diag_indices_from(gram)] += delta
        return gram


def _log_ml_from_lower(gram: np.ndarray, f: np.ndarray) -> float:
    """Log marginal likelihood from a lower-triangle-valid jittered Gram."""
    potrf, = get_lapack_funcs(("potrf",), (gram,))
    chol, info = potrf(gram, lower=True, clean=False, overwrite_a=True)
    if info != 0:
        raise TrainingError(
            f"Gram matrix is not positive definite (leading minor {info}); increase delta",
            pivot=int(info),
        )
    half = solve_triangular(chol, f, lower=True, check_finite=False)
    coef = solve_triangular(chol, half, lower=True, trans="T", check_finite=False)
    return (
        -0.5 * float(f @ coef)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * f.size * _LOG_2PI
    )


def _initial_simplex(theta0: np.ndarray, log_lo: np.ndarray, log_hi: np.ndarray) -> np.ndarray:
    simplex = np.empty((theta0.size + 1, theta0.size))
    simplex[0] = theta0
    for i in range(theta0.size):
        vertex = theta0.copy()
        step = min(_SIMPLEX_STEP, (log_hi[i] - log_lo[i]) / 4.0)
        if vertex[i] + step > log_hi[i]:
            step = -step
        vertex[i] = min(max(vertex[i] + step, log_lo[i]), log_hi[i])
        simplex[i + 1] = vertex
    return simplex


def optimize(
    spec: HdmrKernelSpec,
    X: np.ndarray,
    f: np.ndarray,
    delta: float,
    opt: OptimizationSpec,
    scaler=None,
) -> OptimizationResult:
    """Maximize the log marginal likelihood over length scale(s) and optionally delta.

    Deterministic given (data, spec, opt.seed).  The budget caps the total
    number of objective evaluations across all restarts; with budget = 1 only
    the starting point is evaluated, so the result is the fixed-parameter
    model unchanged.
    """
    n_lengths = len(spec.terms) if opt.mode == "per-term" else 1
    if opt.mode == "per-term" and n_lengths > MAX_PER_TERM_PARAMS:
        raise ValueError(
            f"per-term optimization over {n_lengths} terms exceeds "
            f"{MAX_PER_TERM_PARAMS} parameters; use shared mode instead"
        )

    log_lo = np.full(n_lengths, math.log(opt.length_bounds[0]))
    log_hi = np.full(n_lengths, math.log(opt.length_bounds[1]))
    if opt.optimize_delta:
        log_lo = np.append(log_lo, math.log(opt.delta_bounds[0]))
        log_hi = np.append(log_hi, math.log(opt.delta_bounds[1]))

    start = np.log(np.clip(_start_lengths(spec, opt.mode), *opt.length_bounds))
    if opt.optimize_delta:
        start_delta = min(max(delta, opt.delta_bounds[0]), opt.delta_bounds[1])
        start = np.append(start, math.log(start_delta))

    X = np.ascontiguousarray(X, dtype=np.float64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    cache = _GramCache.build_if_small(X, spec)
    trace: list[tuple] = []
    state = {"count": 0}

    def split_params(theta: np.ndarray) -> tuple[np.ndarray, float]:
        theta = np.clip(theta, log_lo, log_hi)
        lengths = np.exp(theta[:n_lengths])
        delta_val = float(np.exp(theta[n_lengths])) if opt.optimize_delta else float(delta)
        return lengths, delta_val

    def objective(theta: np.ndarray) -> float:
        if state["count"] >= opt.budget:
            raise _BudgetExhausted
        state["count"] += 1
        lengths, delta_val = split_params(theta)
        candidate = spec.with_lengths(lengths if n_lengths > 1 else lengths[0])
        try:
            if cache is not None:
                log_ml = _log_ml_from_lower(cache.gram_lower(candidate, delta_val), f)
            else:
                log_ml = train(candidate, X, f, delta_val, scaler).log_ml
        except TrainingError:
            log_ml = math.nan
        trace.append((state["count"], *lengths.tolist(), delta_val, log_ml))
        return -log_ml if math.isfinite(log_ml) else 1e300

    rng = np.random.default_rng(opt.seed)
    starts = [start]
    for _ in range(opt.restarts - 1):
        starts.append(rng.uniform(log_lo, log_hi))

    bounds = list(zip(log_lo, log_hi))
    for theta0 in starts:
        if state["count"] >= opt.budget:
            break
        try:
            minimize(
                objective,
                theta0,
                method="Nelder-Mead",
                bounds=bounds,
                options={
                    "maxfev": opt.budget - state["count"],
                    "xatol": 1e-3,
                    "fatol": 1e-8,
                    "initial_simplex": _initial_simplex(theta0, log_lo, log_hi),
                },
            )
        except _BudgetExhausted:
            break

    finite = [row for row in trace if math.isfinite(row[-1])]
    if not finite:
        raise OptimizationError(
            "every objective evaluation failed; the Gram matrix could not be "
            "factorized anywhere in the search region"
        )
    best = max(finite, key=lambda row: row[-1])
    best_lengths = np.asarray(best[1 : 1 + n_lengths])
    best_delta = float(best[1 + n_lengths])
    best_spec = spec.with_lengths(best_lengths if n_lengths > 1 else best_lengths[0])
    model = train(best_spec, X, f, best_delta, scaler)
    return OptimizationResult(
        lengths=best_lengths,
        delta=best_delta,
        log_ml=float(best[-1]),
        model=model,
        n_evaluations=state["count"],
        trace=trace,
    )


def write_trace_csv(result: OptimizationResult, path, n_lengths: Optional[int] = None) -> None:
    """Write the evaluation trace as CSV (evaluation, lengths..., delta, log_ml)."""
    if n_lengths is None:
        n_lengths = result.lengths.size
    header = (
        ["evaluation"]
        + [f"length_{i + 1}" for i in range(n_lengths)]
        + ["delta", "log_ml"]
    )
    with open(path, "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in result.trace:
            cells = [str(int(row[0]))] + [f"{v:.17g}" for v in row[1:]]
            handle.write(",".join(cells) + "\n")
