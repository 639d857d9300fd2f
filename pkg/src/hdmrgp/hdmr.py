"""Additive kernels summed over variable subsets.

A kernel spec holds a list of (subset, amplitude, base kernel) terms; the
summed kernel k(x, x') = sum_S A_S k_S(x_S, x'_S) is evaluated either naively
term by term or, for the uniform squared-exponential case, through the
elementary symmetric polynomial of the per-coordinate kernel values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .kernels import BaseKernel, values_from_sqdist

#: Newton's identities alternate in sign; beyond this subset order the
#: cancellation risk outweighs the speedup and the naive sum is used instead.
MAX_FAST_ORDER = 25


def validate_subset(subset, dim: int) -> tuple[int, ...]:
    """Normalize ``subset`` to a tuple and check it indexes [0, dim) strictly increasing."""
    idx = tuple(int(i) for i in subset)
    if not idx:
        raise ValueError("subset must be non-empty")
    if any(i < 0 or i >= dim for i in idx):
        raise ValueError(f"subset {idx} has indices outside [0, {dim})")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError(f"subset {idx} must be strictly increasing")
    return idx


def all_subsets(dim: int, order: int) -> list[tuple[int, ...]]:
    """All C(dim, order) subsets of {0, ..., dim-1} of size ``order``, lexicographic."""
    if not 1 <= order <= dim:
        raise ValueError(f"order must satisfy 1 <= order <= dim, got order={order}, dim={dim}")
    return list(itertools.combinations(range(dim), order))


@dataclass(frozen=True)
class HdmrTerm:
    """One additive term: a variable subset, its amplitude, and its base kernel."""

    subset: tuple[int, ...]
    amplitude: float
    kernel: BaseKernel

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))
        object.__setattr__(self, "amplitude", float(self.amplitude))


@dataclass(frozen=True)
class HdmrKernelSpec:
    """An additive kernel over variable subsets.

    Invariants enforced at construction: subsets are distinct, strictly
    increasing, within [0, dim); amplitudes are positive and finite.

    ``fast_path_ok`` is derived: true iff every term has the same subset size
    d <= MAX_FAST_ORDER, the terms cover all C(dim, d) subsets, and they share
    a single squared-exponential kernel and a single amplitude.
    """

    dim: int
    terms: tuple[HdmrTerm, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not self.terms:
            raise ValueError("spec must contain at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))
        seen = set()
        for term in self.terms:
            idx = validate_subset(term.subset, self.dim)
            if idx in seen:
                raise ValueError(f"duplicate subset {idx} in spec")
            seen.add(idx)
            if not (math.isfinite(term.amplitude) and term.amplitude > 0.0):
                raise ValueError(
                    f"amplitude for subset {idx} must be positive, got {term.amplitude!r}"
                )
        object.__setattr__(self, "fast_path_ok", self._derive_fast_path())

    def _derive_fast_path(self) -> bool:
        orders = {len(t.subset) for t in self.terms}
        if len(orders) != 1:
            return False
        order = orders.pop()
        if order > MAX_FAST_ORDER:
            return False
        if len(self.terms) != math.comb(self.dim, order):
            return False
        kernels = {t.kernel for t in self.terms}
        if len(kernels) != 1 or next(iter(kernels)).family != "se":
            return False
        return len({t.amplitude for t in self.terms}) == 1

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def self_covariance(self) -> float:
        """k(x, x) = sum of amplitudes (all base kernels have unit self-covariance)."""
        return float(sum(t.amplitude for t in self.terms))

    def with_lengths(self, lengths) -> "HdmrKernelSpec":
        """Return a spec with per-term length scales replaced.

        ``lengths`` is either a scalar (shared by every term) or a sequence
        with one entry per term.
        """
        arr = np.asarray(lengths, dtype=np.float64)
        if arr.ndim == 0:
            arr = np.full(len(self.terms), float(arr))
        if arr.shape != (len(self.terms),):
            raise ValueError(f"expected {len(self.terms)} lengths, got shape {arr.shape}")
        terms = tuple(
            HdmrTerm(t.subset, t.amplitude, t.kernel.with_length(l))
            for t, l in zip(self.terms, arr)
        )
        return HdmrKernelSpec(self.dim, terms)

    def with_amplitude_scale(self, scale: float) -> "HdmrKernelSpec":
        """Return a spec with every amplitude multiplied by ``scale`` > 0."""
        terms = tuple(
            HdmrTerm(t.subset, t.amplitude * float(scale), t.kernel) for t in self.terms
        )
        return HdmrKernelSpec(self.dim, terms)


def uniform_spec(dim: int, order: int, kernel: BaseKernel) -> HdmrKernelSpec:
    """All C(dim, order) subsets with one shared kernel and amplitude 1/C(dim, order).

    With ``order == dim`` this is a plain single-kernel GP kernel (one term,
    amplitude 1).
    """
    subsets = all_subsets(dim, order)
    amplitude = 1.0 / len(subsets)
    return HdmrKernelSpec(dim, tuple(HdmrTerm(s, amplitude, kernel) for s in subsets))


def random_amplitude_spec(
    dim: int,
    order: int,
    kernel: BaseKernel,
    seed: int,
    low: float = 0.1,
    high: float = 10.0,
) -> HdmrKernelSpec:
    """Like :func:`uniform_spec` but with log-uniform random positive amplitudes.

    Each amplitude is drawn from a log-uniform distribution on
    ``[low/N, high/N]`` with N = C(dim, order), so the kernel magnitude stays
    comparable to the uniform case.
    """
    if not (0.0 < low < high):
        raise ValueError(f"need 0 < low < high, got low={low}, high={high}")
    subsets = all_subsets(dim, order)
    rng = np.random.default_rng(seed)
    factors = np.exp(rng.uniform(math.log(low), math.log(high), size=len(subsets)))
    amplitudes = factors / len(subsets)
    return HdmrKernelSpec(
        dim, tuple(HdmrTerm(s, float(a), kernel) for s, a in zip(subsets, amplitudes))
    )


def spec_from_term_list(dim: int, entries) -> HdmrKernelSpec:
    """Build a spec from explicit term descriptors.

    Each entry is a mapping with keys ``subset`` (list of indices),
    ``amplitude``, ``family``, ``length``.  This is the form used in
    configuration files and in the model file.
    """
    terms = []
    for entry in entries:
        subset = validate_subset(entry["subset"], dim)
        kernel = BaseKernel(entry["family"], float(entry["length"]))
        terms.append(HdmrTerm(subset, float(entry["amplitude"]), kernel))
    return HdmrKernelSpec(dim, tuple(terms))


def term_list_from_spec(spec: HdmrKernelSpec) -> list[dict]:
    """Inverse of :func:`spec_from_term_list`."""
    return [
        {
            "subset": list(t.subset),
            "amplitude": t.amplitude,
            "family": t.kernel.family,
            "length": t.kernel.length,
        }
        for t in spec.terms
    ]


def _check_point(spec: HdmrKernelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.dim,):
        raise ValueError(f"point has shape {x.shape}, expected ({spec.dim},)")
    return x


def eval_hdmr(spec: HdmrKernelSpec, x, x2) -> float:
    """Naive term-by-term evaluation of the additive kernel at one point pair."""
    x = _check_point(spec, x)
    x2 = _check_point(spec, x2)
    total = 0.0
    for term in spec.terms:
        diff = x[list(term.subset)] - x2[list(term.subset)]
        total += term.amplitude * float(
            values_from_sqdist(term.kernel, float(np.dot(diff, diff)))
        )
    return total


def esp_from_power_sums(power_sums: np.ndarray) -> np.ndarray:
    """Elementary symmetric polynomial e_d from power sums p_1..p_d.

    ``power_sums`` has shape (d, ...); entry k-1 holds p_k = sum_i z_i**k.
    Uses Newton's identities  k * e_k = sum_{j=1..k} (-1)**(j-1) e_{k-j} p_j
    in double precision.
    """
    d = power_sums.shape[0]
    e = [np.ones_like(power_sums[0])]
    for k in range(1, d + 1):
        acc = e[k - 1] * power_sums[0]
        sign = -1.0
        for j in range(2, k + 1):
            acc = acc + sign * e[k - j] * power_sums[j - 1]
            sign = -sign
        e.append(acc / k)
    return e[d]


def _fast_term_params(spec: HdmrKernelSpec):
    term = spec.terms[0]
    return len(term.subset), term.amplitude, term.kernel.length


def eval_hdmr_fast(spec: HdmrKernelSpec, x, x2) -> float:
    """Fast-path evaluation via the elementary symmetric polynomial.

    Requires ``spec.fast_path_ok``: with per-coordinate squared-exponential
    values z_i = exp(-(x_i - x'_i)^2 / (2 l^2)), the uniform order-d additive
    kernel equals A * e_d(z_1, ..., z_D).
    """
    if not spec.fast_path_ok:
        raise ValueError("spec does not satisfy the fast-path preconditions")
    x = _check_point(spec, x)
    x2 = _check_point(spec, x2)
    order, amplitude, length = _fast_term_params(spec)
    diff = x - x2
    z = np.exp(diff * diff * (-0.5 / (length * length)))
    power_sums = np.empty(order)
    zp = z.copy()
    power_sums[0] = zp.sum()
    for k in range(1, order):
        zp *= z
        power_sums[k] = zp.sum()
    return float(amplitude * esp_from_power_sums(power_sums))


def _row_block_size(n_cols: int, target_entries: int = 4_000_000) -> int:
    return max(1, target_entries // max(1, n_cols))


def _fast_block(spec: HdmrKernelSpec, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Fast-path kernel matrix block between row points ``xa`` and column points ``xb``."""
    order, amplitude, length = _fast_term_params(spec)
    scale = -0.5 / (length * length)
    shape = (xa.shape[0], xb.shape[0])
    power_sums = np.zeros((order,) + shape)
    for i in range(spec.dim):
        diff = xa[:, i, None] - xb[None, :, i]
        z = np.exp(diff * diff * scale)
        zp = z.copy()
        power_sums[0] += zp
        for k in range(1, order):
            zp *= z
            power_sums[k] += zp
    return amplitude * esp_from_power_sums(power_sums)


def _naive_block(spec: HdmrKernelSpec, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Term-by-term kernel matrix block between ``xa`` and ``xb``."""
    shape = (xa.shape[0], xb.shape[0])
    sq = {}

    def sqdiff(i: int) -> np.ndarray:
        if i not in sq:
            diff = xa[:, i, None] - xb[None, :, i]
            sq[i] = diff * diff
        return sq[i]

    out = np.zeros(shape)
    for term in spec.terms:
        d2 = sqdiff(term.subset[0]).copy()
        for i in term.subset[1:]:
            d2 += sqdiff(i)
        out += term.amplitude * values_from_sqdist(term.kernel, d2)
    return out


def kernel_matrix(
    spec: HdmrKernelSpec,
    xa: np.ndarray,
    xb: np.ndarray,
    symmetric: bool = False,
) -> np.ndarray:
    """Dense matrix of kernel values between two point sets, built in row blocks.

    Uses the elementary-symmetric-polynomial path when ``spec.fast_path_ok``
    and the naive per-term sum otherwise.  With ``symmetric=True`` (callers
    must pass the same array twice) only the upper triangle is computed and
    mirrored.
    """
    xa = np.ascontiguousarray(xa, dtype=np.float64)
    xb = np.ascontiguousarray(xb, dtype=np.float64)
    if xa.ndim != 2 or xb.ndim != 2 or xa.shape[1] != spec.dim or xb.shape[1] != spec.dim:
        raise ValueError(
            f"expected 2-D point arrays with {spec.dim} columns, "
            f"got shapes {xa.shape} and {xb.shape}"
        )
    block = _fast_block if spec.fast_path_ok else _naive_block
    n_a, n_b = xa.shape[0], xb.shape[0]
    rows = _row_block_size(n_b)
    out = np.empty((n_a, n_b))
    if symmetric:
        if n_a != n_b:
            raise ValueError("symmetric=True requires square output")
        for i0 in range(0, n_a, rows):
            i1 = min(i0 + rows, n_a)
            band = block(spec, xa[i0:i1], xb[i0:])
            out[i0:i1, i0:] = band
            out[i1:, i0:i1] = band[:, i1 - i0 :].T
        return out
    for i0 in range(0, n_a, rows):
        i1 = min(i0 + rows, n_a)
        out[i0:i1] = block(spec, xa[i0:i1], xb)
    return out
