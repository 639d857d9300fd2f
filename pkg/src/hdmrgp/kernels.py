"""Stationary covariance functions of the Matern family.

Four closed-form instances are supported: the simple exponential, Matern 3/2,
Matern 5/2, and the squared exponential.  All have unit self-covariance
k(x, x) = 1; per-term amplitudes live at the additive-kernel level, not here.
Distances are meant to be computed in scaled coordinate space, which is why a
single isotropic length scale per kernel suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Recognized family names, as used in configuration files and the CLI.
FAMILIES = ("se", "exp", "matern32", "matern52")

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class BaseKernel:
    """A unit-variance stationary kernel with an isotropic length scale.

    Parameters
    ----------
    family : str
        One of ``"se"`` (squared exponential), ``"exp"`` (simple
        exponential), ``"matern32"``, ``"matern52"``.
    length : float
        Positive length scale, in the same units as the (scaled) inputs.
    """

    family: str = "se"
    length: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}"
            )
        length = float(self.length)
        if not (math.isfinite(length) and length > 0.0):
            raise ValueError(f"length scale must be positive and finite, got {self.length!r}")
        object.__setattr__(self, "length", length)

    def with_length(self, length: float) -> "BaseKernel":
        """Return a copy of this kernel with a different length scale."""
        return BaseKernel(self.family, float(length))


def profile(family: str, t):
    """Kernel value at normalized distance ``t = r / length`` (scalar or array).

    Values decay from 1 at t = 0 strictly monotonically.  When the exponent
    underflows, the value flushes to 0.0 silently; positive semi-definiteness
    is unaffected.
    """
    if family == "se":
        return np.exp(-0.5 * t * t)
    if family == "exp":
        return np.exp(-t)
    if family == "matern32":
        u = _SQRT3 * t
        return (1.0 + u) * np.exp(-u)
    if family == "matern52":
        u = _SQRT5 * t
        return (1.0 + u + u * u / 3.0) * np.exp(-u)
    raise ValueError(f"unknown kernel family {family!r}")


def values_from_sqdist(kernel: BaseKernel, sqdist):
    """Kernel values from squared distances; skips the sqrt for the SE family."""
    if kernel.family == "se":
        return np.exp(sqdist * (-0.5 / (kernel.length * kernel.length)))
    return profile(kernel.family, np.sqrt(sqdist) / kernel.length)


def eval_base(kernel: BaseKernel, r: float) -> float:
    """Evaluate the kernel at a nonnegative scalar distance ``r``.

    Raises ``ValueError`` for negative or non-finite distances.
    """
    r = float(r)
    if not math.isfinite(r) or r < 0.0:
        raise ValueError(f"distance must be a finite nonnegative real, got {r!r}")
    return float(profile(kernel.family, r / kernel.length))


def eval_on_subset(kernel: BaseKernel, subset, x, x2) -> float:
    """Evaluate the kernel on the Euclidean distance restricted to ``subset``.

    ``subset`` is a sequence of coordinate indices valid for both points.  For
    the squared-exponential family this equals the product over the selected
    coordinates of the corresponding one-dimensional kernel values.
    """
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    idx = list(subset)
    dim = min(x.shape[-1], x2.shape[-1])
    if any((not 0 <= i < dim) for i in idx):
        raise ValueError(f"subset {tuple(idx)} has indices outside [0, {dim})")
    diff = x[..., idx] - x2[..., idx]
    return float(values_from_sqdist(kernel, float(np.dot(diff, diff))))
