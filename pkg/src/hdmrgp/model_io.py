"""Versioned model file: a self-describing NPZ container.

The file stores the scaled training inputs and targets, the coefficient
vector, the kernel term list, delta, the scaler, and the log marginal
likelihood.  The Cholesky factor is deliberately not stored: it is recomputed
on load and the stored coefficients are verified against the rebuilt Gram
matrix to detect corruption.
"""

from __future__ import annotations

import json

import numpy as np

from .data import Scaler
from .gpr import TrainedModel, _cholesky_in_place, build_gram
from .hdmr import spec_from_term_list, term_list_from_spec

FORMAT_VERSION = 1

#: Relative max-norm tolerance for the stored-coefficient residual check.
RESIDUAL_TOL = 1e-8


class ModelFileError(RuntimeError):
    """The model file is malformed, of an unknown version, or corrupted."""


def save_model(model: TrainedModel, path) -> None:
    meta = {
        "format_version": FORMAT_VERSION,
        "dim": model.spec.dim,
        "delta": model.delta,
        "log_ml": model.log_ml,
        "scaler_kind": model.scaler.kind,
        "terms": term_list_from_spec(model.spec),
    }
    np.savez(
        path,
        meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        X=model.X,
        f=model.f,
        coef=model.coef,
        x_offset=model.scaler.x_offset,
        x_scale=model.scaler.x_scale,
        y_params=np.array([model.scaler.y_offset, model.scaler.y_scale]),
    )


def load_model(path) -> TrainedModel:
    """Load a model file, rebuild the Cholesky factor, and verify the coefficients."""
    try:
        with np.load(path) as archive:
            arrays = {key: archive[key] for key in archive.files}
    except (OSError, ValueError) as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    try:
        meta = json.loads(bytes(arrays["meta"]).decode("utf-8"))
        version = meta["format_version"]
        if version != FORMAT_VERSION:
            raise ModelFileError(
                f"unsupported model format version {version} (expected {FORMAT_VERSION})"
            )
        spec = spec_from_term_list(meta["dim"], meta["terms"])
        scaler = Scaler(
            meta["scaler_kind"],
            np.asarray(arrays["x_offset"], dtype=np.float64),
            np.asarray(arrays["x_scale"], dtype=np.float64),
            float(arrays["y_params"][0]),
            float(arrays["y_params"][1]),
        )
        X = np.asarray(arrays["X"], dtype=np.float64)
        f = np.asarray(arrays["f"], dtype=np.float64)
        coef = np.asarray(arrays["coef"], dtype=np.float64)
        delta = float(meta["delta"])
        log_ml = float(meta["log_ml"])
    except ModelFileError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelFileError(f"malformed model file {path}: {exc}") from exc

    if X.ndim != 2 or f.shape != (X.shape[0],) or coef.shape != f.shape:
        raise ModelFileError(f"inconsistent array shapes in model file {path}")

    gram = build_gram(spec, X, delta)
    residual = float(np.max(np.abs(gram @ coef - f)))
    scale = float(np.max(np.abs(f))) or 1.0
    if residual > RESIDUAL_TOL * scale:
        raise ModelFileError(
            f"model file {path} failed the coefficient residual check "
            f"({residual:.3e} > {RESIDUAL_TOL:.0e} * {scale:.3e}); file is corrupted"
        )
    chol = _cholesky_in_place(gram)
    return TrainedModel(
        X=X,
        f=f,
        spec=spec,
        delta=delta,
        chol=chol,
        coef=coef,
        scaler=scaler,
        log_ml=log_ml,
    )
