"""Input validation shared by the estimator and the CLI."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.utils.validation import check_array

from .core import CategoricalDataset, DataFormatError, DimensionMismatchError, Variable


def check_categorical(
    X,
    cardinalities: Sequence[int] | None = None,
    names: Sequence[str] | None = None,
) -> CategoricalDataset:
    """Coerce ``X`` to a ``CategoricalDataset``.

    ``X`` may already be a dataset, a pandas DataFrame (column names become
    variable names) or any 2-D integer array-like. Missing cardinalities are
    inferred as ``max(state) + 1`` with a floor of 2.
    """
    if isinstance(X, CategoricalDataset):
        if cardinalities is not None and tuple(cardinalities) != X.cardinalities:
            raise DimensionMismatchError(
                f"cardinalities {tuple(cardinalities)} differ from dataset {X.cardinalities}"
            )
        return X
    if names is None and hasattr(X, "columns"):
        names = [str(c) for c in X.columns]
    try:
        arr = check_array(X, dtype=None, ensure_min_samples=0, ensure_2d=True)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None
    if arr.dtype.kind == "f":
        if not np.all(arr == np.round(arr)):
            raise DataFormatError("records must hold integer state indices")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind not in "iub":
        raise DataFormatError(f"records must be integers, got dtype {arr.dtype}")
    N = arr.shape[1]
    if names is None:
        names = [f"x{i}" for i in range(N)]
    if len(names) != N:
        raise DimensionMismatchError(f"{len(names)} names given for {N} columns")
    if cardinalities is None:
        top = arr.max(axis=0) if arr.shape[0] else np.zeros(N, dtype=np.int64)
        cardinalities = [max(2, int(t) + 1) for t in top]
    if len(cardinalities) != N:
        raise DimensionMismatchError(f"{len(cardinalities)} cardinalities given for {N} columns")
    variables = [Variable(nm, int(c)) for nm, c in zip(names, cardinalities)]
    return CategoricalDataset(variables, arr)
