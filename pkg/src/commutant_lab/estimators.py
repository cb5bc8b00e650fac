"""Scikit-learn style wrappers around the functional analysis core.

The underlying routines stay functional; these classes exist so the
classification and symmetry-projection steps can sit inside sklearn
pipelines and cross-tool plumbing that expects the estimator protocol.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .catalog import GateSet
from .commutant import commutant
from .superalgebra import classify


def _ensure_gate_set(obj) -> GateSet:
    if not isinstance(obj, GateSet):
        raise TypeError(f"expected a GateSet, got {type(obj).__name__}")
    return obj


class UniversalityAnalyzer(BaseEstimator):
    """Classify gate sets as Universal / WeaklyNonUniversal / StronglyNonUniversal.

    ``fit`` analyzes a single gate set and exposes the decision data as
    fitted attributes; ``predict`` classifies further gate sets with the
    same settings and returns their labels.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def fit(self, X, y=None):
        gates = _ensure_gate_set(X)
        report = classify(gates, seed=self.seed)
        self.report_ = report
        self.classification_ = report.classification
        self.codim_ = report.codim
        self.dim_dla_ = report.dim_dla
        self.dim_bond_ = report.dim_bond
        self.dim_comm_ = report.dim_comm
        self.dim_scomm_ = report.dim_scomm
        self.dim_scommt_ = report.dim_scommt
        self.is_universal_ = report.classification == "Universal"
        return self

    def _check_fitted(self):
        if not hasattr(self, "report_"):
            raise NotFittedError(
                "this UniversalityAnalyzer instance is not fitted yet; "
                "call fit(gate_set) first"
            )

    def predict(self, X):
        """Labels for one gate set or an iterable of gate sets."""
        self._check_fitted()
        if isinstance(X, GateSet):
            return classify(X, seed=self.seed).classification
        return [classify(_ensure_gate_set(g), seed=self.seed).classification
                for g in X]

    def score(self, X, y=None):
        """1.0 when X lands in the same class as the fitted set, else 0.0."""
        self._check_fitted()
        return float(self.predict(X) == self.classification_)


class SymmetryProjector(BaseEstimator, TransformerMixin):
    """Project vectorized operators onto the commutant of a gate set.

    Rows of the transformed array are the components that survive the
    ensemble average; the orthogonal complement is the part scrambled by
    the dynamics.  ``score_samples`` returns the surviving weight
    fraction per row (the Mazur bound for autocorrelations).
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def fit(self, X, y=None):
        gates = _ensure_gate_set(X)
        basis = commutant(gates)
        self.basis_ = basis
        self.geometry_ = gates.geometry
        self.dimension_ = basis.dimension
        return self

    def _check_fitted(self):
        if not hasattr(self, "basis_"):
            raise NotFittedError(
                "this SymmetryProjector instance is not fitted yet; "
                "call fit(gate_set) first"
            )

    def _rows(self, X) -> np.ndarray:
        m = self.geometry_.dim ** 2
        try:
            arr = np.asarray(X, dtype=complex)
        except TypeError as exc:
            raise ValueError(
                "transform expects numeric rows of vectorized operators"
            ) from exc
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != m:
            raise ValueError(
                f"expected rows of length {m} (vectorized operators), "
                f"got shape {arr.shape}"
            )
        return arr

    def transform(self, X):
        self._check_fitted()
        rows = self._rows(X)
        cols = self.basis_.matrix
        return (rows @ cols.conj()) @ cols.T

    def score_samples(self, X):
        """Fraction of each row's squared norm inside the commutant."""
        self._check_fitted()
        rows = self._rows(X)
        coeffs = rows @ self.basis_.matrix.conj()
        inside = np.abs(coeffs) ** 2
        norms = (np.abs(rows) ** 2).sum(axis=1)
        out = np.zeros(len(rows))
        nz = norms > 0
        out[nz] = inside.sum(axis=1)[nz] / norms[nz]
        return out
