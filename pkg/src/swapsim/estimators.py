"""scikit-learn style wrappers around the functional core.

These are thin adapters: the physics lives in :mod:`swapsim.experiment`,
:mod:`swapsim.measurement` and :mod:`swapsim.tomography`. They exist so the
pieces compose with ``Pipeline``/``clone``/``get_params`` tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .device import QUBITS, default_config, load_config
from .experiment import ExperimentMode, run_experiment
from .measurement import ConfusionModel, OutcomeDistribution, apply_confusion, readout_correct
from .tomography import linear_inversion, project_physical


class ReadoutCorrector(TransformerMixin, BaseEstimator):
    """Invert per-qubit assignment errors on rows of outcome probabilities.

    Parameters
    ----------
    qubits : tuple of int
        Qubits spanned by each row (outcome bits in this order).
    config : str or None
        Device configuration file; ``None`` uses the bundled device.
    clip : bool
        Clip negative corrected entries and renormalise.
    """

    def __init__(self, qubits=QUBITS, config=None, clip=True):
        self.qubits = qubits
        self.config = config
        self.clip = clip

    def fit(self, X=None, y=None):
        cfg = load_config(self.config) if self.config else default_config()
        self.model_ = ConfusionModel.from_config(cfg)
        self.n_features_in_ = 2 ** len(self.qubits)
        return self

    def _rows(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2 ** len(self.qubits):
            raise ValueError(f"expected {2 ** len(self.qubits)} columns, got {X.shape[1]}")
        return X

    def transform(self, X):
        check_is_fitted(self, "model_")
        rows = self._rows(X)
        return np.array([readout_correct(OutcomeDistribution(self.qubits, r), self.model_, self.clip).probs
                         for r in rows])

    def inverse_transform(self, X):
        """Apply the confusion map (true -> reported)."""
        check_is_fitted(self, "model_")
        rows = self._rows(X)
        return np.array([apply_confusion(OutcomeDistribution(self.qubits, r), self.model_).probs for r in rows])


class StateTomographer(TransformerMixin, BaseEstimator):
    """Rows of 36 probabilities (9 settings x 4 outcomes) -> 4x4 density matrices."""

    def __init__(self, project=True):
        self.project = project

    def fit(self, X=None, y=None):
        self.n_features_in_ = 36
        return self

    def transform(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 36:
            raise ValueError(f"expected 36 columns (9 settings x 4 outcomes), got {X.shape[1]}")
        out = []
        for row in X:
            rho = linear_inversion({k: row[4 * k: 4 * k + 4] for k in range(9)})
            out.append(project_physical(rho) if self.project else rho)
        return np.array(out)


class SwappingSimulator(BaseEstimator):
    """Runs one swapping experiment on ``fit``.

    There is no training data: ``X`` is ignored and ``fit`` simply runs the
    simulation; results are exposed as fitted attributes.

    Attributes
    ----------
    report_ : ExperimentReport
    probabilities_, fidelities_, concurrences_ : ndarray of shape (4,)
        Per-anchor values in anchor order 00, 01, 10, 11.
    """

    def __init__(self, mode="normal", fidelity_mode="effective", sampling="exact", shots=10000, seed=0,
                 config=None, cutoff=None):
        self.mode = mode
        self.fidelity_mode = fidelity_mode
        self.sampling = sampling
        self.shots = shots
        self.seed = seed
        self.config = config
        self.cutoff = cutoff

    def fit(self, X=None, y=None):
        cfg = load_config(self.config) if self.config else default_config()
        if self.cutoff is not None:
            cfg = cfg.with_cutoff(self.cutoff)
        mode = ExperimentMode(self.mode, self.fidelity_mode, self.sampling, self.shots, self.seed)
        self.report_ = run_experiment(cfg, mode)
        self.probabilities_ = self.report_.probabilities
        self.fidelities_ = self.report_.fidelities
        self.concurrences_ = self.report_.concurrences
        return self

    def transform(self, X=None):
        """Table of (probability, fidelity, concurrence) per anchor."""
        check_is_fitted(self, "report_")
        return np.column_stack([self.probabilities_, self.fidelities_, self.concurrences_])

    def fit_transform(self, X=None, y=None):
        return self.fit(X, y).transform(X)

    def score(self, X=None, y=None):
        """Mean conditional fidelity."""
        check_is_fitted(self, "report_")
        return float(np.mean(self.fidelities_))
