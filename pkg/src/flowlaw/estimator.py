"""scikit-learn style front end for the flow-stress network."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .mlp import NormalizationRanges, predict_physical
from .training import Dataset, TrainConfig, init_model, train_adam


def _check_inputs(X):
    if X.shape[1] != 3:
        raise ValueError(f"X must have 3 columns (eps_p, rate, T), got {X.shape[1]}")
    if np.any(X[:, 1] <= 0):
        raise ValueError("strain rates (column 1) must be strictly positive")
    return X


class FlowStressRegressor(RegressorMixin, BaseEstimator):
    """Neural-network flow law ``sigma(eps_p, rate, T)``.

    ``X`` columns are plastic strain, plastic strain rate [1/s] and
    temperature [C]; ``y`` is the flow stress [MPa]. Scaling ranges are taken
    from the training data. After fitting, :meth:`predict_derivatives` returns
    the analytic partial derivatives of the fitted surface.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        One or two hidden widths.
    activation : {"sigmoid", "tanh"}
    max_iter : int
        Full-batch ADAM iterations.
    learning_rate, lr_final, schedule, beta2
        Step-size settings, see :class:`~flowlaw.training.TrainConfig`.
    random_state : int
        Seed for the weight initialisation.
    eps_dot_ref : float
        Reference rate used in the ``ln(rate / eps_dot_ref)`` input.
    rate_scaling : {"chain", "linear"}
        How the rate derivative is mapped back to physical units.
    """

    def __init__(self, hidden_layer_sizes=(15, 7), activation="sigmoid", max_iter=10_000,
                 learning_rate=0.1, lr_final=1e-5, schedule="cosine", beta2=0.95,
                 random_state=0, eps_dot_ref=1.0, rate_scaling="chain"):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.max_iter = max_iter
        self.learning_rate = learning_rate
        self.lr_final = lr_final
        self.schedule = schedule
        self.beta2 = beta2
        self.random_state = random_state
        self.eps_dot_ref = eps_dot_ref
        self.rate_scaling = rate_scaling

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        X = _check_inputs(X)
        self.n_features_in_ = X.shape[1]
        data = Dataset(X[:, 0], X[:, 1], X[:, 2], y)
        ranges = NormalizationRanges.from_data(X[:, 0], X[:, 1], X[:, 2], y, self.eps_dot_ref)
        seed = 0 if self.random_state is None else int(self.random_state)
        model = init_model(tuple(self.hidden_layer_sizes), self.activation, ranges, seed)
        cfg = TrainConfig(iterations=self.max_iter, learning_rate=self.learning_rate,
                          seed=seed, schedule=self.schedule, lr_final=self.lr_final,
                          beta2=self.beta2)
        self.model_, history = train_adam(model, data, cfg)
        self.loss_curve_ = np.array([erms for _, erms in history])
        self.n_iter_ = self.max_iter
        return self

    @classmethod
    def from_model(cls, model, **params):
        """Wrap an already trained :class:`~flowlaw.mlp.MlpModel`."""
        est = cls(hidden_layer_sizes=model.widths, activation=model.activation,
                  eps_dot_ref=model.ranges.eps_dot_ref, **params)
        est.model_ = model
        est.n_features_in_ = 3
        return est

    def _physical(self, X):
        check_is_fitted(self, "model_")
        X = _check_inputs(check_array(X, dtype=np.float64))
        return predict_physical(self.model_, X[:, 0], X[:, 1], X[:, 2], self.rate_scaling)

    def predict(self, X):
        """Flow stress [MPa] for each row of ``X``."""
        return self._physical(X)[0]

    def predict_derivatives(self, X):
        """Array (n_samples, 3) of d sigma / d(eps_p, rate, T)."""
        return np.column_stack(self._physical(X)[1:])
