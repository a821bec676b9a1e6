"""Scikit-learn estimator wrapper around the precoding network.

AagnnPrecoder keeps the usual conventions: constructor arguments are stored
verbatim as hyperparameters, fit() learns state into trailing-underscore
attributes, and get_params/set_params come from BaseEstimator so clone()
and grid tooling work.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import aagnn
from . import scenario
from . import training


class AagnnPrecoder(BaseEstimator):
    """Unsupervised precoder: fit on a channel dataset, predict precoders.

    Parameters mirror ModelConfig and TrainConfig. X everywhere is either a
    scenario.Dataset or a path to a saved one; predict also accepts an
    (h, assoc) pair reusing the fit-time power budget.
    """

    def __init__(self, n_layers=3, width=8, attention=True,
                 activation="leaky_relu_ri", leak_slope=0.1,
                 power_mode="full", epochs=50, batch_size=64,
                 learning_rate=0.005, eval_every=0, grad_clip=0.0, seed=0):
        self.n_layers = n_layers
        self.width = width
        self.attention = attention
        self.activation = activation
        self.leak_slope = leak_slope
        self.power_mode = power_mode
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.eval_every = eval_every
        self.grad_clip = grad_clip
        self.seed = seed

    # -- fitting -----------------------------------------------------------

    def _as_dataset(self, x):
        if isinstance(x, scenario.Dataset):
            return x
        if isinstance(x, str):
            return scenario.load_dataset(x)
        raise TypeError("expected a Dataset or a path, got %r" % type(x))

    def fit(self, X, y=None, eval_dataset=None, cache=None):
        """Train on a dataset; y is ignored (unsupervised objective)."""
        ds = self._as_dataset(X)
        self.config_ = aagnn.ModelConfig(
            n_layers=self.n_layers, width=self.width,
            attention=self.attention, activation=self.activation,
            leak_slope=self.leak_slope, power_mode=self.power_mode,
            input_scale=aagnn.calibrate_input_scale(ds.h), seed=self.seed)
        self.params_ = aagnn.init_params(
            self.config_, np.random.default_rng(self.seed))
        tc = training.TrainConfig(
            epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, seed=self.seed,
            eval_every=self.eval_every, grad_clip=self.grad_clip)
        self.power_budget_ = ds.power_budget
        self.noise_power_ = ds.noise_power
        _, self.history_ = training.train(
            self.params_, self.config_, tc, ds, eval_dataset, cache)
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this estimator is not fitted yet")

    # -- inference ---------------------------------------------------------

    def predict(self, X):
        """Precoders for every sample; shape (S, K, M, N)."""
        self._check_fitted()
        if isinstance(X, tuple):
            h, assoc = X
            return aagnn.forward(self.params_, self.config_,
                                 np.asarray(h), np.asarray(assoc),
                                 self.power_budget_)
        ds = self._as_dataset(X)
        return training.forward_dataset(self.params_, self.config_, ds)

    def transform(self, X):
        return self.predict(X)

    def score(self, X, y=None, cache=None):
        """Mean normalized sum rate; builds WMMSE references when no cache
        is supplied (slow for large sets)."""
        self._check_fitted()
        ds = self._as_dataset(X)
        if cache is None:
            cache = training.wmmse_cache_build(ds)
        return training.evaluate(self.params_, self.config_, ds,
                                 cache)["mean_norm_rate"]

    # -- persistence -------------------------------------------------------

    def save(self, path):
        self._check_fitted()
        aagnn.save_checkpoint(self.params_, self.config_, path)

    def load(self, path):
        """Load a checkpoint into this estimator (marks it fitted)."""
        self.params_, self.config_ = aagnn.load_checkpoint(path)
        self.power_budget_ = scenario.DEFAULT_POWER
        self.noise_power_ = None
        return self
