"""Incremental neural data rate predictor for the online-learning experiment.

Two sigmoid hidden layers of 10 neurons, identity output, momentum SGD with
learning rate 0.1 and momentum 0.001.  Online updates buffer samples locally
and apply one gradient step per full 32-element minibatch, then clear the
buffer.  Inputs are standardized with the pretraining-set mean/std.
"""

from __future__ import annotations

import numpy as np

from .metrics import evaluate


class IncrementalNetRegressor:
    def __init__(self, n_inputs=8, hidden=(10, 10), learning_rate=0.1,
                 momentum=0.001, batch_size=32, seed=0):
        self.n_inputs = n_inputs
        self.hidden = tuple(hidden)
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.seed = seed
        rng = np.random.default_rng(seed)
        sizes = [n_inputs, *self.hidden, 1]
        self.weights_ = [rng.uniform(-0.5, 0.5, size=(sizes[i], sizes[i + 1]))
                         for i in range(len(sizes) - 1)]
        self.biases_ = [rng.uniform(-0.5, 0.5, size=sizes[i + 1])
                        for i in range(len(sizes) - 1)]
        self._velocity_w = [np.zeros_like(w) for w in self.weights_]
        self._velocity_b = [np.zeros_like(b) for b in self.biases_]
        self.mean_ = np.zeros(n_inputs)
        self.std_ = np.ones(n_inputs)
        self._buffer_x = []
        self._buffer_t = []

    def get_params(self, deep=True):
        return {"n_inputs": self.n_inputs, "hidden": self.hidden,
                "learning_rate": self.learning_rate,
                "momentum": self.momentum, "batch_size": self.batch_size,
                "seed": self.seed}

    # -- forward / backward -------------------------------------------------

    def _standardize(self, X):
        return (np.asarray(X, dtype=float) - self.mean_) / self.std_

    def _forward(self, Z):
        activations = [Z]
        a = Z
        for i, (w, b) in enumerate(zip(self.weights_, self.biases_)):
            z = a @ w + b
            a = z if i == len(self.weights_) - 1 else 1.0 / (1.0 + np.exp(-z))
            activations.append(a)
        return activations

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_inputs:
            raise ValueError(
                f"feature arity mismatch: expected {self.n_inputs}")
        return self._forward(self._standardize(X))[-1][:, 0]

    def _gradients(self, Z, t):
        """Mean-squared-error gradients for a standardized batch."""
        acts = self._forward(Z)
        n = Z.shape[0]
        delta = 2.0 * (acts[-1][:, 0] - t)[:, None] / n
        grads_w, grads_b = [], []
        for i in reversed(range(len(self.weights_))):
            grads_w.insert(0, acts[i].T @ delta)
            grads_b.insert(0, delta.sum(axis=0))
            if i > 0:
                delta = (delta @ self.weights_[i].T) * acts[i] * (1 - acts[i])
        return grads_w, grads_b

    def batch_loss(self, X, t):
        pred = self.predict(X)
        return float(np.mean((pred - np.asarray(t, dtype=float)) ** 2))

    def _step(self, Z, t):
        grads_w, grads_b = self._gradients(Z, t)
        for i in range(len(self.weights_)):
            self._velocity_w[i] = (self.momentum * self._velocity_w[i]
                                   - self.learning_rate * grads_w[i])
            self._velocity_b[i] = (self.momentum * self._velocity_b[i]
                                   - self.learning_rate * grads_b[i])
            self.weights_[i] += self._velocity_w[i]
            self.biases_[i] += self._velocity_b[i]

    # -- training -----------------------------------------------------------

    def fit(self, X, y, epochs=500):
        """Offline pretraining with minibatch momentum SGD."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.std_ = np.where(std > 0, std, 1.0)
        Z = self._standardize(X)
        rng = np.random.default_rng(self.seed + 1)
        n = X.shape[0]
        for _ in range(epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                self._step(Z[idx], y[idx])
        return self

    def update_online(self, x, target):
        """Buffer one sample; apply a gradient step per full minibatch.

        Returns True when a weight update was applied.
        """
        self._buffer_x.append(np.asarray(x, dtype=float))
        self._buffer_t.append(float(target))
        if len(self._buffer_x) < self.batch_size:
            return False
        Z = self._standardize(np.array(self._buffer_x))
        t = np.array(self._buffer_t)
        self._step(Z, t)
        self._buffer_x.clear()
        self._buffer_t.clear()
        return True

    # -- weight vector access (used by the gradient check) -------------------

    def weight_vector(self):
        parts = [w.ravel() for w in self.weights_] + \
                [b.ravel() for b in self.biases_]
        return np.concatenate(parts)

    def set_weight_vector(self, vec):
        vec = np.asarray(vec, dtype=float)
        pos = 0
        for w in self.weights_:
            w[...] = vec[pos:pos + w.size].reshape(w.shape)
            pos += w.size
        for b in self.biases_:
            b[...] = vec[pos:pos + b.size].reshape(b.shape)
            pos += b.size

    def gradient_vector(self, X, t):
        Z = self._standardize(np.atleast_2d(np.asarray(X, dtype=float)))
        grads_w, grads_b = self._gradients(Z, np.asarray(t, dtype=float))
        parts = [g.ravel() for g in grads_w] + [g.ravel() for g in grads_b]
        return np.concatenate(parts)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("opptrans-net v1\n")
            fh.write(f"layers {self.n_inputs} "
                     f"{' '.join(map(str, self.hidden))} 1\n")
            fh.write("mean " + " ".join(repr(float(v))
                                        for v in self.mean_) + "\n")
            fh.write("std " + " ".join(repr(float(v))
                                       for v in self.std_) + "\n")
            for w, b in zip(self.weights_, self.biases_):
                fh.write(f"layer {w.shape[0]} {w.shape[1]}\n")
                for row in w:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")
                fh.write(" ".join(repr(float(v)) for v in b) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            if fh.readline().strip() != "opptrans-net v1":
                raise ValueError("unknown net file header")
            sizes = [int(v) for v in fh.readline().split()[1:]]
            model = cls(n_inputs=sizes[0], hidden=tuple(sizes[1:-1]))
            model.mean_ = np.array(
                [float(v) for v in fh.readline().split()[1:]])
            model.std_ = np.array(
                [float(v) for v in fh.readline().split()[1:]])
            for i in range(len(model.weights_)):
                rows, _ = (int(v) for v in fh.readline().split()[1:])
                w = np.array([[float(v) for v in fh.readline().split()]
                              for _ in range(rows)])
                b = np.array([float(v) for v in fh.readline().split()])
                model.weights_[i] = w
                model.biases_[i] = b
        return model


def concept_drift_experiment(pretrain_X, pretrain_y, stream_X, stream_y,
                             split=0.8, seed=0, pretrain_epochs=200,
                             net_params=None):
    """Online adaptation of a pretrained net to a shifted data stream.

    Both datasets get a seeded 80/20 train/test split.  The net is pretrained
    on A-train, then fed B-train sequentially through 32-element minibatch
    updates; the RMSE on both held-out test sets is recorded after every
    applied weight update (index 0 is the pretrained state).
    """
    pretrain_X = np.asarray(pretrain_X, dtype=float)
    stream_X = np.asarray(stream_X, dtype=float)
    rng = np.random.default_rng(seed)

    def split_set(X, y):
        y = np.asarray(y, dtype=float)
        order = rng.permutation(len(y))
        cut = int(round(split * len(y)))
        return X[order[:cut]], y[order[:cut]], X[order[cut:]], y[order[cut:]]

    ax, ay, ax_test, ay_test = split_set(pretrain_X, pretrain_y)
    bx, by, bx_test, by_test = split_set(stream_X, stream_y)

    params = dict(n_inputs=pretrain_X.shape[1], seed=seed)
    params.update(net_params or {})
    net = IncrementalNetRegressor(**params)
    if len(bx) < net.batch_size and len(bx) > 0:
        raise ValueError("stream dataset too small for one minibatch")
    net.fit(ax, ay, epochs=pretrain_epochs)

    def rmse(X, y):
        if len(y) < 2:
            return float("nan")
        return evaluate(net.predict(X), y).rmse

    rmse_a = [rmse(ax_test, ay_test)]
    rmse_b = [rmse(bx_test, by_test)]
    for x, t in zip(bx, by):
        if net.update_online(x, t):
            rmse_a.append(rmse(ax_test, ay_test))
            rmse_b.append(rmse(bx_test, by_test))
    return np.array(rmse_a), np.array(rmse_b)
