"""Softmax-output probes trained by gradient descent: logistic regression and
a one-hidden-layer perceptron."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TrainSettings:
    """Optimizer defaults; batch_size None switches to full-batch descent with
    a backtracking line search (monotone in the training loss)."""

    learning_rate: float = 1e-3
    batch_size: int | None = 64
    max_epochs: int = 200
    patience: int = 5

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
        }


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _softmax(z: np.ndarray) -> np.ndarray:
    return np.exp(_log_softmax(z))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class _GradientProbe:
    """Shared training loop: Adam over mini-batches, early stopping on dev
    accuracy, or monotone line-search descent in full-batch mode."""

    def __init__(self, n_features: int, n_classes: int, l2: float, seed: int,
                 settings: TrainSettings | None):
        if n_classes < 2:
            raise ValueError("need at least two classes")
        self.n_features = n_features
        self.n_classes = n_classes
        self.l2 = l2
        self.seed = seed
        self.settings = settings or TrainSettings()
        self.loss_history: list[float] = []
        self.epochs_used = 0

    # subclasses define: _params() -> list[np.ndarray], _set_params(list),
    # _loss_and_grad(X, Y, rng=None) -> (loss, grads), _scores(X) -> logits

    def loss(self, X: np.ndarray, Y: np.ndarray) -> float:
        return self._loss_and_grad(X, Y)[0]

    def fit(self, X: np.ndarray, y: np.ndarray,
            X_dev: np.ndarray | None = None, y_dev: np.ndarray | None = None) -> int:
        Y = np.zeros((len(y), self.n_classes))
        Y[np.arange(len(y)), y] = 1.0
        if self.settings.batch_size is None:
            self._fit_full_batch(X, Y)
        else:
            self._fit_minibatch(X, Y, X_dev, y_dev)
        return self.epochs_used

    def _fit_full_batch(self, X: np.ndarray, Y: np.ndarray) -> None:
        step = 1.0
        self.loss_history = []
        for epoch in range(self.settings.max_epochs):
            loss, grads = self._loss_and_grad(X, Y)
            self.loss_history.append(loss)
            self.epochs_used = epoch + 1
            gnorm2 = sum(float((g * g).sum()) for g in grads)
            if gnorm2 < 1e-18:
                break
            params = self._params()
            alpha = step
            while True:
                trial = [p - alpha * g for p, g in zip(params, grads)]
                self._set_params(trial)
                new_loss = self.loss(X, Y)
                if new_loss <= loss - 1e-4 * alpha * gnorm2 or alpha < 1e-12:
                    break
                alpha *= 0.5
            if new_loss > loss:
                # no descent step found; keep the old parameters and stop
                self._set_params(params)
                break
            step = alpha * 2.0
        final_loss = self.loss(X, Y)
        if not self.loss_history or final_loss < self.loss_history[-1]:
            self.loss_history.append(final_loss)

    def _fit_minibatch(self, X: np.ndarray, Y: np.ndarray,
                       X_dev: np.ndarray | None, y_dev: np.ndarray | None) -> None:
        cfg = self.settings
        rng = np.random.default_rng(self.seed)
        params = self._params()
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        t = 0
        best_acc = -1.0
        best_params = None
        best_train_loss = np.inf
        stale = 0
        n = len(X)
        for epoch in range(cfg.max_epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, cfg.batch_size):
                batch = order[start : start + cfg.batch_size]
                loss, grads = self._loss_and_grad(X[batch], Y[batch], rng=rng)
                epoch_loss += loss * len(batch)
                t += 1
                params = self._params()
                for j, g in enumerate(grads):
                    m[j] = beta1 * m[j] + (1 - beta1) * g
                    v[j] = beta2 * v[j] + (1 - beta2) * g * g
                    m_hat = m[j] / (1 - beta1**t)
                    v_hat = v[j] / (1 - beta2**t)
                    params[j] = params[j] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
                self._set_params(params)
            self.epochs_used = epoch + 1
            if X_dev is not None and len(X_dev):
                acc = float(np.mean(self.predict_indices(X_dev) == y_dev))
                if acc > best_acc:
                    best_acc = acc
                    best_params = [p.copy() for p in self._params()]
                    stale = 0
                else:
                    stale += 1
            else:
                train_loss = epoch_loss / n
                if train_loss < best_train_loss - 1e-8:
                    best_train_loss = train_loss
                    best_params = [p.copy() for p in self._params()]
                    stale = 0
                else:
                    stale += 1
            if stale >= cfg.patience:
                break
        if best_params is not None:
            self._set_params(best_params)

    def predict_indices(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"feature width {X.shape[1]} does not match training width {self.n_features}"
            )
        return np.argmax(self._scores(X), axis=1)


class LogisticRegressionProbe(_GradientProbe):
    """Multinomial logistic regression with an L2 penalty on the weights.

    Weights start at zero, so an untrained probe scores every class equally
    and predicts the first class.
    """

    def __init__(self, n_features: int, n_classes: int, l2: float = 1e-5,
                 seed: int = 0, settings: TrainSettings | None = None):
        super().__init__(n_features, n_classes, l2, seed, settings)
        self.W = np.zeros((n_features, n_classes))
        self.b = np.zeros(n_classes)

    def _params(self) -> list[np.ndarray]:
        return [self.W, self.b]

    def _set_params(self, params: list[np.ndarray]) -> None:
        self.W, self.b = params

    def _scores(self, X: np.ndarray) -> np.ndarray:
        return X @ self.W + self.b

    def _loss_and_grad(self, X, Y, rng=None):
        n = len(X)
        logits = X @ self.W + self.b
        logp = _log_softmax(logits)
        loss = -float((Y * logp).sum()) / n + 0.5 * self.l2 * float((self.W * self.W).sum())
        delta = (np.exp(logp) - Y) / n
        gW = X.T @ delta + self.l2 * self.W
        gb = delta.sum(axis=0)
        return loss, [gW, gb]


class MlpProbe(_GradientProbe):
    """One sigmoid hidden layer, softmax output, inverted dropout on the
    hidden activations during training, L2 penalty on both weight matrices."""

    def __init__(self, n_features: int, n_classes: int, hidden: int = 50,
                 dropout: float = 0.0, l2: float = 1e-5, seed: int = 0,
                 settings: TrainSettings | None = None):
        super().__init__(n_features, n_classes, l2, seed, settings)
        self.hidden = hidden
        self.dropout = dropout
        rng = np.random.default_rng(seed)
        lim1 = np.sqrt(6.0 / (n_features + hidden))
        lim2 = np.sqrt(6.0 / (hidden + n_classes))
        self.W1 = rng.uniform(-lim1, lim1, size=(n_features, hidden))
        self.b1 = np.zeros(hidden)
        self.W2 = rng.uniform(-lim2, lim2, size=(hidden, n_classes))
        self.b2 = np.zeros(n_classes)

    def _params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def _set_params(self, params: list[np.ndarray]) -> None:
        self.W1, self.b1, self.W2, self.b2 = params

    def _scores(self, X: np.ndarray) -> np.ndarray:
        a1 = _sigmoid(X @ self.W1 + self.b1)
        return a1 @ self.W2 + self.b2

    def _loss_and_grad(self, X, Y, rng=None):
        n = len(X)
        a1_raw = _sigmoid(X @ self.W1 + self.b1)
        if rng is not None and self.dropout > 0.0:
            keep = 1.0 - self.dropout
            mask = (rng.random(a1_raw.shape) < keep) / keep
            a1 = a1_raw * mask
        else:
            mask = None
            a1 = a1_raw
        logits = a1 @ self.W2 + self.b2
        logp = _log_softmax(logits)
        loss = (
            -float((Y * logp).sum()) / n
            + 0.5 * self.l2 * (float((self.W1 * self.W1).sum()) + float((self.W2 * self.W2).sum()))
        )
        delta2 = (np.exp(logp) - Y) / n
        gW2 = a1.T @ delta2 + self.l2 * self.W2
        gb2 = delta2.sum(axis=0)
        da1 = delta2 @ self.W2.T
        if mask is not None:
            da1 = da1 * mask
        dz1 = da1 * a1_raw * (1.0 - a1_raw)
        gW1 = X.T @ dz1 + self.l2 * self.W1
        gb1 = dz1.sum(axis=0)
        return loss, [gW1, gb1, gW2, gb2]
