"""Sample-Average-Uncertainty sampling: a neural contextual bandit.

A ReLU feed-forward net maps the 3-feature context to one predicted reward per arm.
Exploration draws ``N(mu_hat_a, tau2_a / n_a)`` per arm with ``tau2_a = J2_a / n_a``,
where ``J2_a`` accumulates squared prediction errors of arm ``a``.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import NumericalError

CHECKPOINT_VERSION = 1


class MLP:
    """Fully connected ReLU network with a linear output layer.

    Layers are numbered from 1 (first hidden) to ``len(sizes) - 1`` (output). All
    weights and biases live in one flat vector ``theta``; ``W`` and ``b`` are views.
    """

    def __init__(self, sizes, rng=None):
        self.sizes = tuple(int(s) for s in sizes)
        rng = np.random.default_rng(rng)
        self._slices = []
        off = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            n = fan_in * fan_out + fan_out
            self._slices.append(slice(off, off + n))
            off += n
        self.theta = np.empty(off)
        self.grad = np.zeros(off)
        self.W, self.b = self._views(self.theta)
        self.gW, self.gb = self._views(self.grad)
        self.reinit(range(1, self.n_layers + 1), rng)

    def _views(self, flat):
        Ws, bs = [], []
        for sl, fan_in, fan_out in zip(self._slices, self.sizes[:-1], self.sizes[1:]):
            block = flat[sl]
            Ws.append(block[: fan_in * fan_out].reshape(fan_in, fan_out))
            bs.append(block[fan_in * fan_out :])
        return Ws, bs

    @property
    def n_layers(self) -> int:
        return len(self.W)

    @property
    def n_params(self) -> int:
        return self.theta.size

    def layer_slice(self, layer) -> slice:
        """Span of layer ``layer`` (1-based) inside ``theta``."""
        if not 1 <= layer <= self.n_layers:
            raise IndexError(f"layer {layer} outside 1..{self.n_layers}")
        return self._slices[layer - 1]

    def reinit(self, layers, rng) -> None:
        """Redraw weights and biases of ``layers`` from U(-nu, nu), ``nu = 1/sqrt(fan_in)``."""
        for l in layers:
            sl = self.layer_slice(l)
            nu = 1.0 / np.sqrt(self.sizes[l - 1])
            self.theta[sl] = rng.uniform(-nu, nu, sl.stop - sl.start)

    def params(self):
        out = []
        for W, b in zip(self.W, self.b):
            out.extend((W, b))
        return out

    def forward(self, X):
        """Returns the output and the per-layer activations needed for backprop."""
        acts = [X]
        h = X
        for i in range(self.n_layers - 1):
            h = h @ self.W[i]
            h += self.b[i]
            np.maximum(h, 0.0, out=h)
            acts.append(h)
        return h @ self.W[-1] + self.b[-1], acts

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("context must be finite")
        out, _ = self.forward(x[None, :])
        return out[0]

    def loss_and_grads(self, X, arms, rewards, loss_scale=1.0):
        """``loss_scale * 0.5 * mean((r - mu_hat[arm])**2)`` and its gradients.

        Gradients are written into ``self.grad``; the returned list holds views of it
        in :meth:`params` order.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        arms = np.asarray(arms, dtype=int)
        rewards = np.asarray(rewards, dtype=float)
        B = X.shape[0]
        acts = [X]
        h = X
        for i in range(self.n_layers - 1):
            h = h @ self.W[i]
            h += self.b[i]
            np.maximum(h, 0.0, out=h)
            acts.append(h)
        # only the pulled arm's output enters the loss
        W_sel = self.W[-1][:, arms]
        pred = np.einsum("bh,hb->b", h, W_sel) + self.b[-1][arms]
        err = pred - rewards
        loss = loss_scale * 0.5 * float(np.mean(err * err))

        dy = loss_scale * err / B
        self.grad.fill(0.0)
        uniq, inv = np.unique(arms, return_inverse=True)
        onehot = np.zeros((B, uniq.size))
        onehot[np.arange(B), inv] = dy
        self.gW[-1][:, uniq] = h.T @ onehot
        self.gb[-1][uniq] = onehot.sum(axis=0)
        delta = dy[:, None] * W_sel.T
        for i in range(self.n_layers - 2, -1, -1):
            delta *= acts[i + 1] > 0
            np.matmul(acts[i].T, delta, out=self.gW[i])
            delta.sum(axis=0, out=self.gb[i])
            if i:
                delta = delta @ self.W[i].T
        grads = []
        for w, b in zip(self.gW, self.gb):
            grads.extend((w, b))
        return loss, grads


def gradient_check(net: MLP, context, arm, reward, n_checks=64, h=1e-5, rng=None) -> float:
    """Max relative error between backprop and central differences on random parameters."""
    rng = np.random.default_rng(rng)
    X = np.asarray(context, dtype=float)[None, :]
    net.loss_and_grads(X, [arm], [reward])
    analytic_all = net.grad.copy()
    theta = net.theta
    worst = 0.0
    for j in rng.integers(0, theta.size, n_checks):
        old = theta[j]
        theta[j] = old + h
        lp, _ = net.loss_and_grads(X, [arm], [reward])
        theta[j] = old - h
        lm, _ = net.loss_and_grads(X, [arm], [reward])
        theta[j] = old
        numeric = (lp - lm) / (2 * h)
        analytic = analytic_all[j]
        denom = max(abs(numeric), abs(analytic))
        if denom > 1e-8:
            worst = max(worst, abs(numeric - analytic) / denom)
    net.grad[...] = analytic_all
    return worst


class RMSProp:
    """RMSProp on a flat parameter vector, L2 weight decay folded into the gradient."""

    def __init__(self, n_params, lr=8e-3, weight_decay=5e-4, alpha=0.99, eps=1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.alpha = alpha
        self.eps = eps
        self.sq = np.zeros(n_params)
        self._tmp = np.empty(n_params)

    def step(self, theta, grad) -> None:
        """In-place update of ``theta``; ``grad`` is overwritten."""
        tmp = self._tmp
        if self.weight_decay:
            np.multiply(theta, self.weight_decay, out=tmp)
            grad += tmp
        self.sq *= self.alpha
        np.multiply(grad, grad, out=tmp)
        tmp *= 1.0 - self.alpha
        self.sq += tmp
        np.sqrt(self.sq, out=tmp)
        tmp += self.eps
        np.divide(grad, tmp, out=tmp)
        tmp *= self.lr
        theta -= tmp

    def reset(self, spans=None) -> None:
        """Zero the squared-gradient average, everywhere or on the given slices."""
        if spans is None:
            self.sq.fill(0.0)
            return
        for sl in spans:
            self.sq[sl] = 0.0


class SAUAgent:
    """One AP's contextual bandit.

    ``select`` forces uniform exploration for the first ``n_arms`` local steps (counted
    from construction or the last exploration reset); afterwards arms never updated are
    tried first in index order, then arms are ranked by a Normal draw around the
    network's prediction.
    """

    def __init__(
        self,
        n_arms,
        rng=None,
        n_inputs=3,
        hidden=(100, 100),
        lr=8e-3,
        weight_decay=5e-4,
        batch_size=64,
        buffer_size=1024,
    ):
        self.n_arms = int(n_arms)
        self.rng = np.random.default_rng(rng)
        self.net = MLP((n_inputs, *hidden, n_arms), self.rng)
        self.opt = RMSProp(self.net.n_params, lr, weight_decay)
        self.batch_size = batch_size
        self.buffer_size = buffer_size
        self._ctx = np.zeros((buffer_size, n_inputs))
        self._arm = np.zeros(buffer_size, dtype=int)
        self._rew = np.zeros(buffer_size)
        self.reset_exploration()

    def reset_exploration(self) -> None:
        self.J2 = np.ones(self.n_arms)
        self.n = np.zeros(self.n_arms, dtype=np.int64)
        self.local_t = 0
        self.clear_buffer()

    def clear_buffer(self) -> None:
        self._size = 0
        self._head = 0

    @property
    def buffer_len(self) -> int:
        return self._size

    def predict(self, context) -> np.ndarray:
        return self.net.predict(context)

    def select(self, t=None, context=None) -> int:
        self.local_t += 1
        if self.local_t <= self.n_arms:
            return int(self.rng.integers(self.n_arms))
        untried = np.flatnonzero(self.n == 0)
        if untried.size:
            return int(untried[0])
        mu = self.net.predict(context)
        tau2 = self.J2 / self.n
        draw = self.rng.normal(mu, np.sqrt(tau2 / self.n))
        return int(np.argmax(draw))

    def update(self, arm, reward, context=None) -> float:
        """Record the prediction error, store the transition and take one batch step.

        Returns the prediction error ``reward - mu_hat[arm]`` (before the step).
        """
        context = np.asarray(context, dtype=float)
        err = float(reward - self.net.predict(context)[arm])
        self.J2[arm] += err * err
        self.n[arm] += 1

        self._ctx[self._head] = context
        self._arm[self._head] = arm
        self._rew[self._head] = reward
        self._head = (self._head + 1) % self.buffer_size
        self._size = min(self._size + 1, self.buffer_size)

        idx = self.rng.integers(0, self._size, min(self.batch_size, self._size))
        self.net.loss_and_grads(self._ctx[idx], self._arm[idx], self._rew[idx])
        self.opt.step(self.net.theta, self.net.grad)
        if not np.isfinite(self.net.theta).all():
            raise NumericalError("non-finite network parameter after update")
        return err

    # -- checkpointing --------------------------------------------------------------

    def save(self, path) -> None:
        """Everything needed to resume bit-exactly, as an ``.npz`` archive."""
        meta = {
            "version": CHECKPOINT_VERSION,
            "sizes": list(self.net.sizes),
            "lr": self.opt.lr,
            "weight_decay": self.opt.weight_decay,
            "alpha": self.opt.alpha,
            "eps": self.opt.eps,
            "batch_size": self.batch_size,
            "buffer_size": self.buffer_size,
            "local_t": self.local_t,
            "size": self._size,
            "head": self._head,
            "rng": self.rng.bit_generator.state,
        }
        np.savez(
            path,
            meta=np.array(json.dumps(meta)),
            J2=self.J2,
            n=self.n,
            buf_ctx=self._ctx,
            buf_arm=self._arm,
            buf_rew=self._rew,
            theta=self.net.theta,
            sq=self.opt.sq,
        )

    @classmethod
    def load(cls, path) -> SAUAgent:
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta['version']}")
            sizes = meta["sizes"]
            agent = cls(
                sizes[-1],
                rng=0,
                n_inputs=sizes[0],
                hidden=tuple(sizes[1:-1]),
                lr=meta["lr"],
                weight_decay=meta["weight_decay"],
                batch_size=meta["batch_size"],
                buffer_size=meta["buffer_size"],
            )
            agent.opt.alpha = meta["alpha"]
            agent.opt.eps = meta["eps"]
            agent.net.theta[...] = z["theta"]
            agent.opt.sq[...] = z["sq"]
            agent.J2 = z["J2"].copy()
            agent.n = z["n"].copy()
            agent._ctx[...] = z["buf_ctx"]
            agent._arm[...] = z["buf_arm"]
            agent._rew[...] = z["buf_rew"]
        agent.local_t = meta["local_t"]
        agent._size = meta["size"]
        agent._head = meta["head"]
        agent.rng.bit_generator.state = meta["rng"]
        return agent


def reward_source(mode, result, m) -> float:
    """Local reward for ``noncoop``; local plus network Jain index for ``coop``."""
    if mode == "noncoop":
        return float(result.reward_local[m])
    if mode == "coop":
        return float(result.reward_local[m] + result.jain)
    raise ValueError(f"unknown reward mode {mode!r}")
