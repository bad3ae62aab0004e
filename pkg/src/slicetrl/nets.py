"""Minimal Q-network approximators with exact backpropagation.

Two cell kinds: a dense tanh MLP (default) and a single LSTM cell with a
linear readout. Training is one Adam step of MSE regression on the chosen
action's output. No autograd: gradients are hand-derived and validated
against central finite differences by grad_check().
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation

ADAM_LR = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def xavier_uniform(rng, n_in, n_out):
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


class Adam:
    def __init__(self, params, lr=ADAM_LR, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1**self.t)
            vhat = v / (1 - b2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _QNetBase:
    kind = "?"

    def params(self) -> list:
        raise NotImplementedError

    def topology(self) -> tuple:
        raise NotImplementedError

    # flat views used by grad_check and serialization
    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat(self, vec: np.ndarray) -> None:
        i = 0
        for p in self.params():
            p[...] = vec[i : i + p.size].reshape(p.shape)
            i += p.size

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def _check_finite(self):
        for p in self.params():
            if not np.all(np.isfinite(p)):
                raise ContractViolation(f"{self.kind} net has non-finite parameters after update")

    def _apply(self, grads, loss):
        self.opt.step(self.params(), grads)
        self._check_finite()
        return loss


def _validate_batch(X, actions, targets):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    actions = np.asarray(actions, dtype=int).ravel()
    targets = np.asarray(targets, dtype=float).ravel()
    if len(X) == 0:
        raise ContractViolation("empty training batch")
    bad = np.flatnonzero(~np.isfinite(targets))
    if bad.size:
        raise ContractViolation(f"non-finite TD target at batch element {int(bad[0])}")
    return X, actions, targets


class DenseQNet(_QNetBase):
    """MLP with tanh hidden layers and a linear output layer."""

    kind = "dense"

    def __init__(self, in_dim, out_dim, hidden=(30, 30), rng=None, lr=ADAM_LR):
        rng = np.random.default_rng(rng)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.hidden = tuple(hidden)
        dims = [in_dim, *hidden, out_dim]
        self.W = [xavier_uniform(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
        self.b = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
        self.opt = Adam(self.params(), lr=lr)

    def params(self):
        return [*self.W, *self.b]

    def topology(self):
        return ("dense", self.in_dim, self.hidden, self.out_dim)

    def reset_hidden(self):
        pass

    def _forward_batch(self, X):
        """Returns (Q, activations); activations[l] is the input to layer l."""
        acts = [X]
        z = X
        last = len(self.W) - 1
        for l, (W, b) in enumerate(zip(self.W, self.b)):
            a = z @ W + b
            z = a if l == last else np.tanh(a)
            acts.append(z)
        return z, acts

    def forward(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.in_dim or not np.all(np.isfinite(x)):
            raise ContractViolation(f"dense net expects a finite {self.in_dim}-vector")
        q, _ = self._forward_batch(x[None, :])
        return q[0]

    act_values = forward

    def loss_and_grads(self, X, actions, targets):
        X, actions, targets = _validate_batch(X, actions, targets)
        B = len(X)
        Q, acts = self._forward_batch(X)
        picked = Q[np.arange(B), actions]
        err = picked - targets
        loss = float(np.mean(err**2))

        dQ = np.zeros_like(Q)
        dQ[np.arange(B), actions] = 2.0 * err / B
        gW = [None] * len(self.W)
        gb = [None] * len(self.b)
        dA = dQ
        for l in range(len(self.W) - 1, -1, -1):
            gW[l] = acts[l].T @ dA
            gb[l] = dA.sum(axis=0)
            if l > 0:
                dZ = dA @ self.W[l].T
                dA = dZ * (1.0 - acts[l] ** 2)  # acts[l] = tanh output of layer l-1
        return loss, [*gW, *gb]

    def train_step(self, X, actions, targets):
        loss, grads = self.loss_and_grads(X, actions, targets)
        return self._apply(grads, loss)


class LstmQNet(_QNetBase):
    """Single LSTM cell plus linear readout; acting is stateful."""

    kind = "lstm"

    def __init__(self, in_dim, out_dim, hidden=30, rng=None, lr=ADAM_LR):
        rng = np.random.default_rng(rng)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.hidden = int(hidden)
        H = self.hidden
        self.Wx = xavier_uniform(rng, in_dim, 4 * H)   # gate order: i, f, g, o
        self.Wh = xavier_uniform(rng, H, 4 * H)
        self.bg = np.zeros(4 * H)
        self.Wo = xavier_uniform(rng, H, out_dim)
        self.bo = np.zeros(out_dim)
        self.opt = Adam(self.params(), lr=lr)
        self.reset_hidden()

    def params(self):
        return [self.Wx, self.Wh, self.bg, self.Wo, self.bo]

    def topology(self):
        return ("lstm", self.in_dim, (self.hidden,), self.out_dim)

    def reset_hidden(self):
        self._h = np.zeros(self.hidden)
        self._c = np.zeros(self.hidden)

    @property
    def hidden_state(self):
        return self._h.copy(), self._c.copy()

    def _cell(self, x, h, c):
        H = self.hidden
        a = x @ self.Wx + h @ self.Wh + self.bg
        i = _sigmoid(a[..., :H])
        f = _sigmoid(a[..., H : 2 * H])
        g = np.tanh(a[..., 2 * H : 3 * H])
        o = _sigmoid(a[..., 3 * H :])
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        return h_new, c_new, (i, f, g, o)

    def act_values(self, x):
        """Q-values for one step; advances the acting hidden state."""
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.in_dim or not np.all(np.isfinite(x)):
            raise ContractViolation(f"lstm net expects a finite {self.in_dim}-vector")
        self._h, self._c, _ = self._cell(x, self._h, self._c)
        return self._h @ self.Wo + self.bo

    forward = act_values

    def seq_values(self, X_seq):
        """Q-values along (B, T, in) sequences from a zero initial state.
        Stateless: the acting hidden state is untouched."""
        X_seq = np.asarray(X_seq, dtype=float)
        B, T, _ = X_seq.shape
        h = np.zeros((B, self.hidden))
        c = np.zeros((B, self.hidden))
        Q = np.empty((B, T, self.out_dim))
        for t in range(T):
            h, c, _ = self._cell(X_seq[:, t, :], h, c)
            Q[:, t, :] = h @ self.Wo + self.bo
        return Q

    def loss_and_grads(self, X_seq, actions, targets):
        """BPTT over (B, T) sequences; loss averages the squared error of
        every step's chosen action."""
        X_seq = np.asarray(X_seq, dtype=float)
        if X_seq.ndim != 3:
            raise ContractViolation("lstm training expects (B, T, in) sequences")
        B, T, _ = X_seq.shape
        actions = np.asarray(actions, dtype=int).reshape(B, T)
        targets = np.asarray(targets, dtype=float).reshape(B, T)
        bad = np.argwhere(~np.isfinite(targets))
        if bad.size:
            raise ContractViolation(f"non-finite TD target at batch element {tuple(bad[0])}")

        H = self.hidden
        hs = np.zeros((T + 1, B, H))
        cs = np.zeros((T + 1, B, H))
        gates = []
        Q = np.empty((B, T, self.out_dim))
        for t in range(T):
            hs[t + 1], cs[t + 1], g = self._cell(X_seq[:, t, :], hs[t], cs[t])
            gates.append(g)
            Q[:, t, :] = hs[t + 1] @ self.Wo + self.bo

        bi = np.arange(B)
        picked = Q[bi[:, None], np.arange(T)[None, :], actions]
        err = picked - targets
        loss = float(np.mean(err**2))

        gWx = np.zeros_like(self.Wx)
        gWh = np.zeros_like(self.Wh)
        gbg = np.zeros_like(self.bg)
        gWo = np.zeros_like(self.Wo)
        gbo = np.zeros_like(self.bo)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            dq = np.zeros((B, self.out_dim))
            dq[bi, actions[:, t]] = 2.0 * err[:, t] / (B * T)
            gWo += hs[t + 1].T @ dq
            gbo += dq.sum(axis=0)
            dh = dq @ self.Wo.T + dh_next
            i, f, g, o = gates[t]
            tc = np.tanh(cs[t + 1])
            do = dh * tc
            dc = dh * o * (1.0 - tc**2) + dc_next
            df = dc * cs[t]
            di = dc * g
            dg = dc * i
            dc_next = dc * f
            da = np.concatenate(
                [di * i * (1 - i), df * f * (1 - f), dg * (1 - g**2), do * o * (1 - o)], axis=1
            )
            gWx += X_seq[:, t, :].T @ da
            gWh += hs[t].T @ da
            gbg += da.sum(axis=0)
            dh_next = da @ self.Wh.T
        return loss, [gWx, gWh, gbg, gWo, gbo]

    def train_step(self, X_seq, actions, targets):
        loss, grads = self.loss_and_grads(X_seq, actions, targets)
        return self._apply(grads, loss)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def make_qnet(kind, in_dim, out_dim, hidden=30, rng=None, lr=ADAM_LR):
    if kind == "dense":
        return DenseQNet(in_dim, out_dim, hidden=(hidden, hidden), rng=rng, lr=lr)
    if kind == "lstm":
        return LstmQNet(in_dim, out_dim, hidden=hidden, rng=rng, lr=lr)
    raise ContractViolation(f"unknown net kind {kind!r}")


def sync(target: _QNetBase, source: _QNetBase) -> None:
    """Copy source parameters into target (topologies must match)."""
    if target.topology() != source.topology():
        raise ContractViolation(
            f"cannot sync {source.topology()} into {target.topology()}"
        )
    for pt, ps in zip(target.params(), source.params()):
        pt[...] = ps


def grad_check(net: _QNetBase, sample, h=1e-5) -> float:
    """Max relative error between analytic and central-difference gradients
    over every parameter, for the training loss on `sample`."""
    X, actions, targets = sample
    _, grads = net.loss_and_grads(X, actions, targets)
    analytic = np.concatenate([g.ravel() for g in grads])
    theta = net.get_flat()
    numeric = np.empty_like(theta)
    for j in range(theta.size):
        orig = theta[j]
        theta[j] = orig + h
        net.set_flat(theta)
        lp, _ = net.loss_and_grads(X, actions, targets)
        theta[j] = orig - h
        net.set_flat(theta)
        lm, _ = net.loss_and_grads(X, actions, targets)
        theta[j] = orig
        numeric[j] = (lp - lm) / (2 * h)
    net.set_flat(theta)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom))


# ---------- flat text serialization (topology header + row-major params) ----------

def dump_params(net: _QNetBase) -> str:
    kind, in_dim, hidden, out_dim = net.topology()
    lines = [f"{kind} {in_dim} {','.join(str(h) for h in hidden)} {out_dim}"]
    lines.extend(repr(float(v)) for v in net.get_flat())
    return "\n".join(lines) + "\n"


def load_params(text: str) -> _QNetBase:
    lines = text.strip().splitlines()
    kind, in_dim, hidden_s, out_dim = lines[0].split()
    hidden = tuple(int(h) for h in hidden_s.split(","))
    if kind == "dense":
        net = DenseQNet(int(in_dim), int(out_dim), hidden=hidden)
    elif kind == "lstm":
        net = LstmQNet(int(in_dim), int(out_dim), hidden=hidden[0])
    else:
        raise ContractViolation(f"unknown net kind {kind!r} in parameter dump")
    vec = np.array([float(v) for v in lines[1:]])
    if vec.size != net.n_params():
        raise ContractViolation(
            f"parameter count mismatch: header implies {net.n_params()}, file has {vec.size}"
        )
    net.set_flat(vec)
    return net
