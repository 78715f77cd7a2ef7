"""Single-layer LSTM sentiment regressor trained with exact backpropagation
through time.

The network embeds each token, runs the standard gated recurrence and maps
the final hidden state through a tanh head to a score in [-1, 1]. Sequences
are processed one at a time at natural length, which keeps BPTT exact.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import DivergenceDetected, IndexOutOfVocabulary

GATES = ("i", "f", "o", "c")


@dataclass
class LSTMParams:
    E: np.ndarray        # |V| x d_e embedding
    W_i: np.ndarray      # d_h x d_e input weights per gate
    W_f: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_i: np.ndarray      # d_h x d_h recurrent weights per gate
    U_f: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_i: np.ndarray      # d_h gate biases
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray
    w_out: np.ndarray    # d_h output head
    b_out: float

    @property
    def d_hidden(self):
        return self.W_i.shape[0]

    @property
    def d_embed(self):
        return self.W_i.shape[1]

    @property
    def vocab_size(self):
        return self.E.shape[0]

    def copy(self) -> "LSTMParams":
        kwargs = {}
        for f in fields(self):
            v = getattr(self, f.name)
            kwargs[f.name] = v.copy() if isinstance(v, np.ndarray) else v
        return LSTMParams(**kwargs)


def init_params(vocab_size: int, d_embed: int = 16, d_hidden: int = 16, seed: int = 0) -> LSTMParams:
    """Uniform(-0.1, 0.1) everywhere; forget-gate bias starts at 1.0."""
    rng = np.random.default_rng(seed)

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    return LSTMParams(
        E=u(vocab_size, d_embed),
        W_i=u(d_hidden, d_embed), W_f=u(d_hidden, d_embed),
        W_o=u(d_hidden, d_embed), W_c=u(d_hidden, d_embed),
        U_i=u(d_hidden, d_hidden), U_f=u(d_hidden, d_hidden),
        U_o=u(d_hidden, d_hidden), U_c=u(d_hidden, d_hidden),
        b_i=u(d_hidden), b_f=np.ones(d_hidden), b_o=u(d_hidden), b_c=u(d_hidden),
        w_out=u(d_hidden), b_out=float(u(1)[0]),
    )


def _sigmoid(z):
    e = np.exp(-np.abs(z))  # only the safe exponent is ever evaluated
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def lstm_forward(indices, params: LSTMParams):
    """Run the recurrence over a non-empty token-index sequence.

    Returns (score, cache); the cache holds every per-step activation needed
    by lstm_backward.
    """
    if len(indices) == 0:
        raise ValueError("sequence must be non-empty")
    d_h = params.d_hidden
    h = np.zeros(d_h)
    c = np.zeros(d_h)
    steps = []
    for t, idx in enumerate(indices):
        if not 0 <= idx < params.vocab_size:
            raise IndexOutOfVocabulary(f"token index {idx} at position {t}")
        e = params.E[idx]
        i = _sigmoid(params.W_i @ e + params.U_i @ h + params.b_i)
        f = _sigmoid(params.W_f @ e + params.U_f @ h + params.b_f)
        o = _sigmoid(params.W_o @ e + params.U_o @ h + params.b_o)
        c_tilde = np.tanh(params.W_c @ e + params.U_c @ h + params.b_c)
        c_new = f * c + i * c_tilde
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        steps.append({"idx": idx, "e": e, "h_prev": h, "c_prev": c,
                      "i": i, "f": f, "o": o, "c_tilde": c_tilde,
                      "c": c_new, "tanh_c": tanh_c, "h": h_new})
        h, c = h_new, c_new
    score = float(np.tanh(params.w_out @ h + params.b_out))
    cache = {"steps": steps, "score": score, "h_final": h, "params": params}
    return score, cache


def lstm_loss(score: float, label: float) -> float:
    return (score - label) ** 2


@dataclass
class LSTMGrads:
    E: np.ndarray
    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray
    w_out: np.ndarray
    b_out: float

    def inf_norm(self) -> float:
        worst = abs(self.b_out)
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray) and v.size:
                worst = max(worst, float(np.max(np.abs(v))))
        return worst

    def scale(self, factor: float):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                v *= factor
        self.b_out *= factor


def lstm_backward(cache, label: float) -> LSTMGrads:
    """Exact gradients of (score - label)^2 via BPTT over the full sequence."""
    params: LSTMParams = cache["params"]
    steps = cache["steps"]
    score = cache["score"]
    d_h, d_e = params.d_hidden, params.d_embed

    g = LSTMGrads(
        E=np.zeros_like(params.E),
        W_i=np.zeros((d_h, d_e)), W_f=np.zeros((d_h, d_e)),
        W_o=np.zeros((d_h, d_e)), W_c=np.zeros((d_h, d_e)),
        U_i=np.zeros((d_h, d_h)), U_f=np.zeros((d_h, d_h)),
        U_o=np.zeros((d_h, d_h)), U_c=np.zeros((d_h, d_h)),
        b_i=np.zeros(d_h), b_f=np.zeros(d_h), b_o=np.zeros(d_h), b_c=np.zeros(d_h),
        w_out=np.zeros(d_h), b_out=0.0,
    )

    # head: score = tanh(w_out . h_T + b_out)
    d_pre_out = 2.0 * (score - label) * (1.0 - score * score)
    g.w_out += d_pre_out * cache["h_final"]
    g.b_out += d_pre_out

    dh = d_pre_out * params.w_out
    dc = np.zeros(d_h)
    for step in reversed(steps):
        i, f, o = step["i"], step["f"], step["o"]
        c_tilde, tanh_c = step["c_tilde"], step["tanh_c"]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
        di = dc * c_tilde
        df = dc * step["c_prev"]
        dc_tilde = dc * i

        da_i = di * i * (1.0 - i)
        da_f = df * f * (1.0 - f)
        da_o = do * o * (1.0 - o)
        da_c = dc_tilde * (1.0 - c_tilde * c_tilde)

        e, h_prev = step["e"], step["h_prev"]
        g.W_i += np.outer(da_i, e)
        g.W_f += np.outer(da_f, e)
        g.W_o += np.outer(da_o, e)
        g.W_c += np.outer(da_c, e)
        g.U_i += np.outer(da_i, h_prev)
        g.U_f += np.outer(da_f, h_prev)
        g.U_o += np.outer(da_o, h_prev)
        g.U_c += np.outer(da_c, h_prev)
        g.b_i += da_i
        g.b_f += da_f
        g.b_o += da_o
        g.b_c += da_c
        g.E[step["idx"]] += (
            params.W_i.T @ da_i + params.W_f.T @ da_f
            + params.W_o.T @ da_o + params.W_c.T @ da_c
        )

        dh = params.U_i.T @ da_i + params.U_f.T @ da_f + params.U_o.T @ da_o + params.U_c.T @ da_c
        dc = dc * f
    return g


def lstm_train(corpus, params: LSTMParams, lr: float = 0.05, epochs: int = 50,
               seed: int = 0, clip_threshold: float | None = None):
    """Plain per-sample SGD over (index sequence, label in {-1, +1}) pairs.

    The per-epoch visit order is a seeded shuffle; gradient clipping (on the
    gradient infinity norm) is off unless clip_threshold is given. Returns
    (trained params, mean loss per epoch). Raises DivergenceDetected when the
    loss stops being finite.
    """
    params = params.copy()
    rng = np.random.default_rng(seed)
    n = len(corpus)
    epoch_losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for k in order:
            indices, label = corpus[k]
            score, cache = lstm_forward(indices, params)
            loss = lstm_loss(score, label)
            if not np.isfinite(loss):
                raise DivergenceDetected(f"loss became {loss}")
            total += loss
            grads = lstm_backward(cache, label)
            if clip_threshold is not None:
                norm = grads.inf_norm()
                if norm > clip_threshold:
                    grads.scale(clip_threshold / norm)
            _apply_sgd(params, grads, lr)
        epoch_losses.append(total / n)
    return params, epoch_losses


def _apply_sgd(params: LSTMParams, grads: LSTMGrads, lr: float):
    for f in fields(LSTMParams):
        p = getattr(params, f.name)
        g = getattr(grads, f.name)
        if isinstance(p, np.ndarray):
            p -= lr * g
        else:
            setattr(params, f.name, p - lr * g)
