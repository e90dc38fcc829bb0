"""Multi-channel dense scoring network with hand-rolled backprop.

Each enabled channel (semantic / coherence / syntactic) runs through its
own dense stack; channel outputs are concatenated and fused through a
hidden layer into a single logistic unit, so predictions live in [0, 1].
Training minimizes alpha * MSE + (1 - alpha) * batch-wise ListNet loss
with adaptive-moment updates. Everything is float64 and seed-deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import PromptSpec, denormalize_score
from .evaluation import UndefinedMetric, qwk

CHANNEL_ORDER = ("semantic", "coherence", "syntactic")


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    alpha: float = 0.5
    batch_size: int = 32
    dropout: float = 0.5
    learning_rate: float = 0.001
    epochs: int = 100
    seed: int = 0
    channels: tuple[str, ...] = ("semantic",)
    semantic_width: int = 256
    feature_widths: tuple[int, int] = (64, 64)
    fusion_width: int = 128

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        for ch in self.channels:
            if ch not in CHANNEL_ORDER:
                raise ValueError(f"unknown channel {ch!r}")


# ---------------------------------------------------------------------------
# Losses


def mse_loss(gold, pred) -> float:
    g = np.asarray(gold, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    if g.shape != p.shape:
        raise ValueError("gold and pred lengths differ")
    if g.size == 0:
        raise ValueError("empty batch")
    return float(np.mean((g - p) ** 2))


def mse_grad(gold, pred) -> np.ndarray:
    g = np.asarray(gold, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    return 2.0 * (p - g) / g.size


def top_one_probability(scores) -> np.ndarray:
    """Softmax of the scores (log-sum-exp stabilized)."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("empty score list")
    z = s - s.max()
    e = np.exp(z)
    return e / e.sum()


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max()
    return z - math.log(np.exp(z).sum())


def listnet_loss(gold, pred) -> float:
    """Cross-entropy between the gold and predicted top-one distributions."""
    g = np.asarray(gold, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    if g.shape != p.shape:
        raise ValueError("gold and pred lengths differ")
    if g.size == 0:
        raise ValueError("empty batch")
    return float(-np.sum(top_one_probability(g) * _log_softmax(p)))


def listnet_grad(gold, pred) -> np.ndarray:
    return top_one_probability(pred) - top_one_probability(gold)


def combined_loss(gold, pred, alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if alpha == 1.0:
        return mse_loss(gold, pred)
    if alpha == 0.0:
        return listnet_loss(gold, pred)
    return alpha * mse_loss(gold, pred) + (1.0 - alpha) * listnet_loss(gold, pred)


def combined_grad(gold, pred, alpha: float) -> np.ndarray:
    if alpha == 1.0:
        return mse_grad(gold, pred)
    if alpha == 0.0:
        return listnet_grad(gold, pred)
    return alpha * mse_grad(gold, pred) + (1.0 - alpha) * listnet_grad(gold, pred)


# ---------------------------------------------------------------------------
# Layers


class Dense:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        limit = math.sqrt(6.0 / (n_in + n_out))
        self.W = rng.uniform(-limit, limit, size=(n_in, n_out))
        self.b = np.zeros(n_out, dtype=np.float64)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray, train_mode: bool) -> np.ndarray:
        self._x = x
        return x @ self.W + self.b

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.dW += self._x.T @ grad
        self.db += grad.sum(axis=0)
        return grad @ self.W.T

    def params(self):
        return [self.W, self.b]

    def grads(self):
        return [self.dW, self.db]


class ReLU:
    def __init__(self):
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, train_mode: bool) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._mask

    def params(self):
        return []

    def grads(self):
        return []


class Dropout:
    def __init__(self, rate: float, rng: np.random.Generator):
        self.rate = rate
        self.rng = rng
        self._mask: np.ndarray | float = 1.0

    def forward(self, x: np.ndarray, train_mode: bool) -> np.ndarray:
        if train_mode and self.rate > 0.0:
            self._mask = (self.rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        else:
            self._mask = 1.0
        return x * self._mask

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._mask

    def params(self):
        return []

    def grads(self):
        return []


class Sigmoid:
    def __init__(self):
        self._out: np.ndarray | None = None

    def forward(self, x: np.ndarray, train_mode: bool) -> np.ndarray:
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._out = out
        return out

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._out * (1.0 - self._out)

    def params(self):
        return []

    def grads(self):
        return []


def _run_stack(layers, x, train_mode):
    for layer in layers:
        x = layer.forward(x, train_mode)
    return x


def _back_stack(layers, grad):
    for layer in reversed(layers):
        grad = layer.backward(grad)
    return grad


# ---------------------------------------------------------------------------
# Network


class ScoringNetwork:
    """Per-channel dense stacks -> concat -> fusion -> logistic score."""

    def __init__(self, channel_dims: dict[str, int], config: TrainConfig):
        self.config = config
        self.channel_dims = dict(channel_dims)
        unknown = set(channel_dims) - set(CHANNEL_ORDER)
        if unknown:
            raise ValueError(f"unknown channel(s) {sorted(unknown)}")
        seeds = np.random.SeedSequence(config.seed).spawn(2)
        init_rng = np.random.default_rng(seeds[0])
        self.dropout_rng = np.random.default_rng(seeds[1])

        self.channels: dict[str, list] = {}
        self._channel_out: dict[str, int] = {}
        for name in CHANNEL_ORDER:
            if name not in channel_dims:
                continue
            dim = channel_dims[name]
            if name == "semantic":
                stack = [
                    Dense(dim, config.semantic_width, init_rng),
                    ReLU(),
                    Dropout(config.dropout, self.dropout_rng),
                ]
                out = config.semantic_width
            else:
                w1, w2 = config.feature_widths
                stack = [
                    Dense(dim, w1, init_rng),
                    ReLU(),
                    Dense(w1, w2, init_rng),
                    ReLU(),
                    Dropout(config.dropout, self.dropout_rng),
                ]
                out = w2
            self.channels[name] = stack
            self._channel_out[name] = out
        if not self.channels:
            raise ValueError("at least one channel must be enabled")
        fusion_in = sum(self._channel_out.values())
        self.fusion = [
            Dense(fusion_in, config.fusion_width, init_rng),
            ReLU(),
            Dropout(config.dropout, self.dropout_rng),
            Dense(config.fusion_width, 1, init_rng),
            Sigmoid(),
        ]

    # -- forward / backward

    def forward(self, inputs: dict[str, np.ndarray], train_mode: bool = False) -> np.ndarray:
        outs = []
        n = None
        for name in CHANNEL_ORDER:
            if name not in self.channels:
                continue
            if name not in inputs:
                raise ValueError(f"missing input for enabled channel {name!r}")
            x = np.asarray(inputs[name], dtype=np.float64)
            if x.ndim != 2 or x.shape[1] != self.channel_dims[name]:
                raise ValueError(
                    f"channel {name!r}: expected (n, {self.channel_dims[name]}), got {x.shape}"
                )
            if n is None:
                n = x.shape[0]
            elif x.shape[0] != n:
                raise ValueError("channel batches have different sizes")
            outs.append(_run_stack(self.channels[name], x, train_mode))
        fused = np.concatenate(outs, axis=1)
        return _run_stack(self.fusion, fused, train_mode)[:, 0]

    def backward(self, dpred: np.ndarray) -> None:
        grad = _back_stack(self.fusion, dpred[:, None])
        offset = 0
        for name in CHANNEL_ORDER:
            if name not in self.channels:
                continue
            width = self._channel_out[name]
            _back_stack(self.channels[name], grad[:, offset : offset + width])
            offset += width

    # -- parameter access

    def layers(self):
        for name in CHANNEL_ORDER:
            if name in self.channels:
                yield from self.channels[name]
        yield from self.fusion

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers() for p in layer.params()]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers() for g in layer.grads()]

    def zero_grads(self) -> None:
        for g in self.gradients():
            g[...] = 0.0

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def get_state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def set_state(self, state: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(params) != len(state):
            raise ValueError("state does not match network shape")
        for p, s in zip(params, state):
            if p.shape != s.shape:
                raise ValueError("state array shape mismatch")
            p[...] = s


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def backward_and_step(inputs: dict[str, np.ndarray], gold_norm: np.ndarray,
                      net: ScoringNetwork, optimizer: Adam, alpha: float) -> float:
    """One training step on a batch; returns the combined loss before the step."""
    pred = net.forward(inputs, train_mode=True)
    loss = combined_loss(gold_norm, pred, alpha)
    if not math.isfinite(loss):
        raise TrainingDiverged(
            f"non-finite loss {loss!r} (pred range {pred.min()}..{pred.max()})"
        )
    net.zero_grads()
    net.backward(combined_grad(gold_norm, pred, alpha))
    optimizer.step(net.gradients())
    return loss


# ---------------------------------------------------------------------------
# Training with dev-QWK model selection


@dataclass
class FoldData:
    train_inputs: dict[str, np.ndarray]
    train_gold_raw: np.ndarray  # integer scores
    dev_inputs: dict[str, np.ndarray]
    dev_gold_raw: np.ndarray
    prompt: PromptSpec


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    dev_qwk: float


@dataclass
class TrainResult:
    net: ScoringNetwork
    log: list[EpochLog] = field(default_factory=list)
    best_epoch: int = -1
    best_dev_qwk: float = -1.0


def _dev_qwk(net: ScoringNetwork, data: FoldData) -> float:
    pred_norm = net.forward(data.dev_inputs, train_mode=False)
    pred_raw = np.array([denormalize_score(u, data.prompt) for u in pred_norm])
    try:
        return qwk(data.dev_gold_raw, pred_raw, data.prompt.score_min, data.prompt.score_max)
    except UndefinedMetric:
        return -1.0  # constant predictions and constant gold


def train_and_select(data: FoldData, config: TrainConfig) -> TrainResult:
    """Train for config.epochs, tracking dev QWK each epoch; returns the
    parameters of the best dev-QWK epoch."""
    span = data.prompt.score_max - data.prompt.score_min
    gold_norm = (data.train_gold_raw - data.prompt.score_min) / span
    channel_dims = {name: np.asarray(x).shape[1] for name, x in data.train_inputs.items()
                    if name in config.channels}
    if set(channel_dims) != set(config.channels):
        raise ValueError("fold data does not provide every enabled channel")
    n = len(data.train_gold_raw)
    if n == 0 or len(data.dev_gold_raw) == 0:
        raise ValueError("train and dev splits must be non-empty")

    net = ScoringNetwork(channel_dims, config)
    optimizer = Adam(net.parameters(), lr=config.learning_rate)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(3)[2])

    result = TrainResult(net=net)
    best_state = None
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = {name: x[idx] for name, x in data.train_inputs.items() if name in channel_dims}
            losses.append(backward_and_step(batch, gold_norm[idx], net, optimizer, config.alpha))
        dev = _dev_qwk(net, data)
        result.log.append(EpochLog(epoch=epoch, train_loss=float(np.mean(losses)), dev_qwk=dev))
        if dev > result.best_dev_qwk:
            result.best_dev_qwk = dev
            result.best_epoch = epoch
            best_state = net.get_state()
    if best_state is not None:
        net.set_state(best_state)
    return result


def write_train_log(path, log: list[EpochLog]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("epoch\ttrain_loss\tdev_qwk\n")
        for entry in log:
            f.write(f"{entry.epoch}\t{entry.train_loss:.17g}\t{entry.dev_qwk:.17g}\n")


# ---------------------------------------------------------------------------
# Checkpoints: header + parameter blocks, bit-exact reload


def save_checkpoint(path, net: ScoringNetwork, extra: dict[str, str] | None = None) -> None:
    cfg = net.config
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"channels={','.join(n for n in CHANNEL_ORDER if n in net.channels)}\n")
        f.write("dims=" + ",".join(f"{n}:{net.channel_dims[n]}"
                                   for n in CHANNEL_ORDER if n in net.channel_dims) + "\n")
        f.write(f"semantic_width={cfg.semantic_width}\n")
        f.write(f"feature_widths={cfg.feature_widths[0]},{cfg.feature_widths[1]}\n")
        f.write(f"fusion_width={cfg.fusion_width}\n")
        f.write(f"alpha={cfg.alpha:.17g}\n")
        f.write(f"dropout={cfg.dropout:.17g}\n")
        f.write(f"learning_rate={cfg.learning_rate:.17g}\n")
        f.write(f"seed={cfg.seed}\n")
        for key in sorted(extra or {}):
            f.write(f"x_{key}={extra[key]}\n")
        for i, p in enumerate(net.parameters()):
            shape = ",".join(str(s) for s in p.shape)
            flat = "\t".join(f"{v:.17g}" for v in p.ravel())
            f.write(f"param\t{i}\t{shape}\t{flat}\n")


def load_checkpoint(path) -> tuple[ScoringNetwork, dict[str, str]]:
    meta: dict[str, str] = {}
    params: list[np.ndarray] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("param\t"):
                _, _, shape_s, flat = line.split("\t", 3)
                shape = tuple(int(s) for s in shape_s.split(","))
                values = np.array([float(v) for v in flat.split("\t")])
                params.append(values.reshape(shape))
            else:
                key, _, value = line.partition("=")
                meta[key] = value
    channels = tuple(meta["channels"].split(","))
    dims = {k: int(v) for k, v in (pair.split(":") for pair in meta["dims"].split(","))}
    fw = meta["feature_widths"].split(",")
    config = TrainConfig(
        alpha=float(meta["alpha"]),
        dropout=float(meta["dropout"]),
        learning_rate=float(meta["learning_rate"]),
        seed=int(meta["seed"]),
        channels=channels,
        semantic_width=int(meta["semantic_width"]),
        feature_widths=(int(fw[0]), int(fw[1])),
        fusion_width=int(meta["fusion_width"]),
    )
    net = ScoringNetwork(dims, config)
    net.set_state(params)
    extra = {k[2:]: v for k, v in meta.items() if k.startswith("x_")}
    return net, extra
