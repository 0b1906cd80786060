"""Gaussian radial-basis-function network for signal-strength regression.

One hidden layer of Gaussian units z_j = exp(-||x - mu_j||^2 / (2 delta_j^2))
feeding a linear output layer Y_k = sum_j W_kj z_j. Training runs per-sample
updates of weights, centers and spans on the squared-error objective
E = 1/2 sum_k e_k^2 with e_k = d_k - y_k.

Two update modes exist. "derived_gradient" (default) is exact stochastic
gradient descent. "paper_literal" reproduces a historically published
variant whose weight update carries the opposite sign (it ascends E) and
whose center update divides by delta_j instead of delta_j^2; it is retained
for comparison experiments. Features and targets are min-max normalized to
[0, 1]; statistics come from the training split only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    SchemaError,
    TrainingDivergedError,
)

SPAN_FLOOR = 1e-6  # keeps the 1/delta and 1/delta^2 update terms finite

UPDATE_MODES = ("derived_gradient", "paper_literal")

MODEL_FORMAT_VERSION = 1


@dataclass
class RbfConfig:
    """Network architecture and training hyperparameters.

    tau_delta defaults to tau_mu when left as None. Learning rates may be
    zero (frozen parameters) but not negative.
    """

    m_hidden: int = 20
    input_dim: int = 4  # (D, H, F, P)
    output_dim: int = 1
    tau_w: float = 0.2
    tau_mu: float = 0.05
    tau_delta: float | None = None
    epochs: int = 500
    seed: int = 0
    update_mode: str = "derived_gradient"

    def __post_init__(self):
        if self.m_hidden < 1:
            raise ConfigurationError(f"m_hidden must be >= 1, got {self.m_hidden}")
        if self.input_dim < 1:
            raise ConfigurationError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.output_dim < 1:
            raise ConfigurationError(
                f"output_dim must be >= 1, got {self.output_dim}"
            )
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        for name in ("tau_w", "tau_mu", "tau_delta"):
            v = getattr(self, name)
            if v is None:
                continue
            if not np.isfinite(v) or v < 0.0:
                raise ConfigurationError(
                    f"{name} must be finite and >= 0, got {v!r}"
                )
        if self.update_mode not in UPDATE_MODES:
            raise ConfigurationError(
                f"update_mode must be one of {UPDATE_MODES}, got {self.update_mode!r}"
            )

    @property
    def effective_tau_delta(self) -> float:
        return self.tau_mu if self.tau_delta is None else self.tau_delta


def _minmax_stats(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise (min, max); constant columns are widened to +-0.5.

    Widening keeps min < max so normalization stays invertible and maps
    the constant value to 0.5.
    """
    mins = data.min(axis=0).astype(float)
    maxs = data.max(axis=0).astype(float)
    degenerate = maxs - mins <= 0.0
    mins[degenerate] -= 0.5
    maxs[degenerate] += 0.5
    return mins, maxs


@dataclass
class NormStats:
    """Per-feature and per-target min/max for [0, 1] normalization."""

    x_min: np.ndarray
    x_max: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray

    def __post_init__(self):
        for name in ("x_min", "x_max", "y_min", "y_max"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (np.all(self.x_min < self.x_max) and np.all(self.y_min < self.y_max)):
            raise ConfigurationError("normalization stats require min < max")

    def normalize_features(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.x_min) / (self.x_max - self.x_min)

    def denormalize_features(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) * (self.x_max - self.x_min) + self.x_min

    def normalize_targets(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_min) / (self.y_max - self.y_min)

    def denormalize_targets(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) * (self.y_max - self.y_min) + self.y_min


class RbfNetwork:
    """Network state: centers, spans, output weights, normalization stats.

    Centers live in normalized feature space. A network is exclusively
    owned while training; a frozen network is safe for concurrent reads.
    """

    def __init__(
        self,
        centers: np.ndarray,
        spans: np.ndarray,
        weights: np.ndarray,
        norm: NormStats,
    ):
        self.centers = np.array(centers, dtype=float)
        self.spans = np.array(spans, dtype=float)
        self.weights = np.array(weights, dtype=float)
        self.norm = norm
        m, d = self.centers.shape
        if self.spans.shape != (m,):
            raise DomainError(
                f"spans shape {self.spans.shape} inconsistent with {m} centers"
            )
        if self.weights.ndim != 2 or self.weights.shape[1] != m:
            raise DomainError(
                f"weights shape {self.weights.shape} inconsistent with {m} centers"
            )
        if norm.x_min.shape != (d,):
            raise DomainError(
                f"norm stats cover {norm.x_min.shape[0]} features, centers have {d}"
            )
        if norm.y_min.shape != (self.weights.shape[0],):
            raise DomainError(
                f"norm stats cover {norm.y_min.shape[0]} targets, "
                f"network has {self.weights.shape[0]} outputs"
            )
        if np.any(self.spans <= 0.0):
            raise DomainError("spans must be strictly positive")

    @property
    def m_hidden(self) -> int:
        return self.centers.shape[0]

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]

    def _check_x(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise DomainError(
                f"expected feature vector of length {self.input_dim}, "
                f"got shape {x.shape}"
            )
        return x

    def hidden_activations(self, x: np.ndarray) -> np.ndarray:
        """Gaussian unit responses z_j in (0, 1] for a normalized input."""
        x = self._check_x(x)
        diff = x - self.centers
        q = (diff * diff).sum(axis=1) / (2.0 * self.spans * self.spans)
        return np.exp(-q)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Normalized outputs Y_k = sum_j W_kj z_j."""
        return self.weights @ self.hidden_activations(x)

    def predict(self, raw_features: np.ndarray) -> np.ndarray:
        """Denormalizing accessor: raw feature rows to raw target units.

        Accepts one feature vector or a 2-D batch; returns matching shape
        (output_dim per row).
        """
        raw = np.asarray(raw_features, dtype=float)
        single = raw.ndim == 1
        rows = raw[None, :] if single else raw
        if rows.ndim != 2 or rows.shape[1] != self.input_dim:
            raise DomainError(
                f"expected rows of {self.input_dim} features, got shape {raw.shape}"
            )
        out = np.empty((rows.shape[0], self.output_dim))
        for i, row in enumerate(rows):
            xn = self.norm.normalize_features(row)
            out[i] = self.norm.denormalize_targets(self.forward(xn))
        return out[0] if single else out

    def copy(self) -> "RbfNetwork":
        norm = NormStats(
            self.norm.x_min.copy(), self.norm.x_max.copy(),
            self.norm.y_min.copy(), self.norm.y_max.copy(),
        )
        return RbfNetwork(
            self.centers.copy(), self.spans.copy(), self.weights.copy(), norm
        )


@dataclass
class TrainReport:
    """Per-epoch training loss and final accuracy summary.

    mse_per_epoch holds the mean over each epoch's samples of the
    pre-update squared error sum_k e_k^2 (normalized units). Final RMSEs
    are computed with frozen post-training parameters; validation fields
    are None when no validation split was supplied.
    """

    mse_per_epoch: list[float] = field(default_factory=list)
    final_train_rmse_norm: float = 0.0
    final_train_rmse_db: float = 0.0
    final_val_rmse_norm: float | None = None
    final_val_rmse_db: float | None = None


def error_signal(d: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Elementwise error e_k = d_k - y_k."""
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    if d.shape != y.shape:
        raise DomainError(f"shape mismatch: targets {d.shape}, outputs {y.shape}")
    return d - y


def init_network(config: RbfConfig, training_inputs: np.ndarray) -> RbfNetwork:
    """Build a network from raw training inputs, deterministically per seed.

    Feature normalization stats come from the inputs; target stats start
    as the identity [0, 1] range and are replaced by train() from its
    training targets. Centers are m_hidden distinct input rows (sampled
    without replacement in normalized space), all spans start at the mean
    nearest-neighbor distance between centers (0.5 when there is a single
    center or the sampled centers coincide), and weights are uniform in
    [-0.1, 0.1] except W_11 = W_21 = 1 for two or more outputs.
    """
    inputs = np.asarray(training_inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != config.input_dim:
        raise ConfigurationError(
            f"training inputs must be (n, {config.input_dim}), got {inputs.shape}"
        )
    n = inputs.shape[0]
    if n < config.m_hidden:
        raise ConfigurationError(
            f"need at least m_hidden={config.m_hidden} training rows, got {n}"
        )
    x_min, x_max = _minmax_stats(inputs)
    norm = NormStats(
        x_min, x_max,
        np.zeros(config.output_dim), np.ones(config.output_dim),
    )
    normalized = norm.normalize_features(inputs)
    rng = np.random.default_rng(config.seed)
    idx = rng.choice(n, size=config.m_hidden, replace=False)
    centers = normalized[idx].copy()
    if config.m_hidden > 1:
        dist = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
        np.fill_diagonal(dist, np.inf)
        span0 = float(np.mean(dist.min(axis=1)))
        if span0 <= 0.0:
            span0 = 0.5
    else:
        span0 = 0.5
    spans = np.full(config.m_hidden, span0)
    weights = rng.uniform(-0.1, 0.1, size=(config.output_dim, config.m_hidden))
    if config.output_dim >= 2:
        weights[0, 0] = 1.0
        weights[1, 0] = 1.0
    return RbfNetwork(centers, spans, weights, norm)


def _apply_step(
    net: RbfNetwork, x: np.ndarray, d: np.ndarray, config: RbfConfig
) -> np.ndarray:
    """One per-sample update from the pre-step state; returns pre-update e."""
    x = net._check_x(x)
    d = np.asarray(d, dtype=float)
    if d.shape != (net.output_dim,):
        raise DomainError(
            f"expected target vector of length {net.output_dim}, got shape {d.shape}"
        )
    diff = x - net.centers  # (m, dim)
    spans = net.spans
    q = (diff * diff).sum(axis=1) / (2.0 * spans * spans)
    z = np.exp(-q)  # (m,); ln z = -q
    e = d - net.weights @ z
    coef = e @ net.weights  # sum_k e_k W_kj per hidden unit

    if config.update_mode == "derived_gradient":
        w_sign = 1.0
        center_rate = z / (spans * spans)
    else:
        w_sign = -1.0
        center_rate = z / spans

    # zero-rate parameter classes stay frozen; skipping their arithmetic
    # keeps them exact and out of divergence blame (0 * inf is nan)
    new_w = net.weights
    if config.tau_w != 0.0:
        new_w = net.weights + w_sign * config.tau_w * np.outer(e, z)
    new_centers = net.centers
    if config.tau_mu != 0.0:
        new_centers = (
            net.centers + config.tau_mu * (center_rate * coef)[:, None] * diff
        )
    new_spans = spans
    tau_d = config.effective_tau_delta
    if tau_d != 0.0:
        new_spans = np.maximum(
            spans - 2.0 * tau_d * (z / spans) * (-q) * coef, SPAN_FLOOR
        )

    if not np.all(np.isfinite(new_w)):
        raise TrainingDivergedError("weights")
    if not np.all(np.isfinite(new_centers)):
        raise TrainingDivergedError("centers")
    if not np.all(np.isfinite(new_spans)):
        raise TrainingDivergedError("spans")
    net.weights = new_w
    net.centers = new_centers
    net.spans = new_spans
    return e


def train_step(
    net: RbfNetwork, x: np.ndarray, d: np.ndarray, config: RbfConfig
) -> RbfNetwork:
    """Single-sample parameter update (in place); returns the network.

    derived_gradient mode performs exact gradient descent on E = 1/2 sum e^2:

        W_kj   += tau_w  e_k z_j
        mu_ij  += tau_mu (z_j / delta_j^2) (x_i - mu_ij) sum_k e_k W_kj
        delta_j -= 2 tau_delta (z_j / delta_j) ln(z_j)   sum_k e_k W_kj

    paper_literal mode flips the weight-update sign and divides the center
    update by delta_j instead of delta_j^2; the span rule is shared. All
    updates read the pre-step state; spans are floored at 1e-6 afterwards.
    """
    _apply_step(net, x, d, config)
    return net


def _rmse(errors: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(errors))))


def train(
    net: RbfNetwork,
    features: np.ndarray,
    targets: np.ndarray,
    config: RbfConfig,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[RbfNetwork, TrainReport]:
    """Epoch loop of per-sample updates over raw training rows.

    Target normalization stats are (re)computed here from the supplied
    training targets, then each epoch visits all samples in a freshly
    shuffled order drawn from the config seed. The per-epoch MSE is the
    mean pre-update sum_k e_k^2 across the epoch. Deterministic given
    (config, data). Divergence raises with the failing epoch attached.
    """
    X = np.asarray(features, dtype=float)
    Y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ConfigurationError(
            f"features must be (n, {net.input_dim}), got {X.shape}"
        )
    if Y.ndim != 2 or Y.shape != (X.shape[0], net.output_dim):
        raise ConfigurationError(
            f"targets must be ({X.shape[0]}, {net.output_dim}), got {Y.shape}"
        )
    if X.shape[0] == 0:
        raise ConfigurationError("training set is empty")

    y_min, y_max = _minmax_stats(Y)
    net.norm.y_min, net.norm.y_max = y_min, y_max
    Xn = net.norm.normalize_features(X)
    Yn = net.norm.normalize_targets(Y)

    rng = np.random.default_rng(config.seed)
    report = TrainReport()
    sq = np.empty(X.shape[0])
    for epoch in range(config.epochs):
        order = rng.permutation(X.shape[0])
        for i in order:
            try:
                e = _apply_step(net, Xn[i], Yn[i], config)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(exc.parameter_class, epoch) from None
            # reduce in index order so the reported MSE does not pick up
            # ulp-level noise from the per-epoch visit order
            sq[i] = float(e @ e)
        report.mse_per_epoch.append(float(np.mean(sq)))

    pred = net.predict(X)
    pred_norm = net.norm.normalize_targets(pred.reshape(Y.shape))
    report.final_train_rmse_norm = _rmse(pred_norm - Yn)
    report.final_train_rmse_db = _rmse(pred.reshape(Y.shape) - Y)
    if validation is not None:
        Xv = np.asarray(validation[0], dtype=float)
        Yv = np.asarray(validation[1], dtype=float)
        pv = net.predict(Xv).reshape(Yv.shape)
        report.final_val_rmse_db = _rmse(pv - Yv)
        report.final_val_rmse_norm = _rmse(
            net.norm.normalize_targets(pv) - net.norm.normalize_targets(Yv)
        )
    return net, report


def _objective(net: RbfNetwork, x: np.ndarray, d: np.ndarray) -> float:
    e = d - net.forward(x)
    return 0.5 * float(e @ e)


def _analytic_gradients(
    net: RbfNetwork, x: np.ndarray, d: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of E = 1/2 sum e^2 w.r.t. weights, centers, spans."""
    x = net._check_x(x)
    diff = x - net.centers
    spans = net.spans
    q = (diff * diff).sum(axis=1) / (2.0 * spans * spans)
    z = np.exp(-q)
    e = np.asarray(d, dtype=float) - net.weights @ z
    coef = e @ net.weights
    g_w = -np.outer(e, z)
    g_mu = -((z / (spans * spans)) * coef)[:, None] * diff
    g_delta = -(2.0 * z / spans) * q * coef  # ln z = -q
    return g_w, g_mu, g_delta


# Gradient entries below this magnitude are compared absolutely at this
# scale: central differences at step ~1e-6 carry ~1e-10 absolute noise, so
# a pure relative comparison on near-zero entries is uninformative.
GRADIENT_CHECK_FLOOR = 1e-3


def gradient_check(
    net: RbfNetwork, sample: tuple[np.ndarray, np.ndarray], epsilon: float = 1e-6
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Perturbs every weight, center coordinate and span by +-epsilon on a
    copy of the network. The per-entry error is
    |analytic - numeric| / max(|analytic|, |numeric|, GRADIENT_CHECK_FLOOR).
    """
    if not (1e-9 < epsilon < 1e-3):
        raise DomainError(f"epsilon must be in (1e-9, 1e-3), got {epsilon}")
    x, d = sample
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    g_w, g_mu, g_delta = _analytic_gradients(net, x, d)

    worst = 0.0
    work = net.copy()

    def central(arr: np.ndarray, index: tuple[int, ...]) -> float:
        orig = arr[index]
        arr[index] = orig + epsilon
        up = _objective(work, x, d)
        arr[index] = orig - epsilon
        down = _objective(work, x, d)
        arr[index] = orig
        return (up - down) / (2.0 * epsilon)

    for analytic, arr in (
        (g_w, work.weights), (g_mu, work.centers), (g_delta, work.spans)
    ):
        for index in np.ndindex(arr.shape):
            numeric = central(arr, index)
            a = analytic[index]
            denom = max(abs(a), abs(numeric), GRADIENT_CHECK_FLOOR)
            worst = max(worst, abs(a - numeric) / denom)
    return worst


def save_model(path: str, net: RbfNetwork, config: RbfConfig) -> None:
    """Write the network and its config echo as a JSON document.

    Floats serialize via repr (17 significant digits), so a load returns
    value-identical parameters.
    """
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": {
            "m_hidden": config.m_hidden,
            "input_dim": config.input_dim,
            "output_dim": config.output_dim,
            "tau_w": config.tau_w,
            "tau_mu": config.tau_mu,
            "tau_delta": config.tau_delta,
            "epochs": config.epochs,
            "seed": config.seed,
            "update_mode": config.update_mode,
        },
        "norm_stats": {
            "x_min": net.norm.x_min.tolist(),
            "x_max": net.norm.x_max.tolist(),
            "y_min": net.norm.y_min.tolist(),
            "y_max": net.norm.y_max.tolist(),
        },
        "centers": net.centers.tolist(),
        "spans": net.spans.tolist(),
        "weights": net.weights.tolist(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path: str) -> tuple[RbfNetwork, RbfConfig]:
    """Load a model JSON written by save_model; schema-checked."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(
                f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
            ) from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: model document must be a JSON object")
    required = {"format_version", "config", "norm_stats", "centers", "spans", "weights"}
    missing = required - set(doc)
    if missing:
        raise SchemaError(f"{path}: missing keys {sorted(missing)}")
    if doc["format_version"] != MODEL_FORMAT_VERSION:
        raise SchemaError(
            f"{path}: unsupported format_version {doc['format_version']!r}"
        )
    try:
        config = RbfConfig(**doc["config"])
        stats = doc["norm_stats"]
        norm = NormStats(
            np.array(stats["x_min"], dtype=float),
            np.array(stats["x_max"], dtype=float),
            np.array(stats["y_min"], dtype=float),
            np.array(stats["y_max"], dtype=float),
        )
        net = RbfNetwork(
            np.array(doc["centers"], dtype=float),
            np.array(doc["spans"], dtype=float),
            np.array(doc["weights"], dtype=float),
            norm,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed model document: {exc}") from exc
    return net, config
