"""Data generation from the Johnson-Cook law, backprop + ADAM training, metrics."""

import csv
import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from .johnson_cook import jc_derivatives, jc_flow_stress
from .mlp import (
    DenseLayer,
    MlpModel,
    NormalizationRanges,
    StructureError,
    normalize_inputs,
    parameter_count,
    sigmoid,
)

TRAIN_RATES = (1.0, 10.0, 50.0, 500.0, 5000.0, 50000.0)
TRAIN_TEMPERATURES = (20.0, 100.0, 200.0, 300.0, 400.0, 500.0)
COLUMNS = ("eps_p", "rate", "T", "sigma")
DERIV_COLUMNS = ("dsde", "dsdr", "dsdT")
AARE_FLOOR = 1e-12


class TrainingError(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, iteration, loss):
        super().__init__(f"training diverged at iteration {iteration} (loss={loss})")
        self.iteration = iteration
        self.loss = loss


@dataclass(eq=False)
class Dataset:
    """Column arrays of flow-stress samples; ``derivs`` has shape (N, 3) when present."""

    eps_p: np.ndarray
    rate: np.ndarray
    T: np.ndarray
    sigma: np.ndarray
    derivs: np.ndarray = None

    def __post_init__(self):
        for name in COLUMNS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        n = self.eps_p.shape[0]
        if any(getattr(self, name).shape[0] != n for name in COLUMNS):
            raise ValueError("all dataset columns must have the same length")
        if self.derivs is not None:
            self.derivs = np.asarray(self.derivs, dtype=float).reshape(n, 3)
        for name in COLUMNS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"column {name} contains non-finite values")
        if self.derivs is not None and not np.all(np.isfinite(self.derivs)):
            raise ValueError("derivative columns contain non-finite values")
        if np.any(self.rate <= 0):
            raise ValueError("rates must be strictly positive")

    def __len__(self):
        return self.eps_p.shape[0]

    @property
    def X(self):
        """Inputs stacked as (N, 3): eps_p, rate, T."""
        return np.column_stack([self.eps_p, self.rate, self.T])

    def digest(self):
        h = hashlib.sha256()
        for name in COLUMNS:
            h.update(np.ascontiguousarray(getattr(self, name)).tobytes())
        if self.derivs is not None:
            h.update(np.ascontiguousarray(self.derivs).tobytes())
        return h.hexdigest()

    def to_csv(self, path):
        header = list(COLUMNS)
        cols = [getattr(self, name) for name in COLUMNS]
        if self.derivs is not None:
            header += DERIV_COLUMNS
            cols += list(self.derivs.T)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in zip(*cols):
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        if tuple(header[:4]) != COLUMNS:
            raise ValueError(f"{path}: expected header starting with {','.join(COLUMNS)}")
        has_derivs = tuple(header[4:]) == DERIV_COLUMNS
        if len(header) not in (4, 7) or (len(header) == 7 and not has_derivs):
            raise ValueError(f"{path}: unexpected columns {header}")
        data = np.array(rows, dtype=float).reshape(-1, len(header))
        return cls(*data[:, :4].T, derivs=data[:, 4:] if has_derivs else None)


def generate_training_grid(params, n_strain=70, rates=TRAIN_RATES,
                           temperatures=TRAIN_TEMPERATURES, eps_p_range=(0.0, 1.0)):
    """Cartesian grid of equidistant strains x rates x temperatures."""
    strains = np.linspace(*eps_p_range, n_strain)
    rows = np.array(list(itertools.product(temperatures, rates, strains)))
    T, rate, eps_p = rows.T
    return Dataset(eps_p, rate, T, jc_flow_stress(params, eps_p, rate, T))


def generate_test_set(params, count=5000, seed=0, eps_p_range=(0.0, 1.0),
                      rate_range=(1.0, 50000.0), T_range=(20.0, 500.0),
                      rate_sampling="log"):
    """Uniform random points with reference stresses and derivatives."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    eps_p = rng.uniform(*eps_p_range, count)
    if rate_sampling == "log":
        rate = np.exp(rng.uniform(np.log(rate_range[0]), np.log(rate_range[1]), count))
    elif rate_sampling == "linear":
        rate = rng.uniform(*rate_range, count)
    else:
        raise ValueError("rate_sampling must be 'log' or 'linear'")
    T = rng.uniform(*T_range, count)
    sigma = jc_flow_stress(params, eps_p, rate, T)
    derivs = np.column_stack(jc_derivatives(params, eps_p, rate, T))
    return Dataset(eps_p, rate, T, sigma, derivs)


def loss_erms(pred, ref):
    """Root mean square error between two equal-length arrays."""
    pred, ref = np.asarray(pred, dtype=float), np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {ref.shape}")
    if pred.size == 0:
        raise ValueError("need at least one value")
    return float(np.sqrt(np.mean((pred - ref) ** 2)))


def init_model(widths, activation, ranges, seed=0):
    """Glorot-uniform weights, zero biases."""
    if len(widths) not in (1, 2):
        raise StructureError(f"1 or 2 hidden layers supported, got {len(widths)}")
    rng = np.random.default_rng(seed)
    layers, n_in = [], 3
    for width in widths:
        limit = np.sqrt(6.0 / (n_in + width))
        layers.append(DenseLayer(rng.uniform(-limit, limit, (width, n_in)), np.zeros(width)))
        n_in = width
    limit = np.sqrt(6.0 / (n_in + 1))
    return MlpModel(tuple(layers), activation, rng.uniform(-limit, limit, n_in), 0.0, ranges)


class _Unpacked:
    """Views of a flat parameter vector laid out as ``MlpModel.to_vector``."""

    def __init__(self, theta, widths):
        self.weights, self.biases = [], []
        pos, n_in = 0, 3
        for width in widths:
            self.weights.append(theta[pos:pos + width * n_in].reshape(width, n_in))
            pos += width * n_in
            self.biases.append(theta[pos:pos + width])
            pos += width
            n_in = width
        self.out_w = theta[pos:pos + n_in]
        self.out_b = theta[pos + n_in:pos + n_in + 1]


def _loss_and_grad(theta, grad, widths, activation, x, target):
    p = _Unpacked(theta, widths)
    g = _Unpacked(grad, widths)
    acts = [x]
    for w, b in zip(p.weights, p.biases):
        y = acts[-1] @ w.T + b
        acts.append(np.tanh(y) if activation == "tanh" else sigmoid(y))
    resid = acts[-1] @ p.out_w + p.out_b[0] - target
    loss = float(np.mean(resid ** 2))

    delta_out = (2.0 / resid.shape[0]) * resid
    g.out_w[:] = delta_out @ acts[-1]
    g.out_b[0] = delta_out.sum()
    upstream = np.outer(delta_out, p.out_w)
    for k in range(len(widths) - 1, -1, -1):
        a = acts[k + 1]
        slope = 1.0 - a * a if activation == "tanh" else a * (1.0 - a)
        delta = upstream * slope
        g.weights[k][:] = delta.T @ acts[k]
        g.biases[k][:] = delta.sum(axis=0)
        if k:
            upstream = delta @ p.weights[k]
    return loss


def _training_arrays(model, data):
    x = normalize_inputs(model.ranges, data.eps_p, data.rate, data.T)
    return x, model.ranges.normalize_stress(data.sigma)


def loss_and_gradient(model, data):
    """Mean squared error on normalized stress and its gradient w.r.t. ``to_vector()``."""
    theta = model.to_vector()
    grad = np.zeros_like(theta)
    x, target = _training_arrays(model, data)
    loss = _loss_and_grad(theta, grad, model.widths, model.activation, x, target)
    return loss, grad


@dataclass
class TrainConfig:
    """ADAM settings.

    With ``schedule="cosine"`` the step size is annealed from
    ``learning_rate`` to ``lr_final`` over the run; ``"constant"`` keeps it
    fixed. The defaults reach sub-0.2 % stress error on the 2520-point grid
    within 10 000 full-batch iterations; the textbook ``1e-3`` /
    ``beta2=0.999`` setting needs several times more.
    """

    iterations: int = 10_000
    learning_rate: float = 0.1
    seed: int = 0
    batch: str = "full"
    report_stride: int = 100
    beta1: float = 0.9
    beta2: float = 0.95
    epsilon: float = 1e-8
    schedule: str = "cosine"
    lr_final: float = 1e-5

    def step_size(self, it):
        """Learning rate used at 1-based iteration ``it``."""
        if self.schedule == "constant" or self.iterations == 1:
            return self.learning_rate
        frac = (it - 1) / (self.iterations - 1)
        return self.lr_final + 0.5 * (self.learning_rate - self.lr_final) * (
            1.0 + np.cos(np.pi * frac))

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch != "full":
            raise ValueError("only full-batch training is supported")
        if self.report_stride < 1:
            raise ValueError("report_stride must be at least 1")
        if self.schedule not in ("constant", "cosine"):
            raise ValueError("schedule must be 'constant' or 'cosine'")
        if not self.lr_final >= 0:
            raise ValueError("lr_final must be non-negative")


def train_adam(model, data, cfg=None, callback=None):
    """Full-batch ADAM on the mean squared normalized-stress error.

    Returns the trained model and a list of ``(iteration, erms)`` pairs taken
    every ``cfg.report_stride`` iterations plus the final one. ``erms`` is
    the loss before that iteration's update.
    """
    cfg = cfg or TrainConfig()
    x, target = _training_arrays(model, data)
    widths, activation = model.widths, model.activation
    theta = model.to_vector()
    grad = np.zeros_like(theta)
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    b1, b2 = cfg.beta1, cfg.beta2
    history = []
    for it in range(1, cfg.iterations + 1):
        loss = _loss_and_grad(theta, grad, widths, activation, x, target)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise TrainingError(it, loss)
        if it % cfg.report_stride == 0 or it == 1 or it == cfg.iterations:
            history.append((it, float(np.sqrt(loss))))
            if callback is not None:
                callback(it, history[-1][1])
        m1 *= b1
        m1 += (1.0 - b1) * grad
        m2 *= b2
        m2 += (1.0 - b2) * grad * grad
        step = cfg.step_size(it) / (1.0 - b1 ** it)
        theta -= step * m1 / (np.sqrt(m2 / (1.0 - b2 ** it)) + cfg.epsilon)
    provenance = {"seed": cfg.seed, "iterations": cfg.iterations,
                  "dataset_sha256": data.digest()}
    return model.with_parameters(theta, provenance), history


def write_history(history, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "erms"])
        for it, erms in history:
            writer.writerow([it, repr(float(erms))])


@dataclass
class MetricsReport:
    """Accuracy summary; AARE values are percentages."""

    erms: float
    aare_sigma: float
    aare_deps: float
    aare_drate: float
    aare_dT: float
    param_count: int
    name: str = "model"
    excluded: dict = field(default_factory=dict)

    HEADER = ("Model", "N", "E_RMS", "d_sigma%", "d_deps%", "d_drate%", "d_dT%")

    def row(self):
        return (self.name, str(self.param_count), f"{self.erms:.3e}",
                f"{self.aare_sigma:.3f}", f"{self.aare_deps:.3f}",
                f"{self.aare_drate:.3f}", f"{self.aare_dT:.3f}")

    def format_table(self):
        rows = [self.HEADER, self.row()]
        widths = [max(len(r[i]) for r in rows) for i in range(len(self.HEADER))]
        return "\n".join(" | ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows)


def aare(ref, pred, floor=AARE_FLOOR):
    """Average absolute relative error in percent and the number of excluded rows."""
    ref, pred = np.asarray(ref, dtype=float), np.asarray(pred, dtype=float)
    keep = np.abs(ref) >= floor
    if not np.any(keep):
        return 0.0, int(ref.size)
    value = 100.0 * float(np.mean(np.abs((ref[keep] - pred[keep]) / ref[keep])))
    return value, int(ref.size - np.count_nonzero(keep))


def evaluate(law, test):
    """Compare a hardening law against the reference columns of ``test``.

    ``law(eps_p, rate, T)`` must return ``(sigma, d_eps, d_rate, d_T)``.
    E_RMS uses the law's own stress ranges when it has them, otherwise the
    stress range of the test set.
    """
    if test.derivs is None:
        raise ValueError("test set has no derivative columns")
    sigma, d_eps, d_rate, d_T = law(test.eps_p, test.rate, test.T)
    ranges = getattr(law, "ranges", None)
    if ranges is not None:
        lo, span = ranges.sigma_min, ranges.sigma_span
    else:
        lo, span = test.sigma.min(), np.ptp(test.sigma) or 1.0
    erms = loss_erms((sigma - lo) / span, (test.sigma - lo) / span)
    results, excluded = [], {}
    for key, ref, pred in (("sigma", test.sigma, sigma),
                           ("deps", test.derivs[:, 0], d_eps),
                           ("drate", test.derivs[:, 1], d_rate),
                           ("dT", test.derivs[:, 2], d_T)):
        value, dropped = aare(ref, pred)
        results.append(value)
        if dropped:
            excluded[key] = dropped
    params = getattr(law, "n_params", 0)
    return MetricsReport(erms, *results, param_count=params,
                         name=getattr(law, "name", "model"), excluded=excluded)


def default_ranges(params, data):
    """Scaling ranges taken from a training set."""
    return NormalizationRanges.from_data(
        data.eps_p, data.rate, data.T, data.sigma, params.eps_dot_ref
    )


__all__ = [
    "Dataset", "MetricsReport", "TrainConfig", "TrainingError",
    "aare", "default_ranges", "evaluate", "generate_test_set",
    "generate_training_grid", "init_model", "loss_and_gradient", "loss_erms",
    "parameter_count", "train_adam", "write_history",
]
