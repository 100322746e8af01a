"""Feed-forward flow-stress network: scaling, forward pass and input Jacobian.

The network maps normalized inputs ``x = (x_eps, x_rate, x_T)`` in ``[0, 1]^3``
to a normalized stress ``s``. One or two hidden layers share a single
activation (``tanh`` or ``sigmoid``); the output neuron is linear.

Rate enters through ``ln(rate / eps_dot_ref)`` before min/max scaling, so the
physical rate derivative picks up a ``1 / rate`` factor from the chain rule.
"""

import threading
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "sigmoid")
RATE_SCALINGS = ("chain", "linear")


class StructureError(ValueError):
    """Network layout is inconsistent or not supported by an operation."""


@dataclass(frozen=True)
class NormalizationRanges:
    """Bounds used to map physical quantities to ``[0, 1]`` and back.

    ``log_rate_*`` are bounds of ``ln(rate / eps_dot_ref)``.
    """

    eps_p_min: float
    eps_p_max: float
    log_rate_min: float
    log_rate_max: float
    T_min: float
    T_max: float
    sigma_min: float
    sigma_max: float
    eps_dot_ref: float = 1.0

    def __post_init__(self):
        for name in ("eps_p", "log_rate", "T", "sigma"):
            lo, hi = getattr(self, f"{name}_min"), getattr(self, f"{name}_max")
            if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
                raise ValueError(f"{name}_max must exceed {name}_min, got [{lo}, {hi}]")
        if not self.eps_dot_ref > 0:
            raise ValueError(f"eps_dot_ref must be positive, got {self.eps_dot_ref}")

    @classmethod
    def from_data(cls, eps_p, rate, T, sigma, eps_dot_ref=1.0):
        log_rate = np.log(np.asarray(rate, dtype=float) / eps_dot_ref)
        return cls(
            float(np.min(eps_p)), float(np.max(eps_p)),
            float(np.min(log_rate)), float(np.max(log_rate)),
            float(np.min(T)), float(np.max(T)),
            float(np.min(sigma)), float(np.max(sigma)),
            float(eps_dot_ref),
        )

    @property
    def sigma_span(self):
        return self.sigma_max - self.sigma_min

    def normalize_stress(self, sigma):
        return (np.asarray(sigma, dtype=float) - self.sigma_min) / self.sigma_span

    def denormalize_stress(self, s):
        return self.sigma_span * np.asarray(s, dtype=float) + self.sigma_min


def _frozen_array(value, ndim, name):
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise StructureError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise StructureError(f"{name} must be non-empty and finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DenseLayer:
    """Affine map ``y = weights @ x + bias`` with ``weights`` of shape (n_out, n_in)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.weights, 2, "weights")
        b = _frozen_array(self.bias, 1, "bias")
        if b.shape[0] != w.shape[0]:
            raise StructureError(f"bias length {b.shape[0]} != weight rows {w.shape[0]}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def n_in(self):
        return self.weights.shape[1]

    @property
    def n_out(self):
        return self.weights.shape[0]


class QueryDiagnostics:
    """Counts evaluations whose normalized inputs fall outside ``[0, 1]``."""

    def __init__(self):
        self._lock = threading.Lock()
        self.queries = 0
        self.out_of_range = 0

    def record(self, x):
        outside = int(np.count_nonzero(np.any((x < 0.0) | (x > 1.0), axis=-1)))
        total = int(np.prod(x.shape[:-1], dtype=int))
        with self._lock:
            self.queries += total
            self.out_of_range += outside


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Trained surrogate: hidden layers, linear output and scaling ranges.

    Calling the model evaluates it as a hardening law in physical units,
    ``model(eps_p, rate, T) -> (sigma, d_eps, d_rate, d_T)``.
    """

    hidden: tuple
    activation: str
    out_weights: np.ndarray
    out_bias: float
    ranges: NormalizationRanges
    provenance: dict = field(default=None, compare=False)
    diagnostics: QueryDiagnostics = field(
        default_factory=QueryDiagnostics, repr=False, compare=False
    )

    def __post_init__(self):
        hidden = tuple(self.hidden)
        if self.activation not in ACTIVATIONS:
            raise StructureError(f"unknown activation {self.activation!r}")
        if not hidden:
            raise StructureError("at least one hidden layer is required")
        if hidden[0].n_in != 3:
            raise StructureError(f"first hidden layer must take 3 inputs, got {hidden[0].n_in}")
        for prev, layer in zip(hidden, hidden[1:]):
            if layer.n_in != prev.n_out:
                raise StructureError(
                    f"layer expects {layer.n_in} inputs but previous layer has {prev.n_out}"
                )
        w = _frozen_array(self.out_weights, 1, "out_weights")
        if w.shape[0] != hidden[-1].n_out:
            raise StructureError(
                f"out_weights length {w.shape[0]} != last hidden width {hidden[-1].n_out}"
            )
        if not np.isfinite(self.out_bias):
            raise StructureError("out_bias must be finite")
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "out_weights", w)
        object.__setattr__(self, "out_bias", float(self.out_bias))

    @property
    def widths(self):
        return tuple(layer.n_out for layer in self.hidden)

    @property
    def depth(self):
        return len(self.hidden)

    @property
    def n_params(self):
        return parameter_count(self.widths)

    @property
    def name(self):
        tag = "sig" if self.activation == "sigmoid" else "tanh"
        return "-".join(["3", *map(str, self.widths), "1", tag])

    def to_vector(self):
        """Flatten all trainable parameters (row-major weights, then biases, per layer)."""
        parts = []
        for layer in self.hidden:
            parts += [layer.weights.ravel(), layer.bias]
        parts += [self.out_weights, [self.out_bias]]
        return np.concatenate(parts)

    def with_parameters(self, theta, provenance=None):
        """Copy of this model with parameters taken from a flat vector."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise StructureError(f"expected {self.n_params} parameters, got {theta.shape}")
        layers, pos = [], 0
        for layer in self.hidden:
            n, m = layer.weights.shape
            w = theta[pos:pos + n * m].reshape(n, m)
            pos += n * m
            b = theta[pos:pos + n]
            pos += n
            layers.append(DenseLayer(w, b))
        out_w = theta[pos:pos + self.widths[-1]]
        return MlpModel(tuple(layers), self.activation, out_w, theta[-1], self.ranges,
                        provenance)

    def __call__(self, eps_p, rate, T):
        return predict_physical(self, eps_p, rate, T)


def parameter_count(widths):
    """Number of trainable scalars of a 3-w1-...-1 network."""
    count, n_in = 0, 3
    for width in widths:
        count += width * (n_in + 1)
        n_in = width
    return count + n_in + 1


def sigmoid(y):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-y))


def sigmoid_prime(y):
    # symmetric in y; exp(-|y|) never overflows
    t = np.exp(-np.abs(y))
    return t / (1.0 + t) ** 2


def _activate(kind, y):
    return np.tanh(y) if kind == "tanh" else sigmoid(y)


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise StructureError(f"inputs must have a trailing dimension of 3, got {x.shape}")
    return x


def normalize_inputs(r, eps_p, rate, T):
    """Map physical ``(eps_p, rate, T)`` to network inputs, shape (..., 3)."""
    rate = np.asarray(rate, dtype=float)
    if np.any(~(rate > 0)):
        raise ValueError("rate must be strictly positive")
    eps_p, T = np.asarray(eps_p, dtype=float), np.asarray(T, dtype=float)
    x1 = (eps_p - r.eps_p_min) / (r.eps_p_max - r.eps_p_min)
    x2 = (np.log(rate / r.eps_dot_ref) - r.log_rate_min) / (r.log_rate_max - r.log_rate_min)
    x3 = (T - r.T_min) / (r.T_max - r.T_min)
    return np.stack(np.broadcast_arrays(x1, x2, x3), axis=-1)


def forward_trace(model, x):
    """Pre-activations of each hidden layer and the output ``s``."""
    x = _check_x(x)
    pre, a = [], x
    for layer in model.hidden:
        y = a @ layer.weights.T + layer.bias
        pre.append(y)
        a = _activate(model.activation, y)
    return pre, a @ model.out_weights + model.out_bias


def forward(model, x):
    """Normalized stress ``s`` for inputs ``x`` of shape (3,) or (N, 3)."""
    return forward_trace(model, x)[1]


def _jac_1_tanh(model, y1):
    w1 = model.hidden[0].weights
    w = model.out_weights
    return (w - w * np.tanh(y1) ** 2) @ w1


def _jac_1_sigmoid(model, y1):
    w1 = model.hidden[0].weights
    return (model.out_weights * sigmoid_prime(y1)) @ w1


def _jac_2_tanh(model, y1, y2):
    w1, w2 = model.hidden[0].weights, model.hidden[1].weights
    w = model.out_weights
    inner = (w - w * np.tanh(y2) ** 2) @ w2
    return (inner * (1.0 - np.tanh(y1) ** 2)) @ w1


def _jac_2_sigmoid(model, y1, y2):
    w1, w2 = model.hidden[0].weights, model.hidden[1].weights
    inner = (model.out_weights * sigmoid_prime(y2)) @ w2
    return (inner * sigmoid_prime(y1)) @ w1


_JACOBIANS = {
    (1, "tanh"): _jac_1_tanh,
    (1, "sigmoid"): _jac_1_sigmoid,
    (2, "tanh"): _jac_2_tanh,
    (2, "sigmoid"): _jac_2_sigmoid,
}


def input_jacobian(model, x):
    """Analytic ``ds/dx``, shape (3,) or (N, 3)."""
    try:
        jac = _JACOBIANS[model.depth, model.activation]
    except KeyError:
        raise StructureError(
            f"input Jacobian supports 1 or 2 hidden layers, got {model.depth}"
        ) from None
    pre, _ = forward_trace(model, x)
    return jac(model, *pre)


def finite_difference_jacobian(model, x, delta=1e-6):
    """One-sided difference approximation of ``ds/dx`` (four forward passes)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    x = _check_x(x)
    s0 = forward(model, x)
    cols = []
    for i in range(3):
        xp = x.copy()
        xp[..., i] += delta
        cols.append((forward(model, xp) - s0) / delta)
    return np.stack(cols, axis=-1)


def physical_scales(r, rate, rate_scaling="chain"):
    """Factors turning ``ds/dx`` into ``(d sigma/d eps_p, d sigma/d rate, d sigma/d T)``.

    ``rate_scaling="linear"`` divides by the linear rate span instead of the
    log-rate span; it does not differentiate the forward map and exists only
    for comparison.
    """
    if rate_scaling not in RATE_SCALINGS:
        raise ValueError(f"rate_scaling must be one of {RATE_SCALINGS}")
    span = r.sigma_span
    rate = np.asarray(rate, dtype=float)
    if rate_scaling == "chain":
        k_rate = span / ((r.log_rate_max - r.log_rate_min) * rate)
    else:
        rate_span = r.eps_dot_ref * (np.exp(r.log_rate_max) - np.exp(r.log_rate_min))
        k_rate = np.full_like(rate, span / rate_span)
    return span / (r.eps_p_max - r.eps_p_min), k_rate, span / (r.T_max - r.T_min)


def predict_physical(model, eps_p, rate, T, rate_scaling="chain"):
    """Flow stress [MPa] and its three physical derivatives.

    Rates below the reference rate are clamped to it. Strain and
    temperature are not clamped; extrapolation is counted in
    ``model.diagnostics``.
    """
    r = model.ranges
    rate = np.maximum(np.asarray(rate, dtype=float), r.eps_dot_ref)
    x = normalize_inputs(r, eps_p, rate, T)
    model.diagnostics.record(x)
    s = forward(model, x)
    ds = input_jacobian(model, x)
    k_eps, k_rate, k_T = physical_scales(r, rate, rate_scaling)
    sigma = r.denormalize_stress(s)
    return sigma, ds[..., 0] * k_eps, ds[..., 1] * k_rate, ds[..., 2] * k_T
