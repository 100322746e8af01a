"""Model archives and the flat subroutine emitter.

The archive is a JSON document whose numbers are stored as strings with 17
significant digits, which is enough to reproduce every float64 exactly.

The emitter writes a free-form Fortran subroutine with the VUHARD argument
list for the 2-hidden-layer sigmoid network. All matrix products are unrolled
and the network is evaluated through six shared intermediate vectors:

    za = exp(-(W1 x) - b1)          zb = 1 + za
    zc = exp(-(W2 / zb) - b2)       zd = w zc / (1 + zc)^2
    ze = za / zb^2                  zf = (W2^T zd) ze
    s  = sum(w / (1 + zc)) + b      ds/dx = W1^T zf

so each evaluation costs m + n exponentials for widths (m, n).
"""

import json
from dataclasses import dataclass

import numpy as np

from .mlp import (
    DenseLayer,
    MlpModel,
    NormalizationRanges,
    StructureError,
    normalize_inputs,
    physical_scales,
)

SCHEMA_VERSION = 1
RANGE_FIELDS = ("eps_p_min", "eps_p_max", "log_rate_min", "log_rate_max",
                "T_min", "T_max", "sigma_min", "sigma_max", "eps_dot_ref")
MAX_LINE = 132


class ArchiveError(ValueError):
    """Malformed or incompatible model archive."""


def _num(value):
    return f"{float(value):.16e}"


def model_to_dict(model):
    layers = [{"shape": list(layer.weights.shape),
               "weights": [_num(v) for v in layer.weights.ravel()],
               "bias": [_num(v) for v in layer.bias]} for layer in model.hidden]
    return {
        "schema_version": SCHEMA_VERSION,
        "architecture": {"widths": list(model.widths), "activation": model.activation},
        "layers": layers,
        "output": {"weights": [_num(v) for v in model.out_weights],
                   "bias": _num(model.out_bias)},
        "ranges": {name: _num(getattr(model.ranges, name)) for name in RANGE_FIELDS},
        "provenance": dict(model.provenance or {}),
    }


def _require(doc, key, where="archive"):
    if not isinstance(doc, dict) or key not in doc:
        raise ArchiveError(f"{key} required in {where}")
    return doc[key]


def _floats(values, field_name):
    try:
        return np.array([float(v) for v in values], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ArchiveError(f"malformed number in {field_name}: {exc}") from None


def model_from_dict(doc):
    version = _require(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise ArchiveError(f"schema_version {version} not supported (expected {SCHEMA_VERSION})")
    arch = _require(doc, "architecture")
    widths = _require(arch, "widths", "architecture")
    activation = _require(arch, "activation", "architecture")
    ranges_doc = _require(doc, "ranges")
    raw_layers = _require(doc, "layers")
    if len(raw_layers) != len(widths):
        raise ArchiveError(f"layers: {len(raw_layers)} entries but widths lists {len(widths)}")
    layers, n_in = [], 3
    for k, (raw, width) in enumerate(zip(raw_layers, widths), start=1):
        shape = tuple(_require(raw, "shape", f"layers[{k}]"))
        if shape != (width, n_in):
            raise ArchiveError(f"layers[{k}].shape {shape} != {(width, n_in)}")
        w = _floats(_require(raw, "weights", f"layers[{k}]"), f"layers[{k}].weights")
        b = _floats(_require(raw, "bias", f"layers[{k}]"), f"layers[{k}].bias")
        if w.size != width * n_in or b.size != width:
            raise ArchiveError(f"layers[{k}]: value count does not match shape {shape}")
        layers.append(DenseLayer(w.reshape(shape), b))
        n_in = width
    out = _require(doc, "output")
    out_w = _floats(_require(out, "weights", "output"), "output.weights")
    if out_w.size != n_in:
        raise ArchiveError(f"output.weights has {out_w.size} values, expected {n_in}")
    out_b = _floats([_require(out, "bias", "output")], "output.bias")[0]
    try:
        ranges = NormalizationRanges(**{
            name: float(_floats([_require(ranges_doc, name, "ranges")], f"ranges.{name}")[0])
            for name in RANGE_FIELDS
        })
    except ValueError as exc:
        if isinstance(exc, ArchiveError):
            raise
        raise ArchiveError(f"ranges: {exc}") from None
    try:
        return MlpModel(tuple(layers), activation, out_w, out_b, ranges,
                        dict(doc.get("provenance") or {}))
    except StructureError as exc:
        raise ArchiveError(f"architecture: {exc}") from None


def save_model(model, path):
    text = json.dumps(model_to_dict(model), indent=1, sort_keys=True) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArchiveError(f"{path}: not a model archive ({exc})") from None
    return model_from_dict(doc)


@dataclass(frozen=True, eq=False)
class StagedEvaluation:
    za: np.ndarray
    zb: np.ndarray
    zc: np.ndarray
    zd: np.ndarray
    ze: np.ndarray
    zf: np.ndarray
    s: np.ndarray
    ds: np.ndarray
    sigma: np.ndarray
    derivs: tuple
    n_exp: int  # exponentials per evaluated point


def _require_staged(model):
    if model.depth != 2 or model.activation != "sigmoid":
        raise StructureError(
            f"staged evaluation needs a 2-hidden-layer sigmoid network, got {model.name}"
        )


def staged_terms(model, eps_p, rate, T, rate_scaling="chain"):
    """Evaluate through the shared sub-terms; same contract as ``predict_physical``."""
    _require_staged(model)
    r = model.ranges
    rate = np.maximum(np.asarray(rate, dtype=float), r.eps_dot_ref)
    x = normalize_inputs(r, eps_p, rate, T)
    (l1, l2), w = model.hidden, model.out_weights
    n_exp = 0

    def exp(v):
        nonlocal n_exp
        n_exp += v.shape[-1]
        return np.exp(v)

    za = exp(-(x @ l1.weights.T) - l1.bias)
    zb = 1.0 + za
    zc = exp(-((1.0 / zb) @ l2.weights.T) - l2.bias)
    zd = w * zc / (1.0 + zc) ** 2
    ze = za / zb ** 2
    zf = (zd @ l2.weights) * ze
    s = (w / (1.0 + zc)).sum(axis=-1) + model.out_bias
    ds = zf @ l1.weights
    k_eps, k_rate, k_T = physical_scales(r, rate, rate_scaling)
    derivs = (ds[..., 0] * k_eps, ds[..., 1] * k_rate, ds[..., 2] * k_T)
    return StagedEvaluation(za, zb, zc, zd, ze, zf, s, ds, r.denormalize_stress(s),
                            derivs, n_exp)


def evaluate_staged(model, eps_p, rate, T, rate_scaling="chain"):
    """``(sigma, d_eps, d_rate, d_T)`` computed through the staged scheme."""
    st = staged_terms(model, eps_p, rate, T, rate_scaling)
    return (st.sigma, *st.derivs)


def _wrap(lhs, terms, prefix="", suffix="", indent="    ", sep=" + "):
    """Assignment ``lhs = prefix t1 + t2 + ... suffix`` split over continuation lines."""
    terms = list(terms)
    terms[0] = prefix + terms[0]
    terms[-1] = terms[-1] + suffix
    lines, current = [], f"{indent}{lhs} = "
    for i, term in enumerate(terms):
        piece = term if i == 0 else sep + term
        if len(current) + len(piece) > MAX_LINE - 2:
            lines.append(current.rstrip() + " &")
            current = indent + "    " + piece.lstrip()
        else:
            current += piece
    lines.append(current)
    return lines


def fortran_real(value):
    return f"{float(value):.16e}".replace("e", "d")


def _declare(name, value):
    return f"  real(8), parameter :: {name} = {fortran_real(value)}"


def constant_names(model):
    """Names of the declared constants, in ``MlpModel.to_vector`` order then ranges."""
    _require_staged(model)
    m, n = model.widths
    names = [f"w1_{i:02d}_{j}" for i in range(1, m + 1) for j in range(1, 4)]
    names += [f"b1_{i:02d}" for i in range(1, m + 1)]
    names += [f"w2_{i:02d}_{j:02d}" for i in range(1, n + 1) for j in range(1, m + 1)]
    names += [f"b2_{i:02d}" for i in range(1, n + 1)]
    names += [f"w3_{i:02d}" for i in range(1, n + 1)]
    names += ["b3"]
    return names + list(_RANGE_NAMES.values())


_RANGE_NAMES = {
    "eps_p_min": "eps_min", "eps_p_max": "eps_max",
    "log_rate_min": "lrate_min", "log_rate_max": "lrate_max",
    "T_min": "temp_min", "T_max": "temp_max",
    "sigma_min": "sig_min", "sigma_max": "sig_max",
    "eps_dot_ref": "rate_ref",
}


def emit_subroutine(model, name="vuhard"):
    """Fortran source evaluating the network as a VUHARD hardening routine.

    Outputs per material point: ``yield``, ``dyieldDtemp`` and
    ``dyieldDeqps(:, 1:2)`` (strain and strain-rate derivatives).
    """
    _require_staged(model)
    m, n = model.widths
    values = list(model.to_vector()) + [getattr(model.ranges, f) for f in _RANGE_NAMES]
    names = constant_names(model)
    src = [
        f"! Flow stress network {model.name}: yield stress and its derivatives.",
        "! Generated file; regenerate from the model archive instead of editing.",
        f"subroutine {name}(nblock, nElement, nIntPt, nLayer, nSecPt, lAnneal, &",
        "    stepTime, totalTime, dt, cmname, nstatev, nfieldv, nprops, props, &",
        "    tempOld, tempNew, fieldOld, fieldNew, stateOld, eqps, eqpsRate, &",
        "    yield, dyieldDtemp, dyieldDeqps, stateNew)",
        "  implicit none",
        "  integer, intent(in) :: nblock, nIntPt, nLayer, nSecPt, lAnneal",
        "  integer, intent(in) :: nstatev, nfieldv, nprops",
        "  integer, intent(in) :: nElement(nblock)",
        "  character(len=80), intent(in) :: cmname",
        "  real(8), intent(in) :: stepTime, totalTime, dt",
        "  real(8), intent(in) :: props(nprops), tempOld(nblock), tempNew(nblock)",
        "  real(8), intent(in) :: fieldOld(nblock, nfieldv), fieldNew(nblock, nfieldv)",
        "  real(8), intent(in) :: stateOld(nblock, nstatev)",
        "  real(8), intent(in) :: eqps(nblock), eqpsRate(nblock)",
        "  real(8), intent(out) :: yield(nblock), dyieldDtemp(nblock)",
        "  real(8), intent(out) :: dyieldDeqps(nblock, 2)",
        "  real(8), intent(inout) :: stateNew(nblock, nstatev)",
    ]
    src += [_declare(nm, v) for nm, v in zip(names, values)]
    src += [
        f"  real(8) :: za({m}), zb({m}), zc({n}), zd({n}), ze({m}), zf({m})",
        "  real(8) :: x1, x2, x3, rate, s, ds1, ds2, ds3, span",
        "  integer :: k",
        "",
        "  span = sig_max - sig_min",
        "  do k = 1, nblock",
        "    rate = eqpsRate(k)",
        "    if (rate < rate_ref) rate = rate_ref",
        "    x1 = (eqps(k) - eps_min) / (eps_max - eps_min)",
        "    x2 = (log(rate / rate_ref) - lrate_min) / (lrate_max - lrate_min)",
        "    x3 = (tempNew(k) - temp_min) / (temp_max - temp_min)",
    ]
    for i in range(1, m + 1):
        terms = [f"w1_{i:02d}_{j}*x{j}" for j in range(1, 4)]
        src += _wrap(f"za({i})", terms, "exp(-(", f") - b1_{i:02d})")
    src += [f"    zb({i}) = 1.0d0 + za({i})" for i in range(1, m + 1)]
    for i in range(1, n + 1):
        terms = [f"w2_{i:02d}_{j:02d}/zb({j})" for j in range(1, m + 1)]
        src += _wrap(f"zc({i})", terms, "exp(-(", f") - b2_{i:02d})")
    src += [f"    zd({i}) = w3_{i:02d}*zc({i})/(1.0d0 + zc({i}))**2" for i in range(1, n + 1)]
    src += [f"    ze({i}) = za({i})/zb({i})**2" for i in range(1, m + 1)]
    for i in range(1, m + 1):
        terms = [f"w2_{j:02d}_{i:02d}*zd({j})" for j in range(1, n + 1)]
        src += _wrap(f"zf({i})", terms, "(", f")*ze({i})")
    src += _wrap("s", [f"w3_{i:02d}/(1.0d0 + zc({i}))" for i in range(1, n + 1)] + ["b3"])
    for j in range(1, 4):
        src += _wrap(f"ds{j}", [f"w1_{i:02d}_{j}*zf({i})" for i in range(1, m + 1)])
    src += [
        "    yield(k) = span*s + sig_min",
        "    dyieldDeqps(k, 1) = ds1*span/(eps_max - eps_min)",
        "    dyieldDeqps(k, 2) = ds2*span/((lrate_max - lrate_min)*rate)",
        "    dyieldDtemp(k) = ds3*span/(temp_max - temp_min)",
        "  end do",
        f"end subroutine {name}",
        "",
    ]
    return "\n".join(src)
