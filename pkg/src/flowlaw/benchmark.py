"""Single material-point load paths comparing two hardening laws step by step."""

import csv
from dataclasses import dataclass

import numpy as np

from .johnson_cook import STEEL_42CRMO4_THERMAL
from .plasticity import IntegrationError, MaterialPointState, radial_return_step, von_mises

KINDS = ("uniaxial_tension", "uniaxial_compression")
CSV_HEADER = ("step", "eps_p_a", "sigma_a", "T_a", "eps_p_b", "sigma_b", "T_b")

# Constant-rate isochoric paths. Total strain and rate are set so the
# Johnson-Cook law reaches the plastic strain / temperature milestones of
# the reference simulations (necking centre element at mid and end
# displacement, Taylor impact face).
NECKING_MID = dict(kind="uniaxial_tension", total_strain=0.5163, strain_rate=140.0, n_steps=400)
NECKING_END = dict(kind="uniaxial_tension", total_strain=2.1055, strain_rate=140.0, n_steps=1600)
TAYLOR_IMPACT = dict(kind="uniaxial_compression", total_strain=1.8455, strain_rate=2.3e4,
                     n_steps=1600)


@dataclass(frozen=True, eq=False)
class LoadPath:
    kind: str
    strain_increments: np.ndarray  # (n_steps, 3, 3)
    dt: float
    T0: float = 20.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        inc = np.array(self.strain_increments, dtype=float)
        if inc.ndim != 3 or inc.shape[1:] != (3, 3):
            raise ValueError("strain_increments must have shape (n_steps, 3, 3)")
        if not np.all(np.isfinite(inc)):
            raise ValueError("strain increments must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        inc.setflags(write=False)
        object.__setattr__(self, "strain_increments", inc)

    def __len__(self):
        return self.strain_increments.shape[0]


def uniaxial_path(kind, total_strain, strain_rate, n_steps, T0=20.0):
    """Constant-rate isochoric stretch ``diag(1, -1/2, -1/2)`` (sign flipped for compression)."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    sign = 1.0 if kind == "uniaxial_tension" else -1.0
    d = total_strain / n_steps
    inc = sign * d * np.diag([1.0, -0.5, -0.5])
    return LoadPath(kind, np.broadcast_to(inc, (n_steps, 3, 3)), d / strain_rate, T0)


def preset_path(name):
    presets = {"necking_mid": NECKING_MID, "necking_end": NECKING_END,
               "taylor": TAYLOR_IMPACT}
    return uniaxial_path(**presets[name])


def integrate_path(path, law, mat=STEEL_42CRMO4_THERMAL):
    """Run ``law`` along ``path``; returns the list of per-step results."""
    state = MaterialPointState(T=path.T0)
    results = []
    for i, d_eps in enumerate(path.strain_increments, start=1):
        try:
            step = radial_return_step(state, d_eps, path.dt, law, mat)
        except IntegrationError as exc:
            raise IntegrationError(f"step {i}: {exc}", exc.residuals) from exc
        results.append(step)
        state = step.state
    return results


@dataclass(eq=False)
class BenchmarkResult:
    rows: np.ndarray  # columns as CSV_HEADER
    delta_T_a: np.ndarray
    delta_T_b: np.ndarray
    T0: float

    @property
    def sigma_deviation(self):
        """Relative von Mises deviation of law b from law a at every step."""
        sa, sb = self.rows[:, 2], self.rows[:, 5]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(sa > 0, np.abs(sb - sa) / np.where(sa > 0, sa, 1.0), 0.0)

    def summary(self):
        last = self.rows[-1]
        return {
            "steps": int(self.rows.shape[0]),
            "max_rel_sigma_dev": float(self.sigma_deviation.max()),
            "final_rel_sigma_dev": float(self.sigma_deviation[-1]),
            "final_rel_T_dev": float(abs(last[6] - last[3]) / abs(last[3])),
            "eps_p_a": float(last[1]), "sigma_a": float(last[2]), "T_a": float(last[3]),
            "eps_p_b": float(last[4]), "sigma_b": float(last[5]), "T_b": float(last[6]),
        }

    def format_summary(self):
        return "\n".join(
            f"{key}: {value:.6g}" if isinstance(value, float) else f"{key}: {value}"
            for key, value in self.summary().items()
        )

    def to_csv(self, path_or_file):
        """Write the per-step table to a path or an open text stream."""
        if hasattr(path_or_file, "write"):
            self._write(path_or_file)
            return
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            self._write(fh)

    def _write(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])


def run_path_benchmark(path, law_a, law_b, mat=STEEL_42CRMO4_THERMAL):
    """Integrate both laws along the same increments and tabulate the histories."""
    hist_a = integrate_path(path, law_a, mat)
    hist_b = integrate_path(path, law_b, mat)
    rows = np.array([
        (i, a.state.eps_p_bar, von_mises(a.state.stress), a.state.T,
         b.state.eps_p_bar, von_mises(b.state.stress), b.state.T)
        for i, (a, b) in enumerate(zip(hist_a, hist_b), start=1)
    ])
    return BenchmarkResult(
        rows,
        np.array([a.delta_T for a in hist_a]),
        np.array([b.delta_T for b in hist_b]),
        path.T0,
    )
