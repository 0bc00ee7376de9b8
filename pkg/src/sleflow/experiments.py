"""Desk-scale experiment drivers with deterministic outputs.

Every experiment writes a CSV of results, a key=value metadata sidecar
(configuration, code version, wall time), and a gnuplot script for a
quick look at the numbers.  CSV bytes depend only on the configuration,
never on wall time, so repeated runs with the same seed are
byte-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as sio
from ._kernels import ACTIVE_BACKEND
from .bessel import (
    STATUS_DONE,
    BesselConfig,
    critical_clock_tail,
    hitting_probability_check,
    kappa_to_nu,
    kappa_to_nu_tilde,
    martingale_mean,
    radial_batch,
    stationary_density,
    usual_clock_batch,
    usual_clock_cdf,
)
from .exponents import exponent_formulas, variation_order
from .loewner import DrivingPath
from .psivar import ModulusSpec, PsiSpec, SampledPath, holder_ratio_sup, log_star, psi_var_value
from .trace import compute_trace, fhat_batch, schwarz_envelope

EXPERIMENT_NAMES = (
    "trace", "psivar", "holder", "unifmap", "bessel",
    "gridsum", "witness", "exponents",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run: what to simulate and where to put the files."""

    name: str
    kappa: float
    T: float = 1.0
    dt: float = 1e-4
    n_paths: int = 20
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    out_dir: str = "."

    def __post_init__(self):
        if self.name not in EXPERIMENT_NAMES:
            raise ValueError(
                f"unknown experiment {self.name!r}; registered: {EXPERIMENT_NAMES}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.T <= 0.0 or self.dt <= 0.0 or self.dt > self.T:
            raise ValueError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")

    @property
    def n_steps(self) -> int:
        return max(2, round(self.T / self.dt))

    @property
    def stem(self) -> str:
        return f"{self.name}_kappa{self.kappa:g}_seed{self.seed}"

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))


def load_config_file(path) -> dict[str, str]:
    """Flat key=value configuration; blank lines and # comments ignored."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_CONFIG_KEYS = ("name", "kappa", "T", "dt", "n", "seed", "out")


def config_from_mapping(mapping) -> ExperimentConfig:
    """Build a config from string key=value pairs (file or CLI merge).

    Keys: name, kappa, T, dt, n, seed, out; tol_<name> entries feed the
    tolerance table.
    """
    m = dict(mapping)
    unknown = [k for k in m if k not in _CONFIG_KEYS and not k.startswith("tol_")]
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "name" not in m:
        raise ValueError("config needs a name= entry")
    tolerances = {k[4:]: float(v) for k, v in m.items() if k.startswith("tol_")}
    return ExperimentConfig(
        name=str(m["name"]),
        kappa=float(m.get("kappa", 0.0)),
        T=float(m.get("T", 1.0)),
        dt=float(m.get("dt", 1e-4)),
        n_paths=int(m.get("n", 20)),
        seed=int(m.get("seed", 0)),
        tolerances=tolerances,
        out_dir=str(m.get("out", ".")),
    )


def version_string() -> str:
    from . import __version__

    return f"sleflow {__version__} ({ACTIVE_BACKEND})"


def write_metadata(file, config: ExperimentConfig, wall_seconds: float,
                   extras: dict | None = None) -> None:
    """key=value sidecar: full configuration, code version, wall time."""
    lines = [
        f"name={config.name}",
        f"kappa={config.kappa!r}",
        f"T={config.T!r}",
        f"dt={config.dt!r}",
        f"n={config.n_paths}",
        f"seed={config.seed}",
        f"out={config.out_dir}",
    ]
    lines += [f"tol_{k}={config.tolerances[k]!r}" for k in sorted(config.tolerances)]
    lines.append(f"version={version_string()}")
    for k, v in (extras or {}).items():
        lines.append(f"{k}={v}")
    lines.append(f"wall_seconds={wall_seconds:.3f}")
    Path(file).write_text("\n".join(lines) + "\n")


def write_plot_script(file, title: str, xlabel: str, ylabel: str,
                      plots: list[str], logscale: str = "") -> None:
    """gnuplot companion script for the CSV next to it."""
    lines = [
        "set datafile separator ','",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set key left top",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
    lines.append("plot " + ", \\\n     ".join(plots))
    Path(file).write_text("\n".join(lines) + "\n")


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_power(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# -- trace ------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRunResult:
    csv_path: Path
    n_steps: int
    end_point: complex
    max_jump: float
    wall_seconds: float


def run_sle_trace(config: ExperimentConfig) -> TraceRunResult:
    """One trace sample written as a (t, re, im) CSV."""
    t0 = time.perf_counter()
    driving = DrivingPath.brownian(config.kappa, config.T, config.n_steps,
                                   config.seed)
    tr = compute_trace(driving)
    out = _out_dir(config)
    csv_path = out / f"{config.stem}.csv"
    tr.to_csv(csv_path)
    wall = time.perf_counter() - t0
    write_metadata(out / f"{config.stem}.meta", config, wall, {
        "n_steps": config.n_steps,
        "end_re": repr(float(tr.points[-1].real)),
        "end_im": repr(float(tr.points[-1].imag)),
        "max_jump": repr(tr.max_jump),
    })
    write_plot_script(out / f"{config.stem}.gp",
                      f"trace kappa={config.kappa:g}", "Re", "Im",
                      [f"'{csv_path.name}' using 2:3 with lines notitle"])
    return TraceRunResult(csv_path=csv_path, n_steps=config.n_steps,
                          end_point=complex(tr.points[-1]),
                          max_jump=tr.max_jump, wall_seconds=wall)


# -- variation under refinement ---------------------------------------------


@dataclass(frozen=True)
class VariationCurve:
    """Median variation of one (p, q) functional across nested meshes."""

    p: float
    q: float
    meshes: tuple[int, ...]
    medians: tuple[float, ...]

    @property
    def final_ratio(self) -> float:
        """Growth factor over the last refinement; ~1 when stable."""
        return self.medians[-1] / self.medians[-2]

    @property
    def total_ratio(self) -> float:
        """Growth factor from the coarsest mesh to the finest."""
        return self.medians[-1] / self.medians[0]


@dataclass(frozen=True)
class PsiVariationResult:
    curves: tuple[VariationCurve, ...]
    csv_path: Path
    wall_seconds: float

    def curve(self, p: float, q: float = 0.0) -> VariationCurve:
        for c in self.curves:
            if c.p == p and c.q == q:
                return c
        raise KeyError(f"no curve for p={p}, q={q}")


def experiment_psi_variation(config: ExperimentConfig,
                             ps: tuple[float, ...] | None = None,
                             n_refine: int = 3) -> PsiVariationResult:
    """Variation sums of the trace across nested dyadic meshes.

    Each seed draws one driving path at the finest mesh; coarser meshes
    subsample the same trace, so refinement trends are not confounded by
    fresh randomness.  Plain powers bracket the variation order d (sums
    stabilise for p > d and grow for p < d); the distorted functional at
    (d, q) with q > d is reported alongside.
    """
    if config.kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {config.kappa}")
    if config.kappa == 8.0:
        raise ValueError("kappa = 8 has no stable variation power; "
                         "the bracketing argument needs kappa != 8")
    t0 = time.perf_counter()
    d = variation_order(config.kappa)
    if ps is None:
        ps = (round(d - 0.25, 2), round(d + 0.25, 2))
    q = config.tol("psi_q", math.floor(d) + 1.0)
    if q <= d:
        raise ValueError(f"distorted functional needs q > d, got q={q}, d={d}")
    block = 1 << n_refine
    n_fine = ((config.n_steps + block - 1) // block) * block
    meshes = tuple(n_fine >> (n_refine - j) for j in range(n_refine + 1))
    specs = [PsiSpec(p, 0.0) for p in ps] + [PsiSpec(d, q)]
    values = np.empty((len(specs), len(meshes), config.n_paths))
    for i in range(config.n_paths):
        driving = DrivingPath.brownian(config.kappa, config.T, n_fine,
                                       config.seed + i)
        tr = compute_trace(driving)
        for j, m in enumerate(meshes):
            stride = n_fine // m
            path = SampledPath(tr.times[::stride], tr.points[::stride])
            for s, spec in enumerate(specs):
                values[s, j, i] = psi_var_value(path, spec, 1.0)
    medians = np.median(values, axis=2)
    curves = tuple(
        VariationCurve(p=spec.p, q=spec.q, meshes=meshes,
                       medians=tuple(float(x) for x in medians[s]))
        for s, spec in enumerate(specs)
    )
    out = _out_dir(config)
    csv_path = out / f"{config.stem}.csv"
    rows = [(m, c.p, c.q, c.medians[j])
            for c in curves for j, m in enumerate(c.meshes)]
    sio.write_variation_csv(csv_path, rows)
    wall = time.perf_counter() - t0
    write_metadata(out / f"{config.stem}.meta", config, wall, {
        "d": repr(d),
        "ps": ",".join(f"{p:g}" for p in ps),
        "q": repr(q),
        "final_ratios": ",".join(f"{c.final_ratio:.4f}" for c in curves),
    })
    write_plot_script(out / f"{config.stem}.gp",
                      f"variation sums kappa={config.kappa:g}", "mesh points",
                      "median variation",
                      [f"'{csv_path.name}' every ::{j * len(meshes)}::"
                       f"{(j + 1) * len(meshes) - 1} using 1:4 with linespoints "
                       f"title 'p={c.p:g} q={c.q:g}'"
                       for j, c in enumerate(curves)],
                      logscale="x 2")
    return PsiVariationResult(curves=curves, csv_path=csv_path, wall_seconds=wall)


# -- modulus of continuity --------------------------------------------------


@dataclass(frozen=True)
class HolderBracket:
    """Ratio suprema for one modulus across nested meshes.

    medians is the full pair supremum; window_medians restricts to pairs
    within _HOLDER_WINDOW mesh steps, probing the modulus at the mesh
    scale where the exponent margin is visible.
    """

    alpha: float
    beta: float
    meshes: tuple[int, ...]
    medians: tuple[float, ...]
    window_medians: tuple[float, ...]

    @property
    def final_ratio(self) -> float:
        return self.medians[-1] / self.medians[-2]

    @property
    def total_ratio(self) -> float:
        return self.medians[-1] / self.medians[0]

    @property
    def window_total_ratio(self) -> float:
        return self.window_medians[-1] / self.window_medians[0]


@dataclass(frozen=True)
class HolderResult:
    mode: str  # "bracket" or "log_only"
    brackets: tuple[HolderBracket, ...]
    lag_deltas: np.ndarray | None
    slope_mean: float | None
    slope_sd: float | None
    slope_ci95: float | None
    csv_path: Path
    wall_seconds: float

    @property
    def window_spread_growth(self) -> float:
        """Growth of the inflated/deflated windowed-ratio spread from the
        coarsest mesh to the finest.

        The log factors cancel between the two moduli, so this grows like
        (mesh ratio)^(2 margin) when the power alpha is correct at mesh
        scales."""
        lo, hi = self.brackets[0], self.brackets[-1]
        first = hi.window_medians[0] / lo.window_medians[0]
        last = hi.window_medians[-1] / lo.window_medians[-1]
        return last / first


_HOLDER_WINDOW = 64


def _windowed_ratio_sup(times: np.ndarray, points: np.ndarray,
                        spec: ModulusSpec) -> float:
    """max |increment| / phi over pairs within _HOLDER_WINDOW mesh steps."""
    sup = 0.0
    for lag in range(1, min(_HOLDER_WINDOW, len(times) - 1) + 1):
        d = np.abs(points[lag:] - points[:-lag])
        sup = max(sup, float(d.max()) / spec.phi(float(times[lag] - times[0])))
    return sup


def _lag_grid(n: int) -> np.ndarray:
    """Geometric lags from 4 to n/8, four per octave, deduplicated."""
    top = n // 8
    lags = {4}
    lag = 4.0
    while lag < top:
        lag *= 2.0 ** 0.25
        lags.add(min(int(round(lag)), top))
    return np.array(sorted(lags))


def _lag_sup_curve(points: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """sup of |increment| over pairs at separation <= each lag.

    The running maximum over the lag grid makes the curve monotone, the
    sampled version of the modulus of continuity.
    """
    sups = np.empty(lags.size)
    for j, lag in enumerate(lags):
        sups[j] = np.abs(points[lag:] - points[:-lag]).max()
    return np.maximum.accumulate(sups)


def experiment_holder_modulus(config: ExperimentConfig,
                              alpha_margin: float = 0.05,
                              n_refine: int = 2) -> HolderResult:
    """Modulus-of-continuity ratio suprema of the trace.

    Away from kappa = 8 the ratio sup against phi(t) = t^a (log* 1/t)^b
    is tracked across nested meshes for a = alpha - margin, alpha,
    alpha + margin: the deflated exponent stabilises under refinement
    while the inflated one grows.  At kappa = 8 the power degenerates
    (alpha = 0) and the modulus is purely logarithmic: the lag-binned
    increment supremum m(delta) is fitted against log* (1/delta) in
    log-log, giving a slope near -1/4 with a seed-spread confidence
    interval (reporting, not gating).
    """
    if config.kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {config.kappa}")
    t0 = time.perf_counter()
    tab = exponent_formulas(config.kappa)
    out = _out_dir(config)
    csv_path = out / f"{config.stem}.csv"

    if tab.log_only:
        n = config.n_steps
        lags = _lag_grid(n)
        deltas = lags * config.dt
        ls = np.array([log_star(1.0 / d) for d in deltas])
        sup_rows = np.empty((config.n_paths, deltas.size))
        slopes = np.empty(config.n_paths)
        for i in range(config.n_paths):
            driving = DrivingPath.brownian(config.kappa, config.T, n,
                                           config.seed + i)
            tr = compute_trace(driving)
            sup_rows[i] = _lag_sup_curve(tr.points, lags)
            slopes[i] = _fit_power(ls, sup_rows[i])
        mean = float(slopes.mean())
        sd = float(slopes.std(ddof=1)) if config.n_paths > 1 else 0.0
        ci = 1.96 * sd / math.sqrt(config.n_paths)
        rows = [(i, deltas[j], sup_rows[i, j])
                for i in range(config.n_paths) for j in range(deltas.size)]
        sio.write_lag_csv(csv_path, rows)
        wall = time.perf_counter() - t0
        write_metadata(out / f"{config.stem}.meta", config, wall, {
            "mode": "log_only",
            "slope_mean": repr(mean),
            "slope_sd": repr(sd),
            "slope_ci95": repr(ci),
        })
        write_plot_script(out / f"{config.stem}.gp",
                          "increment sup vs lag, kappa=8", "delta", "sup",
                          [f"'{csv_path.name}' using 2:3 with points notitle"],
                          logscale="xy")
        return HolderResult(mode="log_only", brackets=(), lag_deltas=deltas,
                            slope_mean=mean, slope_sd=sd, slope_ci95=ci,
                            csv_path=csv_path, wall_seconds=wall)

    alphas = (tab.alpha - alpha_margin, tab.alpha, tab.alpha + alpha_margin)
    block = 1 << n_refine
    n_fine = ((config.n_steps + block - 1) // block) * block
    meshes = tuple(n_fine >> (n_refine - j) for j in range(n_refine + 1))
    values = np.empty((len(alphas), len(meshes), config.n_paths))
    windowed = np.empty_like(values)
    for i in range(config.n_paths):
        driving = DrivingPath.brownian(config.kappa, config.T, n_fine,
                                       config.seed + i)
        tr = compute_trace(driving)
        for j, m in enumerate(meshes):
            stride = n_fine // m
            path = SampledPath(tr.times[::stride], tr.points[::stride])
            for s, a in enumerate(alphas):
                spec = ModulusSpec(a, tab.beta)
                values[s, j, i] = holder_ratio_sup(path, spec)
                windowed[s, j, i] = _windowed_ratio_sup(path.times, path.points,
                                                        spec)
    medians = np.median(values, axis=2)
    wmedians = np.median(windowed, axis=2)
    brackets = tuple(
        HolderBracket(alpha=float(a), beta=tab.beta, meshes=meshes,
                      medians=tuple(float(x) for x in medians[s]),
                      window_medians=tuple(float(x) for x in wmedians[s]))
        for s, a in enumerate(alphas)
    )
    rows = [(m, b.alpha, b.beta, b.medians[j])
            for b in brackets for j, m in enumerate(b.meshes)]
    sio.write_modulus_csv(csv_path, rows)
    wrows = [(m, b.alpha, b.beta, b.window_medians[j])
             for b in brackets for j, m in enumerate(b.meshes)]
    window_csv = out / f"{config.stem}_window.csv"
    sio.write_modulus_csv(window_csv, wrows)
    wall = time.perf_counter() - t0
    result = HolderResult(mode="bracket", brackets=brackets, lag_deltas=None,
                          slope_mean=None, slope_sd=None, slope_ci95=None,
                          csv_path=csv_path, wall_seconds=wall)
    write_metadata(out / f"{config.stem}.meta", config, wall, {
        "mode": "bracket",
        "alpha": repr(tab.alpha),
        "beta": repr(tab.beta),
        "final_ratios": ",".join(f"{b.final_ratio:.4f}" for b in brackets),
        "window_spread_growth": repr(result.window_spread_growth),
    })
    write_plot_script(out / f"{config.stem}.gp",
                      f"modulus ratio sup kappa={config.kappa:g}",
                      "mesh points", "median ratio sup",
                      [f"'{csv_path.name}' every ::{j * len(meshes)}::"
                       f"{(j + 1) * len(meshes) - 1} using 1:4 with linespoints "
                       f"title 'alpha={b.alpha:.3f}'"
                       for j, b in enumerate(brackets)],
                      logscale="x 2")
    return result


# -- uniform derivative scaling ---------------------------------------------


@dataclass(frozen=True)
class UnifMapResult:
    vs: np.ndarray
    sup_median: np.ndarray
    slopes: np.ndarray
    slope_mean: float
    slope_ci95: float
    predicted_power: float
    t_doubling_ok: bool
    control_rel_err: float | None
    envelope_fit_power: float | None
    csv_path: Path
    wall_seconds: float


def _derivative_sup_curve(driving: DrivingPath, k_indices, us: np.ndarray,
                          vs: np.ndarray, n_zoom: int = 5) -> np.ndarray:
    """sup over (t, u) of |fhat_t'(u + iv)| for each v.

    The coarse pass scans the full (t, u) product; the peaks in u narrow
    like v, so each per-v argmax is then refined by a local u zoom at
    its best time index.
    """
    ws = (us[:, None] + 1j * vs[None, :]).ravel()
    sup = np.zeros(vs.size)
    best_k = np.zeros(vs.size, dtype=int)
    best_u = np.zeros(vs.size)
    u_at_end = np.zeros(vs.size)
    n = driving.n_steps
    for k in k_indices:
        _, logd, _ = fhat_batch(driving, int(k), ws)
        d = np.exp(logd).reshape(us.size, vs.size)
        cols = d.max(axis=0)
        better = cols > sup
        sup[better] = cols[better]
        best_k[better] = int(k)
        best_u[better] = us[d.argmax(axis=0)[better]]
        if int(k) == n:
            u_at_end = us[d.argmax(axis=0)]
    du = float(us[1] - us[0])
    stride = int(k_indices[1] - k_indices[0]) if len(k_indices) > 1 else 1

    def zoom_u(j: int, k: int, u0: float) -> tuple[float, float]:
        val, w_half = 0.0, du
        for _ in range(n_zoom):
            local = u0 + np.linspace(-w_half, w_half, 9)
            _, logd, _ = fhat_batch(driving, k, local + 1j * vs[j])
            d = np.exp(logd)
            i = int(d.argmax())
            if d[i] > val:
                val, u0 = float(d[i]), float(local[i])
            w_half /= 4.0
        return val, u0

    for j in range(vs.size):
        # the sup over t <= T is often attained at the horizon itself,
        # where a narrow peak in u can slip between coarse gridpoints
        val, u_end = zoom_u(j, n, float(u_at_end[j]))
        if val > sup[j]:
            sup[j], best_k[j], best_u[j] = val, n, u_end
        k_half = stride
        for _ in range(2):
            lo = max(1, best_k[j] - k_half)
            hi = min(n, best_k[j] + k_half)
            for k in np.unique(np.linspace(lo, hi, 33).round().astype(int)):
                _, logd, _ = fhat_batch(driving, int(k),
                                        [best_u[j] + 1j * vs[j]])
                d = math.exp(float(logd[0]))
                if d > sup[j]:
                    sup[j] = d
                    best_k[j] = int(k)
            val, u0 = zoom_u(j, int(best_k[j]), float(best_u[j]))
            if val > sup[j]:
                sup[j], best_u[j] = val, u0
            k_half = max(k_half // 16, 4)
    return sup


def experiment_unif_map_scaling(config: ExperimentConfig,
                                n_v: int = 7) -> UnifMapResult:
    """Scaling of the uniform derivative supremum in the height v.

    For each dyadic v the supremum of |fhat_t'(u + iv)| is scanned over
    a time grid and a u range covering the driving excursions; the
    log-log slope of the curve is fitted per seed.  kappa = 0 runs the
    exact control (closed-form supremum T^(1/4) v^(-1/2)); the known
    envelope sqrt(v^2 + 4T)/v doubles as a fitter check with exact
    power -1.  Requires kappa = 0 or kappa >= 8: below 8 the trace is
    simple in the interior, and the uniform blow-up this scan measures
    is a boundary-phase phenomenon.
    """
    if 0.0 < config.kappa < 8.0:
        raise ValueError("scaling scan needs kappa >= 8 "
                         "(kappa = 0 runs the exact control)")
    t0 = time.perf_counter()
    vs = 2.0 ** -np.arange(2, 2 + n_v)
    n = config.n_steps
    t_stride = max(1, n // int(config.tol("t_samples", 64)))
    k_indices = np.arange(t_stride, n + 1, t_stride)
    if k_indices[-1] != n:
        k_indices = np.append(k_indices, n)
    out = _out_dir(config)
    csv_path = out / f"{config.stem}.csv"

    tab = exponent_formulas(config.kappa) if config.kappa > 0.0 else None
    n_seeds = 1 if config.kappa == 0.0 else config.n_paths
    sups = np.empty((n_seeds, vs.size))
    for i in range(n_seeds):
        driving = DrivingPath.brownian(config.kappa, config.T, n,
                                       config.seed + i)
        uamp = max(float(np.abs(driving.xi).max()) + 0.5,
                   2.0 * math.sqrt(config.T) + 0.2)
        us = np.linspace(-uamp, uamp, int(config.tol("u_samples", 41)))
        sups[i] = _derivative_sup_curve(driving, k_indices, us, vs)
    slopes = np.array([_fit_power(vs, row) for row in sups])
    sup_median = np.median(sups, axis=0)
    mean = float(slopes.mean())
    sd = float(slopes.std(ddof=1)) if n_seeds > 1 else 0.0
    ci = 1.96 * sd / math.sqrt(n_seeds)

    control_rel_err = None
    envelope_fit = None
    if config.kappa == 0.0:
        # sup over u at time t peaks at u^2 = 3 v^2 + 4t with value
        # ((v^2 + t) / v^2)^(1/4), increasing in t
        closed = (vs * vs + config.T) ** 0.25 / np.sqrt(vs)
        control_rel_err = float(np.abs(sups[0] / closed - 1.0).max())
        envelope = np.array([schwarz_envelope(config.T, v) for v in vs])
        envelope_fit = _fit_power(vs, envelope)
        predicted = -0.5
        t_doubling_ok = True
    else:
        predicted = 2.0 * tab.alpha - 1.0
        # doubling the horizon only enlarges the scanned set, so the sup
        # curve must not decrease; checked on one extended path
        driving2 = DrivingPath.brownian(config.kappa, 2.0 * config.T, 2 * n,
                                        config.seed)
        uamp = max(float(np.abs(driving2.xi).max()) + 0.5,
                   2.0 * math.sqrt(2.0 * config.T) + 0.2)
        us = np.linspace(-uamp, uamp, int(config.tol("u_samples", 41)))
        half = k_indices
        full = np.arange(t_stride, 2 * n + 1, t_stride)
        sup_half = _derivative_sup_curve(driving2, half, us, vs)
        sup_full = _derivative_sup_curve(driving2, full, us, vs)
        t_doubling_ok = bool(np.all(sup_full >= sup_half * (1.0 - 1e-12)))

    rows = [(i, vs[j], sups[i, j])
            for i in range(n_seeds) for j in range(vs.size)]
    sio.write_supscale_csv(csv_path, rows)
    wall = time.perf_counter() - t0
    extras = {
        "slope_mean": repr(mean),
        "slope_ci95": repr(ci),
        "predicted_power": repr(predicted),
        "t_doubling_ok": int(t_doubling_ok),
    }
    if control_rel_err is not None:
        extras["control_rel_err"] = repr(control_rel_err)
        extras["envelope_fit_power"] = repr(envelope_fit)
    write_metadata(out / f"{config.stem}.meta", config, wall, extras)
    write_plot_script(out / f"{config.stem}.gp",
                      f"derivative sup scaling kappa={config.kappa:g}",
                      "v", "sup |fhat'|",
                      [f"'{csv_path.name}' using 2:3 with points notitle"],
                      logscale="xy")
    return UnifMapResult(vs=vs, sup_median=sup_median, slopes=slopes,
                         slope_mean=mean, slope_ci95=ci,
                         predicted_power=predicted,
                         t_doubling_ok=t_doubling_ok,
                         control_rel_err=control_rel_err,
                         envelope_fit_power=envelope_fit,
                         csv_path=csv_path, wall_seconds=wall)


# -- radial process suite ---------------------------------------------------


@dataclass(frozen=True)
class SuiteRow:
    metric: str
    value: float
    lo: float
    hi: float

    @property
    def ok(self) -> bool:
        return self.lo <= self.value <= self.hi


@dataclass(frozen=True)
class BesselSuiteResult:
    rows: tuple[SuiteRow, ...]
    csv_path: Path
    wall_seconds: float

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)


def experiment_bessel_suite(config: ExperimentConfig) -> BesselSuiteResult:
    """Orchestrates the radial-process checks into one summary table.

    Rows: stationary-density histogram gap (when the phase index is
    nonnegative), change-of-measure martingale mean, transient clock law
    (censored KS), critical clock tail slope, and the hitting
    probability (when the shifted index is positive).
    """
    if config.kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {config.kappa}")
    t0 = time.perf_counter()
    nu, _ = kappa_to_nu(config.kappa)
    n = config.n_paths
    rows = []

    if nu >= 0.0:
        cfg = BesselConfig(nu=nu, theta0=math.pi / 2,
                           base_step=config.tol("base_step", 1e-2),
                           horizon=config.tol("horizon", 5.0))
        ens = radial_batch(cfg, n, config.seed)
        edges = np.linspace(0.0, math.pi, 51)
        hist, _ = np.histogram(ens.theta, bins=edges, density=True)
        mids = 0.5 * (edges[1:] + edges[:-1])
        gap = float(np.abs(hist - stationary_density(nu, mids)).max())
        rows.append(SuiteRow("density_sup_gap", gap, 0.0,
                             config.tol("density_gap", 0.08)))

    mcfg = BesselConfig(nu=nu, theta0=math.pi / 2, base_step=2.5e-3,
                        horizon=1.0)
    mean, se = martingale_mean(mcfg, 1.0, n, config.seed + 1)
    rows.append(SuiteRow("martingale_mean", mean, 1.0 - 3.0 * se, 1.0 + 3.0 * se))

    n_clock = min(n, 20_000)
    clock, status = usual_clock_batch(1.0, math.e, n_clock, config.seed + 2)
    fin = np.sort(clock[status == STATUS_DONE])
    fin = fin[fin < 1000.0]
    cdf = usual_clock_cdf(fin, math.e)
    i = np.arange(1, fin.size + 1)
    ks = max(np.abs(i / n_clock - cdf).max(), np.abs((i - 1) / n_clock - cdf).max())
    rows.append(SuiteRow("clock_ks", float(ks), 0.0, config.tol("clock_ks", 0.03)))

    fit = critical_clock_tail(1.0, math.pi / 2, min(n, 20_000), config.seed + 3)
    rows.append(SuiteRow("tail_slope", fit.slope, -0.7, -0.3))

    nu_t = kappa_to_nu_tilde(config.kappa)
    if nu_t > 0.0:
        n_hit = min(n, 10_000)
        p = hitting_probability_check(nu_t, 2.0, 1.0, 1e6, n_hit, config.seed + 4)
        want = 0.5 ** (2.0 * nu_t)
        sigma = math.sqrt(want * (1.0 - want) / n_hit)
        rows.append(SuiteRow("hitting_prob", p, want - 3.0 * sigma,
                             want + 3.0 * sigma))

    out = _out_dir(config)
    csv_path = out / f"{config.stem}.csv"
    sio.write_suite_csv(csv_path, [(r.metric, r.value, r.lo, r.hi, r.ok)
                                   for r in rows])
    wall = time.perf_counter() - t0
    write_metadata(out / f"{config.stem}.meta", config, wall,
                   {"all_ok": int(all(r.ok for r in rows))})
    write_plot_script(out / f"{config.stem}.gp",
                      f"radial suite kappa={config.kappa:g}", "row", "value",
                      [f"'{csv_path.name}' using 0:2:xtic(1) with points notitle"])
    return BesselSuiteResult(rows=tuple(rows), csv_path=csv_path,
                             wall_seconds=wall)
