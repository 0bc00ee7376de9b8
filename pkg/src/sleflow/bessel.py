"""Radial and usual Bessel processes: simulation, clock functionals,
change-of-measure martingale, stationary density, and tail estimators.

The radial process solves dtheta = (1/2 + nu) cot(theta) dt + dB on
(0, pi) with substeps h = base_step * sin^2(theta), so the singular
drift term stays bounded per substep.  The clock C_t accumulates
(sin theta)^-2 dt by trapezoid on the substeps.  Unit speed throughout;
speed-kappa processes are time rescalings.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from ._kernels import impl as _K
from .rng import SubstepNormals

# batch status codes (radial: absorbed; usual clock: capped; hit: escaped)
STATUS_DONE = 0
STATUS_STOPPED = 1
STATUS_CAPPED = 2


def kappa_to_nu(kappa: float) -> tuple[float, float]:
    """Radial Bessel index and speed of the angle process: (1/2 - 4/kappa,
    kappa).  The index is negative exactly for kappa < 8."""
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    return 0.5 - 4.0 / kappa, kappa

def kappa_to_nu_tilde(kappa: float) -> float:
    """Usual-Bessel index 2/kappa - 1/2 of the driving-seen-from-a-point
    comparison process."""
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    return 2.0 / kappa - 0.5


@dataclass(frozen=True)
class BesselConfig:
    nu: float
    theta0: float
    base_step: float
    horizon: float
    absorb_eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.theta0 < math.pi:
            raise ValueError(f"theta0 must lie in (0, pi), got {self.theta0}")
        if self.base_step <= 0.0 or self.absorb_eps <= 0.0 or self.horizon <= 0.0:
            raise ValueError("base_step, absorb_eps, horizon must be > 0")


@dataclass(frozen=True)
class BesselPath:
    """One recorded path: angle, clock, and time at every substep
    boundary; absorbed_at is the absorption time or None."""

    nu: float
    times: np.ndarray
    thetas: np.ndarray
    clock: np.ndarray
    absorbed_at: float | None

    def __post_init__(self):
        live = self.thetas[:-1] if self.absorbed_at is not None else self.thetas
        if live.size and not (0.0 < live.min() and live.max() < math.pi):
            raise ValueError("angles left (0, pi) before absorption")
        if np.any(np.diff(self.clock) < 0.0):
            raise ValueError("clock must be nondecreasing")
        if self.clock[-1] < self.times[-1] - 1e-9:
            raise ValueError("clock fell below elapsed time")


def simulate_radial(config: BesselConfig, seed: int) -> BesselPath:
    """Single recorded path (reference implementation; batches go
    through the kernels and draw identical per-path streams)."""
    gen = SubstepNormals(seed, 0)
    drift_c = 0.5 + config.nu
    eps = config.absorb_eps
    th = config.theta0
    t = 0.0
    cl = 0.0
    times, thetas, clocks = [0.0], [th], [0.0]
    absorbed = None
    while True:
        s = math.sin(th)
        inv_s2 = 1.0 / (s * s)
        h = config.base_step * s * s
        rem = config.horizon - t
        last = h >= rem
        if last:
            h = rem
        z = gen.next()
        th_new = th + drift_c * (math.cos(th) / s) * h + math.sqrt(h) * z
        t += h
        if th_new <= eps or th_new >= math.pi - eps:
            if config.nu < 0.0:
                # left-endpoint rectangle: the right endpoint is outside
                cl += h * inv_s2
                absorbed = t
                th = th_new
                times.append(t)
                thetas.append(th)
                clocks.append(cl)
                break
            # nu >= 0 never reaches the boundary; fold the overshoot back
            if th_new <= eps:
                th_new = eps + (eps - th_new)
            else:
                th_new = (math.pi - eps) - (th_new - (math.pi - eps))
        cl += 0.5 * h * (inv_s2 + 1.0 / math.sin(th_new) ** 2)
        th = th_new
        times.append(t)
        thetas.append(th)
        clocks.append(cl)
        if last:
            break
    return BesselPath(
        nu=config.nu, times=np.array(times), thetas=np.array(thetas),
        clock=np.array(clocks), absorbed_at=absorbed,
    )


@dataclass(frozen=True)
class RadialEnsemble:
    """Terminal state of a batch: angle, clock, stop time, and status
    (STATUS_DONE = horizon, STATUS_STOPPED = absorbed, STATUS_CAPPED =
    clock cap)."""

    theta: np.ndarray
    clock: np.ndarray
    tstop: np.ndarray
    status: np.ndarray

    @property
    def absorbed(self) -> np.ndarray:
        return self.status == STATUS_STOPPED


def radial_batch(config: BesselConfig, n_paths: int, seed: int,
                 clock_cap: float = math.inf) -> RadialEnsemble:
    theta, clock, tstop, status = _K.bessel_radial_batch(
        config.nu, config.theta0, config.base_step, config.absorb_eps,
        config.horizon, clock_cap, seed, n_paths,
    )
    return RadialEnsemble(theta=theta, clock=clock, tstop=tstop, status=status)


def stationary_density(nu: float, y):
    """Stationary law c_nu (sin y)^{1+2nu} of the radial process, which
    exists for nu >= 0 (no absorption)."""
    if nu < 0.0:
        raise ValueError(f"stationary density needs nu >= 0, got {nu}")
    c = _density_norm(float(nu))
    return c * np.sin(y) ** (1.0 + 2.0 * nu)


@lru_cache(maxsize=64)
def _density_norm(nu: float) -> float:
    val, _ = quad(lambda y: math.sin(y) ** (1.0 + 2.0 * nu), 0.0, math.pi)
    return 1.0 / val


@dataclass(frozen=True)
class ComMartingale:
    a: float
    values: np.ndarray

    def __post_init__(self):
        if self.values[0] != 1.0:
            raise ValueError("martingale must start at 1")


def com_martingale(path: BesselPath, a: float) -> ComMartingale:
    """(sin theta_t / sin theta_0)^a K_t along the recorded path, with
    compensator K_t = exp(a(a/2 + 1/2 + nu) t - a(a/2 + nu) C_t);
    truncated at absorption."""
    n = len(path.times) - (1 if path.absorbed_at is not None else 0)
    t = path.times[:n]
    th = path.thetas[:n]
    cl = path.clock[:n]
    rate = a * (0.5 * a + 0.5 + path.nu)
    coeff = a * (0.5 * a + path.nu)
    vals = (np.sin(th) / math.sin(th[0])) ** a * np.exp(rate * t - coeff * cl)
    return ComMartingale(a=a, values=vals)


def martingale_mean(config: BesselConfig, a: float, n_paths: int,
                    seed: int) -> tuple[float, float]:
    """Sample mean and standard error of M_{horizon ∧ T_eps} over a
    batch; the mean of a true martingale is 1."""
    ens = radial_batch(config, n_paths, seed)
    rate = a * (0.5 * a + 0.5 + config.nu)
    coeff = a * (0.5 * a + config.nu)
    m = (np.sin(ens.theta) / math.sin(config.theta0)) ** a \
        * np.exp(rate * ens.tstop - coeff * ens.clock)
    return float(m.mean()), float(m.std(ddof=1) / math.sqrt(n_paths))


# -- usual Bessel process ----------------------------------------------------

def usual_clock_batch(rho0: float, R: float, n_paths: int, seed: int,
                      base_step: float = 5e-3,
                      clock_cap: float = 1000.0):
    """Clocks int rho^-2 dt of dρ = dB + (1/2)ρ^-1 dt run from rho0 to
    R rho0.  Returns (clock, status); STATUS_CAPPED rows were censored
    at clock_cap (the transient process escapes, so caps are needed for
    the heavy upper tail)."""
    if R <= 1.0:
        raise ValueError(f"target ratio R must exceed 1, got {R}")
    if rho0 <= 0.0:
        raise ValueError(f"rho0 must be > 0, got {rho0}")
    return _K.bessel_usual_clock_batch(0.0, rho0, R, base_step, clock_cap,
                                       seed, n_paths)


def usual_bessel_clock_sample(rho0: float, R: float, seed: int,
                              base_step: float = 5e-3,
                              clock_cap: float = 1000.0) -> float:
    """One clock draw; inf when censored at clock_cap."""
    clock, status = usual_clock_batch(rho0, R, 1, seed, base_step, clock_cap)
    return float(clock[0]) if status[0] == STATUS_DONE else math.inf


def usual_clock_cdf(r, R: float):
    """Exact law of the clock: P(clock <= r) = 2(1 - Phi(log R / sqrt r)),
    the hitting-time law of level log R for a standard Brownian motion."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0.0
    out[pos] = 2.0 * (1.0 - ndtr(math.log(R) / np.sqrt(r[pos])))
    return out


def usual_clock_density(r, R: float):
    r = np.asarray(r, dtype=float)
    lr = abs(math.log(R))
    return lr / np.sqrt(2.0 * math.pi * r**3) * np.exp(-lr * lr / (2.0 * r))


# -- tail and hitting estimators ---------------------------------------------

@dataclass(frozen=True)
class TailFit:
    """Log-log least-squares fit of a survival curve."""

    slope: float
    r_values: np.ndarray
    survival: np.ndarray
    n_paths: int
    n_censored: int


# the log-depth a clock window of size u explores is ~sqrt(u); a barrier at
# depth -log(eps) shallower than that replaces the power tail with the
# exponential decay of a reflecting strip, so the working barrier sits at a
# depth (~345) the window never reaches
_TAIL_EPS = 1e-150


def critical_clock_tail(t: float, theta0: float, n_paths: int, seed: int,
                        base_step: float = 2.5e-3,
                        r_window: tuple[float, float] = (1e2, 1e4)) -> TailFit:
    """Survival curve of C_t / t^2 for the driftless critical case and
    its fitted tail exponent over r_window.

    The march runs in clock units (base_step of clock per substep, folded
    into (0, pi/2]), so deep excursions are resolved at constant cost per
    unit of clock.  The clock cap sits 20% above the window top, which
    censors nothing inside the window (capped paths count as survivors at
    every window level)."""
    if t < 1.0:
        raise ValueError(f"t must be >= 1, got {t}")
    lo, hi = r_window
    cap = 1.2 * hi * t * t
    clock, status = _K.critical_clock_batch(
        0.0, theta0, base_step, _TAIL_EPS, t, cap, seed, n_paths,
    )
    scaled = clock / (t * t)
    r_values = np.geomspace(lo, hi, 17)
    survival = np.array([(scaled > r).mean() for r in r_values])
    keep = survival > 0.0
    if keep.sum() < 4:
        warnings.warn("too few tail samples in the requested window; "
                      "fit uses the surviving prefix only")
    slope = float(np.polyfit(np.log(r_values[keep]), np.log(survival[keep]), 1)[0])
    return TailFit(
        slope=slope, r_values=r_values, survival=survival,
        n_paths=n_paths, n_censored=int((status == STATUS_CAPPED).sum()),
    )


def hitting_probability_check(nu_tilde: float, x: float, eps: float,
                              t0: float, n_paths: int, seed: int,
                              base_step: float = 2e-3) -> float:
    """Empirical probability that the usual Bessel process of index
    nu_tilde started at x ever reaches eps; the exact value is
    (eps/x)^(2 nu_tilde).

    Truncation: paths are stopped at the horizon t0 or on escaping past
    1000x; both make the estimate a slight undercount (an escaped path
    would still hit eps with probability ~(eps/1000x)^(2 nu_tilde)).
    """
    if not 0.0 < eps <= x:
        raise ValueError(f"need 0 < eps <= x, got eps={eps}, x={x}")
    if nu_tilde <= 0.0:
        raise ValueError(f"nu_tilde must be > 0 (transient case), got {nu_tilde}")
    if eps == x:
        return 1.0
    hit, _ = _K.bessel_usual_hit_batch(
        nu_tilde, x, eps, 1000.0 * x, base_step, t0, seed, n_paths,
    )
    return float(hit.mean())
