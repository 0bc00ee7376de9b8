"""Conformal-radius time change, angle process, and excursion counting.

The radial parametrisation follows one tracked point: sigma(s) is the
capacity time at which the conformal radius has decayed to e^{-4s}.
Both verification identities below integrate functions of the angle
theta_hat = arccot(X/Y) against ds, using the flow's own step
resolution, so their error is governed by the driving step dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import io as _io
from .loewner import DrivingPath, FlowHistory, track_flow

DEFAULT_B = 2.0


def theta_of_point(X: float, Y: float) -> float:
    """Angle in (0, pi) with cot(theta) = X / Y."""
    if Y <= 0.0:
        raise ValueError(f"angle needs Y > 0, got {Y}")
    return math.atan2(Y, X)


@dataclass(frozen=True)
class RadialSample:
    """State of one tracked point sampled on a grid of radius levels.

    sigma[i] is the capacity time of the level crossing (inf when the
    point is swallowed or the horizon ends before the level is hit);
    dependent entries are nan there.  clock_int accumulates
    int (sin theta)^-2 dr from s0; the cot^2 integral of the derivative
    identity equals clock_int - (s - s0) exactly (trapezoid is linear).
    """

    z0: complex
    s0: float
    s_values: np.ndarray
    sigma: np.ndarray
    theta_hat: np.ndarray
    Y_sigma: np.ndarray
    clock_int: np.ndarray
    log_gprime: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.sigma)

    def to_csv(self, file) -> None:
        _io.write_radial_csv(
            file, self.s_values, self.sigma, self.theta_hat,
            self.Y_sigma, self.clock_int,
        )


def _radial_profile(hist: FlowHistory):
    """Per-step arrays over the alive span: radius parameter r, time,
    state, and the two running integrals against r."""
    n = hist.last_alive + 1
    X = hist.X[:n]
    Y = hist.Y[:n]
    lg = hist.log_gprime[:n]
    r = -0.25 * (np.log(Y) - lg)
    t = np.arange(n) * hist.driving.dt
    inv_sin2 = 1.0 + (X / Y) ** 2
    dr = np.diff(r)
    clock = np.concatenate(([0.0], np.cumsum(0.5 * (inv_sin2[1:] + inv_sin2[:-1]) * dr)))
    return r, t, X, Y, lg, clock


def _interp_crossing(r: np.ndarray, s: float):
    """(index, fraction) of the first crossing of level s, or None."""
    if s > r[-1]:
        return None
    j = int(np.searchsorted(r, s, side="left"))
    if j == 0:
        return 0, 0.0
    den = r[j] - r[j - 1]
    frac = (s - r[j - 1]) / den if den > 0.0 else 1.0
    return j, frac


def sigma_of_s(hist: FlowHistory, s: float) -> float:
    """Capacity time of the radius level e^{-4s}; inf if never reached
    on the recorded span (swallowed point or horizon)."""
    r, t, *_ = _radial_profile(hist)
    if s < r[0] - 1e-12:
        raise ValueError(f"s={s} below the starting level s0={r[0]}")
    hit = _interp_crossing(r, max(s, r[0]))
    if hit is None:
        return math.inf
    j, frac = hit
    if j == 0:
        return 0.0
    return float(t[j - 1] + frac * hist.driving.dt)


def radial_sample(driving: DrivingPath, z0: complex, s_values) -> RadialSample:
    s_values = np.asarray(s_values, dtype=float)
    if np.any(np.diff(s_values) < 0.0):
        raise ValueError("s_values must be nondecreasing")
    hist = track_flow(driving, z0)
    r, t, X, Y, lg, clock = _radial_profile(hist)
    s0 = float(r[0])
    if s_values.size and s_values[0] < s0 - 1e-12:
        raise ValueError(f"s_values start below s0={s0}")

    m = s_values.size
    sigma = np.full(m, math.inf)
    theta = np.full(m, math.nan)
    y_s = np.full(m, math.nan)
    ci = np.full(m, math.nan)
    lgs = np.full(m, math.nan)
    for i, s in enumerate(s_values):
        hit = _interp_crossing(r, max(float(s), s0))
        if hit is None:
            continue
        j, frac = hit
        if j == 0:
            sigma[i], xs, ys = 0.0, X[0], Y[0]
            ci[i], lgs[i] = 0.0, lg[0]
        else:
            sigma[i] = t[j - 1] + frac * driving.dt
            xs = X[j - 1] + frac * (X[j] - X[j - 1])
            ys = Y[j - 1] + frac * (Y[j] - Y[j - 1])
            ci[i] = clock[j - 1] + frac * (clock[j] - clock[j - 1])
            lgs[i] = lg[j - 1] + frac * (lg[j] - lg[j - 1])
        theta[i] = theta_of_point(float(xs), float(ys))
        y_s[i] = ys
    return RadialSample(
        z0=complex(z0), s0=s0, s_values=s_values, sigma=sigma,
        theta_hat=theta, Y_sigma=y_s, clock_int=ci, log_gprime=lgs,
    )


def verify_Y_identity(sample: RadialSample) -> float:
    """Max relative error of Y_sigma(s) = Im z0 * exp(-2 clock_int)."""
    v = sample.valid
    want = sample.z0.imag * np.exp(-2.0 * sample.clock_int[v])
    got = sample.Y_sigma[v]
    return float(np.max(np.abs(got - want) / want, initial=0.0))


def verify_gprime_identity(sample: RadialSample) -> float:
    """Max relative error of |g'| = exp(2(s-s0) - 2 int cot^2) with the
    cot^2 integral rewritten as clock_int - (s - s0)."""
    v = sample.valid
    ds = sample.s_values[v] - sample.s0
    want = np.exp(4.0 * ds - 2.0 * sample.clock_int[v])
    got = np.exp(sample.log_gprime[v])
    return float(np.max(np.abs(got - want) / want, initial=0.0))


@dataclass(frozen=True)
class ExcursionRecord:
    """One completed down-up excursion of the ratio X^2/Y^2 inside the
    observation window: below 1 at S_n, next reaching b at T_n (window
    end if the ratio never gets back to b)."""

    b: float
    s_bar: float
    S_n: float
    T_n: float
    n: int


def excursions(sample: RadialSample, s_bar: float, b: float = DEFAULT_B):
    """Excursion stopping values of X^2/Y^2 on [s_bar - 2, s_bar + 1].

    Scans the sampled grid: S_n is the first level with ratio <= 1 after
    T_{n-1}, T_n the first level after S_n with ratio >= b.  Returns the
    records of excursions that started; an empty list means the ratio
    stayed above 1 throughout the window.
    """
    if b <= 1.0:
        raise ValueError(f"threshold b must exceed 1, got {b}")
    lo, hi = s_bar - 2.0, s_bar + 1.0
    v = sample.valid & (sample.s_values >= lo) & (sample.s_values <= hi)
    s = sample.s_values[v]
    if s.size == 0:
        return []
    ratio = 1.0 / np.tan(sample.theta_hat[v]) ** 2
    out = []
    i, n = 0, 0
    m = s.size
    while i < m:
        while i < m and ratio[i] > 1.0:
            i += 1
        if i == m:
            break
        s_start = float(s[i])
        while i < m and ratio[i] < b:
            i += 1
        s_end = float(s[i]) if i < m else float(s[-1])
        out.append(ExcursionRecord(b=b, s_bar=s_bar, S_n=s_start, T_n=s_end, n=n))
        n += 1
    return out
