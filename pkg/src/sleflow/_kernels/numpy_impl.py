"""Pure-numpy builds of the hot kernels.

Same signatures, conventions, and RNG streams as numba_impl; loops over
steps are vectorised over points/paths instead of the other way round.
Integer RNG streams are bit-identical to the numba backend; float results
agree to libm rounding.
"""

from __future__ import annotations

import math

import numpy as np

from .. import rng

BACKEND_NAME = "numpy"


def _uhp_sqrt_vec(cr, ci):
    """Principal sqrt with image in the closed upper half-plane.

    Stabilised real arithmetic: no cancellation in either component.
    Returns (|c|, re, im).
    """
    r = np.sqrt(cr * cr + ci * ci)
    pos = cr >= 0.0
    sa = np.sqrt(0.5 * (r + cr))
    sb = np.sqrt(0.5 * (r - cr))
    aci = np.abs(ci)
    with np.errstate(divide="ignore", invalid="ignore"):
        b_pos = np.where(sa > 0.0, aci / (2.0 * sa), 0.0)
        a_neg = np.where(sb > 0.0, aci / (2.0 * sb), 0.0)
    a = np.where(pos, sa, a_neg)
    b = np.where(pos, b_pos, sb)
    a = np.where(ci < 0.0, -a, a)
    return r, a, b


def trace_chain(dxi, dt):
    """Tip images for every prefix; see numba_impl.trace_chain.

    Wavefront form: at phase j (descending) every chain k >= j applies its
    step j, so chain k activates at phase k with state 0.
    """
    n = dxi.shape[0] - 1
    ur = np.zeros(n + 1)
    ui = np.zeros(n + 1)
    flags = np.zeros(n + 1, bool)
    four_dt = 4.0 * dt
    for j in range(n, 0, -1):
        wr = ur[j:]
        wi = ui[j:]
        cr = wr * wr - wi * wi - four_dt
        ci = 2.0 * wr * wi
        r, a, b = _uhp_sqrt_vec(cr, ci)
        m2 = np.maximum(wr * wr + wi * wi, 1.0)
        flags[j:] |= r < 1e-14 * m2
        ur[j:] = a + dxi[j]
        ui[j:] = b
    return ur, ui, flags.astype(np.uint8)


def fhat_apply(dxi, dt, k, wre, wim):
    """Apply the k inverse steps to a batch; see numba_impl.fhat_apply."""
    ur = np.array(wre, dtype=float, copy=True)
    ui = np.array(wim, dtype=float, copy=True)
    m = ur.shape[0]
    logd = np.zeros(m)
    flags = np.zeros(m, bool)
    zero = np.zeros(m, bool)
    four_dt = 4.0 * dt
    for j in range(k, 0, -1):
        u2 = ur * ur + ui * ui
        cr = ur * ur - ui * ui - four_dt
        ci = 2.0 * ur * ui
        r, a, b = _uhp_sqrt_vec(cr, ci)
        flags |= r < 1e-14 * np.maximum(u2, 1.0)
        s2 = a * a + b * b
        z_now = u2 == 0.0
        zero |= z_now
        sing = (s2 == 0.0) & ~z_now
        flags |= sing
        ok = ~(z_now | sing)
        with np.errstate(divide="ignore", invalid="ignore"):
            logd += np.where(ok, 0.5 * np.log(u2 / s2), 0.0)
        ur = a + dxi[j]
        ui = b
    logd[zero] = -np.inf
    return ur, ui, logd, flags.astype(np.uint8)


def flow_march(x0, y0, dxi, dt, k, eps):
    """Forward flow of a batch through steps 1..k; see numba_impl."""
    X = np.array(x0, dtype=float, copy=True)
    Y = np.array(y0, dtype=float, copy=True)
    m = X.shape[0]
    loggp = np.zeros(m)
    ksw = np.full(m, -1, np.int64)
    alive = np.ones(m, bool)
    four_dt = 4.0 * dt
    eps = np.asarray(eps, dtype=float)
    for j in range(1, k + 1):
        if not alive.any():
            break
        idx = np.nonzero(alive)[0]
        wr = X[idx] - dxi[j]
        wi = Y[idx]
        w2 = wr * wr + wi * wi
        cr = wr * wr - wi * wi + four_dt
        ci = 2.0 * wr * wi
        r, a, b = _uhp_sqrt_vec(cr, ci)
        z2 = a * a + b * b
        X[idx] = a
        Y[idx] = b
        sing = (w2 == 0.0) | (z2 == 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            loggp[idx] += np.where(sing, 0.0, 0.5 * np.log(w2 / z2))
        dead_now = sing | (b < eps[idx])
        if dead_now.any():
            di = idx[dead_now]
            ksw[di] = j
            alive[di] = False
    return X, Y, loggp, ksw


def flow_history(x00, y00, dxi, dt, eps):
    """Forward flow of one point with full history; see numba_impl."""
    n = dxi.shape[0] - 1
    X = np.zeros(n + 1)
    Y = np.zeros(n + 1)
    lg = np.zeros(n + 1)
    X[0] = x00
    Y[0] = y00
    four_dt = 4.0 * dt
    xr = float(x00)
    yi = float(y00)
    acc = 0.0
    ksw = -1
    nvalid = n + 1
    for j in range(1, n + 1):
        wr = xr - dxi[j]
        wi = yi
        w2 = wr * wr + wi * wi
        cr = wr * wr - wi * wi + four_dt
        ci = 2.0 * wr * wi
        r = math.sqrt(cr * cr + ci * ci)
        if cr >= 0.0:
            a = math.sqrt(0.5 * (r + cr))
            b = abs(ci) / (2.0 * a) if a > 0.0 else 0.0
        else:
            b = math.sqrt(0.5 * (r - cr))
            a = abs(ci) / (2.0 * b) if b > 0.0 else 0.0
        if ci < 0.0:
            a = -a
        z2 = a * a + b * b
        if w2 == 0.0 or z2 == 0.0:
            ksw = j
            nvalid = j
            break
        acc += 0.5 * math.log(w2 / z2)
        xr = a
        yi = b
        X[j] = xr
        Y[j] = yi
        lg[j] = acc
        if yi < eps:
            ksw = j
            nvalid = j + 1
            break
    return X, Y, lg, nvalid, ksw


# -- gauge-function variation DP -------------------------------------------

def _psi_vec(u, p, q, x0, lin_a, lin_b):
    out = np.zeros(u.shape)
    low = (u > 0.0) & (u <= x0)
    hi = u > x0
    ul = u[low]
    if q == 0.0:
        out[low] = ul ** p
    else:
        out[low] = ul ** p * (-np.log(ul)) ** (-q)
    uh = u[hi]
    out[hi] = (lin_a + lin_b * (uh - x0)) ** p
    return out


def psi_var_dp(px, py, inv_m, p, q, x0, lin_a, lin_b):
    """Greatest psi-sum over increasing index subsets; see numba_impl."""
    n = px.shape[0]
    best = np.zeros(n)
    ans = 0.0
    for j in range(1, n):
        dx = px[:j] - px[j]
        dy = py[:j] - py[j]
        u = np.sqrt(dx * dx + dy * dy) * inv_m
        bj = np.max(best[:j] + _psi_vec(u, p, q, x0, lin_a, lin_b))
        best[j] = bj
        if bj > ans:
            ans = bj
    return float(ans)


# -- modulus-of-continuity sup ---------------------------------------------

def holder_sup(xs, ys, dt, alpha, beta, gamma):
    """sup |z_j - z_i| / phi((j-i) dt) over pairs; see numba_impl."""
    n = xs.shape[0]
    d = np.arange(1, n)
    tt = d * dt
    l1 = np.maximum(-np.log(tt), 1.0)
    l2 = np.maximum(np.log(l1), 1.0)
    phi = tt ** alpha * l1 ** beta * l2 ** gamma
    inv_phi2 = np.concatenate(([0.0], 1.0 / (phi * phi)))
    sup2 = 0.0
    for j in range(1, n):
        dx = xs[:j] - xs[j]
        dy = ys[:j] - ys[j]
        v = (dx * dx + dy * dy) * inv_phi2[j:0:-1]
        m = v.max()
        if m > sup2:
            sup2 = m
    return float(np.sqrt(sup2))


# -- half-plane lattice sums ------------------------------------------------

def grid_sum(h, m_half, t_cap, a, zeta, ymin):
    """Lattice sum of y^zeta (1 + x^2/y^2)^(-a/2); see numba_impl."""
    ymax = math.sqrt(1.0 + 4.0 * t_cap)
    nj = int(math.floor(8.0 * m_half / h + 1e-9))
    nk = int(math.floor(8.0 * (ymax / h - 1.0) + 1e-9))
    x2 = (0.125 * h * np.arange(1, nj + 1)) ** 2
    total = 0.0
    for kk in range(nk + 1):
        y = h * (1.0 + 0.125 * kk)
        if y < ymin:
            continue
        base = 1.0 + x2 / (y * y)
        if a == 2.0:
            s = 1.0 + 2.0 * np.sum(1.0 / base)
        elif a == 1.0:
            s = 1.0 + 2.0 * np.sum(1.0 / np.sqrt(base))
        elif a == 0.5:
            s = 1.0 + 2.0 * np.sum(1.0 / np.sqrt(np.sqrt(base)))
        else:
            s = 1.0 + 2.0 * np.sum(base ** (-0.5 * a))
        total += y ** zeta * s
    return total


# -- Bessel-type SDE batches -----------------------------------------------

def bessel_radial_batch(nu, theta0, h0, eps, horizon, clock_cap, seed, n):
    """Lockstep twin of numba_impl.bessel_radial_batch."""
    theta_out = np.full(n, float(theta0))
    clock_out = np.zeros(n)
    tstop_out = np.zeros(n)
    status_out = np.ones(n, np.uint8)
    pi = math.pi
    if not (eps < theta0 < pi - eps):
        return theta_out, clock_out, tstop_out, status_out
    idx = np.arange(n)
    st = rng.path_state_vec(seed, idx)
    th = np.full(n, float(theta0))
    cl = np.zeros(n)
    t = np.zeros(n)
    spare = np.zeros(n)
    it = 0
    drift_c = 0.5 + nu
    absorbing = nu < 0.0
    while idx.size:
        s = np.sin(th)
        inv_s2 = 1.0 / (s * s)
        h = h0 * s * s
        rem = horizon - t
        last = h >= rem
        h = np.where(last, rem, h)
        if it & 1:
            z = spare
        else:
            st, z, spare = rng.normal_pair_vec(st)
        it += 1
        c = np.cos(th)
        th_new = th + drift_c * (c / s) * h + np.sqrt(h) * z
        low = th_new <= eps
        high = th_new >= pi - eps
        if absorbing:
            absorbed = low | high
        else:
            absorbed = np.zeros(th_new.shape, bool)
            th_new = np.where(low, eps + (eps - th_new), th_new)
            th_new = np.where(high, (pi - eps) - (th_new - (pi - eps)), th_new)
        s_new = np.sin(np.where(absorbed, theta0, th_new))
        cl = np.where(
            absorbed,
            cl + h * inv_s2,
            cl + 0.5 * h * (inv_s2 + 1.0 / (s_new * s_new)),
        )
        t = t + h
        th = th_new
        done_h = ~absorbed & last
        done_c = ~absorbed & ~last & (cl >= clock_cap)
        fin = absorbed | done_h | done_c
        if fin.any():
            fi = np.nonzero(fin)[0]
            gi = idx[fi]
            theta_out[gi] = th[fi]
            clock_out[gi] = cl[fi]
            tstop_out[gi] = t[fi]
            status_out[gi] = np.where(
                absorbed[fi], 1, np.where(done_h[fi], 0, 2)
            ).astype(np.uint8)
            keep = ~fin
            idx = idx[keep]
            st = st[keep]
            th = th[keep]
            cl = cl[keep]
            t = t[keep]
            spare = spare[keep]
    return theta_out, clock_out, tstop_out, status_out


def critical_clock_batch(nu, theta0, h0, eps, budget, clock_cap, seed, n):
    """Lockstep twin of numba_impl.critical_clock_batch."""
    clock_out = np.zeros(n)
    status_out = np.ones(n, np.uint8)
    half_pi = 0.5 * math.pi
    th0 = float(theta0)
    if th0 > half_pi:
        th0 = math.pi - th0
    if th0 <= eps:
        return clock_out, status_out
    drift_c = 0.5 + nu
    absorbing = nu < 0.0
    sq = math.sqrt(h0)
    idx = np.arange(n)
    st = rng.path_state_vec(seed, idx)
    th = np.full(n, th0)
    cl = np.zeros(n)
    rt = np.zeros(n)
    spare = np.zeros(n)
    it = 0
    while idx.size:
        capped = cl >= clock_cap
        if capped.any():
            gi = idx[capped]
            clock_out[gi] = cl[capped]
            status_out[gi] = 2
            keep = ~capped
            idx = idx[keep]
            st = st[keep]
            th = th[keep]
            cl = cl[keep]
            rt = rt[keep]
            spare = spare[keep]
            if idx.size == 0:
                break
        if it & 1:
            z = spare
        else:
            st, z, spare = rng.normal_pair_vec(st)
        it += 1
        s = np.sin(th)
        c = np.cos(th)
        th_new = th + drift_c * s * c * h0 + s * sq * z
        low = th_new <= eps
        if absorbing:
            absorbed = low
        else:
            absorbed = np.zeros(th_new.shape, bool)
            th_new = np.where(low, eps + (eps - th_new), th_new)
        th_new = np.where(th_new > half_pi, math.pi - th_new, th_new)
        s_new = np.sin(th_new)
        d_rt = 0.5 * h0 * (s * s + s_new * s_new)
        dead = ~absorbed & (rt + d_rt >= budget)
        fin = absorbed | dead
        if fin.any():
            fi = np.nonzero(fin)[0]
            gi = idx[fi]
            clock_out[gi] = np.where(
                absorbed[fi],
                cl[fi] + h0,
                cl[fi] + h0 * (budget - rt[fi]) / d_rt[fi],
            )
            status_out[gi] = np.where(absorbed[fi], 1, 0).astype(np.uint8)
            keep = ~fin
            idx = idx[keep]
            st = st[keep]
            spare = spare[keep]
            th_new = th_new[keep]
            cl = cl[keep]
            rt = rt[keep]
            d_rt = d_rt[keep]
        th = th_new
        cl = cl + h0
        rt = rt + d_rt
    return clock_out, status_out


def bessel_usual_clock_batch(nutilde, rho0, r_factor, h0, clock_cap, seed, n):
    """Lockstep twin of numba_impl.bessel_usual_clock_batch."""
    clock_out = np.zeros(n)
    status_out = np.zeros(n, np.uint8)
    target = r_factor * rho0
    if rho0 >= target:
        return clock_out, status_out
    dc = nutilde + 0.5
    sq = math.sqrt(h0)
    idx = np.arange(n)
    st = rng.path_state_vec(seed, idx)
    st2 = rng.path_state_vec((seed ^ rng.BRIDGE_XOR) & rng.MASK64, idx)
    rho = np.full(n, float(rho0))
    cl = np.zeros(n)
    spare = np.zeros(n)
    it = 0
    while idx.size:
        capped = cl >= clock_cap
        if capped.any():
            gi = idx[capped]
            clock_out[gi] = cl[capped]
            status_out[gi] = 2
            keep = ~capped
            idx = idx[keep]
            st = st[keep]
            st2 = st2[keep]
            rho = rho[keep]
            cl = cl[keep]
            spare = spare[keep]
            if idx.size == 0:
                break
        if it & 1:
            z = spare
        else:
            st, z, spare = rng.normal_pair_vec(st)
        it += 1
        st2, w = rng.sm64_next_vec(st2)
        u = ((w >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
        rho_new = rho * (1.0 + dc * h0 + sq * z)
        rho_new = np.maximum(rho_new, 1e-300)
        over = rho_new >= target
        safe_new = np.where(over, rho, rho_new)
        frac = np.where(over, (target - rho) / (rho_new - rho), 0.0)
        expo = -2.0 * (target - rho) * (target - safe_new) / (h0 * rho * rho)
        touched = ~over & (u < np.exp(np.minimum(expo, 0.0)))
        fin = over | touched
        inc_lvl = 0.5 * h0 * (1.0 + (rho * rho) / (target * target))
        cl_fin = cl + np.where(over, frac * inc_lvl, 0.5 * inc_lvl)
        if fin.any():
            fi = np.nonzero(fin)[0]
            gi = idx[fi]
            clock_out[gi] = cl_fin[fi]
            status_out[gi] = 0
            keep = ~fin
            idx = idx[keep]
            st = st[keep]
            st2 = st2[keep]
            rho = rho[keep]
            rho_new = rho_new[keep]
            cl = cl[keep]
            spare = spare[keep]
        cl = cl + 0.5 * h0 * (1.0 + (rho * rho) / (rho_new * rho_new))
        rho = rho_new
    return clock_out, status_out


def bessel_usual_hit_batch(nutilde, x_start, eps_r, escape, h0, horizon, seed, n):
    """Lockstep twin of numba_impl.bessel_usual_hit_batch."""
    hit = np.zeros(n, np.uint8)
    status_out = np.zeros(n, np.uint8)
    dc = nutilde + 0.5
    sq = math.sqrt(h0)
    idx = np.arange(n)
    st = rng.path_state_vec(seed, idx)
    st2 = rng.path_state_vec((seed ^ rng.BRIDGE_XOR) & rng.MASK64, idx)
    rho = np.full(n, float(x_start))
    t = np.zeros(n)
    spare = np.zeros(n)
    bridged = np.zeros(n, bool)
    it = 0
    while idx.size:
        fin_hit = bridged | (rho <= eps_r)
        fin_esc = ~fin_hit & (rho >= escape)
        fin_hor = ~fin_hit & ~fin_esc & (t >= horizon)
        fin = fin_hit | fin_esc | fin_hor
        if fin.any():
            fi = np.nonzero(fin)[0]
            gi = idx[fi]
            hit[gi] = fin_hit[fi]
            status_out[gi] = np.where(
                fin_hit[fi], 0, np.where(fin_esc[fi], 1, 2)
            ).astype(np.uint8)
            keep = ~fin
            idx = idx[keep]
            st = st[keep]
            st2 = st2[keep]
            rho = rho[keep]
            t = t[keep]
            spare = spare[keep]
            bridged = bridged[keep]
            if idx.size == 0:
                break
        if it & 1:
            z = spare
        else:
            st, z, spare = rng.normal_pair_vec(st)
        it += 1
        st2, w = rng.sm64_next_vec(st2)
        u = ((w >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        t = t + h0 * rho * rho
        rho_new = rho * (1.0 + dc * h0 + sq * z)
        rho_new = np.maximum(rho_new, 1e-300)
        expo = -2.0 * (rho - eps_r) * (rho_new - eps_r) / (h0 * rho * rho)
        pc = np.exp(np.minimum(expo, 0.0))
        bridged = (rho_new > eps_r) & (u < pc)
        rho = rho_new
    return hit, status_out


def compile_all() -> None:
    """No-op; exists for API parity with the numba backend."""
    return None
