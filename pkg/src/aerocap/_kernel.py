"""Compiled propagation core.

One RK4 integrator serves the truth simulation, the onboard predictor, and
the open-loop studies, so numerical behavior is identical everywhere. Bank
angle enters as a piecewise-quadratic schedule: contiguous segments, each
sigma(t) = a + b*tau + c*tau^2 with tau measured from the segment start.
That covers constants, constant-rate ramps, and the accel/cruise/decel arcs
of trapezoidal rotations exactly. Integration steps never straddle segment
boundaries, so discontinuities live at step edges.

State layout: (V, gamma, chi, r, theta, delta). Environment and vehicle data
travel in an EnvPack namedtuple of plain floats, ints, and arrays.
"""
from __future__ import annotations

import math
from collections import namedtuple

import numpy as np
from numba import njit

EnvPack = namedtuple(
    "EnvPack",
    [
        "mu", "radius", "j2", "omega",
        "simplified", "include_j2", "rotating",
        "atm_kind", "rho0", "hscale", "tab_h", "tab_logrho",
        "pert_on", "pert_bias", "pert_amp", "pert_wl", "pert_ph",
        "mass", "s_ref", "cl", "cd",
        "rho_l", "rho_d",
    ],
)

# Termination status codes shared with the python layer.
STATUS_TIME = 0
STATUS_ALT_UP = 1
STATUS_ALT_DOWN = 2
STATUS_GAMMA_SIGN = 3

_EVENT_TOL = 1e-3  # s, event-time bisection window


def make_envpack(planet, atm, vehicle, *, simplified=False, include_j2=True,
                 rotating=True, rho_l=1.0, rho_d=1.0) -> EnvPack:
    """Pack model objects into the flat structure the kernels consume."""
    if atm.kind == "exponential":
        atm_kind = 0
        rho0, hscale = atm.rho0, atm.scale_height
        tab_h = np.zeros(0)
        tab_logrho = np.zeros(0)
    else:
        atm_kind = 1
        rho0, hscale = 1.0, 1.0
        tab_h = np.array([row[0] for row in atm.table])
        tab_logrho = np.log(np.array([row[1] for row in atm.table]))
    pert = atm.perturbation
    if pert is None:
        pert_on, bias = False, 1.0
        amp = np.zeros(0)
        wl = np.ones(0)
        ph = np.zeros(0)
    else:
        pert_on, bias = True, pert.bias
        amp = np.array([w[0] for w in pert.waves], dtype=float)
        wl = np.array([w[1] for w in pert.waves], dtype=float)
        ph = np.array([w[2] for w in pert.waves], dtype=float)
    return EnvPack(
        mu=planet.mu, radius=planet.radius, j2=planet.j2, omega=planet.omega,
        simplified=bool(simplified), include_j2=bool(include_j2), rotating=bool(rotating),
        atm_kind=atm_kind, rho0=rho0, hscale=hscale, tab_h=tab_h, tab_logrho=tab_logrho,
        pert_on=pert_on, pert_bias=bias, pert_amp=amp, pert_wl=wl, pert_ph=ph,
        mass=vehicle.mass, s_ref=vehicle.s_ref, cl=vehicle.cl, cd=vehicle.cd,
        rho_l=rho_l, rho_d=rho_d,
    )


@njit(cache=True, fastmath=True)
def density_at(h, env):
    """Density at altitude h, perturbation multiplier applied. h < 0 clamps."""
    if h < 0.0:
        h = 0.0
    if env.atm_kind == 0:
        rho = env.rho0 * math.exp(-h / env.hscale)
    else:
        n = env.tab_h.shape[0]
        if h <= env.tab_h[0]:
            rho = math.exp(env.tab_logrho[0])
        elif h >= env.tab_h[n - 1]:
            slope = (env.tab_logrho[n - 1] - env.tab_logrho[n - 2]) / (
                env.tab_h[n - 1] - env.tab_h[n - 2])
            rho = math.exp(env.tab_logrho[n - 1] + slope * (h - env.tab_h[n - 1]))
        else:
            lo, hi = 0, n - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if env.tab_h[mid] <= h:
                    lo = mid
                else:
                    hi = mid
            w = (h - env.tab_h[lo]) / (env.tab_h[hi] - env.tab_h[lo])
            rho = math.exp(env.tab_logrho[lo] * (1.0 - w) + env.tab_logrho[hi] * w)
    if env.pert_on:
        s = 0.0
        for i in range(env.pert_amp.shape[0]):
            s += env.pert_amp[i] * math.sin(2.0 * math.pi * h / env.pert_wl[i] + env.pert_ph[i])
        mult = env.pert_bias * (1.0 + s)
        if mult < 0.2:
            mult = 0.2
        elif mult > 3.0:
            mult = 3.0
        rho *= mult
    return rho


@njit(cache=True, fastmath=True)
def rhs(y, sigma, env):
    """Time derivative of (V, gamma, chi, r, theta, delta)."""
    V, gamma, chi, r, theta, delta = y
    h = r - env.radius
    rho = density_at(h, env)
    q_s = 0.5 * rho * V * V * env.s_ref / env.mass
    d_acc = q_s * env.cd * env.rho_d
    l_acc = q_s * env.cl * env.rho_l
    sg = math.sin(gamma)
    cg = math.cos(gamma)
    inv_r = 1.0 / r

    if env.simplified:
        g = env.mu * inv_r * inv_r
        v_dot = -d_acc - g * sg
        gamma_dot = (l_acc * math.cos(sigma) + (V * V * inv_r - g) * cg) / V
        return (v_dot, gamma_dot, 0.0, V * sg, 0.0, 0.0)

    sd = math.sin(delta)
    cd_ = math.cos(delta)
    sx = math.sin(chi)
    cx = math.cos(chi)
    if env.include_j2:
        inv_r2 = inv_r * inv_r
        z = 1.5 * env.mu * env.j2 * env.radius * env.radius * inv_r2 * inv_r2
        g_r = -env.mu * inv_r2 + z * (3.0 * sd * sd - 1.0)
        g_d = -z * 2.0 * sd * cd_
    else:
        g_r = -env.mu * inv_r * inv_r
        g_d = 0.0
    if env.rotating:
        w = env.omega
        w2rc = w * w * r * cd_
        two_wv = 2.0 * w * V
    else:
        w2rc = 0.0
        two_wv = 0.0

    cs = math.cos(sigma)
    ss = math.sin(sigma)
    v2_r = V * V * inv_r
    v_dot = -d_acc + g_r * sg + g_d * cg * cx + w2rc * (sg * cd_ - cg * sd * cx)
    gamma_dot = (l_acc * cs + g_r * cg - g_d * sg * cx + v2_r * cg
                 + two_wv * cd_ * sx + w2rc * (cg * cd_ + sg * sd * cx)) / V
    chi_dot = (l_acc * ss - g_d * sx + v2_r * cg * cg * (sd / cd_) * sx
               + two_wv * (cg * sd - sg * cd_ * cx) + w2rc * sd * sx) / (V * cg)
    r_dot = V * sg
    theta_dot = V * cg * sx * inv_r / cd_
    delta_dot = V * cg * cx * inv_r
    return (v_dot, gamma_dot, chi_dot, r_dot, theta_dot, delta_dot)


@njit(cache=True)
def _seg_index(t, seg_t0, idx):
    """Segment owning time t; segments advance only forward."""
    n = seg_t0.shape[0]
    while idx + 1 < n and t >= seg_t0[idx + 1] - 1e-9:
        idx += 1
    return idx


@njit(cache=True)
def _sigma_in_seg(t, segs, idx):
    tau = t - segs[idx, 0]
    return segs[idx, 1] + segs[idx, 2] * tau + segs[idx, 3] * tau * tau


@njit(cache=True, fastmath=True)
def rk4_step_sched(y, t, dt, segs, idx, env):
    """One RK4 step with sigma drawn from the locked segment idx."""
    s1 = _sigma_in_seg(t, segs, idx)
    s2 = _sigma_in_seg(t + 0.5 * dt, segs, idx)
    s4 = _sigma_in_seg(t + dt, segs, idx)
    k1 = rhs(y, s1, env)
    y2 = (y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1], y[2] + 0.5 * dt * k1[2],
          y[3] + 0.5 * dt * k1[3], y[4] + 0.5 * dt * k1[4], y[5] + 0.5 * dt * k1[5])
    k2 = rhs(y2, s2, env)
    y3 = (y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1], y[2] + 0.5 * dt * k2[2],
          y[3] + 0.5 * dt * k2[3], y[4] + 0.5 * dt * k2[4], y[5] + 0.5 * dt * k2[5])
    k3 = rhs(y3, s2, env)
    y4 = (y[0] + dt * k3[0], y[1] + dt * k3[1], y[2] + dt * k3[2],
          y[3] + dt * k3[3], y[4] + dt * k3[4], y[5] + dt * k3[5])
    k4 = rhs(y4, s4, env)
    c = dt / 6.0
    return (y[0] + c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            y[2] + c * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            y[3] + c * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
            y[4] + c * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4]),
            y[5] + c * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5]))


@njit(cache=True, fastmath=True)
def rk4_step_const(y, dt, sigma, env):
    """One RK4 step at fixed bank angle (closed-loop truth stepping)."""
    k1 = rhs(y, sigma, env)
    y2 = (y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1], y[2] + 0.5 * dt * k1[2],
          y[3] + 0.5 * dt * k1[3], y[4] + 0.5 * dt * k1[4], y[5] + 0.5 * dt * k1[5])
    k2 = rhs(y2, sigma, env)
    y3 = (y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1], y[2] + 0.5 * dt * k2[2],
          y[3] + 0.5 * dt * k2[3], y[4] + 0.5 * dt * k2[4], y[5] + 0.5 * dt * k2[5])
    k3 = rhs(y3, sigma, env)
    y4 = (y[0] + dt * k3[0], y[1] + dt * k3[1], y[2] + dt * k3[2],
          y[3] + dt * k3[3], y[4] + dt * k3[4], y[5] + dt * k3[5])
    k4 = rhs(y4, sigma, env)
    c = dt / 6.0
    return (y[0] + c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            y[2] + c * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            y[3] + c * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
            y[4] + c * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4]),
            y[5] + c * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5]))


@njit(cache=True)
def _event_between(y0, y1, radius, h_up, h_dn, gamma_sign):
    """Which terminal event occurs moving from y0 to y1 (0 = none)."""
    h0 = y0[3] - radius
    h1 = y1[3] - radius
    if h_dn > -1e29 and h0 > h_dn >= h1:
        return STATUS_ALT_DOWN
    if h_up > -1e29 and h0 < h_up <= h1:
        return STATUS_ALT_UP
    if gamma_sign and (y0[1] > 0.0) != (y1[1] > 0.0):
        return STATUS_GAMMA_SIGN
    return 0


@njit(cache=True)
def propagate_core(y0, t0, dt, t_max, segs, env,
                   h_up, h_dn, gamma_sign, t_probe,
                   record, out, probe_out):
    """Integrate until an enabled event or t_max.

    segs: (n, 4) array of [t_start, a, b, c] rows, contiguous in time.
    h_up / h_dn: altitude crossings (disable with -1e30). gamma_sign: stop on
    flight-path-angle sign change. t_probe >= 0 snapshots the state nearest
    that time into probe_out without stopping.

    out rows are [t, V, gamma, chi, r, theta, delta, sigma]; the terminal row
    is always written (also with record == 0). Returns (rows_written, status,
    t_end). Event times are located by bisection to 1e-3 s.
    """
    y = y0
    t = t0
    idx = _seg_index(t, segs[:, 0], 0)
    nrec = 0
    if record != 0:
        out[nrec, 0] = t
        out[nrec, 1] = y[0]
        out[nrec, 2] = y[1]
        out[nrec, 3] = y[2]
        out[nrec, 4] = y[3]
        out[nrec, 5] = y[4]
        out[nrec, 6] = y[5]
        out[nrec, 7] = _sigma_in_seg(t, segs, idx)
        nrec += 1
    nseg = segs.shape[0]
    probe_pending = t_probe >= t0
    status = STATUS_TIME

    while t < t_max - 1e-9:
        idx = _seg_index(t, segs[:, 0], idx)
        step = dt
        if idx + 1 < nseg and t + step > segs[idx + 1, 0] - 1e-9:
            step = segs[idx + 1, 0] - t
        if probe_pending and t + step > t_probe - 1e-9 and t_probe > t:
            step = t_probe - t
        if t + step > t_max:
            step = t_max - t
        if step <= 1e-12:
            t += 1e-12
            continue

        y_new = rk4_step_sched(y, t, step, segs, idx, env)
        ev = _event_between(y, y_new, env.radius, h_up, h_dn, gamma_sign)
        if ev != 0:
            lo = 0.0
            hi = step
            while hi - lo > _EVENT_TOL:
                mid = 0.5 * (lo + hi)
                y_mid = rk4_step_sched(y, t, mid, segs, idx, env)
                if _event_between(y, y_mid, env.radius, h_up, h_dn, gamma_sign) != 0:
                    hi = mid
                else:
                    lo = mid
            y_new = rk4_step_sched(y, t, hi, segs, idx, env)
            ev = _event_between(y, y_new, env.radius, h_up, h_dn, gamma_sign)
            t = t + hi
            y = y_new
            status = ev
            break

        t = t + step
        y = y_new
        if probe_pending and t >= t_probe - 1e-9:
            probe_out[0] = t
            probe_out[1] = y[0]
            probe_out[2] = y[1]
            probe_out[3] = y[2]
            probe_out[4] = y[3]
            probe_out[5] = y[4]
            probe_out[6] = y[5]
            probe_pending = False
        if record != 0:
            out[nrec, 0] = t
            out[nrec, 1] = y[0]
            out[nrec, 2] = y[1]
            out[nrec, 3] = y[2]
            out[nrec, 4] = y[3]
            out[nrec, 5] = y[4]
            out[nrec, 6] = y[5]
            out[nrec, 7] = _sigma_in_seg(t, segs, _seg_index(t, segs[:, 0], idx))
            nrec += 1

    # terminal row (event break lands here too; time-out exits the loop)
    if nrec == 0 or out[nrec - 1, 0] < t - 1e-12:
        idx = _seg_index(t, segs[:, 0], idx)
        out[nrec, 0] = t
        out[nrec, 1] = y[0]
        out[nrec, 2] = y[1]
        out[nrec, 3] = y[2]
        out[nrec, 4] = y[3]
        out[nrec, 5] = y[4]
        out[nrec, 6] = y[5]
        out[nrec, 7] = _sigma_in_seg(t, segs, idx)
        nrec += 1
    if probe_pending:
        probe_out[0] = t
        probe_out[1] = y[0]
        probe_out[2] = y[1]
        probe_out[3] = y[2]
        probe_out[4] = y[3]
        probe_out[5] = y[4]
        probe_out[6] = y[5]
    return nrec, status, t


@njit(cache=True)
def actuator_step(sigma, rate, cmd, rate_max, accel_max, deadband, dt):
    """Advance the bank servo one step toward cmd along the shorter arc.

    Trapezoidal tracking: rate slews at accel_max toward the braking-limited
    target rate, position integrates the rate. Inside the deadband with the
    wheel essentially stopped, the servo parks. Angles wrap to (-pi, pi].
    """
    err = cmd - sigma
    while err > math.pi:
        err -= 2.0 * math.pi
    while err <= -math.pi:
        err += 2.0 * math.pi
    if abs(err) <= deadband and abs(rate) <= accel_max * dt:
        return sigma, 0.0
    # rate that can still brake to zero at the target
    brake = math.sqrt(2.0 * accel_max * abs(err))
    target_rate = brake if err > 0.0 else -brake
    if target_rate > rate_max:
        target_rate = rate_max
    elif target_rate < -rate_max:
        target_rate = -rate_max
    drate = target_rate - rate
    max_d = accel_max * dt
    if drate > max_d:
        drate = max_d
    elif drate < -max_d:
        drate = -max_d
    rate = rate + drate
    sigma = sigma + rate * dt
    while sigma > math.pi:
        sigma -= 2.0 * math.pi
    while sigma <= -math.pi:
        sigma += 2.0 * math.pi
    return sigma, rate
