"""Osculating orbital elements and post-exit maneuver budgets.

Relative flight states convert to inertial by adding the planet-rotation
velocity omega x r. Budgets assume impulsive burns: one at apoapsis raising
periapsis onto a transfer ellipse (combined with any plane change), one at
the target radius circularizing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import SimState
from .env_models import PlanetModel

__all__ = [
    "CaptureFailureError",
    "KeplerSet",
    "DeltaVBudget",
    "state_to_inertial",
    "kepler_elements",
    "exit_summary",
    "apoapsis_radius",
    "inclination",
    "kepler_to_state",
    "delta_v_planar",
    "delta_v_inclination",
    "total_budget",
]


class CaptureFailureError(ValueError):
    """Exit orbit is not a bound ellipse; no finite apoapsis exists."""


@dataclass(frozen=True)
class KeplerSet:
    a: float
    e: float
    i: float
    r_a: float
    r_p: float
    energy: float
    h_mag: float


def state_to_inertial(state: SimState, planet: PlanetModel, rotating: bool = True):
    """Inertial position and velocity vectors (planet-equator frame)."""
    sd, cd = math.sin(state.delta), math.cos(state.delta)
    st, ct = math.sin(state.theta), math.cos(state.theta)
    # local unit vectors in the inertial frame
    u = (cd * ct, cd * st, sd)              # up
    e = (-st, ct, 0.0)                       # east
    n = (-sd * ct, -sd * st, cd)             # north
    r_vec = tuple(state.r * ui for ui in u)
    sg, cg = math.sin(state.gamma), math.cos(state.gamma)
    sx, cx = math.sin(state.chi), math.cos(state.chi)
    v = state.v
    vu, ve, vn = v * sg, v * cg * sx, v * cg * cx
    if rotating:
        ve += planet.omega * state.r * cd
    v_vec = (vu * u[0] + ve * e[0] + vn * n[0],
             vu * u[1] + ve * e[1] + vn * n[1],
             vu * u[2] + ve * e[2] + vn * n[2])
    return r_vec, v_vec


def kepler_elements(state: SimState, planet: PlanetModel, rotating: bool = True) -> KeplerSet:
    """Osculating elements of the inertial orbit through a state.

    Hyperbolic and parabolic orbits return r_a = inf; rectilinear states
    (vanishing angular momentum) are rejected.
    """
    r_vec, v_vec = state_to_inertial(state, planet, rotating)
    rx, ry, rz = r_vec
    vx, vy, vz = v_vec
    r = math.sqrt(rx * rx + ry * ry + rz * rz)
    v2 = vx * vx + vy * vy + vz * vz
    hx = ry * vz - rz * vy
    hy = rz * vx - rx * vz
    hz = rx * vy - ry * vx
    h2 = hx * hx + hy * hy + hz * hz
    h = math.sqrt(h2)
    if h < 1e-6 * r * math.sqrt(v2):
        raise CaptureFailureError("rectilinear orbit: angular momentum ~ 0")
    mu = planet.mu
    energy = 0.5 * v2 - mu / r
    i = math.acos(max(-1.0, min(1.0, hz / h)))
    # eccentricity from e^2 = 1 + 2 E h^2 / mu^2
    e2 = 1.0 + 2.0 * energy * h2 / (mu * mu)
    e = math.sqrt(max(e2, 0.0))
    if energy >= 0.0:
        a = math.inf if energy == 0.0 else -mu / (2.0 * energy)
        r_a = math.inf
        r_p = h2 / mu / (1.0 + e)
    else:
        a = -mu / (2.0 * energy)
        r_a = a * (1.0 + e)
        r_p = a * (1.0 - e)
    return KeplerSet(a=a, e=e, i=i, r_a=r_a, r_p=r_p, energy=energy, h_mag=h)


def exit_summary(state: SimState, planet: PlanetModel, rotating: bool = True) -> tuple[float, float]:
    """(apoapsis radius, inclination); r_a = inf for unbound orbits."""
    k = kepler_elements(state, planet, rotating)
    return k.r_a, k.i


def apoapsis_radius(state: SimState, planet: PlanetModel, rotating: bool = True) -> float:
    return kepler_elements(state, planet, rotating).r_a


def inclination(state: SimState, planet: PlanetModel, rotating: bool = True) -> float:
    return kepler_elements(state, planet, rotating).i


def kepler_to_state(planet: PlanetModel, a: float, e: float, i: float,
                    raan: float = 0.0, argp: float = 0.0, nu: float = 0.0,
                    rotating: bool = True, t: float = 0.0) -> SimState:
    """Flight state on an orbit at true anomaly nu (inverse of kepler_elements)."""
    if e < 0.0 or (e < 1.0 and a <= 0.0) or (e > 1.0 and a >= 0.0):
        raise ValueError("inconsistent a, e")
    p = a * (1.0 - e * e) if e != 1.0 else a
    r = p / (1.0 + e * math.cos(nu))
    if r <= 0.0:
        raise ValueError("true anomaly outside the orbit")
    mu = planet.mu
    # perifocal position and velocity
    cn, sn = math.cos(nu), math.sin(nu)
    rp = (r * cn, r * sn, 0.0)
    f = math.sqrt(mu / p)
    vp = (-f * sn, f * (e + cn), 0.0)

    cr, sr = math.cos(raan), math.sin(raan)
    cw, sw = math.cos(argp), math.sin(argp)
    ci, si = math.cos(i), math.sin(i)
    # rotation PQW -> inertial, rows of Rz(raan) Rx(i) Rz(argp)
    m = (
        (cr * cw - sr * sw * ci, -cr * sw - sr * cw * ci, sr * si),
        (sr * cw + cr * sw * ci, -sr * sw + cr * cw * ci, -cr * si),
        (sw * si, cw * si, ci),
    )
    r_vec = tuple(m[k][0] * rp[0] + m[k][1] * rp[1] + m[k][2] * rp[2] for k in range(3))
    v_vec = tuple(m[k][0] * vp[0] + m[k][1] * vp[1] + m[k][2] * vp[2] for k in range(3))

    rx, ry, rz = r_vec
    rmag = math.sqrt(rx * rx + ry * ry + rz * rz)
    delta = math.asin(max(-1.0, min(1.0, rz / rmag)))
    theta = math.atan2(ry, rx)
    if rotating:
        v_vec = (v_vec[0] + planet.omega * ry, v_vec[1] - planet.omega * rx, v_vec[2])
    vx, vy, vz = v_vec
    u = (rx / rmag, ry / rmag, rz / rmag)
    east = (-math.sin(theta), math.cos(theta), 0.0)
    north = (u[1] * east[2] - u[2] * east[1],
             u[2] * east[0] - u[0] * east[2],
             u[0] * east[1] - u[1] * east[0])
    vmag = math.sqrt(vx * vx + vy * vy + vz * vz)
    vu = vx * u[0] + vy * u[1] + vz * u[2]
    ve = vx * east[0] + vy * east[1] + vz * east[2]
    vn = vx * north[0] + vy * north[1] + vz * north[2]
    gamma = math.asin(max(-1.0, min(1.0, vu / vmag)))
    chi = math.atan2(ve, vn)
    return SimState(t=t, v=vmag, gamma=gamma, chi=chi, r=rmag, theta=theta, delta=delta)


def delta_v_planar(r_a: float, a_exit: float, a_target: float, mu: float,
                   printed_form: bool = False) -> tuple[float, float]:
    """In-plane impulses from an exit ellipse to a circular target orbit.

    Burn 1 at the exit apoapsis r_a moves the vehicle onto a transfer ellipse
    whose other apsis is the target radius a_target; burn 2 circularizes
    there. Both are speed differences from the vis-viva law, so the pair
    vanishes when the exit orbit already touches the target circle with the
    right speed.

    printed_form=True evaluates a legacy variant kept for auditing that uses
    the target orbit inside burn 1 and an apsis difference in the transfer
    term of burn 2; it does not vanish at the matched case and raises a
    domain error where its radicands go negative.
    """
    if min(r_a, a_target, mu) <= 0.0 or a_exit <= 0.0:
        raise CaptureFailureError("planar budget needs a bound exit orbit and positive radii")
    if printed_form:
        t1 = 1.0 / r_a - 1.0 / (r_a + a_target)
        t2 = 1.0 / r_a - 1.0 / (2.0 * a_target)
        t3 = 1.0 / a_target - 1.0 / (r_a - a_target)
        if min(t1, t2, t3) < 0.0:
            raise ValueError("printed-form radicand negative; outside its domain")
        dv1 = math.sqrt(2.0 * mu) * abs(math.sqrt(t1) - math.sqrt(t2))
        dv2 = math.sqrt(2.0 * mu) * abs(math.sqrt(1.0 / (2.0 * a_target)) - math.sqrt(t3))
        return dv1, dv2
    a_transfer = 0.5 * (r_a + a_target)
    v_exit_apo = math.sqrt(max(mu * (2.0 / r_a - 1.0 / a_exit), 0.0))
    v_transfer_apo = math.sqrt(mu * (2.0 / r_a - 1.0 / a_transfer))
    v_transfer_tgt = math.sqrt(mu * (2.0 / a_target - 1.0 / a_transfer))
    v_circ = math.sqrt(mu / a_target)
    return abs(v_transfer_apo - v_exit_apo), abs(v_circ - v_transfer_tgt)


def delta_v_inclination(v: float, di: float) -> float:
    """Impulse rotating a velocity of magnitude v by the plane change di."""
    if v < 0.0:
        raise ValueError("speed must be non-negative")
    return 2.0 * v * math.sin(0.5 * abs(di))


@dataclass(frozen=True)
class DeltaVBudget:
    """Post-exit cleanup cost to a circular orbit at the target radius."""

    dv1: float
    dv2: float
    dv_plane: float
    dv_planar: float
    dv_total: float
    r_a: float
    incl: float


def total_budget(exit_state: SimState, a_target: float, i_target: float,
                 planet: PlanetModel, rotating: bool = True) -> DeltaVBudget:
    """Budget from an atmospheric-exit state to the target circular orbit.

    The plane change shares the apoapsis burn (root-sum-square combination
    with the post-burn transfer speed); the circularization burn is planar.
    Unbound exit orbits raise CaptureFailureError.
    """
    k = kepler_elements(exit_state, planet, rotating)
    if k.energy >= 0.0 or not math.isfinite(k.r_a):
        raise CaptureFailureError("exit orbit unbound; no capture achieved")
    dv1, dv2 = delta_v_planar(k.r_a, k.a, a_target, planet.mu)
    v_post = math.sqrt(planet.mu * (2.0 / k.r_a - 2.0 / (k.r_a + a_target)))
    di = k.i - i_target
    dv_i = delta_v_inclination(v_post, di)
    return DeltaVBudget(
        dv1=dv1, dv2=dv2, dv_plane=dv_i,
        dv_planar=dv1 + dv2,
        dv_total=math.sqrt(dv1 * dv1 + dv_i * dv_i) + dv2,
        r_a=k.r_a, incl=k.i,
    )
