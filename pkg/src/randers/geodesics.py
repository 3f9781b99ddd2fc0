"""Geodesic spray, initial-value shooting, and boundary-to-boundary solving.

Geodesics are integrated in F-unit-speed parametrization with an extra
quadrature state accumulating the F-length, so the exit parameter and the
length agree to solver precision.  Two-point problems are solved by sweeping
the inward shooting angle, bracketing sign changes of the angular endpoint
miss, and driving each bracket to convergence with a guarded false-position
iteration; whole fans and whole bracket batches integrate simultaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import integrators as ivp
from .errors import (ConnectivityError, ConvexityError, DegenerateInputError,
                     DomainError, NonAdmissibleError, RandersError,
                     TrappedGeodesicError)
from .fields import ConformalMetric, _pts, _unbatch, circle_directions, disk_grid
from .norms import _analytic_fundamental

__all__ = ["SolverOptions", "GeodesicPath", "ShootingResult", "PairShot",
           "spray", "integrate_geodesic", "solve_bvp", "shoot_pairs",
           "conjugate_point_scan", "reversed_geodesic_check",
           "polyline_hausdorff", "ConjugateScanReport", "ReversalReport"]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and resolutions for geodesic integration and shooting."""

    rtol: float = 1e-9
    atol: float = 1e-12
    max_steps: int = 100_000
    trap_time_factor: float = 50.0
    angle_samples: int = 720
    miss_rtol: float = 1e-8          # target |angular miss| (arc length / R)
    refine_max_iter: int = 80
    exclude_separation: float = 1e-3  # radians; nearly-adjacent pair cutoff

    def controls(self, t_max, record=False):
        # recorded paths cap the step so stored samples resolve the curve
        # (pointwise invariants and Hermite resampling both rely on this)
        h_max = t_max / (self.trap_time_factor * 256.0) if record else np.inf
        return ivp.Controls(rtol=self.rtol, atol=self.atol,
                            max_steps=self.max_steps, t_max=t_max, h_max=h_max)


def _wrap(angle):
    """Wrap to [-pi, pi)."""
    return (angle + math.pi) % _TWO_PI - math.pi


def _time_scale(spec):
    """Upper bound for the time an F-unit-speed curve needs to cross the ball."""
    cached = getattr(spec, "_time_scale_cache", None)
    if cached is not None:
        return cached
    pts = disk_grid(spec.domain, 64)
    dirs = circle_directions(8)
    X = np.repeat(pts, len(dirs), axis=0)
    Y = np.tile(dirs, (len(pts), 1))
    fmax = float(spec._raw_norm(X, Y).max())
    scale = 2.0 * spec.domain.radius * fmax
    spec._time_scale_cache = scale
    return scale


# ---------------------------------------------------------------------------
# spray


def _spray_and_norm(spec, X, Y, check=False):
    """Batched spray G^i(x, y) and norm F(x, y); no domain checks (hot path).

    Planar batches use explicit component arithmetic (einsum dispatch
    overhead dominates at these sizes); other dimensions fall back to the
    generic contraction path.
    """
    if X.shape[1] != 2:
        return _spray_and_norm_nd(spec, X, Y, check)
    a = spec.alpha.value(X)
    P = spec.alpha.partials(X)
    y0, y1 = Y[:, 0], Y[:, 1]
    a00, a01, a11 = a[:, 0, 0], a[:, 0, 1], a[:, 1, 1]
    ay0 = a00 * y0 + a01 * y1
    ay1 = a01 * y0 + a11 * y1
    A = ay0 * y0 + ay1 * y1
    al = np.sqrt(A)

    P000, P001, P011 = P[:, 0, 0, 0], P[:, 0, 0, 1], P[:, 0, 1, 1]
    P100, P101, P111 = P[:, 1, 0, 0], P[:, 1, 0, 1], P[:, 1, 1, 1]
    # A_k = dA/dx^k; Qkl = (dA/dx^k . y)_l used for y^k d^2A/dx^k dy^l
    A_0 = P000 * y0 * y0 + 2.0 * P001 * y0 * y1 + P011 * y1 * y1
    A_1 = P100 * y0 * y0 + 2.0 * P101 * y0 * y1 + P111 * y1 * y1
    Q00 = P000 * y0 + P001 * y1
    Q01 = P001 * y0 + P011 * y1
    Q10 = P100 * y0 + P101 * y1
    Q11 = P101 * y0 + P111 * y1
    yA_kl0 = 2.0 * (y0 * Q00 + y1 * Q10)
    yA_kl1 = 2.0 * (y0 * Q01 + y1 * Q11)

    if spec.beta.is_zero:
        F = al
        g00, g01, g11 = a00, a01, a11
        rhs0 = yA_kl0 - A_0
        rhs1 = yA_kl1 - A_1
    else:
        b = spec.beta.value(X)
        Jb = spec.beta.jacobian(X)
        b0, b1 = b[:, 0], b[:, 1]
        B = b0 * y0 + b1 * y1
        F = al + B
        B_0 = Jb[:, 0, 0] * y0 + Jb[:, 1, 0] * y1
        B_1 = Jb[:, 0, 1] * y0 + Jb[:, 1, 1] * y1
        yB_k = y0 * B_0 + y1 * B_1
        yB_kl0 = y0 * Jb[:, 0, 0] + y1 * Jb[:, 0, 1]
        yB_kl1 = y0 * Jb[:, 1, 0] + y1 * Jb[:, 1, 1]
        yA_k = y0 * A_0 + y1 * A_1
        one_plus = 1.0 + B / al
        coef_ay = 2.0 * yB_k / al - B * yA_k / (al * A)
        coef_b = yA_k / al + 2.0 * yB_k
        rhs0 = one_plus * (yA_kl0 - A_0) + 2.0 * F * (yB_kl0 - B_0) + ay0 * coef_ay + b0 * coef_b
        rhs1 = one_plus * (yA_kl1 - A_1) + 2.0 * F * (yB_kl1 - B_1) + ay1 * coef_ay + b1 * coef_b
        # closed-form Randers fundamental tensor
        ell0, ell1 = ay0 / al, ay1 / al
        lb0, lb1 = ell0 + b0, ell1 + b1
        fa = F / al
        g00 = fa * (a00 - ell0 * ell0) + lb0 * lb0
        g01 = fa * (a01 - ell0 * ell1) + lb0 * lb1
        g11 = fa * (a11 - ell1 * ell1) + lb1 * lb1

    det = g00 * g11 - g01 * g01
    if check and (not np.all(np.isfinite(det)) or np.any(det <= 0.0)):
        raise ConvexityError("fundamental tensor is singular or indefinite; "
                             "the spec should have been rejected by validate_norm")
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 0.25 / det
        G0 = (g11 * rhs0 - g01 * rhs1) * inv_det
        G1 = (g00 * rhs1 - g01 * rhs0) * inv_det
    out = np.empty_like(Y)
    out[:, 0] = G0
    out[:, 1] = G1
    return out, F


def _spray_and_norm_nd(spec, X, Y, check=False):
    """Generic-dimension contraction path (same formulas as the 2D path)."""
    a = spec.alpha.value(X)
    P = spec.alpha.partials(X)
    ay = np.einsum("mij,mj->mi", a, Y)
    A = np.einsum("mi,mi->m", ay, Y)
    al = np.sqrt(A)
    A_k = np.einsum("mkij,mi,mj->mk", P, Y, Y)
    yA_kl = 2.0 * np.einsum("mk,mklj,mj->ml", Y, P, Y)
    yA_k = np.einsum("mk,mk->m", Y, A_k)

    if spec.beta.is_zero:
        F = al
        rhs = yA_kl - A_k
        g = a
    else:
        b = spec.beta.value(X)
        Jb = spec.beta.jacobian(X)
        B = np.einsum("mi,mi->m", b, Y)
        F = al + B
        B_k = np.einsum("mik,mi->mk", Jb, Y)
        yB_k = np.einsum("mk,mk->m", Y, B_k)
        yB_kl = np.einsum("mk,mlk->ml", Y, Jb)
        one_plus = 1.0 + B / al
        dF2_dx = A_k * one_plus[:, None] + 2.0 * F[:, None] * B_k
        M = (one_plus[:, None] * yA_kl
             + 2.0 * F[:, None] * yB_kl
             + ay * (2.0 * yB_k / al - B * yA_k / al ** 3)[:, None]
             + b * (yA_k / al + 2.0 * yB_k)[:, None])
        rhs = M - dF2_dx
        g = _analytic_fundamental(a, b, Y)

    if check:
        det = np.linalg.det(g)
        if not np.all(np.isfinite(det)) or np.any(det <= 0.0):
            raise ConvexityError("fundamental tensor is singular or indefinite; "
                                 "the spec should have been rejected by validate_norm")
    with np.errstate(divide="ignore", invalid="ignore"):
        G = 0.25 * np.linalg.solve(g, rhs[:, :, None])[:, :, 0]
    return G, F


def spray(spec, x, y):
    """Spray coefficients G^i(x, y) of the geodesic equation x'' + 2G = 0.

    Degree-2 positively homogeneous in y; requires y != 0.
    """
    spec.require_valid()
    X, single = _pts(x)
    Y, _ = _pts(y)
    Y = np.broadcast_to(Y, X.shape).copy() if Y.shape[0] == 1 and X.shape[0] > 1 else Y
    if np.any(np.linalg.norm(Y, axis=1) == 0.0):
        raise DegenerateInputError("spray is undefined at y = 0")
    spec.domain.require_inside(X)
    G, _ = _spray_and_norm(spec, X, Y, check=True)
    return _unbatch(G, single)


def _geodesic_rhs(spec):
    def rhs(u):
        G, F = _spray_and_norm(spec, np.ascontiguousarray(u[:, 0:2]), u[:, 2:4])
        out = np.empty(u.shape)
        out[:, 0:2] = u[:, 2:4]
        out[:, 2:4] = -2.0 * G
        out[:, 4] = F
        return out
    return rhs


def _boundary_stop(spec):
    r2 = spec.domain.radius ** 2

    def stop(u):
        return u[:, 0] ** 2 + u[:, 1] ** 2 - r2
    return stop


# ---------------------------------------------------------------------------
# initial value problem


@dataclass
class GeodesicPath:
    """Discretized unit-speed geodesic with its exit record."""

    t: np.ndarray          # (k,) parameter samples
    x: np.ndarray          # (k, 2) positions
    y: np.ndarray          # (k, 2) velocities
    f_length: float        # accumulated F-length
    exit_time: float       # exit parameter T
    exit_point: np.ndarray
    spec_hash: str

    def unit_speed_residual(self, spec):
        f = spec._raw_norm(self.x, self.y)
        return float(np.abs(f - 1.0).max())

    def resample(self, step=5e-4):
        """Densified positions via cubic Hermite interpolation of the samples.

        The stored velocities make each interval a cubic with O(h^4) error,
        so point-set comparisons at 1e-6 R scales are meaningful even though
        the solver's accepted steps are much coarser.
        """
        T = self.t[-1]
        npts = max(int(math.ceil(T / step)), 2)
        tq = np.linspace(0.0, T, npts)
        k = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[k + 1] - self.t[k]
        h = np.where(h > 0.0, h, 1.0)
        s = np.clip((tq - self.t[k]) / h, 0.0, 1.0)[:, None]
        x0, x1 = self.x[k], self.x[k + 1]
        v0, v1 = self.y[k] * h[:, None], self.y[k + 1] * h[:, None]
        h00 = (1.0 + 2.0 * s) * (1.0 - s) ** 2
        h10 = s * (1.0 - s) ** 2
        h01 = s ** 2 * (3.0 - 2.0 * s)
        h11 = s ** 2 * (s - 1.0)
        return h00 * x0 + h10 * v0 + h01 * x1 + h11 * v1

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# geodesic samples units=time,length\n")
            fh.write("t,x1,x2,y1,y2\n")
            for k in range(len(self.t)):
                fh.write(f"{float(self.t[k])!r},{float(self.x[k, 0])!r},{float(self.x[k, 1])!r},"
                         f"{float(self.y[k, 0])!r},{float(self.y[k, 1])!r}\n")


def _nudged_start(spec, x0):
    """Pull boundary starts inside by a relative 1e-13 so the stop function
    starts non-positive regardless of rounding."""
    R = spec.domain.radius
    r = float(np.linalg.norm(x0))
    if r > R * (1.0 + 1e-9):
        raise DomainError(f"start point {x0} lies outside the closed domain")
    if r >= R * (1.0 - 1e-12):
        return x0 * ((R * (1.0 - 1e-13)) / r), True
    return np.asarray(x0, dtype=float), False


def integrate_geodesic(spec, x0, y0, opts=None):
    """Trace the F-geodesic from (x0, y0) until it first exits the ball.

    y0 is rescaled to unit F-speed (under F, not the reversed norm); for
    boundary starts the direction must point into the domain.
    """
    spec.require_valid()
    opts = opts or SolverOptions()
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if np.linalg.norm(y0) == 0.0:
        raise DegenerateInputError("initial direction must be nonzero")
    x0n, on_boundary = _nudged_start(spec, x0)
    if on_boundary and x0 @ y0 >= 0.0:
        raise DomainError("initial direction at a boundary point must point inward")
    f0 = float(spec._raw_norm(x0n[None], y0[None])[0])
    if not f0 > 0.0:
        raise DegenerateInputError("initial direction has non-positive F")
    u0 = np.concatenate([x0n, y0 / f0, [0.0]])

    res = ivp.integrate_batch(_geodesic_rhs(spec), u0[None],
                              _boundary_stop(spec),
                              opts.controls(opts.trap_time_factor * _time_scale(spec), record=True),
                              record=True)
    return _path_from(res, 0, spec, opts)


def _path_from(res, i, spec, opts):
    st = res.status[i]
    if st == ivp.TRAPPED or st == ivp.MAXSTEPS:
        raise TrappedGeodesicError(
            f"geodesic did not reach the boundary within the budget "
            f"(t={res.t_end[i]:.4g}, steps={res.steps[i]}); the medium may be trapping")
    if st != ivp.EXITED:
        raise RandersError("geodesic integration failed (nonfinite state); check the spec fields")
    ts, us = res.history[i]
    return GeodesicPath(t=ts, x=us[:, 0:2], y=us[:, 2:4],
                        f_length=float(res.u_end[i, 4]),
                        exit_time=float(res.t_end[i]),
                        exit_point=res.u_end[i, 0:2].copy(),
                        spec_hash=spec.spec_hash)


# ---------------------------------------------------------------------------
# shooting fans


def _fan_states(spec, theta0, psi):
    """Initial states for rays leaving boundary angle theta0 at inward angle psi."""
    R = spec.domain.radius
    x0 = (R * (1.0 - 1e-13)) * np.column_stack([np.cos(theta0), np.sin(theta0)])
    d_ang = theta0 + math.pi + psi
    d = np.column_stack([np.cos(d_ang), np.sin(d_ang)])
    f = spec._raw_norm(x0, d)
    y0 = d / f[:, None]
    return np.concatenate([x0, y0, np.zeros((len(psi), 1))], axis=1)


def _exit_fan(spec, theta0, psi, opts, record=False):
    """Integrate a fan; returns (exit_theta, exit_time, ok, result)."""
    u0 = _fan_states(spec, np.asarray(theta0, dtype=float), np.asarray(psi, dtype=float))
    res = ivp.integrate_batch(_geodesic_rhs(spec), u0, _boundary_stop(spec),
                              opts.controls(opts.trap_time_factor * _time_scale(spec),
                                            record=record),
                              record=record)
    exit_theta = np.arctan2(res.u_end[:, 1], res.u_end[:, 0]) % _TWO_PI
    ok = res.status == ivp.EXITED
    return exit_theta, res.t_end.copy(), ok, res


def _sweep_angles(n):
    return -0.5 * math.pi + math.pi * (np.arange(n) + 0.5) / n


def _bracket_roots(psi, miss, ok, angle_tol):
    """Find root brackets of the angular miss along a sweep.

    Returns (brackets, node_roots): brackets are (lo, hi, m_lo, m_hi) rows,
    node roots are sweep indices whose miss is already below tolerance.
    Sign changes across a wrap jump (|dm| >= 0.9 pi) are discarded.
    """
    node_roots = [k for k in np.nonzero(ok & (np.abs(miss) <= angle_tol))[0]]
    val = ok[:-1] & ok[1:]
    s0, s1 = np.sign(miss[:-1]), np.sign(miss[1:])
    flip = val & (s0 * s1 < 0.0) & (np.abs(miss[1:] - miss[:-1]) < 0.9 * math.pi)
    ks = np.nonzero(flip)[0]
    brackets = [(psi[k], psi[k + 1], miss[k], miss[k + 1]) for k in ks
                if abs(miss[k]) > angle_tol and abs(miss[k + 1]) > angle_tol]
    return brackets, node_roots


def _false_position(spec, theta0, theta_tgt, lo, hi, m_lo, m_hi, opts):
    """Guarded Illinois iteration on batches of independent brackets.

    Returns (psi, time, miss, ok) arrays; each row is one bracket problem.
    """
    q = len(lo)
    lo, hi = lo.copy(), hi.copy()
    m_lo, m_hi = m_lo.copy(), m_hi.copy()
    side = np.zeros(q, dtype=np.int8)
    psi_out = np.full(q, np.nan)
    t_out = np.full(q, np.nan)
    miss_out = np.full(q, np.nan)
    done = np.zeros(q, dtype=bool)
    tol = opts.miss_rtol

    for it in range(opts.refine_max_iter):
        act = np.nonzero(~done)[0]
        if act.size == 0:
            break
        width = hi[act] - lo[act]
        denom = m_hi[act] - m_lo[act]
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = hi[act] - m_hi[act] * width / denom
        mid = 0.5 * (lo[act] + hi[act])
        cand = np.where(np.isfinite(cand), cand, mid)
        cand = np.clip(cand, lo[act] + 0.02 * width, hi[act] - 0.02 * width)
        if it % 6 == 5:
            cand = mid  # periodic bisection keeps the bracket shrinking

        th_exit, t_exit, ok, _ = _exit_fan(spec, theta0[act], cand, opts)
        m_new = _wrap(th_exit - theta_tgt[act])

        failed = ~ok
        conv = ok & (np.abs(m_new) <= tol)
        rows = act[conv]
        psi_out[rows], t_out[rows], miss_out[rows] = cand[conv], t_exit[conv], m_new[conv]
        done[rows] = True
        done[act[failed]] = True  # leaves nan: integration broke inside bracket

        upd = ~conv & ~failed
        u_rows = act[upd]
        cu, mu = cand[upd], m_new[upd]
        same_lo = np.sign(mu) == np.sign(m_lo[u_rows])
        # replace one endpoint; halve the other side when it stagnates
        rep_lo = u_rows[same_lo]
        lo[rep_lo], m_lo[rep_lo] = cu[same_lo], mu[same_lo]
        m_hi[rep_lo] = np.where(side[rep_lo] == -1, 0.5 * m_hi[rep_lo], m_hi[rep_lo])
        side[rep_lo] = -1
        rep_hi = u_rows[~same_lo]
        hi[rep_hi], m_hi[rep_hi] = cu[~same_lo], mu[~same_lo]
        m_lo[rep_hi] = np.where(side[rep_hi] == 1, 0.5 * m_lo[rep_hi], m_lo[rep_hi])
        side[rep_hi] = 1
    return psi_out, t_out, miss_out, done & np.isfinite(psi_out)


@dataclass
class ShootingResult:
    path: GeodesicPath
    initial_angle: float   # from the inward boundary normal
    miss: float            # signed boundary arc-length miss
    branch_count: int


def _on_boundary_angle(spec, x):
    x = np.asarray(x, dtype=float)
    R = spec.domain.radius
    if abs(np.linalg.norm(x) - R) > 1e-9 * R:
        raise DomainError(f"point {x} is not on the boundary circle of radius {R}")
    return float(np.arctan2(x[1], x[0]) % _TWO_PI)


def solve_bvp(spec, x_from, x_to, opts=None):
    """Unique boundary-to-boundary geodesic by angle-sweep shooting.

    Raises ConnectivityError when no branch is found and NonAdmissibleError
    when the sweep finds more than one, per the uniqueness the distance
    data requires.
    """
    spec.require_valid()
    opts = opts or SolverOptions()
    th0 = _on_boundary_angle(spec, x_from)
    th1 = _on_boundary_angle(spec, x_to)
    if abs(_wrap(th0 - th1)) < 1e-12:
        raise DomainError("boundary points must be distinct")

    psi = _sweep_angles(opts.angle_samples)
    exit_th, exit_t, ok, _ = _exit_fan(spec, np.full_like(psi, th0), psi, opts)
    miss = _wrap(exit_th - th1)
    brackets, node_roots = _bracket_roots(psi, miss, ok, opts.miss_rtol)

    roots = [(float(psi[k]), float(exit_t[k]), float(miss[k])) for k in node_roots]
    if brackets:
        arr = np.array(brackets)
        th0v = np.full(len(brackets), th0)
        th1v = np.full(len(brackets), th1)
        p, tt, mm, good = _false_position(spec, th0v, th1v, arr[:, 0], arr[:, 1],
                                          arr[:, 2], arr[:, 3], opts)
        for j in range(len(brackets)):
            if good[j]:
                roots.append((float(p[j]), float(tt[j]), float(mm[j])))

    # dedupe roots closer than the sweep spacing
    spacing = math.pi / opts.angle_samples
    roots.sort()
    uniq = []
    for r in roots:
        if not uniq or r[0] - uniq[-1][0] > 0.5 * spacing:
            uniq.append(r)
    if not uniq:
        raise ConnectivityError(
            f"no geodesic branch connects boundary angles {th0:.4f} -> {th1:.4f}")
    if len(uniq) > 1:
        raise NonAdmissibleError(
            f"{len(uniq)} geodesic branches connect boundary angles "
            f"{th0:.4f} -> {th1:.4f}; the norm is not admissible for this pair")

    psi_star, t_star, m_star = uniq[0]
    _, _, _, res = _exit_fan(spec, np.array([th0]), np.array([psi_star]), opts, record=True)
    path = _path_from(res, 0, spec, opts)
    return ShootingResult(path=path, initial_angle=psi_star,
                          miss=m_star * spec.domain.radius, branch_count=len(uniq))


# ---------------------------------------------------------------------------
# batched pair shooting (matrix builder backend)


@dataclass
class PairShot:
    i: int
    j: int
    time: float
    miss: float          # arc-length units
    branch_count: int
    converged: bool
    angle: float = math.nan   # converged inward shooting angle
    path: GeodesicPath | None = None


def shoot_pairs(spec, angles, pairs, opts=None, record_paths=False):
    """Solve many ordered boundary pairs sharing per-start sweeps.

    ``angles`` is the boundary angle table, ``pairs`` an iterable of ordered
    index pairs (i, j).  One sweep fan is integrated per distinct start and
    shared across its targets; all brackets then refine in a single batch.
    Results are deterministic and independent of pair grouping.  With
    ``record_paths`` the converged rays are re-integrated once as a recorded
    batch and each shot carries its GeodesicPath.
    """
    spec.require_valid()
    opts = opts or SolverOptions()
    angles = np.asarray(angles, dtype=float)
    pairs = list(pairs)
    if not pairs:
        return []
    starts = sorted({i for i, _ in pairs})

    psi = _sweep_angles(opts.angle_samples)
    K = len(psi)
    theta0_all = np.repeat(angles[starts], K)
    psi_all = np.tile(psi, len(starts))
    exit_th, exit_t, ok, _ = _exit_fan(spec, theta0_all, psi_all, opts)
    fan_of = {s: slice(k * K, (k + 1) * K) for k, s in enumerate(starts)}

    shots = {}
    blo, bhi, bmlo, bmhi, bth0, bth1, bpair = [], [], [], [], [], [], []
    for (i, j) in pairs:
        sl = fan_of[i]
        miss = _wrap(exit_th[sl] - angles[j])
        brackets, node_roots = _bracket_roots(psi, miss, ok[sl], opts.miss_rtol)
        nb = len(brackets) + len(node_roots)
        if node_roots:
            k = node_roots[0]
            shots[(i, j)] = PairShot(i, j, float(exit_t[sl][k]),
                                     float(miss[k]) * spec.domain.radius, nb, True,
                                     angle=float(psi[k]))
        elif not brackets:
            shots[(i, j)] = PairShot(i, j, math.nan, math.nan, 0, False)
        for (lo, hi, mlo, mhi) in brackets:
            blo.append(lo); bhi.append(hi); bmlo.append(mlo); bmhi.append(mhi)
            bth0.append(angles[i]); bth1.append(angles[j]); bpair.append((i, j))

    if blo:
        p, tt, mm, good = _false_position(
            spec, np.array(bth0), np.array(bth1), np.array(blo), np.array(bhi),
            np.array(bmlo), np.array(bmhi), opts)
        for q, (i, j) in enumerate(bpair):
            prev = shots.get((i, j))
            nb = prev.branch_count if prev else sum(1 for pp in bpair if pp == (i, j))
            if prev is None or not prev.converged:
                if good[q]:
                    shots[(i, j)] = PairShot(i, j, float(tt[q]),
                                             float(mm[q]) * spec.domain.radius,
                                             max(nb, 1), True, angle=float(p[q]))
                elif prev is None:
                    shots[(i, j)] = PairShot(i, j, math.nan, math.nan, nb, False)

    out = [shots[p] for p in pairs]
    if record_paths:
        rec = [s for s in out if s.converged and s.branch_count == 1]
        if rec:
            th0v = np.array([angles[s.i] for s in rec])
            psv = np.array([s.angle for s in rec])
            _, _, _, res = _exit_fan(spec, th0v, psv, opts, record=True)
            for k, s in enumerate(rec):
                if res.status[k] == ivp.EXITED:
                    s.path = _path_from(res, k, spec, opts)
    return out


# ---------------------------------------------------------------------------
# Jacobi fields along conformal-radial geodesics


@dataclass
class ConjugateScanReport:
    angles: np.ndarray
    exit_times: np.ndarray
    first_conjugate: np.ndarray   # parameter of first Jacobi zero, nan if none
    min_jacobi: np.ndarray        # min of J past the initial instant
    herglotz_margin: float
    any_conjugate: bool
    note: str = ("finite fan scan: absence of zeros is evidence for "
                 "admissibility, not a certificate")


def _gauss_curvature_fn(profile):
    """K(r) for g = c^-2(r) * euclidean: K = c^2 * laplacian(ln c)."""
    def K(r):
        r = np.maximum(r, 1e-9)
        c = profile.profile(r)
        d1 = profile.profile_d1(r)
        d2 = profile.profile_d2(r)
        lc1 = d1 / c
        lc2 = d2 / c - lc1 ** 2
        return c ** 2 * (lc2 + lc1 / r)
    return K


def conjugate_point_scan(metric, radius, angles=None, opts=None):
    """Integrate Jacobi fields along a fan and report zero crossings.

    ``metric`` must be a conformal-radial metric field (flat-profile sound
    speed); the scan starts rays from one boundary point across a fan of
    inward angles, excluding exactly-radial shots where the conformal factor
    need not be smooth.
    """
    from .norms import RandersSpec
    from .zermelo import herglotz_check

    if not isinstance(metric, ConformalMetric) or metric.flavor != "conformal-radial":
        raise ValueError("conjugate point scan expects a conformal-radial metric")
    opts = opts or SolverOptions()
    if angles is None:
        half = np.linspace(0.06, 1.45, 12)
        angles = np.concatenate([-half[::-1], half])
    angles = np.asarray(angles, dtype=float)

    from .fields import Domain

    domain = Domain(radius=radius, dimension=2)
    spec = RandersSpec(domain, metric)
    hz = herglotz_check(metric.speed, radius)
    Kfn = _gauss_curvature_fn(_as_profile(metric.speed))

    base = _geodesic_rhs(spec)

    def rhs(u):
        core = base(u[:, :5])
        r = np.linalg.norm(u[:, 0:2], axis=1)
        jac = np.column_stack([u[:, 6], -Kfn(r) * u[:, 5]])
        return np.concatenate([core, jac], axis=1)

    def stop(u):
        return u[:, 0] ** 2 + u[:, 1] ** 2 - radius ** 2

    x0 = _fan_states(spec, np.zeros_like(angles), angles)
    u0 = np.concatenate([x0, np.zeros((len(angles), 1)), np.ones((len(angles), 1))], axis=1)
    res = ivp.integrate_batch(rhs, u0, stop,
                              opts.controls(opts.trap_time_factor * _time_scale(spec), record=True),
                              record=True)

    first = np.full(len(angles), np.nan)
    minj = np.full(len(angles), np.nan)
    for k in range(len(angles)):
        if res.status[k] != ivp.EXITED:
            continue
        ts, us = res.history[k]
        j = us[:, 5]
        late = ts > 1e-6 * res.t_end[k]
        minj[k] = j[late].min() if late.any() else j[-1]
        sign_flip = np.nonzero((j[:-1] > 0.0) & (j[1:] <= 0.0) & late[1:])[0]
        if sign_flip.size:
            a = sign_flip[0]
            frac = j[a] / (j[a] - j[a + 1])
            first[k] = ts[a] + frac * (ts[a + 1] - ts[a])
    return ConjugateScanReport(angles=angles, exit_times=res.t_end.copy(),
                               first_conjugate=first, min_jacobi=minj,
                               herglotz_margin=hz.margin,
                               any_conjugate=bool(np.isfinite(first).any()))


def _as_profile(speed):
    from .fields import ConstantField, RadialProfile

    if isinstance(speed, RadialProfile):
        return speed
    if isinstance(speed, ConstantField):
        class _Flat:
            def profile(self, r):
                return np.full_like(np.asarray(r, dtype=float), speed.c)

            def profile_d1(self, r):
                return np.zeros_like(np.asarray(r, dtype=float))

            profile_d2 = profile_d1
        return _Flat()
    raise ValueError("radial profile required")


# ---------------------------------------------------------------------------
# reversibility check


def polyline_hausdorff(A, B):
    """Hausdorff distance between two polylines given by vertex arrays."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return max(_directed_hausdorff(A, B), _directed_hausdorff(B, A))


def _directed_hausdorff(P, Q):
    """max over P of the distance to polyline Q (point-to-segment).

    A KD-tree narrows each query point to segments adjacent to its nearest
    vertices, which is exact for the smooth, non-self-approaching curves
    compared here and keeps dense comparisons linear.
    """
    if len(Q) < 2:
        return float(np.linalg.norm(P - Q[0], axis=1).max())
    q0, q1 = Q[:-1], Q[1:]
    d = q1 - q0
    L2 = np.maximum(np.einsum("si,si->s", d, d), 1e-300)
    if len(P) * len(q0) <= 1_000_000:
        w = P[:, None, :] - q0[None, :, :]
        tproj = np.clip(np.einsum("ksi,si->ks", w, d) / L2, 0.0, 1.0)
        closest = q0[None] + tproj[..., None] * d[None]
        dist = np.linalg.norm(P[:, None, :] - closest, axis=2).min(axis=1)
        return float(dist.max())

    from scipy.spatial import cKDTree

    tree = cKDTree(Q)
    _, nearest = tree.query(P, k=1)
    best = np.full(len(P), np.inf)
    for off in (-2, -1, 0, 1):
        seg = np.clip(nearest + off, 0, len(q0) - 1)
        w = P - q0[seg]
        tproj = np.clip(np.einsum("ki,ki->k", w, d[seg]) / L2[seg], 0.0, 1.0)
        closest = q0[seg] + tproj[:, None] * d[seg]
        best = np.minimum(best, np.linalg.norm(P - closest, axis=1))
    return float(best.max())


@dataclass
class ReversalReport:
    hausdorff: float
    relative: float        # hausdorff / R
    forward_time: float
    backward_time: float


def reversed_geodesic_check(spec, path, opts=None):
    """Compare the reversed path with the geodesic joining reversed endpoints.

    For closed one-forms the two agree as point sets; a rotational (non
    closed) perturbation separates them on some chord.
    """
    if path.spec_hash != spec.spec_hash:
        from .errors import SpecMismatchError
        raise SpecMismatchError("path was not produced under the supplied spec")
    opts = opts or SolverOptions()
    back = solve_bvp(spec, path.exit_point, path.x[0], opts)
    h = polyline_hausdorff(path.resample()[::-1], back.path.resample())
    return ReversalReport(hausdorff=h, relative=h / spec.domain.radius,
                          forward_time=path.exit_time,
                          backward_time=back.path.exit_time)
