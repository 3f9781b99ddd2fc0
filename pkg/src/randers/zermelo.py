"""Least-time navigation in a moving medium as a Randers norm.

A wave moving at unit self-speed in metric g while drifting with a flow W
follows geodesics of the Randers norm built here; the curve parameter is
physical travel time.  The module provides the general construction, the
conformal (sound-speed) specialization, its small-drift linearization, and
the non-trapping condition check for radial profiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidMediumError, SpecMismatchError
from .fields import (ConformalMetric, ConstantField, MetricField, RadialProfile,
                     VectorValuedField, _pts, _unbatch, disk_grid)
from .norms import RandersSpec

__all__ = ["MediumModel", "zermelo_construct", "conformal_specialize",
           "linearize", "herglotz_check", "HerglotzReport",
           "travel_time_consistency"]


@dataclass
class MediumModel:
    """Physical scenario: domain, wave speed, and drift field.

    The drift must be subcritical, |W|_g < 1 (equivalently |W|_e < c in the
    conformal case); this is certified on the standard interior probe grid
    at construction.
    """

    def __init__(self, domain, speed=None, wind=None, metric=None, grid=1000):
        from .fields import ZeroForm

        self.domain = domain
        self.wind = wind if wind is not None else ZeroForm(domain.dimension)
        if metric is not None:
            self.metric = metric
            self.speed = speed
            self.flavor = "general-g"
        else:
            if speed is None:
                raise ValueError("either a sound speed or an explicit metric is required")
            self.speed = speed
            self.metric = ConformalMetric(speed, dim=domain.dimension)
            self.flavor = self.metric.flavor
        pts = disk_grid(domain, grid)
        g = self.metric.value(pts)
        W = self.wind.value(pts)
        drift = np.sqrt(np.maximum(np.einsum("mij,mi,mj->m", g, W, W), 0.0))
        self.max_drift = float(drift.max())
        if self.max_drift >= 1.0:
            raise InvalidMediumError(
                f"drift speed reaches |W|_g = {self.max_drift:.4g} >= 1 on the probe grid; "
                "the medium must satisfy |W|_g < 1 everywhere")

    def describe(self):
        return (f"medium(domain={self.domain.describe()},metric={self.metric.describe()},"
                f"wind={self.wind.describe()})")


class _ZermeloParts:
    """Shared evaluation of the navigation algebra, memoized on the last batch."""

    def __init__(self, metric, wind):
        self.metric = metric
        self.wind = wind
        self._last = None

    def __call__(self, X):
        last = self._last  # snapshot: concurrent workers may swap the memo
        if last is not None and last[0] is X:
            return last[1]
        g = self.metric.value(X)
        P = self.metric.partials(X)
        W = self.wind.value(X)
        J = self.wind.jacobian(X)
        Wi = np.einsum("mij,mj->mi", g, W)
        s = np.einsum("mi,mi->m", Wi, W)
        lam = 1.0 - s
        dWi = np.einsum("mkij,mj->mki", P, W) + np.einsum("mij,mjk->mki", g, J)
        ds = np.einsum("mkij,mi,mj->mk", P, W, W) + 2.0 * np.einsum("mj,mjk->mk", Wi, J)
        parts = {"g": g, "P": P, "Wi": Wi, "lam": lam, "dWi": dWi, "dlam": -ds}
        self._last = (X, parts)
        return parts


class ZermeloMetric(MetricField):
    """alpha_ij = g_ij / lam + (W_i / lam)(W_j / lam), lam = 1 - |W|_g^2."""

    flavor = "general"

    def __init__(self, parts, dim=2):
        self._parts = parts
        self.dim = dim

    def value(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        lam = p["lam"]
        Wi = p["Wi"]
        a = p["g"] / lam[:, None, None] + (Wi[:, :, None] * Wi[:, None, :]) / (lam ** 2)[:, None, None]
        return _unbatch(a, single)

    def partials(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        g, P, Wi, lam, dWi, dlam = p["g"], p["P"], p["Wi"], p["lam"], p["dWi"], p["dlam"]
        l1 = lam[:, None, None, None]
        outer = Wi[:, None, :, None] * Wi[:, None, None, :]
        douter = dWi[:, :, :, None] * Wi[:, None, None, :] + Wi[:, None, :, None] * dWi[:, :, None, :]
        da = (P / l1
              - g[:, None] * dlam[:, :, None, None] / l1 ** 2
              + douter / l1 ** 2
              - 2.0 * outer * dlam[:, :, None, None] / l1 ** 3)
        return _unbatch(da, single)

    def describe(self):
        return (f"zermelo_alpha(g={self._parts.metric.describe()},"
                f"W={self._parts.wind.describe()})")


class ZermeloOneForm(VectorValuedField):
    """beta_i = -W_i / lam with W_i = g_ij W^j."""

    def __init__(self, parts, dim=2):
        self._parts = parts
        self.dim = dim

    def value(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        return _unbatch(-p["Wi"] / p["lam"][:, None], single)

    def jacobian(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        Wi, lam, dWi, dlam = p["Wi"], p["lam"], p["dWi"], p["dlam"]
        # d beta_i / dx^k = -dWi[k, i] / lam + W_i dlam_k / lam^2
        j = (-np.swapaxes(dWi, 1, 2) / lam[:, None, None]
             + Wi[:, :, None] * dlam[:, None, :] / (lam ** 2)[:, None, None])
        return _unbatch(j, single)

    def describe(self):
        return (f"zermelo_beta(g={self._parts.metric.describe()},"
                f"W={self._parts.wind.describe()})")


def zermelo_construct(medium):
    """Randers spec whose geodesics are the least-time paths of the medium."""
    parts = _ZermeloParts(medium.metric, medium.wind)
    n = medium.domain.dimension
    if medium.wind.is_zero:
        spec = RandersSpec(medium.domain, medium.metric)
    else:
        spec = RandersSpec(medium.domain, ZermeloMetric(parts, n), ZermeloOneForm(parts, n))
    return spec


# ---------------------------------------------------------------------------
# conformal specialization (independent arithmetic path, same result)


class _ConformalParts:
    def __init__(self, speed, wind):
        self.speed = speed
        self.wind = wind
        self._last = None

    def __call__(self, X):
        last = self._last  # snapshot: concurrent workers may swap the memo
        if last is not None and last[0] is X:
            return last[1]
        c = self.speed.value(X)
        dc = self.speed.gradient(X)
        W = self.wind.value(X)
        J = self.wind.jacobian(X)
        c2 = c ** -2
        dc2 = (-2.0 * c ** -3)[:, None] * dc                    # (m,k)
        w2 = np.einsum("mi,mi->m", W, W)
        dw2 = 2.0 * np.einsum("mi,mik->mk", W, J)
        D = 1.0 - c2 * w2
        dD = -(dc2 * w2[:, None] + c2[:, None] * dw2)
        parts = {"c": c, "dc": dc, "W": W, "J": J, "c2": c2, "dc2": dc2,
                 "D": D, "dD": dD}
        self._last = (X, parts)
        return parts


class ConformalZermeloMetric(MetricField):
    """alpha_ij = c^-2 d_ij / D + c^-4 W^i W^j / D^2, D = 1 - c^-2 |W|_e^2."""

    flavor = "general"

    def __init__(self, parts, dim=2):
        self._parts = parts
        self.dim = dim

    def value(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        c2, D, W = p["c2"], p["D"], p["W"]
        eye = np.eye(X.shape[1])[None]
        a = (c2 / D)[:, None, None] * eye + ((c2 ** 2) / D ** 2)[:, None, None] * (
            W[:, :, None] * W[:, None, :])
        return _unbatch(a, single)

    def partials(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        c, dc, W, J, c2, dc2, D, dD = (p["c"], p["dc"], p["W"], p["J"],
                                       p["c2"], p["dc2"], p["D"], p["dD"])
        eye = np.eye(X.shape[1])[None, None]
        c4 = c2 ** 2
        dc4 = (-4.0 * c ** -5)[:, None] * dc
        outer = W[:, None, :, None] * W[:, None, None, :]
        douter = (J[:, :, :] .swapaxes(1, 2)[:, :, :, None] * W[:, None, None, :]
                  + W[:, None, :, None] * J.swapaxes(1, 2)[:, :, None, :])
        term1 = (dc2 / D[:, None] - c2[:, None] * dD / D[:, None] ** 2)[:, :, None, None] * eye
        term2 = (dc4 / D[:, None] ** 2 - 2.0 * c4[:, None] * dD / D[:, None] ** 3)[:, :, None, None] * outer
        term3 = (c4 / D ** 2)[:, None, None, None] * douter
        return _unbatch(term1 + term2 + term3, single)

    def describe(self):
        return (f"conformal_zermelo_alpha(c={self._parts.speed.describe()},"
                f"W={self._parts.wind.describe()})")


class ConformalZermeloOneForm(VectorValuedField):
    """beta_i = -c^-2 W^i / D."""

    def __init__(self, parts, dim=2):
        self._parts = parts
        self.dim = dim

    def value(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        return _unbatch(-(p["c2"] / p["D"])[:, None] * p["W"], single)

    def jacobian(self, x):
        X, single = _pts(x)
        p = self._parts(X)
        W, J, c2, dc2, D, dD = p["W"], p["J"], p["c2"], p["dc2"], p["D"], p["dD"]
        j = (-(dc2 / D[:, None])[:, None, :] * W[:, :, None]
             - (c2 / D)[:, None, None] * J
             + (c2 / D ** 2)[:, None, None] * W[:, :, None] * dD[:, None, :])
        return _unbatch(j, single)

    def describe(self):
        return (f"conformal_zermelo_beta(c={self._parts.speed.describe()},"
                f"W={self._parts.wind.describe()})")


def conformal_specialize(speed, wind, domain):
    """Randers spec for g = c^-2 * euclidean via the specialized formulas.

    Agrees with ``zermelo_construct`` on the same medium to near machine
    precision; kept as an independent arithmetic path.
    """
    pts = disk_grid(domain, 1000)
    c = speed.value(pts)
    w = np.linalg.norm(wind.value(pts), axis=1)
    if (w >= c).any():
        raise InvalidMediumError("drift speed reaches |W|_e >= c on the probe grid")
    if wind.is_zero:
        return RandersSpec(domain, ConformalMetric(speed, dim=domain.dimension))
    parts = _ConformalParts(speed, wind)
    n = domain.dimension
    return RandersSpec(domain, ConformalZermeloMetric(parts, n),
                       ConformalZermeloOneForm(parts, n))


# ---------------------------------------------------------------------------
# first-order linearization


class LinearizedOneForm(VectorValuedField):
    """beta = -W / c^2: the first-order drift perturbation."""

    def __init__(self, speed, wind, dim=2):
        self.speed = speed
        self.wind = wind
        self.dim = dim

    def value(self, x):
        X, single = _pts(x)
        c = self.speed.value(X)
        return _unbatch(-(c ** -2)[:, None] * self.wind.value(X), single)

    def jacobian(self, x):
        X, single = _pts(x)
        c = self.speed.value(X)
        dc = self.speed.gradient(X)
        W = self.wind.value(X)
        J = self.wind.jacobian(X)
        j = (-(c ** -2)[:, None, None] * J
             + (2.0 * c ** -3)[:, None, None] * W[:, :, None] * dc[:, None, :])
        return _unbatch(j, single)

    @property
    def is_zero(self):
        return self.wind.is_zero

    def describe(self):
        return f"linearized_beta(c={self.speed.describe()},W={self.wind.describe()})"


def linearize(speed, wind, domain):
    """First-order spec (alpha = c^-2 e, beta = -W/c^2) and the drift ratio.

    Returns ``(spec, rho)`` where rho = sup |W|_e / c over the probe grid;
    the approximation error of boundary distances scales like rho^2.
    """
    pts = disk_grid(domain, 1000)
    c = speed.value(pts)
    w = np.linalg.norm(wind.value(pts), axis=1)
    rho = float((w / c).max())
    alpha = ConformalMetric(speed, dim=domain.dimension)
    if wind.is_zero:
        return RandersSpec(domain, alpha), rho
    return RandersSpec(domain, alpha, LinearizedOneForm(speed, wind, domain.dimension)), rho


# ---------------------------------------------------------------------------
# radial non-trapping condition


@dataclass(frozen=True)
class HerglotzReport:
    holds: bool
    margin: float      # min over [0, R] of d/dr (r / c(r))
    r_argmin: float


def herglotz_check(speed, radius, grid=1000):
    """Evaluate d/dr (r / c(r)) on [0, R]; positivity keeps rays non-trapped."""
    if not isinstance(speed, (RadialProfile, ConstantField)):
        raise ValueError("herglotz check needs a radial profile or constant speed")
    r = np.linspace(0.0, radius, grid)
    c = speed.profile(r) if isinstance(speed, RadialProfile) else np.full_like(r, speed.c)
    d1 = speed.profile_d1(r) if isinstance(speed, RadialProfile) else np.zeros_like(r)
    val = (c - r * d1) / c ** 2
    k = int(np.argmin(val))
    margin = float(val[k])
    return HerglotzReport(holds=bool(margin > 0.0), margin=margin, r_argmin=float(r[k]))


def travel_time_consistency(medium, path):
    """|T - L_F| for a path traced under this medium's navigation norm.

    The exit parameter of a unit-speed geodesic is its travel time; the
    residual must vanish to solver precision (<= 1e-8 T).
    """
    spec = zermelo_construct(medium)
    if path.spec_hash != spec.spec_hash:
        raise SpecMismatchError("path was not produced under this medium's navigation norm")
    return abs(path.exit_time - path.f_length)
