"""Vectorized forward-mode dual numbers.

Three truncated-Taylor carriers back the field catalog's derivative rules:

* ``Dual``    -- first order in n variables, batched: gradients of fields.
* ``Dual2``   -- second order in one variable, batched: radial profiles
                 (needed for curvature along radially symmetric media).
* ``DualHess``-- second order in n variables, batched: Hessians of scalar
                 fields (exact one-form Jacobians for beta = d(phi)).

All parts are numpy arrays; arithmetic broadcasts over the batch axis, so a
single expression evaluation differentiates a whole probe grid at once.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Dual", "Dual2", "DualHess", "seed_dual", "seed_dual2", "seed_hess"]


def _asarray(v):
    return np.asarray(v, dtype=float)


class Dual:
    """a + eps*grad with val shape S and grad shape S+(n,)."""

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = _asarray(val)
        self.grad = _asarray(grad)

    def _lift(self, other):
        if isinstance(other, Dual):
            return other
        v = _asarray(other)
        return Dual(v, np.zeros(np.broadcast_shapes(v.shape, self.val.shape) + self.grad.shape[-1:]))

    def __add__(self, other):
        o = self._lift(other)
        return Dual(self.val + o.val, self.grad + o.grad)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.grad)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        return Dual(self.val * o.val,
                    self.grad * o.val[..., None] + o.grad * self.val[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        inv = 1.0 / o.val
        return Dual(self.val * inv,
                    (self.grad - o.grad * (self.val * inv)[..., None]) * inv[..., None])

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("dual powers support constant exponents only")
        return self._chain(self.val ** p, p * self.val ** (p - 1))

    def _chain(self, f, fp):
        return Dual(f, self.grad * fp[..., None])

    def sqrt(self):
        s = np.sqrt(self.val)
        return self._chain(s, 0.5 / s)

    def exp(self):
        e = np.exp(self.val)
        return self._chain(e, e)

    def sin(self):
        return self._chain(np.sin(self.val), np.cos(self.val))

    def cos(self):
        return self._chain(np.cos(self.val), -np.sin(self.val))


class Dual2:
    """Univariate second-order jet (val, d1, d2), batched."""

    __slots__ = ("val", "d1", "d2")

    def __init__(self, val, d1, d2):
        self.val = _asarray(val)
        self.d1 = _asarray(d1)
        self.d2 = _asarray(d2)

    def _lift(self, other):
        if isinstance(other, Dual2):
            return other
        v = _asarray(other)
        z = np.zeros(np.broadcast_shapes(v.shape, self.val.shape))
        return Dual2(v, z, z)

    def __add__(self, other):
        o = self._lift(other)
        return Dual2(self.val + o.val, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return Dual2(-self.val, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        return Dual2(self.val * o.val,
                     self.d1 * o.val + self.val * o.d1,
                     self.d2 * o.val + 2.0 * self.d1 * o.d1 + self.val * o.d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        return self * o._chain(1.0 / o.val, -1.0 / o.val ** 2, 2.0 / o.val ** 3)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("dual powers support constant exponents only")
        return self._chain(self.val ** p, p * self.val ** (p - 1),
                           p * (p - 1) * self.val ** (p - 2))

    def _chain(self, f, fp, fpp):
        return Dual2(f, fp * self.d1, fpp * self.d1 ** 2 + fp * self.d2)

    def sqrt(self):
        s = np.sqrt(self.val)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.val))

    def exp(self):
        e = np.exp(self.val)
        return self._chain(e, e, e)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)


class DualHess:
    """Multivariate second-order jet: val S, grad S+(n,), hess S+(n,n)."""

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = _asarray(val)
        self.grad = _asarray(grad)
        self.hess = _asarray(hess)

    def _lift(self, other):
        if isinstance(other, DualHess):
            return other
        v = _asarray(other)
        n = self.grad.shape[-1]
        shape = np.broadcast_shapes(v.shape, self.val.shape)
        return DualHess(v, np.zeros(shape + (n,)), np.zeros(shape + (n, n)))

    def __add__(self, other):
        o = self._lift(other)
        return DualHess(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return DualHess(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        cross = self.grad[..., :, None] * o.grad[..., None, :]
        return DualHess(
            self.val * o.val,
            self.grad * o.val[..., None] + o.grad * self.val[..., None],
            self.hess * o.val[..., None, None] + o.hess * self.val[..., None, None]
            + cross + np.swapaxes(cross, -1, -2),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        return self * o._chain(1.0 / o.val, -1.0 / o.val ** 2, 2.0 / o.val ** 3)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("dual powers support constant exponents only")
        return self._chain(self.val ** p, p * self.val ** (p - 1),
                           p * (p - 1) * self.val ** (p - 2))

    def _chain(self, f, fp, fpp):
        outer = self.grad[..., :, None] * self.grad[..., None, :]
        return DualHess(f, self.grad * fp[..., None],
                        outer * fpp[..., None, None] + self.hess * fp[..., None, None])

    def sqrt(self):
        s = np.sqrt(self.val)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.val))

    def exp(self):
        e = np.exp(self.val)
        return self._chain(e, e, e)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)


def seed_dual(x):
    """Coordinate duals for points x of shape (m, n): list of n Duals."""
    x = _asarray(x)
    m, n = x.shape
    out = []
    for i in range(n):
        grad = np.zeros((m, n))
        grad[:, i] = 1.0
        out.append(Dual(x[:, i], grad))
    return out

def seed_dual2(r):
    """Second-order jet of the identity map r -> r, batched."""
    r = _asarray(r)
    return Dual2(r, np.ones_like(r), np.zeros_like(r))

def seed_hess(x):
    """Coordinate second-order jets for points x of shape (m, n)."""
    x = _asarray(x)
    m, n = x.shape
    out = []
    for i in range(n):
        grad = np.zeros((m, n))
        grad[:, i] = 1.0
        out.append(DualHess(x[:, i], grad, np.zeros((m, n, n))))
    return out
