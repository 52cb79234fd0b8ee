"""Optional compiled kernel for the innermost root solve.

Every 1-D root the solver bisects lives on a parametric circle
p(t) = base + cos(t) * V + sin(t) * W against a bump terrain, so a single
compiled bisection kernel covers the curve-point, chord, foot-circle and
half-circle solves. The kernel mirrors ring._bisect exactly; when numba is
unavailable everything falls back to the pure-Python path with identical
semantics.
"""

from __future__ import annotations

_kernel = None
_failed = False


def _build():
    global _kernel, _failed
    if _kernel is not None or _failed:
        return _kernel
    try:
        import numpy as np
        from numba import njit

        @njit(cache=True)
        def circle_bisect(bx, by, bz, vx, vy, vz, wx, wy, wz,
                          lo, hi, tol, cx, cy, amp, nhi):
            def gap(t):
                ct = np.cos(t)
                st = np.sin(t)
                x = bx + ct * vx + st * wx
                y = by + ct * vy + st * wy
                z = bz + ct * vz + st * wz
                h = 0.0
                for k in range(cx.shape[0]):
                    dx = x - cx[k]
                    dy = y - cy[k]
                    h += amp[k] * np.exp((dx * dx + dy * dy) * nhi[k])
                return z - h

            f_lo = gap(lo)
            if f_lo == 0.0:
                return lo
            rising = f_lo < 0.0
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                fm = gap(mid)
                if fm == 0.0:
                    return mid
                if (fm < 0.0) == rising:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        _kernel = circle_bisect
    except Exception:
        _failed = True
        _kernel = None
    return _kernel


def circle_bisect_solver(terrain):
    """Compiled bisection bound to this terrain, or None."""
    arrays = getattr(terrain, "kernel_arrays", None)
    if arrays is None:
        return None
    kernel = _build()
    if kernel is None:
        return None
    cx, cy, amp, nhi = arrays

    def solve(base, v, w, lo, hi, tol):
        return float(kernel(
            float(base[0]), float(base[1]), float(base[2]),
            float(v[0]), float(v[1]), float(v[2]),
            float(w[0]), float(w[1]), float(w[2]),
            float(lo), float(hi), float(tol), cx, cy, amp, nhi,
        ))

    return solve
