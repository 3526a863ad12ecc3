"""Compiled inner loops for the 1-D and radially symmetric solver.

The spatial operator is the conservative flux-difference form of
Delta(u^m): interior face fluxes are central differences of w = u^m times
the face area (the radial Jacobian measure makes the origin face vanish for
the disk/ball), boundary faces carry the prescribed diffusive influx
A * m u^{m-1} g(u) obtained from the flux condition via the chain rule
d(u^m)/dnu = m u^{m-1} du/dnu.  Dividing by the exact cell measures (the
grid's quadrature weights) makes the discrete mass budget telescope, so
zero-flux runs conserve int u to rounding.

Time stepping is explicit midpoint Runge-Kutta with

    dt = cfl * h^2 / (2 N max(m u^{m-1}) + eps)

additionally capped so no nodal value changes by more than ``growth_cap``
(default 20%) per step, positivity-guarded with dt-halving retries.  The
cap makes the midpoint stage positive by construction (it moves each node
by at most growth_cap/2 relative), so only the full-step stage is scanned.

Long horizons at fine resolution cost ~1e8 steps, so the loops are written
as branch-free elementwise passes plus 4-lane unrolled reductions to stay
SIMD-friendly, the common integer and half-integer exponents are
specialized away from libm pow, and committed steps swap buffers instead of
copying.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_BATCH = 0      # step budget exhausted, run still alive
STATUS_DONE = 1       # reached the time horizon
STATUS_FLOOR = 2      # proposed dt fell below dt_floor
STATUS_BLOWUP = 3     # dt collapsed 1e10-fold with sup u above threshold
STATUS_POSLOST = 4    # positivity unrecoverable even at dt_floor

DT_COLLAPSE_FACTOR = 1e-10

_JIT = dict(cache=True, fastmath=True, error_model="numpy")


@njit(**_JIT)
def _pow1(x, e):
    if e == 0.0:
        return 1.0
    if e == 0.5:
        return np.sqrt(x)
    if e == 1.0:
        return x
    if e == 1.5:
        return x * np.sqrt(x)
    if e == 2.0:
        return x * x
    if e == 2.5:
        return x * x * np.sqrt(x)
    if e == 3.0:
        return x * x * x
    if e == 3.5:
        return x * x * x * np.sqrt(x)
    if e == 4.0:
        xx = x * x
        return xx * xx
    return x**e


@njit(**_JIT)
def _pow_fill(out, x, e):
    n = x.shape[0]
    if e == 1.0:
        for i in range(n):
            out[i] = x[i]
    elif e == 0.5:
        for i in range(n):
            out[i] = np.sqrt(x[i])
    elif e == 1.5:
        for i in range(n):
            out[i] = x[i] * np.sqrt(x[i])
    elif e == 2.0:
        for i in range(n):
            out[i] = x[i] * x[i]
    elif e == 2.5:
        for i in range(n):
            out[i] = x[i] * x[i] * np.sqrt(x[i])
    elif e == 3.0:
        for i in range(n):
            out[i] = x[i] * x[i] * x[i]
    elif e == 3.5:
        for i in range(n):
            out[i] = x[i] * x[i] * x[i] * np.sqrt(x[i])
    elif e == 4.0:
        for i in range(n):
            xx = x[i] * x[i]
            out[i] = xx * xx
    else:
        for i in range(n):
            out[i] = x[i] ** e


@njit(**_JIT)
def rhs_1d(u, vols, inv_vols, ifaces_h, area_l, area_r, lflux, h,
           a, b, c, k, m, p, q, beta,
           w, up, uq, inv_u, grad, flux, out):
    """Semi-discrete right-hand side on an interval or radial grid.

    ifaces_h holds (interior face area)/h so the flux pass is one multiply.
    grad holds du/dr with the boundary normal derivative replaced by the
    exact flux value g(u); lflux = 1 marks a flux boundary at the left end
    (interval), 0 the radial origin.
    """
    n = u.shape[0]
    inv_2h = 0.5 / h

    _pow_fill(w, u, m)
    _pow_fill(up, u, p)
    if q == p + 1.0:
        for i in range(n):
            uq[i] = up[i] * u[i]
    else:
        _pow_fill(uq, u, q)
    for i in range(n):
        inv_u[i] = 1.0 / u[i]

    source = 0.0
    for i in range(n):
        source += vols[i] * up[i]
    source *= a

    g_l = 0.0
    if lflux == 1 and k > 0.0:
        g_l = k * _pow1(u[0], beta)
    g_r = 0.0
    if k > 0.0:
        g_r = k * _pow1(u[n - 1], beta)
    grad[0] = g_l
    grad[n - 1] = g_r

    for i in range(n - 1):
        flux[i] = ifaces_h[i] * (w[i + 1] - w[i])

    flux_l = 0.0
    if lflux == 1:
        flux_l = area_l * m * _pow1(u[0], m - 1.0) * g_l
    flux_r = area_r * m * _pow1(u[n - 1], m - 1.0) * g_r

    c4 = 0.25 * c
    out[0] = (flux[0] + flux_l) * inv_vols[0] + source - b * uq[0] \
        - c4 * g_l * g_l * inv_u[0]
    for i in range(1, n - 1):
        gr = (u[i + 1] - u[i - 1]) * inv_2h
        grad[i] = gr
        out[i] = (flux[i] - flux[i - 1]) * inv_vols[i] + source - b * uq[i] \
            - c4 * gr * gr * inv_u[i]
    out[n - 1] = (flux_r - flux[n - 2]) * inv_vols[n - 1] + source - b * uq[n - 1] \
        - c4 * g_r * g_r * inv_u[n - 1]


@njit(**_JIT)
def _stage2_update(umid, vols, inv_vols, ifaces_h, area_l, area_r, lflux, h,
                   a, b, c, k, m, p, q, beta,
                   w, up, uq, inv_u, flux,
                   cur, dt, unew):
    """Second RK stage fused with the state update: unew = cur + dt f(umid).

    Returns min(unew) so the caller can police positivity.
    """
    n = umid.shape[0]
    inv_2h = 0.5 / h

    _pow_fill(w, umid, m)
    _pow_fill(up, umid, p)
    if q == p + 1.0:
        for i in range(n):
            uq[i] = up[i] * umid[i]
    else:
        _pow_fill(uq, umid, q)
    for i in range(n):
        inv_u[i] = 1.0 / umid[i]

    source = 0.0
    for i in range(n):
        source += vols[i] * up[i]
    source *= a

    g_l = 0.0
    if lflux == 1 and k > 0.0:
        g_l = k * _pow1(umid[0], beta)
    g_r = 0.0
    if k > 0.0:
        g_r = k * _pow1(umid[n - 1], beta)

    for i in range(n - 1):
        flux[i] = ifaces_h[i] * (w[i + 1] - w[i])

    flux_l = 0.0
    if lflux == 1:
        flux_l = area_l * m * _pow1(umid[0], m - 1.0) * g_l
    flux_r = area_r * m * _pow1(umid[n - 1], m - 1.0) * g_r

    c4 = 0.25 * c
    k2_0 = (flux[0] + flux_l) * inv_vols[0] + source - b * uq[0] \
        - c4 * g_l * g_l * inv_u[0]
    unew[0] = cur[0] + dt * k2_0
    vmin = unew[0]
    for i in range(1, n - 1):
        gr = (umid[i + 1] - umid[i - 1]) * inv_2h
        k2i = (flux[i] - flux[i - 1]) * inv_vols[i] + source - b * uq[i] \
            - c4 * gr * gr * inv_u[i]
        v = cur[i] + dt * k2i
        unew[i] = v
        vmin = min(vmin, v)
    k2_n = (flux_r - flux[n - 2]) * inv_vols[n - 1] + source - b * uq[n - 1] \
        - c4 * g_r * g_r * inv_u[n - 1]
    unew[n - 1] = cur[n - 1] + dt * k2_n
    return min(vmin, unew[n - 1])


@njit(**_JIT)
def _max_and_ratio(u, k1, inv_u):
    """(max u, max |k1|/u) in one 4-lane unrolled pass."""
    n = u.shape[0]
    m0 = m1 = m2 = m3 = 0.0
    q0 = q1 = q2 = q3 = 0.0
    i = 0
    while i + 4 <= n:
        m0 = max(m0, u[i])
        m1 = max(m1, u[i + 1])
        m2 = max(m2, u[i + 2])
        m3 = max(m3, u[i + 3])
        q0 = max(q0, abs(k1[i]) * inv_u[i])
        q1 = max(q1, abs(k1[i + 1]) * inv_u[i + 1])
        q2 = max(q2, abs(k1[i + 2]) * inv_u[i + 2])
        q3 = max(q3, abs(k1[i + 3]) * inv_u[i + 3])
        i += 4
    while i < n:
        m0 = max(m0, u[i])
        q0 = max(q0, abs(k1[i]) * inv_u[i])
        i += 1
    return max(max(m0, m1), max(m2, m3)), max(max(q0, q1), max(q2, q3))


@njit(**_JIT)
def advance_1d(u, t, dt_first, max_steps, t_stop,
               vols, inv_vols, ifaces_h, area_l, area_r, lflux, dim, h,
               a, b, c, k, m, p, q, beta,
               cfl, growth_cap, dt_floor, sup_thr,
               w, up, uq, inv_u, grad, flux, k1, k2, umid, uscr):
    """Advance up to max_steps or until t_stop / a terminal event.

    Returns (status, t, dt_first, dt_last, steps_done).  dt_first < 0 on
    entry means "not yet established"; the first computed step size is
    locked in and returned for the dt-collapse blow-up criterion.  The
    final state is written back into ``u``.
    """
    n = u.shape[0]
    status = STATUS_BATCH
    dt_last = 0.0
    steps = 0
    cflh2 = cfl * h * h
    cur = u
    spare = uscr
    swapped = False
    for _ in range(max_steps):
        if t >= t_stop:
            status = STATUS_DONE
            break

        rhs_1d(cur, vols, inv_vols, ifaces_h, area_l, area_r,
               lflux, h, a, b, c, k, m, p, q, beta,
               w, up, uq, inv_u, grad, flux, k1)
        umax, ratio = _max_and_ratio(cur, k1, inv_u)

        diff = m * _pow1(umax, m - 1.0)
        dt = cflh2 / (2.0 * dim * diff + 1e-300)
        if ratio > 0.0:
            cap = growth_cap / ratio
            if cap < dt:
                dt = cap

        if dt_first < 0.0:
            dt_first = dt
        if dt < dt_floor:
            status = STATUS_FLOOR
            break
        if dt < DT_COLLAPSE_FACTOR * dt_first and umax > sup_thr:
            status = STATUS_BLOWUP
            break

        dt_use = dt
        if t + dt_use > t_stop:
            dt_use = t_stop - t
        if dt_use <= 0.0:
            status = STATUS_DONE
            break

        ok = False
        while True:
            half = 0.5 * dt_use
            # the growth cap bounds |dt k1| <= growth_cap * u < u,
            # so the midpoint stage is positive by construction
            for i in range(n):
                umid[i] = cur[i] + half * k1[i]
            vmin = _stage2_update(umid, vols, inv_vols, ifaces_h, area_l, area_r,
                                  lflux, h, a, b, c, k, m, p, q, beta,
                                  w, up, uq, inv_u, flux,
                                  cur, dt_use, spare)
            if vmin > 0.0:
                ok = True
                break
            dt_use *= 0.5
            if dt_use < dt_floor:
                break
        if not ok:
            status = STATUS_POSLOST
            break

        tmp = cur
        cur = spare
        spare = tmp
        swapped = not swapped
        t += dt_use
        dt_last = dt_use
        steps += 1

    if swapped:
        for i in range(n):
            u[i] = cur[i]
    return status, t, dt_first, dt_last, steps
