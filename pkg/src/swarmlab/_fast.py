"""Compiled inner loops for the heavy Monte Carlo workloads.

These kernels mirror the generic numpy paths exactly (same schemes, same
neighbor conventions) and are cross-checked against them in the test suite.
They cover the hot cases only: power-law alignment trajectories (plain and
with the sparse feedback), and 1D bounded-confidence experiment runs with
optional static extra links.  Everything else goes through the generic path.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = [
    "cs_rk4_sample",
    "controlled_cs_rk4",
    "hk_run",
]


@njit(cache=True, nogil=True)
def _accel(x, v, beta, amp, out):
    n, d = x.shape
    for i in range(n):
        for c in range(d):
            out[i, c] = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s2 = 0.0
            for c in range(d):
                diff = x[j, c] - x[i, c]
                s2 += diff * diff
            if beta == 1.0:
                w = amp / (1.0 + s2)
            else:
                w = amp * (1.0 + s2) ** (-beta)
            for c in range(d):
                dv = w * (v[j, c] - v[i, c])
                out[i, c] += dv
                out[j, c] -= dv
    for i in range(n):
        for c in range(d):
            out[i, c] /= n


@njit(cache=True, nogil=True)
def _rk4_cs_step(x, v, beta, amp, dt, u, tx, tv, kv, ax, av):
    """One RK4 step of dx = v, dv = alignment(x, v) + u, with u held constant."""
    n, d = x.shape
    h2 = 0.5 * dt
    # stage 1
    _accel(x, v, beta, amp, kv)
    for i in range(n):
        for c in range(d):
            k1v = kv[i, c] + u[i, c]
            ax[i, c] = v[i, c]
            av[i, c] = k1v
            tx[i, c] = x[i, c] + h2 * v[i, c]
            tv[i, c] = v[i, c] + h2 * k1v
    # stage 2
    _accel(tx, tv, beta, amp, kv)
    for i in range(n):
        for c in range(d):
            k2x = tv[i, c]
            k2v = kv[i, c] + u[i, c]
            ax[i, c] += 2.0 * k2x
            av[i, c] += 2.0 * k2v
            tx[i, c] = x[i, c] + h2 * k2x
            tv[i, c] = v[i, c] + h2 * k2v
    # stage 3
    _accel(tx, tv, beta, amp, kv)
    for i in range(n):
        for c in range(d):
            k3x = tv[i, c]
            k3v = kv[i, c] + u[i, c]
            ax[i, c] += 2.0 * k3x
            av[i, c] += 2.0 * k3v
            tx[i, c] = x[i, c] + dt * k3x
            tv[i, c] = v[i, c] + dt * k3v
    # stage 4
    _accel(tx, tv, beta, amp, kv)
    for i in range(n):
        for c in range(d):
            k4x = tv[i, c]
            k4v = kv[i, c] + u[i, c]
            x[i, c] += dt / 6.0 * (ax[i, c] + k4x)
            v[i, c] += dt / 6.0 * (av[i, c] + k4v)


@njit(cache=True, nogil=True)
def _cs_rk4_kernel(x, v, beta, amp, dt, nsteps, stride, times, xs, vs):
    n, d = x.shape
    u = np.zeros((n, d))
    tx = np.empty((n, d))
    tv = np.empty((n, d))
    kv = np.empty((n, d))
    ax = np.empty((n, d))
    av = np.empty((n, d))
    ns = 0
    times[ns] = 0.0
    xs[ns] = x
    vs[ns] = v
    ns += 1
    for step in range(1, nsteps + 1):
        _rk4_cs_step(x, v, beta, amp, dt, u, tx, tv, kv, ax, av)
        if step % stride == 0 or step == nsteps:
            times[ns] = step * dt
            xs[ns] = x
            vs[ns] = v
            ns += 1
    return ns


def cs_rk4_sample(x0, v0, beta, amp, dt, nsteps, stride):
    """RK4 alignment trajectory; returns (times, position and velocity snapshots)."""
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    cap = nsteps // stride + 2
    times = np.empty(cap)
    xs = np.empty((cap,) + x.shape)
    vs = np.empty((cap,) + v.shape)
    ns = _cs_rk4_kernel(x, v, float(beta), float(amp), float(dt), int(nsteps), int(stride), times, xs, vs)
    return times[:ns], xs[:ns], vs[:ns]


@njit(cache=True, nogil=True)
def _sparse_control(x, v, amp, bound, u):
    """Write the componentwise-sparse feedback into u; return the active index.

    Threshold: control is zero when max_i |vperp_i| <= gamma(X)^2, with
    gamma(X) the tail integral of the beta=1 power-law kernel scaled by
    sqrt(2N); otherwise the full budget pushes the worst agent (smallest
    index on ties) against its deviation.
    """
    n, d = x.shape
    for i in range(n):
        for c in range(d):
            u[i, c] = 0.0
    # deviations from the mean velocity; strict > keeps the smallest index on ties
    best = -1
    best_norm = 0.0
    vx = np.empty(d)
    for c in range(d):
        s = 0.0
        for i in range(n):
            s += v[i, c]
        vx[c] = s / n
    for i in range(n):
        s2 = 0.0
        for c in range(d):
            diff = v[i, c] - vx[c]
            s2 += diff * diff
        norm = math.sqrt(s2)
        if norm > best_norm:
            best_norm = norm
            best = i
    # spatial variance
    xs2 = 0.0
    for c in range(d):
        s = 0.0
        for i in range(n):
            s += x[i, c]
        xm = s / n
        for i in range(n):
            diff = x[i, c] - xm
            xs2 += diff * diff
    big_x = xs2 / n
    s2n = math.sqrt(2.0 * n)
    gamma = (amp / s2n) * (math.pi / 2.0 - math.atan(s2n * math.sqrt(big_x)))
    if best_norm <= gamma * gamma or best < 0:
        return -1
    scale = -bound / best_norm
    for c in range(d):
        u[best, c] = scale * (v[best, c] - vx[c])
    return best


@njit(cache=True, nogil=True)
def _region_margin(x, v, amp):
    """sqrt(V) distance to the alignment-region boundary (positive = inside)."""
    n, d = x.shape
    xs2 = 0.0
    vs2 = 0.0
    for c in range(d):
        sx = 0.0
        sv = 0.0
        for i in range(n):
            sx += x[i, c]
            sv += v[i, c]
        xm = sx / n
        vm = sv / n
        for i in range(n):
            dx = x[i, c] - xm
            dv = v[i, c] - vm
            xs2 += dx * dx
            vs2 += dv * dv
    big_x = xs2 / n
    big_v = vs2 / n
    s2n = math.sqrt(2.0 * n)
    gamma = (amp / s2n) * (math.pi / 2.0 - math.atan(s2n * math.sqrt(big_x)))
    return gamma - math.sqrt(big_v)


@njit(cache=True, nogil=True)
def _controlled_cs_kernel(
    x, v, beta, amp, bound, dt, nsteps, stride, hold, switch_off,
    times, xs, vs, u_norm, u_idx, idx_updates,
):
    n, d = x.shape
    u = np.zeros((n, d))
    tx = np.empty((n, d))
    tv = np.empty((n, d))
    kv = np.empty((n, d))
    ax = np.empty((n, d))
    av = np.empty((n, d))
    region_entry = -1.0
    off = False
    active = -1
    ns = 0
    nupd = 0
    if _region_margin(x, v, amp) >= 0.0:
        region_entry = 0.0
        if switch_off:
            off = True
    for step in range(nsteps):
        if step % hold == 0:
            if off:
                active = -1
                for i in range(n):
                    for c in range(d):
                        u[i, c] = 0.0
            else:
                active = _sparse_control(x, v, amp, bound, u)
            idx_updates[nupd] = active
            nupd += 1
        if step == 0:
            times[0] = 0.0
            xs[0] = x
            vs[0] = v
            u_norm[0] = bound if active >= 0 else 0.0
            u_idx[0] = active
            ns = 1
        _rk4_cs_step(x, v, beta, amp, dt, u, tx, tv, kv, ax, av)
        t = (step + 1) * dt
        if region_entry < 0.0 and _region_margin(x, v, amp) >= 0.0:
            region_entry = t
            if switch_off:
                off = True
                active = -1
                for i in range(n):
                    for c in range(d):
                        u[i, c] = 0.0
        if (step + 1) % stride == 0 or (step + 1) == nsteps:
            times[ns] = t
            xs[ns] = x
            vs[ns] = v
            u_norm[ns] = bound if active >= 0 else 0.0
            u_idx[ns] = active
            ns += 1
    return ns, nupd, region_entry


def controlled_cs_rk4(
    x0, v0, beta, amp, bound, dt, nsteps, stride=1, hold=1, switch_off_in_region=True
):
    """Sparse-feedback alignment run (RK4, control held over ``hold`` steps).

    Returns a dict with sampled times/snapshots, the per-sample control norm
    and active index, the active index at every control update (for switch
    counting), and the first time the state entered the alignment region.
    Only the beta = 1 power-law kernel is supported here; other kernels take
    the generic python path.
    """
    if beta != 1.0:
        raise ValueError("compiled controlled run supports the beta=1 kernel only")
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    cap = nsteps // stride + 2
    times = np.empty(cap)
    xs = np.empty((cap,) + x.shape)
    vs = np.empty((cap,) + v.shape)
    u_norm = np.zeros(cap)
    u_idx = np.full(cap, -1, dtype=np.int64)
    idx_updates = np.full(nsteps // hold + 2, -1, dtype=np.int64)
    ns, nupd, region_entry = _controlled_cs_kernel(
        x, v, float(beta), float(amp), float(bound), float(dt), int(nsteps),
        int(stride), int(hold), bool(switch_off_in_region),
        times, xs, vs, u_norm, u_idx, idx_updates,
    )
    return {
        "times": times[:ns],
        "positions": xs[:ns],
        "velocities": vs[:ns],
        "control_norm": u_norm[:ns],
        "active_index": u_idx[:ns],
        "index_updates": idx_updates[:nupd],
        "region_entry_time": region_entry if region_entry >= 0 else None,
    }


@njit(cache=True, nogil=True)
def _hk_edge_count(x, mode, r, k, linkmask):
    n = x.shape[0]
    total = 0
    for i in range(n):
        if mode == 0:
            for j in range(n):
                if abs(x[j] - x[i]) <= r or linkmask[i, j]:
                    total += 1
        else:
            d = np.empty(n)
            for j in range(n):
                d[j] = abs(x[j] - x[i])
            ds = np.sort(d)
            for j in range(n):
                rank = np.searchsorted(ds, d[j], side="right")
                if rank <= k or linkmask[i, j]:
                    total += 1
    return total


@njit(cache=True, nogil=True)
def _topo_window_rhs(x, k, link_off, link_dst, order, xs, prefix, pos_of, dxdt):
    """Rank-rule drift in 1D via sorted windows.

    The admitted set of agent i is all agents within the largest distance D
    whose inclusive count stays <= k, which is a contiguous window of the
    sorted positions; ties at a distance are absorbed all-or-nothing, exactly
    matching the counting rule.  Static links beyond D are added on top.
    """
    n = x.shape[0]
    ordv = np.argsort(x, kind="mergesort")
    for m in range(n):
        order[m] = ordv[m]
        xs[m] = x[ordv[m]]
        pos_of[ordv[m]] = m
    prefix[0] = 0.0
    for m in range(n):
        prefix[m + 1] = prefix[m] + xs[m]
    for i in range(n):
        xi = x[i]
        p = pos_of[i]
        lo = p
        hi = p
        cnt = 1
        while True:
            has_l = lo > 0
            has_r = hi < n - 1
            if not has_l and not has_r:
                break
            dl = xi - xs[lo - 1] if has_l else 0.0
            dr = xs[hi + 1] - xi if has_r else 0.0
            if has_l and has_r:
                dnext = dl if dl < dr else dr
            elif has_l:
                dnext = dl
            else:
                dnext = dr
            addl = 0
            q = lo
            while q > 0 and xi - xs[q - 1] == dnext:
                addl += 1
                q -= 1
            addr = 0
            q = hi
            while q < n - 1 and xs[q + 1] - xi == dnext:
                addr += 1
                q += 1
            if cnt + addl + addr > k:
                break
            lo -= addl
            hi += addr
            cnt += addl + addr
        s = (prefix[hi + 1] - prefix[lo]) - cnt * xi
        dmax = xi - xs[lo]
        if xs[hi] - xi > dmax:
            dmax = xs[hi] - xi
        for li in range(link_off[i], link_off[i + 1]):
            j = link_dst[li]
            dj = abs(x[j] - xi)
            if dj > dmax:
                s += x[j] - xi
                cnt += 1
        dxdt[i] = s / cnt


@njit(cache=True, nogil=True)
def _hk_kernel(
    x, mode, r, k, linkmask, link_off, link_dst, dt, max_steps, exit_tol,
    consensus_eps, stride, times, edges, snaps, record,
):
    n = x.shape[0]
    dxdt = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    xs_sorted = np.empty(n)
    prefix = np.empty(n + 1)
    pos_of = np.empty(n, dtype=np.int64)
    t_cons = -1.0
    ns = 0
    if consensus_eps > 0.0:
        xbar = 0.0
        for i in range(n):
            xbar += x[i]
        xbar /= n
        md = 0.0
        for i in range(n):
            a = abs(x[i] - xbar)
            if a > md:
                md = a
        if md <= consensus_eps:
            t_cons = 0.0
    if record:
        times[ns] = 0.0
        edges[ns] = _hk_edge_count(x, mode, r, k, linkmask)
        snaps[ns] = x
        ns += 1
    steps_done = 0
    for step in range(1, max_steps + 1):
        maxrhs = 0.0
        if mode == 0:
            for i in range(n):
                s = 0.0
                cnt = 0
                xi = x[i]
                for j in range(n):
                    if abs(x[j] - xi) <= r or linkmask[i, j]:
                        s += x[j] - xi
                        cnt += 1
                dxdt[i] = s / cnt
        else:
            _topo_window_rhs(x, k, link_off, link_dst, order, xs_sorted, prefix, pos_of, dxdt)
        for i in range(n):
            x[i] += dt * dxdt[i]
            a = abs(dxdt[i])
            if a > maxrhs:
                maxrhs = a
        steps_done = step
        if t_cons < 0.0 and consensus_eps > 0.0:
            xbar = 0.0
            for i in range(n):
                xbar += x[i]
            xbar /= n
            md = 0.0
            for i in range(n):
                a = abs(x[i] - xbar)
                if a > md:
                    md = a
            if md <= consensus_eps:
                t_cons = step * dt
        done = maxrhs < exit_tol or step == max_steps
        if record and (step % stride == 0 or done):
            times[ns] = step * dt
            edges[ns] = _hk_edge_count(x, mode, r, k, linkmask)
            snaps[ns] = x
            ns += 1
        if maxrhs < exit_tol:
            break
    return t_cons, steps_done, ns


def hk_run(
    x0,
    mode: str,
    r_or_k,
    links: np.ndarray | None = None,
    dt: float = 0.05,
    t_end: float = 50.0,
    exit_tol: float = 1e-10,
    consensus_eps: float = 1e-3,
    stride: int = 10,
    record: bool = False,
):
    """Explicit-Euler 1D bounded-confidence run with early equilibrium exit.

    mode is 'metric' (r_or_k = radius) or 'topological' (r_or_k = k).  The
    optional (L, 2) ``links`` array adds static undirected neighbor pairs on
    top of the state-dependent rule.  Returns a dict with the terminal
    opinions, consensus time (None when never concentrated), steps taken and,
    when ``record`` is set, the sampled times/edge counts/opinion snapshots.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    n = x.shape[0]
    linkmask = np.zeros((n, n), dtype=np.bool_)
    adjacency: list[list[int]] = [[] for _ in range(n)]
    if links is not None and len(links):
        for i, j in np.asarray(links, dtype=int):
            linkmask[i, j] = True
            linkmask[j, i] = True
            adjacency[i].append(j)
            adjacency[j].append(i)
    link_off = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        link_off[i + 1] = link_off[i] + len(adjacency[i])
    flat = [j for row in adjacency for j in row]
    link_dst = np.array(flat, dtype=np.int64) if flat else np.zeros(0, dtype=np.int64)
    mode_id = 0 if mode == "metric" else 1
    r = float(r_or_k) if mode_id == 0 else 0.0
    k = int(r_or_k) if mode_id == 1 else 0
    max_steps = int(round(t_end / dt))
    cap = (max_steps // stride + 2) if record else 1
    times = np.empty(cap)
    edges = np.empty(cap, dtype=np.int64)
    snaps = np.empty((cap, n))
    t_cons, steps_done, ns = _hk_kernel(
        x, mode_id, r, k, linkmask, link_off, link_dst, float(dt), max_steps,
        float(exit_tol), float(consensus_eps), int(stride), times, edges, snaps,
        bool(record),
    )
    out = {
        "opinions": x,
        "consensus_time": t_cons if t_cons >= 0 else None,
        "steps": steps_done,
        "final_time": steps_done * dt,
    }
    if record:
        out["times"] = times[:ns]
        out["edge_count"] = edges[:ns]
        out["snapshots"] = snaps[:ns]
    return out
