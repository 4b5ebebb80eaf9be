"""Compiled event loop for the joint (channel, schedule, queue) process.

Every pending event is an absolute time in a flat array; the next event is
found by a linear scan, which beats a heap at the link counts simulated
here.  Exponential timers are re-drawn whenever their rate changes, which is
exact because the kernel is time-homogeneous between such changes.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

INF = np.inf

# policy modes
STATIC, RATE_BASED, QUEUE_BASED = 0, 1, 2
# arrival modes
POISSON, FLUID = 0, 1
# channel modes
FACTORED, JOINT = 0, 1


@njit(cache=True)
def _exp(rate):
    if rate <= 0.0:
        return INF
    return np.random.exponential(1.0 / rate)


@njit(cache=True)
def _pick(cum, row):
    u = np.random.random()
    m = cum.shape[-1]
    for v in range(m):
        if u < cum[row, v]:
            return v
    return m - 1


@njit(cache=True)
def _redraw(i, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma):
    if sigma[i] == 1:
        tcsma[i] = t + _exp(g_tab[i, lev[i]])
    elif nb_busy[i] == 0:
        tcsma[i] = t + _exp(f_tab[i, lev[i]])
    else:
        tcsma[i] = INF


@njit(cache=True)
def _dynamic_tables(mode, r, kvals, j, f_tab, g_tab):
    n, m = f_tab.shape
    for i in range(n):
        for u in range(m):
            if mode == RATE_BASED:
                f_tab[i, u] = j + 1.0
                g_tab[i, u] = (j + 1.0) * math.exp(-r[i] * kvals[u])
            else:
                gg = math.exp(r[i] * kvals[u])
                g_tab[i, u] = gg
                f_tab[i, u] = gg * gg


@njit(cache=True)
def _queue_rates(Q, r):
    wmax = 0.0
    n = Q.shape[0]
    for i in range(n):
        w = math.log(math.log(Q[i] + math.e))
        r[i] = w
        if w > wmax:
            wmax = w
    s = math.sqrt(wmax)
    for i in range(n):
        if r[i] < s:
            r[i] = s


@njit(cache=True)
def run_kernel(indptr, indices, levels, ch_mode, link_exit, link_cum, joint_exit, joint_cum,
               joint_table, init_levels, pol_mode, backoff, holding, kvals, lam, arr_mode,
               horizon, seed, sample_times, snap_times, frame_cap, check):
    np.random.seed(seed)
    n = lam.shape[0]
    m = levels.shape[0]

    lev = init_levels.copy()
    jcode = 0
    if ch_mode == JOINT:
        for i in range(n):
            jcode = jcode * m + lev[i]

    f_tab = backoff.copy()
    g_tab = holding.copy()
    r = np.zeros(n)
    j = 0
    if pol_mode != STATIC:
        _dynamic_tables(pol_mode, r, kvals, j, f_tab, g_tab)

    sigma = np.zeros(n, dtype=np.int64)
    nb_busy = np.zeros(n, dtype=np.int64)
    Q = np.zeros(n)
    A = np.zeros(n)
    D = np.zeros(n)
    Dhat = np.zeros(n)
    busy = np.zeros(n)

    tcsma = np.empty(n)
    tch = np.full(n, INF)
    tarr = np.full(n, INF)
    t = 0.0
    for i in range(n):
        _redraw(i, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma)
        if ch_mode == FACTORED:
            tch[i] = _exp(link_exit[i, lev[i]])
        if arr_mode == POISSON:
            tarr[i] = _exp(lam[i])
    tjoint = _exp(joint_exit[jcode]) if ch_mode == JOINT else INF

    # rate-based frame bookkeeping
    frame_end = 1.0 if pol_mode == RATE_BASED else INF
    frame_arr = np.zeros(n)
    frame_srv = np.zeros(n)
    frame_start = 0.0
    fr_t = np.zeros(frame_cap)
    fr_r = np.zeros((frame_cap, n))
    fr_lam = np.zeros((frame_cap, n))
    fr_srv = np.zeros((frame_cap, n))
    n_frames = 0
    tick = 1.0 if pol_mode == QUEUE_BASED else INF

    S = sample_times.shape[0]
    out_Q = np.zeros((S, n))
    out_A = np.zeros((S, n))
    out_D = np.zeros((S, n))
    out_Dhat = np.zeros((S, n))
    out_busy = np.zeros((S, n))
    out_r = np.zeros((S, n))
    k_sample = 0
    P = snap_times.shape[0]
    snap_sched = np.zeros(P, dtype=np.int64)
    snap_ch = np.zeros(P, dtype=np.int64)
    k_snap = 0
    n_events = 0
    violations = 0

    while True:
        # next event among all timer arrays
        t_next = horizon
        kind = 0  # 0 horizon, 1 csma, 2 link channel, 3 joint channel, 4 arrival, 5 frame, 6 tick, 7 sample, 8 snapshot
        who = -1
        for i in range(n):
            if tcsma[i] < t_next:
                t_next, kind, who = tcsma[i], 1, i
            if tch[i] < t_next:
                t_next, kind, who = tch[i], 2, i
            if tarr[i] < t_next:
                t_next, kind, who = tarr[i], 4, i
        if tjoint < t_next:
            t_next, kind = tjoint, 3
        if frame_end < t_next:
            t_next, kind = frame_end, 5
        if tick < t_next:
            t_next, kind = tick, 6
        if k_sample < S and sample_times[k_sample] <= t_next:
            t_next, kind = sample_times[k_sample], 7
        if k_snap < P and snap_times[k_snap] < t_next:
            t_next, kind = snap_times[k_snap], 8

        # integrate the fluid quantities over [t, t_next)
        dt = t_next - t
        if dt > 0.0:
            for i in range(n):
                s = sigma[i] * levels[lev[i]]
                Dhat[i] += s * dt
                busy[i] += sigma[i] * dt
                frame_srv[i] += s * dt
                inflow = lam[i] if arr_mode == FLUID else 0.0
                if arr_mode == FLUID:
                    A[i] += inflow * dt
                    frame_arr[i] += inflow * dt
                net = inflow - s
                if net >= 0.0 or Q[i] + net * dt >= 0.0:
                    Q[i] += net * dt
                    D[i] += s * dt
                else:
                    tau = Q[i] / (s - inflow)
                    D[i] += s * tau + inflow * (dt - tau)
                    Q[i] = 0.0
                if Q[i] < 0.0:
                    Q[i] = 0.0
        t = t_next

        if kind == 7:
            for i in range(n):
                out_Q[k_sample, i] = Q[i]
                out_A[k_sample, i] = A[i]
                out_D[k_sample, i] = D[i]
                out_Dhat[k_sample, i] = Dhat[i]
                out_busy[k_sample, i] = busy[i]
                out_r[k_sample, i] = r[i]
            k_sample += 1
            if k_sample == S and t >= horizon:
                break
            continue
        if kind == 0:
            break
        n_events += 1

        if kind == 1:
            i = who
            if sigma[i] == 1:
                sigma[i] = 0
                for p in range(indptr[i], indptr[i + 1]):
                    nb = indices[p]
                    nb_busy[nb] -= 1
                    if nb_busy[nb] == 0 and sigma[nb] == 0:
                        _redraw(nb, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma)
            else:
                sigma[i] = 1
                for p in range(indptr[i], indptr[i + 1]):
                    nb = indices[p]
                    nb_busy[nb] += 1
                    tcsma[nb] = INF
            _redraw(i, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma)
            if check:
                for a in range(n):
                    if sigma[a] == 1:
                        for p in range(indptr[a], indptr[a + 1]):
                            if sigma[indices[p]] == 1:
                                violations += 1
        elif kind == 2:
            i = who
            lev[i] = _pick(link_cum[i], lev[i])
            tch[i] = t + _exp(link_exit[i, lev[i]])
            _redraw(i, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma)
        elif kind == 3:
            jcode = _pick(joint_cum, jcode)
            for i in range(n):
                if joint_table[jcode, i] != lev[i]:
                    lev[i] = joint_table[jcode, i]
                    _redraw(i, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma)
            tjoint = t + _exp(joint_exit[jcode])
        elif kind == 4:
            i = who
            Q[i] += 1.0
            A[i] += 1.0
            frame_arr[i] += 1.0
            tarr[i] = t + _exp(lam[i])
        elif kind == 5:
            length = frame_end - frame_start
            step = 1.0 / max(j, 1)
            if n_frames < frame_cap:
                fr_t[n_frames] = t
            for i in range(n):
                lh = frame_arr[i] / length
                sh = frame_srv[i] / length
                r[i] += step * (lh - sh)
                if n_frames < frame_cap:
                    fr_lam[n_frames, i] = lh
                    fr_srv[n_frames, i] = sh
                    fr_r[n_frames, i] = r[i]
                frame_arr[i] = 0.0
                frame_srv[i] = 0.0
            n_frames += 1
            j += 1
            frame_start = frame_end
            frame_end = frame_start + math.exp(math.sqrt(j))
            _dynamic_tables(pol_mode, r, kvals, j, f_tab, g_tab)
            for i in range(n):
                _redraw(i, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma)
        elif kind == 6:
            _queue_rates(Q, r)
            _dynamic_tables(pol_mode, r, kvals, j, f_tab, g_tab)
            for i in range(n):
                _redraw(i, t, sigma, nb_busy, lev, f_tab, g_tab, tcsma)
            tick += 1.0
        elif kind == 8:
            code = 0
            cc = 0
            for i in range(n):
                code = code * 2 + sigma[i]
                cc = cc * m + lev[i]
            snap_sched[k_snap] = code
            snap_ch[k_snap] = cc
            k_snap += 1

    return (out_Q, out_A, out_D, out_Dhat, out_busy, out_r, fr_t, fr_r, fr_lam, fr_srv,
            min(n_frames, frame_cap), snap_sched, snap_ch, n_events, violations)
