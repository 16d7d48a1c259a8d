"""Pure numpy implementations of the hot kernels.

These mirror the compiled routines in ``_kernels_ext`` one-for-one and are
used whenever the extension is unavailable or ``PUPRIOR_BACKEND=python``.
Blocks are visited in a fixed order so results are reproducible bit for bit
on a given machine.
"""

import numpy as np

BLOCK = 256


def _sq_dists(a, b, a_sq, b_sq):
    d2 = a_sq[:, None] + b_sq[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def kernel_row_sums(a, b, tau, block=BLOCK, num_threads=1):
    """Return ``r[i] = sum_j exp(-tau * |a_i - b_j|^2)``.

    ``num_threads`` is accepted for signature parity with the compiled
    backend and ignored here.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    a_sq = np.einsum("ij,ij->i", a, a)
    b_sq = np.einsum("ij,ij->i", b, b)
    out = np.zeros(a.shape[0])
    for i0 in range(0, a.shape[0], block):
        i1 = min(i0 + block, a.shape[0])
        acc = np.zeros(i1 - i0)
        for j0 in range(0, b.shape[0], block):
            j1 = min(j0 + block, b.shape[0])
            d2 = _sq_dists(a[i0:i1], b[j0:j1], a_sq[i0:i1], b_sq[j0:j1])
            d2 *= -tau
            np.exp(d2, out=d2)
            acc += d2.sum(axis=1)
        out[i0:i1] = acc
    return out


def cross_kernel_sum(a, b, tau, block=BLOCK, num_threads=1):
    """Sum of all kernel values between rows of ``a`` and rows of ``b``."""
    rows = kernel_row_sums(a, b, tau, block, num_threads)
    total = 0.0
    for i0 in range(0, rows.shape[0], block):
        total += float(rows[i0:i0 + block].sum())
    return total


def kernel_column(z, j, tau):
    diff = z - z[j]
    return np.exp(-tau * np.einsum("ij,ij->i", diff, diff))


def _ensure(z, j, tau, cache, have):
    if not have[j]:
        cache[j] = kernel_column(z, j, tau)
        have[j] = 1
    return cache[j]


FW_VANILLA, FW_PAIRWISE, FW_OPEN_LOOP = 0, 1, 2


def fw_solve(z, tau, b, mu_sq, w, gw, wgw, wb, max_iter, tol, cache, have,
             history, mode=FW_PAIRWISE):
    """Frank-Wolfe on the simplex for ``f(w) = mu_sq - 2 w.b + w'Gw``.

    ``G`` is the Gram matrix of the rows of ``z``; its rows are filled into
    ``cache`` on first use (``have[j]`` marks filled rows). ``w`` and ``gw``
    (= ``G @ w``) are updated in place.

    Each step moves toward the vertex ``j`` with the smallest gradient
    coordinate. The vanilla variant shrinks all other weights; the pairwise
    variant takes the mass from the active vertex with the largest gradient
    coordinate. Both use exact line search, so the objective never
    increases. The open-loop variant is the vanilla step with the fixed
    size ``2 / (t + 2)``; its objective can go up, and it stops only on the
    iteration cap or a small absolute relative change. ``history[t]`` receives the objective after
    step ``t``.

    Returns ``(f, wgw, wb, n_iter, converged)``.
    """
    f = mu_sq - 2.0 * wb + wgw
    n_iter = 0
    converged = False
    for t in range(max_iter):
        if f <= 0.0 and mode != FW_OPEN_LOOP:
            converged = True
            break
        g = gw - b
        j = int(np.argmin(g))
        gap = float(w @ g) - g[j]
        if gap <= 0.0 and mode != FW_OPEN_LOOP:
            converged = True
            break
        col_j = _ensure(z, j, tau, cache, have)
        gw_j = gw[j]
        if mode == FW_PAIRWISE:
            active = np.flatnonzero(w > 0.0)
            a = int(active[np.argmax(g[active])])
            if a == j:
                converged = True
                break
            col_a = _ensure(z, a, tau, cache, have)
            gd = g[j] - g[a]
            dgd = col_j[j] + col_a[a] - 2.0 * col_j[a]
            s_max = w[a]
            s = s_max if dgd <= 0.0 else min(s_max, -gd / dgd)
            gw_a = gw[a]
            w[j] += s
            if s == s_max:
                w[a] = 0.0
            else:
                w[a] -= s
            gw += s * (col_j - col_a)
            wgw = wgw + 2.0 * s * (gw_j - gw_a) + s * s * dgd
            wb = wb + s * (b[j] - b[a])
        else:
            if mode == FW_OPEN_LOOP:
                s = 2.0 / (t + 2.0)
            else:
                dgd = col_j[j] - 2.0 * gw_j + wgw
                s = 1.0 if dgd <= 0.0 else min(1.0, gap / dgd)
            w *= 1.0 - s
            w[j] += s
            gw *= 1.0 - s
            gw += s * col_j
            wgw = (1.0 - s) ** 2 * wgw + 2.0 * s * (1.0 - s) * gw_j + s * s * col_j[j]
            wb = (1.0 - s) * wb + s * b[j]
        f_new = mu_sq - 2.0 * wb + wgw
        history[t] = f_new
        n_iter = t + 1
        decrease = f - f_new
        if mode == FW_OPEN_LOOP:
            decrease = abs(decrease)
        f = f_new
        if decrease < tol * max(f + decrease, 0.0):
            converged = True
            break
    return f, wgw, wb, n_iter, converged
