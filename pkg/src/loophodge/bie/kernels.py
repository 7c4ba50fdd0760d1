"""Helmholtz kernel evaluation, numba and numpy variants.

For wavenumbers k1 (the operator wavenumber) and k2 (the complexified one)
the kernels are

    G_k(R) = exp(-j k R) / (4 pi R)
    g_k(R) = -(1 + j k R) exp(-j k R) / (4 pi R**3),   grad_x G_k = (x - y) g_k

Both variants fill the same output arrays; :data:`USE_NUMBA` (driven by the
``LOOPHODGE_DISABLE_NUMBA`` flag) picks which one the public functions use.
"""

from __future__ import annotations

import numpy as np

from .._accel import ENABLED, njit

USE_NUMBA = ENABLED
INV4PI = 1.0 / (4.0 * np.pi)

__all__ = ["far_kernels", "pair_kernels", "far_kernels_numpy", "far_kernels_numba",
           "pair_kernels_numpy", "pair_kernels_numba", "USE_NUMBA"]


# -- far field blocks: all point pairs, near patch pairs masked out -----------

def far_kernels_numpy(x, px, y, py, near, k1, k2):
    d = x[:, None, :] - y[None, :, :]
    R = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    mask = near[px][:, py] | (R == 0.0)
    R = np.where(mask, 1.0, R)
    e1 = np.exp(-1j * k1 * R)
    G1 = e1 * (INV4PI / R)
    G2 = np.exp(-1j * k2 * R) * (INV4PI / R)
    g1 = -(1.0 + 1j * k1 * R) * e1 * (INV4PI / R ** 3)
    G1[mask] = 0.0
    G2[mask] = 0.0
    g1[mask] = 0.0
    return G1, G2, g1


@njit(cache=True, fastmath=False)
def _far_kernels_nb(x, px, y, py, near, k1, k2, G1, G2, g1):
    n, m = x.shape[0], y.shape[0]
    for i in range(n):
        pi = px[i]
        for j in range(m):
            if near[pi, py[j]]:
                G1[i, j] = 0.0
                G2[i, j] = 0.0
                g1[i, j] = 0.0
                continue
            dx = x[i, 0] - y[j, 0]
            dy = x[i, 1] - y[j, 1]
            dz = x[i, 2] - y[j, 2]
            R = np.sqrt(dx * dx + dy * dy + dz * dz)
            if R == 0.0:
                G1[i, j] = 0.0
                G2[i, j] = 0.0
                g1[i, j] = 0.0
                continue
            e1 = np.exp(-1j * k1 * R)
            inv = INV4PI / R
            G1[i, j] = e1 * inv
            G2[i, j] = np.exp(-1j * k2 * R) * inv
            g1[i, j] = -(1.0 + 1j * k1 * R) * e1 * inv / (R * R)


def far_kernels_numba(x, px, y, py, near, k1, k2):
    n, m = len(x), len(y)
    G1 = np.empty((n, m), np.complex128)
    G2 = np.empty((n, m), np.complex128)
    g1 = np.empty((n, m), np.complex128)
    _far_kernels_nb(np.ascontiguousarray(x, np.float64), np.ascontiguousarray(px, np.int64),
                    np.ascontiguousarray(y, np.float64), np.ascontiguousarray(py, np.int64),
                    np.ascontiguousarray(near, np.bool_), complex(k1), complex(k2), G1, G2, g1)
    return G1, G2, g1


def far_kernels(x, px, y, py, near, k1, k2):
    """Kernel blocks G_k1, G_k2, g_k1 for points x (patch px) against y (patch py).

    Entries whose patch pair is flagged in ``near`` are zero; they are
    integrated separately by the near-field quadrature.
    """
    if USE_NUMBA:
        return far_kernels_numba(x, px, y, py, near, k1, k2)
    return far_kernels_numpy(x, px, y, py, near, k1, k2)


# -- near field: per outer point, its own inner points -----------------------

def pair_kernels_numpy(x, y, k1, k2):
    d = x[..., None, :] - y
    R = np.sqrt(np.einsum("...k,...k->...", d, d))
    bad = R == 0.0
    R = np.where(bad, 1.0, R)
    e1 = np.exp(-1j * k1 * R)
    G1 = e1 * (INV4PI / R)
    G2 = np.exp(-1j * k2 * R) * (INV4PI / R)
    g1 = -(1.0 + 1j * k1 * R) * e1 * (INV4PI / R ** 3)
    for a in (G1, G2, g1):
        a[bad] = 0.0
    return G1, G2, g1


@njit(cache=True, fastmath=False)
def _pair_kernels_nb(x, y, k1, k2, G1, G2, g1):
    nb, no, ni = y.shape[0], y.shape[1], y.shape[2]
    for b in range(nb):
        for o in range(no):
            for i in range(ni):
                dx = x[b, o, 0] - y[b, o, i, 0]
                dy = x[b, o, 1] - y[b, o, i, 1]
                dz = x[b, o, 2] - y[b, o, i, 2]
                R = np.sqrt(dx * dx + dy * dy + dz * dz)
                if R == 0.0:
                    G1[b, o, i] = 0.0
                    G2[b, o, i] = 0.0
                    g1[b, o, i] = 0.0
                    continue
                e1 = np.exp(-1j * k1 * R)
                inv = INV4PI / R
                G1[b, o, i] = e1 * inv
                G2[b, o, i] = np.exp(-1j * k2 * R) * inv
                g1[b, o, i] = -(1.0 + 1j * k1 * R) * e1 * inv / (R * R)


def pair_kernels_numba(x, y, k1, k2):
    shape = y.shape[:-1]
    G1 = np.empty(shape, np.complex128)
    G2 = np.empty(shape, np.complex128)
    g1 = np.empty(shape, np.complex128)
    _pair_kernels_nb(np.ascontiguousarray(x, np.float64), np.ascontiguousarray(y, np.float64),
                     complex(k1), complex(k2), G1, G2, g1)
    return G1, G2, g1


def pair_kernels(x, y, k1, k2):
    """Kernels between outer points x (B, O, 3) and their inner points y (B, O, I, 3)."""
    if USE_NUMBA:
        return pair_kernels_numba(x, y, k1, k2)
    return pair_kernels_numpy(x, y, k1, k2)


# -- fused far-field Galerkin assembly ----------------------------------------

@njit(cache=True, fastmath=False)
def _far_assemble_nb(x, pid, near, gidx, nloc, vals, k1, k2, w1, w2, wm, i0, i1, N, E1, E2, M):
    P1 = np.zeros((N, 4), np.complex128)
    P2 = np.zeros((N, 4), np.complex128)
    Pm = np.zeros((N, 6), np.complex128)
    a1 = 1j * k1
    b1 = -1j / k1
    a2 = 1j * k2
    b2 = -1j / k2
    for i in range(i0, i1):
        P1[:, :] = 0.0
        P2[:, :] = 0.0
        Pm[:, :] = 0.0
        pi = pid[i]
        for j in range(i):
            if near[pi, pid[j]]:
                continue
            dx = x[i, 0] - x[j, 0]
            dy = x[i, 1] - x[j, 1]
            dz = x[i, 2] - x[j, 2]
            R = np.sqrt(dx * dx + dy * dy + dz * dz)
            if R == 0.0:
                continue
            inv = INV4PI / R
            e1 = np.exp(-1j * k1 * R)
            G1 = e1 * inv
            G2 = np.exp(-1j * k2 * R) * inv if w2 else 0.0j
            g1 = -(1.0 + 1j * k1 * R) * e1 * inv / (R * R)
            for l in range(nloc[j]):
                n = gidx[j, l]
                if w1:
                    for c in range(4):
                        P1[n, c] += G1 * vals[j, l, c]
                if w2:
                    for c in range(4):
                        P2[n, c] += G2 * vals[j, l, c]
                if wm:
                    for c in range(3):
                        Pm[n, c] += g1 * vals[j, l, c]
                        Pm[n, 3 + c] += g1 * vals[j, l, 4 + c]
        for a in range(nloc[i]):
            r = gidx[i, a]
            t0 = vals[i, a, 0]
            t1 = vals[i, a, 1]
            t2 = vals[i, a, 2]
            t3 = vals[i, a, 3]
            c0 = vals[i, a, 4]
            c1 = vals[i, a, 5]
            c2 = vals[i, a, 6]
            for n in range(N):
                if w1:
                    E1[r, n] += a1 * (t0 * P1[n, 0] + t1 * P1[n, 1] + t2 * P1[n, 2]) + b1 * t3 * P1[n, 3]
                if w2:
                    E2[r, n] += a2 * (t0 * P2[n, 0] + t1 * P2[n, 1] + t2 * P2[n, 2]) + b2 * t3 * P2[n, 3]
                if wm:
                    M[r, n] += (c0 * Pm[n, 0] + c1 * Pm[n, 1] + c2 * Pm[n, 2]
                                + t0 * Pm[n, 3] + t1 * Pm[n, 4] + t2 * Pm[n, 5])


def far_assemble_numba(x, pid, near, gidx, nloc, vals, k1, k2, want, E1, E2, M, i0=0, i1=None):
    """Fused far-field sums into the dense cores, in place.

    ``vals`` (Npts, L, 7) holds the weighted values [jx, jy, jz, div, cx, cy, cz]
    of the ``nloc[i]`` functions at point i with global indices ``gidx``;
    ``c`` is J x (x - origin). Every core is symmetric (the point rule is the
    same on both sides), so only pairs j < i are summed and then mirrored.
    Test points ``i0:i1`` restrict the outer loop (for chunked progress).
    """
    i1 = len(x) if i1 is None else i1
    N = E1.shape[0]
    X1 = np.zeros((N, N), np.complex128) if "E1" in want else np.zeros((1, 1), np.complex128)
    X2 = np.zeros((N, N), np.complex128) if "E2" in want else np.zeros((1, 1), np.complex128)
    Xm = np.zeros((N, N), np.complex128) if "M" in want else np.zeros((1, 1), np.complex128)
    _far_assemble_nb(np.ascontiguousarray(x, np.float64), np.ascontiguousarray(pid, np.int64),
                     np.ascontiguousarray(near, np.bool_), np.ascontiguousarray(gidx, np.int64),
                     np.ascontiguousarray(nloc, np.int64), np.ascontiguousarray(vals, np.float64),
                     complex(k1), complex(k2), "E1" in want, "E2" in want, "M" in want,
                     int(i0), int(i1), N, X1, X2, Xm)
    for name, X, target in (("E1", X1, E1), ("E2", X2, E2), ("M", Xm, M)):
        if name in want:
            target += X
            target += X.T


# -- blocked far-field assembly: patch-chunk pairs through BLAS ---------------

@njit(cache=True, fastmath=False)
def _far_blocks_nb(x, bstart, bcount, bpatch, near, gidx, nloc, V4, V6, T, k1, k2, w1, w2, wm, N, E1, E2, M):
    """T (Npts, 7L) holds the values [div, jx, jy, jz, cx, cy, cz] x L;
    V4 = T[:, :4L] and V6 = T[:, L:] are contiguous copies for the source side."""
    nb = bstart.shape[0]
    Lm = gidx.shape[1]
    # exp(-j k R) through real trig when possible; k2 - k1 purely imaginary needs only a real exp
    kr = k1.real
    ki = k1.imag
    k1_real = True
    dki = (k2 - k1).imag
    dk_imag = (k2 - k1).real == 0.0
    cmax = bcount.max()
    P1 = np.zeros((cmax, 4 * N), np.complex128)
    P2 = np.zeros((cmax, 4 * N), np.complex128)
    Pm = np.zeros((cmax, 6 * N), np.complex128)
    for bp in range(nb):
        sp = bstart[bp]
        cp = bcount[bp]
        pp = bpatch[bp]
        P1[:cp] = 0.0
        P2[:cp] = 0.0
        Pm[:cp] = 0.0
        touched = False
        for bq in range(bp):
            if near[pp, bpatch[bq]]:
                continue
            touched = True
            sq = bstart[bq]
            cq = bcount[bq]
            # real and imaginary parts stacked so the source products are real GEMMs
            K1 = np.empty((2 * cp, cq))
            K2 = np.empty((2 * cp, cq))
            Kg = np.empty((2 * cp, cq))
            for i in range(cp):
                for j in range(cq):
                    dx = x[sp + i, 0] - x[sq + j, 0]
                    dy = x[sp + i, 1] - x[sq + j, 1]
                    dz = x[sp + i, 2] - x[sq + j, 2]
                    R = np.sqrt(dx * dx + dy * dy + dz * dz)
                    inv = INV4PI / R
                    if k1_real:
                        e1 = complex(np.cos(kr * R), -np.sin(kr * R)) * np.exp(ki * R)
                    else:
                        e1 = np.exp(-1j * k1 * R)
                    v = e1 * inv
                    K1[i, j] = v.real
                    K1[cp + i, j] = v.imag
                    if w2:
                        if dk_imag:
                            v = e1 * (np.exp(dki * R) * inv)
                        else:
                            v = np.exp(-1j * k2 * R) * inv
                        K2[i, j] = v.real
                        K2[cp + i, j] = v.imag
                    v = -(1.0 + 1j * k1 * R) * e1 * inv / (R * R)
                    Kg[i, j] = v.real
                    Kg[cp + i, j] = v.imag
            nl = nloc[bpatch[bq]]
            g = gidx[bpatch[bq]]
            if w1:
                Y = np.dot(K1, V4[sq:sq + cq])
                for i in range(cp):
                    for c in range(4):
                        for l in range(nl):
                            P1[i, c * N + g[l]] += complex(Y[i, c * Lm + l], Y[cp + i, c * Lm + l])
            if w2:
                Y = np.dot(K2, V4[sq:sq + cq])
                for i in range(cp):
                    for c in range(4):
                        for l in range(nl):
                            P2[i, c * N + g[l]] += complex(Y[i, c * Lm + l], Y[cp + i, c * Lm + l])
            if wm:
                Y = np.dot(Kg, V6[sq:sq + cq])
                for i in range(cp):
                    for c in range(6):
                        for l in range(nl):
                            Pm[i, c * N + g[l]] += complex(Y[i, c * Lm + l], Y[cp + i, c * Lm + l])
        if not touched:
            continue
        nl = nloc[pp]
        g = gidx[pp]
        Tp = T[sp:sp + cp]
        # test side: out[g[a], n] += sum_{i, c} T[i, c, a] P[i, c, n]
        if w1 or w2:
            A = np.zeros((Lm, cp * 4), np.complex128)
            for i in range(cp):
                for c in range(4):
                    for a in range(nl):
                        A[a, i * 4 + c] = Tp[i, c * Lm + a]
            for w, P, kk, out in ((w1, P1, k1, E1), (w2, P2, k2, E2)):
                if not w:
                    continue
                # div channel carries -j/k, vector channels jk
                C = A.copy()
                for i in range(cp):
                    for a in range(nl):
                        C[a, i * 4] *= -1.0 / (kk * kk)
                B = (1j * kk) * np.dot(C[:nl].copy(), P[:cp].copy().reshape(cp * 4, N))
                for a in range(nl):
                    for n in range(N):
                        out[g[a], n] += B[a, n]
        if wm:
            # test cx pairs with source j (channels 0..2), test j with source cx (channels 3..5)
            A = np.zeros((Lm, cp * 6), np.complex128)
            for i in range(cp):
                for d in range(3):
                    for a in range(nl):
                        A[a, i * 6 + d] = Tp[i, (4 + d) * Lm + a]
                        A[a, i * 6 + 3 + d] = Tp[i, (1 + d) * Lm + a]
            B = np.dot(A[:nl].copy(), Pm[:cp].copy().reshape(cp * 6, N))
            for a in range(nl):
                for n in range(N):
                    M[g[a], n] += B[a, n]


def far_blocks(points, patch, near, local_index, local_count, packed, block_size=64):
    """Block layout for :func:`far_assemble_blocks` from a far rule's per-point arrays."""
    # contiguous runs of one patch, cut into chunks of at most block_size points
    starts, counts, pids = [], [], []
    edges = np.flatnonzero(np.diff(patch)) + 1
    run_starts = np.concatenate([[0], edges])
    run_ends = np.concatenate([edges, [len(patch)]])
    for s, e in zip(run_starts, run_ends):
        for c0 in range(s, e, block_size):
            starts.append(c0)
            counts.append(min(block_size, e - c0))
            pids.append(patch[s])
    F = int(patch.max()) + 1
    Lm = local_index.shape[1]
    gidx = np.zeros((F, Lm), np.int64)
    nloc = np.zeros(F, np.int64)
    gidx[patch] = local_index
    nloc[patch] = local_count
    return (np.asarray(starts, np.int64), np.asarray(counts, np.int64), np.asarray(pids, np.int64), gidx, nloc)


def far_assemble_blocks(points, patch, near, local_index, local_count, packed, k1, k2, want, E1, E2, M,
                        block_size=64):
    """Blocked far-field assembly, same result as :func:`far_assemble_numba`."""
    bstart, bcount, bpatch, gidx, nloc = far_blocks(points, patch, near, local_index, local_count, packed,
                                                    block_size)
    N = E1.shape[0]
    Lm = local_index.shape[1]
    # channels [div, jx, jy, jz, cx, cy, cz], each a run of L values
    order = [3, 0, 1, 2, 4, 5, 6]
    V = np.ascontiguousarray(packed[:, :, order].transpose(0, 2, 1).reshape(len(points), -1), np.float64)
    k1 = complex(k1)
    k2 = complex(k2)
    X = [np.zeros((N, N), np.complex128) if n in want else np.zeros((1, 1), np.complex128)
         for n in ("E1", "E2", "M")]
    _far_blocks_nb(np.ascontiguousarray(points, np.float64), bstart, bcount, bpatch,
                   np.ascontiguousarray(near, np.bool_), gidx, nloc, np.ascontiguousarray(V[:, :4 * Lm]),
                   np.ascontiguousarray(V[:, Lm:]), V, k1, k2,
                   "E1" in want, "E2" in want, "M" in want, N, X[0], X[1], X[2])
    for name, Xn, target in zip(("E1", "E2", "M"), X, (E1, E2, M)):
        if name in want:
            target += Xn
            target += Xn.T
