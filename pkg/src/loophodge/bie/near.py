"""Near-field quadrature for patch pairs that touch or lie close together.

Pairs are grouped by their parameter-space configuration (self, shared
edge, shared vertex, or merely close), so the inner integration points are
the same for every pair in a group and only the geometry differs. Each
unordered pair is integrated once and mirrored into the transposed block;
the cores are symmetric because the kernels are reciprocal.

Inner integrals over a touching source patch are done in polar coordinates
about the point nearest the outer point: the outer point itself for self
pairs, its foot on the shared edge, or the shared vertex. The radial
Jacobian cancels the 1/R singularity of the kernels, and integrating in the
polar angle keeps thin sub-triangles well resolved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .. import quadrature
from .kernels import pair_kernels
from .space import CurrentSpace, local_fields

__all__ = ["NearConfig", "classify_pairs", "near_mask", "inner_rule", "accumulate_near"]

_PC = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class NearConfig:
    outer_order: int = 8
    radial_breaks: tuple = (0.0, 0.15, 0.45, 1.0)
    radial_points: int = 4
    angular_points: int = 8
    near_order: int = 8
    near_factor: float = 1.5
    batch_points: int = 400_000


def classify_pairs(space: CurrentSpace, factor: float):
    """Map configuration keys to unordered (test, source) patch pair arrays.

    Keys: ``("s",)`` self, ``("e", ip_u, ip_v, iq_u, iq_v)`` shared edge with
    corner slots of the two shared vertices in each patch, ``("v", iq)``
    shared vertex at source slot ``iq``, ``("n",)`` close but disjoint.
    Every pair other than self appears once, with test index < source index.
    """
    surf = space.surface
    corners = np.array([s[:3] for s in surf.stencils])
    F = len(corners)
    inc = sparse.csr_matrix((np.ones(3 * F), (np.repeat(np.arange(F), 3), corners.ravel())),
                            shape=(F, surf.n_vertices))
    touch = sparse.triu(inc @ inc.T).tocoo()
    p, q, cnt = touch.row, touch.col, touch.data.astype(int)
    lists: dict = {}
    self_sel = p == q
    lists[("s",)] = (list(p[self_sel]), list(q[self_sel]))
    for k in np.nonzero(~self_sel)[0]:
        ip, iq = np.nonzero(corners[p[k]][:, None] == corners[q[k]][None, :])
        if cnt[k] == 1:
            key = ("v", int(iq[0]))
        else:
            key = ("e", int(ip[0]), int(ip[1]), int(iq[0]), int(iq[1]))
        a, b = lists.setdefault(key, ([], []))
        a.append(p[k])
        b.append(q[k])
    if factor > 0:
        tree = cKDTree(space.centroids)
        cand = tree.query_pairs(2 * factor * space.radii.max(), output_type="ndarray")
        if len(cand):
            a, b = cand.min(axis=1), cand.max(axis=1)
            d = np.linalg.norm(space.centroids[a] - space.centroids[b], axis=1)
            close = d < factor * (space.radii[a] + space.radii[b])
            touching = set(zip(p.tolist(), q.tolist()))
            keep = [i for i in np.nonzero(close)[0] if (a[i], b[i]) not in touching]
            if keep:
                lists[("n",)] = (list(a[keep]), list(b[keep]))
    return {k: (np.asarray(a, dtype=int), np.asarray(b, dtype=int)) for k, (a, b) in lists.items() if len(a)}


def near_mask(space: CurrentSpace, groups) -> np.ndarray:
    """Boolean (F, F) table of pairs handled by the near-field quadrature."""
    F = len(space.centroids)
    m = np.zeros((F, F), dtype=bool)
    for a, b in groups.values():
        m[a, b] = True
        m[b, a] = True
    return m


def _radial(cfg: NearConfig):
    xs, ws = [], []
    x, w = quadrature.gauss_legendre(cfg.radial_points)
    br = cfg.radial_breaks
    for lo, hi in zip(br[:-1], br[1:]):
        xs.append(lo + (hi - lo) * x)
        ws.append((hi - lo) * w)
    return np.concatenate(xs), np.concatenate(ws)


def _polar(apex, b, c, s, ws, t, wt):
    """Polar rule on triangles (apex[o], b, c): points (O, n, 2), weights (O, n)."""
    apex = np.atleast_2d(apex)
    eb = b[None, :] - apex
    ec = c[None, :] - apex
    th_b = np.arctan2(eb[:, 1], eb[:, 0])
    dth = np.arctan2(eb[:, 0] * ec[:, 1] - eb[:, 1] * ec[:, 0], np.einsum("od,od->o", eb, ec))
    th = th_b[:, None] + t[None, :] * dth[:, None]                 # (O, nt)
    u = np.stack([np.cos(th), np.sin(th)], axis=-1)                # (O, nt, 2)
    bc = c - b
    num = eb[:, 0] * bc[1] - eb[:, 1] * bc[0]                      # cross(b - a, c - b)
    den = u[..., 0] * bc[1] - u[..., 1] * bc[0]
    rmax = num[:, None] / den                                      # (O, nt)
    rho = s[None, :, None] * rmax[:, None, :]                      # (O, ns, nt)
    pts = apex[:, None, None, :] + rho[..., None] * u[:, None, :, :]
    w = (np.abs(dth)[:, None, None] * ws[None, :, None] * wt[None, None, :]
         * s[None, :, None] * rmax[:, None, :] ** 2)
    O = len(apex)
    return pts.reshape(O, -1, 2), w.reshape(O, -1)


def inner_rule(key, outer_params, cfg: NearConfig):
    """Inner parameter points (O, I, 2) and weights (O, I) for configuration ``key``."""
    O = len(outer_params)
    if key[0] == "n":
        p, w = quadrature.triangle_rule(cfg.near_order)
        return np.broadcast_to(p, (O,) + p.shape), np.broadcast_to(w, (O, len(w)))
    s, ws = _radial(cfg)
    t, wt = quadrature.gauss_legendre(cfg.angular_points)
    if key[0] == "s":
        tris = [(outer_params, _PC[i], _PC[(i + 1) % 3]) for i in range(3)]
    elif key[0] == "v":
        iq = key[1]
        apex = np.broadcast_to(_PC[iq], (O, 2))
        tris = [(apex, _PC[(iq + 1) % 3], _PC[(iq + 2) % 3])]
    else:
        _, ipu, ipv, iqu, iqv = key
        bary = np.column_stack([1 - outer_params.sum(1), outer_params[:, 0], outer_params[:, 1]])
        tpos = bary[:, ipv] / (bary[:, ipu] + bary[:, ipv])
        apex = _PC[iqu][None, :] + tpos[:, None] * (_PC[iqv] - _PC[iqu])[None, :]
        iqw = 3 - iqu - iqv
        tris = [(apex, _PC[iqv], _PC[iqw]), (apex, _PC[iqw], _PC[iqu])]
    pts, wts = zip(*(_polar(a, b, c, s, ws, t, wt) for a, b, c in tris))
    return np.concatenate(pts, axis=1), np.concatenate(wts, axis=1)


def _outer_rule(key, cfg: NearConfig):
    return quadrature.triangle_rule(cfg.near_order if key[0] == "n" else cfg.outer_order)


def accumulate_near(space: CurrentSpace, groups, k1, k2, cfg: NearConfig, E1, E2, M,
                    pairs_filter=None, want=("E1", "E2", "M")):
    """Add near-pair contributions to the core matrices in place.

    ``E1``/``E2`` receive jk A - (j/k) Phi for k1 and k2, ``M`` the
    curl-kernel core at k1 (see :mod:`loophodge.bie.operators`).
    """
    surf = space.surface
    targets = {"E1": E1, "E2": E2, "M": M}
    for key, (P, Q) in groups.items():
        if pairs_filter is not None:
            P, Q = pairs_filter(P, Q)
            if len(P) == 0:
                continue
        outer_p, outer_w = _outer_rule(key, cfg)
        ip, iw = inner_rule(key, outer_p, cfg)
        shared = key[0] in ("n", "v")
        if shared:
            ip, iw = np.ascontiguousarray(ip[0]), np.ascontiguousarray(iw[0])
        O, I = len(outer_w), iw.shape[-1]
        vp, vq = surf.valence[P], surf.valence[Q]
        npts = O * I if not shared else O + I
        step = max(1, cfg.batch_points // max(npts, O * I // 8))
        for a in np.unique(vp):
            for b in np.unique(vq):
                sel = np.nonzero((vp == a) & (vq == b))[0]
                for c0 in range(0, len(sel), step):
                    ch = sel[c0:c0 + step]
                    loc, rows, cols = _pair_batch(space, int(a), int(b), P[ch], Q[ch], outer_p, outer_w,
                                                  ip, iw, shared, k1, k2, want)
                    diag = P[ch] == Q[ch]
                    for name, blk in loc.items():
                        _scatter(targets[name], blk, rows, cols, diag)


def _scatter(target, blk, rows, cols, diag):
    """Add pair blocks and their mirrors; self blocks are symmetrized instead."""
    r = np.broadcast_to(rows[:, :, None], blk.shape)
    c = np.broadcast_to(cols[:, None, :], blk.shape)
    off = ~diag
    if off.any():
        np.add.at(target, (r[off], c[off]), blk[off])
        np.add.at(target, (c[off], r[off]), blk[off])
    if diag.any():
        sym = 0.5 * (blk[diag] + np.swapaxes(blk[diag], 1, 2))
        np.add.at(target, (r[diag], c[diag]), sym)


def _source_sums(rows, fext, shared):
    """``sum_i rows[..., r, i] * fext[..., i, m]`` with complex rows and real values.

    ``rows`` is (B, O, R, I); ``fext`` is (B, I, M) when ``shared``, else
    (B, O, I, M). Real and imaginary parts go through one real matmul.
    """
    R = rows.shape[2]
    stacked = np.concatenate([rows.real, rows.imag], axis=2)
    out = stacked @ (fext[:, None] if shared else fext)
    return out[:, :, :R] + 1j * out[:, :, R:]


def _test_sums(fp, Y):
    """``sum_{o,d} fp[b, o, a, d] Y[b, o, c, d]`` as a batched matmul."""
    B, O, L, _ = fp.shape
    lhs = fp.transpose(0, 2, 1, 3).reshape(B, L, O * 3)
    rhs = Y.transpose(0, 1, 3, 2).reshape(B, O * 3, Y.shape[2])
    return lhs @ rhs


def _pair_batch(space, va, vb, P, Q, outer_p, outer_w, ip, iw, shared, k1, k2, want):
    lp = local_fields(space, va, P, outer_p, outer_w)
    B, O = lp.wdA.shape
    origin = lp.pos.mean(axis=1)                                     # per-pair shift for the cross term
    xp = lp.pos - origin[:, None, :]
    fp, dp = lp.funcs, lp.div
    if shared:
        lq = local_fields(space, vb, Q, ip, iw)
        I = lq.wdA.shape[1]
        y4 = np.broadcast_to(lq.pos[:, None], (B, O, I, 3))
        yq = (lq.pos - origin[:, None, :])[:, None]                  # (B, 1, I, 3)
        Wq = lq.wdA[:, None, :]
    else:
        I = iw.shape[1]
        lq = local_fields(space, vb, Q, ip.reshape(-1, 2), iw.reshape(-1))
        y4 = lq.pos.reshape(B, O, I, 3)
        yq = y4 - origin[:, None, None, :]
        Wq = lq.wdA.reshape(B, O, I)
    L = lq.funcs.shape[-2]
    lead = (B, I) if shared else (B, O, I)
    fext = np.concatenate([lq.funcs.reshape(lead + (3 * L,)), lq.div.reshape(lead + (L,))], axis=-1)
    G1, G2, g1 = pair_kernels(lp.pos, y4, k1, k2)
    W = lp.wdA[:, :, None] * Wq
    rows, names = [], []
    for name, G in (("E1", G1), ("E2", G2)):
        if name in want:
            rows.append((W * G)[:, :, None])
            names.append(name)
    if "M" in want:
        gw = W * g1
        rows += [gw[:, :, None], np.moveaxis(gw[..., None] * yq, -1, 2)]
    sums = _source_sums(np.concatenate(rows, axis=2), fext, shared)   # (B, O, R, 4L)
    loc = {}
    for r, (name, k) in enumerate((n, k1 if n == "E1" else k2) for n in names):
        Y = sums[:, :, r, :3 * L].reshape(B, O, L, 3)
        A = _test_sums(fp, Y)
        S = np.einsum("boa,boc->bac", dp, sums[:, :, r, 3 * L:])
        loc[name] = 1j * k * A - (1j / k) * S
    if "M" in want:
        r = len(names)
        Y = sums[:, :, r, :3 * L].reshape(B, O, L, 3)
        Z = sums[:, :, r + 1:r + 4, :3 * L].reshape(B, O, 3, L, 3)     # [k, c, l] = sum y_k fq_l
        # a.(x x b) - a.(y x b) with a = fp(x), b = fq(y)
        yxb = np.stack([Z[:, :, 1, :, 2] - Z[:, :, 2, :, 1], Z[:, :, 2, :, 0] - Z[:, :, 0, :, 2],
                        Z[:, :, 0, :, 1] - Z[:, :, 1, :, 0]], axis=-1)
        ax = np.cross(fp, xp[:, :, None, :])
        loc["M"] = _test_sums(ax, Y) - _test_sums(fp, yxb)
    return loc, lp.gidx, lq.gidx
