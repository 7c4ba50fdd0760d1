"""Quadrature rules on the interval and on the unit triangle.

Triangle rules are conical (collapsed) products: Gauss-Jacobi in the collapsed
direction and Gauss-Legendre along it. ``triangle_rule(order)`` integrates
every polynomial of total degree ``<= order`` exactly on
``{(v, w): v, w >= 0, v + w <= 1}``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

__all__ = ["gauss_legendre", "triangle_rule", "subtriangle_rule", "split_rule"]


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """``n``-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = roots_legendre(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def triangle_rule(order: int):
    """Points ``(Q, 2)`` as ``(v, w)`` and weights ``(Q,)`` summing to 1/2."""
    if order < 0:
        raise ValueError("order must be non-negative")
    n = max(1, (order + 2) // 2)
    s, ws = gauss_legendre(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    t = 0.5 * (xj + 1.0)
    wt = 0.25 * wj
    T, Sg = np.meshgrid(t, s, indexing="ij")
    WT, WS = np.meshgrid(wt, ws, indexing="ij")
    w_coord = T.ravel()
    v_coord = (Sg * (1.0 - T)).ravel()
    pts = np.column_stack([v_coord, w_coord])
    wts = (WT * WS).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def subtriangle_rule(corners, order: int):
    """Triangle rule mapped onto the triangle with parameter-space ``corners`` (3, 2)."""
    corners = np.asarray(corners, dtype=float)
    pts, wts = triangle_rule(order)
    e1 = corners[1] - corners[0]
    e2 = corners[2] - corners[0]
    det = abs(e1[0] * e2[1] - e1[1] * e2[0])
    mapped = corners[0] + pts[:, :1] * e1 + pts[:, 1:] * e2
    return mapped, wts * det


def split_rule(order: int, levels: int):
    """Composite rule on the unit triangle after ``levels`` uniform 1-to-4 splits."""
    tris = [np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])]
    for _ in range(levels):
        nxt = []
        for t in tris:
            m01 = 0.5 * (t[0] + t[1])
            m12 = 0.5 * (t[1] + t[2])
            m20 = 0.5 * (t[2] + t[0])
            nxt += [np.array([t[0], m01, m20]), np.array([m01, t[1], m12]),
                    np.array([m20, m12, t[2]]), np.array([m01, m12, m20])]
        tris = nxt
    pts, wts = zip(*(subtriangle_rule(t, order) for t in tris))
    return np.concatenate(pts), np.concatenate(wts)
