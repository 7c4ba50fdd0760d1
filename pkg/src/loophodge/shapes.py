"""Control-mesh generators for the test geometries (sphere, torus, voxel handles)."""

from __future__ import annotations

import numpy as np

from .mesh import ControlMesh, build_topology, subdivision_matrix

__all__ = [
    "octahedron",
    "sphere",
    "torus",
    "voxel_surface",
    "handle_slab",
    "double_torus",
    "fit_limit_surface",
]


def octahedron(radius: float = 1.0) -> ControlMesh:
    v = radius * np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    f = [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4],
         [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]]
    return ControlMesh(v, np.array(f))


def sphere(radius: float = 1.0, levels: int = 3, fit_limit: bool = False) -> ControlMesh:
    """Octahedron refined ``levels`` times, controls projected to the sphere after each step.

    With ``fit_limit`` the controls are further adjusted so that the limit
    positions of the control vertices lie on the sphere.
    """
    mesh = octahedron(radius)
    for _ in range(levels):
        top = build_topology(mesh)
        S, faces, _ = subdivision_matrix(top)
        v = S @ mesh.vertices
        v *= radius / np.linalg.norm(v, axis=1, keepdims=True)
        mesh = ControlMesh(v, faces, mesh.refinement_level + 1)
    if fit_limit:
        mesh = fit_limit_surface(mesh, lambda p: radius * p / np.linalg.norm(p, axis=1, keepdims=True))
    return mesh


def torus(major: float = 3.0, minor: float = 1.0, n_major: int = 64, n_minor: int = 32,
          center=(0.0, 0.0, 0.0), fit_limit: bool = False) -> ControlMesh:
    """Regular (all valence 6) torus grid about the z axis; controls on the analytic torus."""
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    u = 2 * np.pi * i.ravel() / n_major
    v = 2 * np.pi * j.ravel() / n_minor
    rho = major + minor * np.cos(v)
    verts = np.column_stack([rho * np.cos(u), rho * np.sin(u), minor * np.sin(v)])
    verts += np.asarray(center, float)

    def vid(a, b):
        return (a % n_major) * n_minor + (b % n_minor)

    a, b = i.ravel(), j.ravel()
    v00, v10, v11, v01 = vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1)
    faces = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    mesh = ControlMesh(verts, faces)
    if fit_limit:
        c = np.asarray(center, float)

        def project(p):
            q = p - c
            rho = np.hypot(q[:, 0], q[:, 1])
            ring = np.column_stack([q[:, 0] / rho * major, q[:, 1] / rho * major, np.zeros(len(q))])
            d = q - ring
            return c + ring + minor * d / np.linalg.norm(d, axis=1, keepdims=True)

        mesh = fit_limit_surface(mesh, project)
    return mesh


_AXES = {0: (1, 2), 1: (2, 0), 2: (0, 1)}


def voxel_surface(occupied: np.ndarray, spacing: float = 1.0, origin=(0.0, 0.0, 0.0)) -> ControlMesh:
    """Boundary of a voxel set, each exposed square split into two triangles.

    The voxel set must not touch itself along edges or corners only, otherwise
    the boundary is non-manifold.
    """
    occ = np.pad(np.asarray(occupied, dtype=bool), 1)
    index: dict[tuple, int] = {}
    faces = []

    def vert(p):
        key = tuple(int(x) for x in p)
        if key not in index:
            index[key] = len(index)
        return index[key]

    for d in range(3):
        e1, e2 = _AXES[d]
        step = np.zeros(3, dtype=int)
        step[d] = 1
        for sign in (1, -1):
            nb = np.roll(occ, -sign, axis=d)
            exposed = occ & ~nb
            for cell in np.argwhere(exposed):
                base = cell.copy()
                if sign > 0:
                    base[d] += 1
                quad = []
                for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    p = base.copy()
                    p[e1] += du
                    p[e2] += dv
                    quad.append(vert(p))
                if sign < 0:
                    quad = quad[::-1]
                faces.append([quad[0], quad[1], quad[2]])
                faces.append([quad[0], quad[2], quad[3]])
    pts = np.empty((len(index), 3))
    for key, k in index.items():
        pts[k] = key
    pts = (pts - 1.0) * spacing + np.asarray(origin, float)
    return ControlMesh(pts, np.array(faces))


def handle_slab(n_holes: int, scale: int = 1, spacing: float = 1.0) -> ControlMesh:
    """One-voxel-thick slab with ``n_holes`` square holes in a row (genus ``n_holes``)."""
    nx = 2 * n_holes + 1
    occ = np.ones((nx, 3, 1), dtype=bool)
    for k in range(n_holes):
        occ[2 * k + 1, 1, 0] = False
    if scale > 1:
        occ = occ.repeat(scale, 0).repeat(scale, 1).repeat(scale, 2)
    return voxel_surface(occ, spacing / scale)


def double_torus(scale: int = 1, spacing: float = 1.0) -> ControlMesh:
    return handle_slab(2, scale, spacing)


def fit_limit_surface(mesh: ControlMesh, project, iterations: int = 30, tol: float = 1e-12) -> ControlMesh:
    """Nudge controls until their limit positions lie on the surface ``project`` maps to."""
    from .subdivision import limit_point_matrix

    L = limit_point_matrix(build_topology(mesh))
    v = np.array(mesh.vertices)
    for _ in range(iterations):
        lim = L @ v
        delta = project(lim) - lim
        v += delta
        if np.max(np.abs(delta)) < tol * max(1.0, np.max(np.abs(v))):
            break
    return mesh.with_vertices(v)
