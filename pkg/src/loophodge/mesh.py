"""Triangular control meshes: I/O, half-edge topology, genus and Loop refinement."""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    DisconnectedError,
    NonManifoldError,
    OpenSurfaceError,
    OrientationError,
    ParseError,
)

__all__ = [
    "ControlMesh",
    "Topology",
    "load_control_mesh",
    "save_off",
    "build_topology",
    "genus",
    "loop_beta",
    "subdivision_matrix",
    "subdivide",
]


@dataclass(frozen=True)
class ControlMesh:
    """Closed, oriented triangle mesh. Coordinates are in meters."""

    vertices: np.ndarray
    faces: np.ndarray
    refinement_level: int = 0

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ParseError("vertices must have shape (V, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ParseError("faces must be triangles, shape (F, 3)")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def with_vertices(self, vertices) -> "ControlMesh":
        return ControlMesh(vertices, self.faces, self.refinement_level)

    def validate(self) -> "Topology":
        return build_topology(self)


class Topology:
    """Half-edge connectivity of a triangle mesh.

    Half-edge ``h = 3*f + i`` runs from ``faces[f, i]`` to ``faces[f, (i+1) % 3]``.
    ``twin[h] == -1`` marks a boundary half-edge; that only happens when the
    topology is built with ``closed=False`` (used for local stencil meshes).
    """

    def __init__(self, faces: np.ndarray, n_vertices: int, closed: bool = True):
        faces = np.asarray(faces, dtype=np.int64)
        self.faces = faces
        self.n_vertices = int(n_vertices)
        self.n_faces = len(faces)
        nf, nv = self.n_faces, self.n_vertices

        if nf == 0:
            raise ParseError("mesh has no faces")
        if faces.min() < 0 or faces.max() >= nv:
            raise ParseError("face index out of range")
        if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2])
                  | (faces[:, 0] == faces[:, 2])):
            raise ParseError("degenerate face (repeated vertex index)")

        orig = faces.reshape(-1)
        dest = np.roll(faces, -1, axis=1).reshape(-1)
        self.orig = orig
        self.dest = dest
        h = np.arange(3 * nf)
        self.next = 3 * (h // 3) + (h + 1) % 3
        self.prev = 3 * (h // 3) + (h + 2) % 3

        # undirected edge multiplicity -> manifold / boundary checks
        lo = np.minimum(orig, dest)
        hi = np.maximum(orig, dest)
        ukey = lo * nv + hi
        uniq, inverse, counts = np.unique(ukey, return_inverse=True, return_counts=True)
        if np.any(counts > 2):
            raise NonManifoldError(
                f"{int(np.sum(counts > 2))} edge(s) shared by more than two faces")
        if closed and np.any(counts == 1):
            raise OpenSurfaceError(f"{int(np.sum(counts == 1))} boundary edge(s) found")

        key = orig * nv + dest
        order = np.argsort(key, kind="stable")
        skey = key[order]
        if np.any(skey[1:] == skey[:-1]):
            raise OrientationError("inconsistent face winding (duplicated directed edge)")
        tkey = dest * nv + orig
        pos = np.searchsorted(skey, tkey)
        pos = np.minimum(pos, len(skey) - 1)
        found = skey[pos] == tkey
        twin = np.where(found, order[pos], -1)
        paired = counts[inverse] == 2
        if np.any(paired & ~found):
            raise OrientationError("inconsistent face winding (edge traversed in the same direction twice)")
        self.twin = twin
        self.edge_of = inverse
        self.n_edges = len(uniq)
        self.edge_vertices = np.column_stack([uniq // nv, uniq % nv])

        self.outgoing_count = np.bincount(orig, minlength=nv)
        if np.any(self.outgoing_count == 0):
            raise ParseError("mesh has isolated vertices")
        self.valence = np.bincount(self.edge_vertices.reshape(-1), minlength=nv)
        self.boundary_vertex = np.zeros(nv, dtype=bool)
        self.boundary_vertex[orig[twin < 0]] = True
        self.boundary_vertex[dest[twin < 0]] = True

        # one outgoing half-edge per vertex; for boundary vertices pick the
        # boundary one (no CCW predecessor) so rotation sweeps the full fan
        out = np.full(nv, -1, dtype=np.int64)
        out[orig[::-1]] = h[::-1]
        if not closed:
            bstart = h[twin < 0]
            out[orig[bstart]] = bstart
        self.out = out
        self.closed = closed
        if closed:
            self._check_vertex_manifold()

    # -- rotations -------------------------------------------------------------

    def rotate(self, h):
        """Next outgoing half-edge counter-clockwise around ``orig[h]``."""
        h = np.asarray(h)
        t = self.twin[self.prev[h]]
        return t

    def _check_vertex_manifold(self):
        nv = self.n_vertices
        h = self.out.copy()
        steps = np.zeros(nv, dtype=np.int64)
        start = h.copy()
        active = np.ones(nv, dtype=bool)
        for _ in range(int(self.outgoing_count.max()) + 1):
            h[active] = self.rotate(h[active])
            steps[active] += 1
            active &= h != start
            if not active.any():
                break
        if np.any(active) or np.any(steps != self.outgoing_count):
            raise NonManifoldError("vertex fan is not a single cycle (pinched vertex)")

    def ring(self, vertex: int, start: int | None = None) -> list[int]:
        """Neighbors of ``vertex`` in counter-clockwise order.

        ``start`` optionally fixes the first neighbor.
        """
        h0 = int(self.out[vertex])
        if start is not None:
            h = h0
            for _ in range(self.outgoing_count[vertex]):
                if self.dest[h] == start:
                    break
                h = int(self.rotate(h))
            else:
                raise ValueError(f"{start} is not a neighbor of {vertex}")
            h0 = h
        ring = []
        h = h0
        for _ in range(self.outgoing_count[vertex] + 1):
            ring.append(int(self.dest[h]))
            last = h
            h = int(self.rotate(h))
            if h < 0 or h == h0:
                break
        if h < 0:
            # open fan: the final neighbor only appears as an incoming edge
            ring.append(int(self.orig[self.prev[last]]))
        return ring

    def rings(self) -> list[list[int]]:
        return [self.ring(v) for v in range(self.n_vertices)]

    # -- global quantities -----------------------------------------------------

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def n_components(self) -> int:
        e = self.edge_vertices
        adj = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])),
                                shape=(self.n_vertices, self.n_vertices))
        n, _ = csgraph.connected_components(adj, directed=False)
        return int(n)

    @cached_property
    def vertex_faces(self) -> list[np.ndarray]:
        f = np.repeat(np.arange(self.n_faces), 3)
        order = np.argsort(self.orig, kind="stable")
        split = np.cumsum(self.outgoing_count)[:-1]
        return np.split(f[order], split)

    def one_ring_stencils(self, faces=None):
        """Ordered patch stencils; see :func:`patch_stencil_arrays`."""
        return patch_stencil_arrays(self, faces)


def build_topology(mesh: ControlMesh) -> Topology:
    return Topology(mesh.faces, mesh.n_vertices, closed=True)


def genus(topology: Topology) -> int:
    if topology.n_components != 1:
        raise DisconnectedError(f"mesh has {topology.n_components} connected components")
    chi = topology.euler_characteristic
    if (2 - chi) % 2:
        raise OrientationError(f"odd Euler characteristic {chi} for a closed orientable surface")
    return (2 - chi) // 2


# -- patch stencils -------------------------------------------------------------

def patch_stencil_arrays(top: Topology, faces=None):
    """Canonical control-vertex stencil of every patch.

    Returns ``(start, stencils)``: ``start[f]`` is the face corner taken as the
    local origin (the extraordinary vertex when there is one) and
    ``stencils[f]`` the ordered vertex list::

        [a, b, c, x_1 .. x_{n-2}, p, q, z, s, t]

    where ``(a, b, c)`` are the patch corners counter-clockwise starting at the
    origin, ``x_k`` the remaining neighbors of ``a`` counter-clockwise after
    ``c``, ``p, q, z`` the remaining neighbors of ``b`` after ``x_{n-2}`` and
    ``s, t`` the remaining neighbors of ``c`` after ``z``. Length is ``n + 6``
    for origin valence ``n`` (12 for regular patches).

    Raises ``ValueError`` if a patch has two or more extraordinary corners.
    """
    if faces is None:
        faces = np.arange(top.n_faces)
    faces = np.asarray(faces)
    corners = top.faces[faces]
    irregular = top.valence[corners] != 6
    n_irr = irregular.sum(axis=1)
    if np.any(n_irr > 1):
        bad = faces[n_irr > 1][:5]
        raise ValueError(f"patches {bad.tolist()} touch several extraordinary vertices; "
                         "subdivide the control mesh first")
    start = np.where(n_irr == 1, np.argmax(irregular, axis=1), 0)
    h_ab = 3 * faces + start
    a = top.orig[h_ab]
    n = top.valence[a]
    stencils = []
    h_bc = top.next[h_ab]
    h_ca = top.next[h_bc]
    b = top.orig[h_bc]
    c = top.orig[h_ca]
    # neighbors of a after c
    xs = []
    h = top.rotate(top.rotate(h_ab))  # a -> x_1
    for k in range(int(n.max()) - 2):
        xs.append(top.dest[h])
        h = top.rotate(h)
    xs = np.array(xs).T if xs else np.zeros((len(faces), 0), dtype=np.int64)
    # b ring: b->c, b->a, b->x_{n-2}, b->p, b->q, b->z
    hb = top.rotate(top.rotate(top.rotate(h_bc)))
    p = top.dest[hb]
    hb = top.rotate(hb)
    q = top.dest[hb]
    hb = top.rotate(hb)
    z = top.dest[hb]
    # c ring: c->a, c->b, c->z, c->s, c->t
    hc = top.rotate(top.rotate(top.rotate(h_ca)))
    s = top.dest[hc]
    t = top.dest[top.rotate(hc)]
    for i in range(len(faces)):
        ni = int(n[i])
        stencils.append(np.concatenate([[a[i], b[i], c[i]], xs[i, :ni - 2],
                                        [p[i], q[i], z[i], s[i], t[i]]]).astype(np.int64))
    return start, stencils


# -- Loop refinement ---------------------------------------------------------

def loop_beta(n):
    """Loop's even-vertex neighbor weight for valence ``n``."""
    n = np.asarray(n, dtype=float)
    return (5.0 / 8.0 - (3.0 / 8.0 + 0.25 * np.cos(2.0 * np.pi / n)) ** 2) / n


def subdivision_matrix(top: Topology):
    """Sparse refinement operator and refined faces.

    Returns ``(S, new_faces, valid)`` where ``S`` maps the ``V`` coarse vertex
    values to ``V + E`` fine values (even vertices first, then one odd vertex
    per edge in ``top.edge_vertices`` order). ``valid`` is False for rows that
    touch the boundary of an open mesh (their masks are incomplete).
    """
    nv, ne = top.n_vertices, top.n_edges
    rows, cols, vals = [], [], []
    valid = np.ones(nv + ne, dtype=bool)

    # even vertices
    e = top.edge_vertices
    nbr_rows = np.concatenate([e[:, 0], e[:, 1]])
    nbr_cols = np.concatenate([e[:, 1], e[:, 0]])
    beta = loop_beta(top.valence)
    rows += [np.arange(nv), nbr_rows]
    cols += [np.arange(nv), nbr_cols]
    vals += [1.0 - top.valence * beta, beta[nbr_rows]]
    valid[:nv] = ~top.boundary_vertex

    # odd vertices: 3/8 on edge ends, 1/8 on the opposite vertex of each face
    h = np.arange(3 * top.n_faces)
    primary = np.full(ne, -1, dtype=np.int64)
    primary[top.edge_of[::-1]] = h[::-1]
    opp1 = top.orig[top.prev[primary]]
    tw = top.twin[primary]
    interior = tw >= 0
    opp2 = np.where(interior, top.orig[top.prev[np.maximum(tw, 0)]], opp1)
    odd = nv + np.arange(ne)
    rows += [odd, odd, odd, odd]
    cols += [e[:, 0], e[:, 1], opp1, opp2]
    vals += [np.full(ne, 3 / 8), np.full(ne, 3 / 8), np.full(ne, 1 / 8), np.full(ne, 1 / 8)]
    valid[nv:] = interior

    S = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(nv + ne, nv))
    S.sum_duplicates()

    f = top.faces
    m = nv + top.edge_of.reshape(-1, 3)  # midpoint of edges (0-1, 1-2, 2-0)
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    new_faces = np.concatenate([
        np.column_stack([f[:, 0], m01, m20]),
        np.column_stack([m01, f[:, 1], m12]),
        np.column_stack([m20, m12, f[:, 2]]),
        np.column_stack([m01, m12, m20]),
    ])
    return S, new_faces, valid


def subdivide(mesh: ControlMesh, levels: int = 1) -> ControlMesh:
    """Apply ``levels`` Loop refinement steps (V' = V + E, F' = 4F)."""
    for _ in range(levels):
        top = build_topology(mesh)
        S, faces, _ = subdivision_matrix(top)
        mesh = ControlMesh(S @ mesh.vertices, faces, mesh.refinement_level + 1)
    return mesh


# -- file I/O ------------------------------------------------------------------

def _read_off(lines):
    tokens = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if not tokens:
        raise ParseError("empty OFF file")
    head = tokens[0]
    if head[0].upper() != "OFF":
        raise ParseError("missing OFF header")
    rest = head[1:]
    tokens = tokens[1:]
    if not rest:
        if not tokens:
            raise ParseError("missing OFF counts")
        rest, tokens = tokens[0], tokens[1:]
    try:
        nv, nf = int(rest[0]), int(rest[1])
    except (ValueError, IndexError) as exc:
        raise ParseError("malformed OFF counts line") from exc
    if len(tokens) < nv + nf:
        raise ParseError("OFF file truncated")
    try:
        verts = np.array([[float(x) for x in t[:3]] for t in tokens[:nv]])
        faces = []
        for t in tokens[nv:nv + nf]:
            k = int(t[0])
            if k != 3:
                raise ParseError("only triangular faces are supported")
            faces.append([int(x) for x in t[1:4]])
    except ValueError as exc:
        raise ParseError(f"malformed OFF entry: {exc}") from exc
    if verts.shape != (nv, 3):
        raise ParseError("vertex lines need three coordinates")
    return verts, np.array(faces, dtype=np.int64).reshape(-1, 3)


def _read_obj(lines):
    verts, faces = [], []
    try:
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise ParseError("only triangular faces are supported")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    except ValueError as exc:
        raise ParseError(f"malformed OBJ entry: {exc}") from exc
    if not verts or any(len(v) != 3 for v in verts):
        raise ParseError("OBJ needs vertices with three coordinates")
    return np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3)


def load_control_mesh(path, format: str | None = None) -> ControlMesh:
    """Read an ASCII OFF or OBJ triangle mesh and validate it."""
    path = os.fspath(path)
    if format is None:
        format = os.path.splitext(path)[1].lstrip(".")
    format = format.lower()
    with open(path) as fh:
        lines = fh.readlines()
    if format == "off":
        verts, faces = _read_off(lines)
    elif format == "obj":
        verts, faces = _read_obj(lines)
    else:
        raise ParseError(f"unsupported mesh format {format!r}")
    mesh = ControlMesh(verts, faces)
    build_topology(mesh)
    return mesh


def save_off(mesh: ControlMesh, path) -> None:
    """Write ASCII OFF to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_off(mesh, path)
        return
    with open(path, "w") as fh:
        _write_off(mesh, fh)


def _write_off(mesh: ControlMesh, fh) -> None:
    fh.write("OFF\n")
    fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
    for x, y, z in mesh.vertices:
        fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
    for a, b, c in mesh.faces:
        fh.write(f"3 {a} {b} {c}\n")
