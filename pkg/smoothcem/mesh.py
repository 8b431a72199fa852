# -*- coding: utf-8 -*-
#
"""
Structured triangulations of the unit square with electrodes on its boundary.

The boundary is parameterized by arclength :math:`s \\in [0, 4)`, starting in
the corner (0, 0) and running counter-clockwise. Electrodes are arclength
intervals :math:`[a_m, b_m)` and are numbered in the order they are given.
"""
import json
import logging

import meshplex
import numpy

from .errors import (
    AlignmentError,
    DomainError,
    ElectrodeIndexError,
    LayoutError,
    ParameterError,
)

logger = logging.getLogger(__name__)

PERIMETER = 4.0

# Outward normals and counter-clockwise tangents of the sides
# bottom, right, top, left.
SIDE_NORMALS = numpy.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
SIDE_TANGENTS = numpy.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def check_arclength(s):
    s = numpy.asarray(s, dtype=float)
    if numpy.any(s < 0.0) or numpy.any(s >= PERIMETER) or numpy.any(numpy.isnan(s)):
        raise DomainError("Arclength must lie in [0, %g)." % PERIMETER)
    return s


def arclength_to_point(s):
    """Map arclength to the point on the boundary of the unit square.

    Accepts scalars and arrays; the result has an extra trailing axis of
    length 2.
    """
    s = check_arclength(s)
    side = numpy.floor(s).astype(int)
    t = s - side
    x = numpy.choose(side, [t, numpy.ones_like(t), 1.0 - t, numpy.zeros_like(t)])
    y = numpy.choose(side, [numpy.zeros_like(t), t, numpy.ones_like(t), 1.0 - t])
    return numpy.stack([x, y], axis=-1)


def side_index(s):
    """Index 0, 1, 2, 3 of the side (bottom, right, top, left) holding s."""
    return numpy.floor(check_arclength(s)).astype(int)


class ElectrodeLayout(object):
    """Positions of M electrodes as arclength intervals on the square."""

    def __init__(self, arcs):
        arcs = numpy.array(arcs, dtype=float)
        if arcs.ndim != 2 or arcs.shape[1] != 2:
            raise LayoutError("Electrode arcs must be given as pairs [a, b].")
        if len(arcs) < 2:
            raise LayoutError("At least two electrodes needed (got %d)." % len(arcs))
        if numpy.any(arcs[:, 0] < 0.0) or numpy.any(arcs[:, 1] > PERIMETER):
            raise LayoutError("Electrode arcs must lie within [0, %g]." % PERIMETER)
        if numpy.any(arcs[:, 1] <= arcs[:, 0]):
            raise LayoutError("Electrode widths must be positive.")

        ordered = arcs[numpy.argsort(arcs[:, 0])]
        gaps = ordered[1:, 0] - ordered[:-1, 1]
        wrap = ordered[0, 0] + PERIMETER - ordered[-1, 1]
        if numpy.any(gaps <= 0.0) or wrap <= 0.0:
            raise LayoutError("Electrodes must be well-separated.")

        arcs.flags.writeable = False
        self.arcs = arcs
        return

    @property
    def num_electrodes(self):
        return len(self.arcs)

    # Short alias used throughout, M in the usual notation.
    M = num_electrodes

    @property
    def widths(self):
        return self.arcs[:, 1] - self.arcs[:, 0]

    @property
    def midpoints(self):
        return 0.5 * (self.arcs[:, 0] + self.arcs[:, 1])

    def electrode_at(self, s):
        """0-based electrode index for each arclength, -1 in the gaps."""
        s = numpy.asarray(s, dtype=float)
        index = numpy.full(s.shape, -1, dtype=int)
        for m, (a, b) in enumerate(self.arcs):
            index[(s >= a) & (s < b)] = m
        return index

    def check_corners(self):
        """Raise if an electrode reaches into or across one of the corners."""
        for m, (a, b) in enumerate(self.arcs):
            side = numpy.floor(a)
            if a == side or b - side >= 1.0:
                raise LayoutError(
                    "Electrode %d ([%g, %g]) touches a corner." % (m + 1, a, b)
                )
        return

    def shifted(self, eps):
        """The layout with every electrode slid by eps along the boundary."""
        return ElectrodeLayout(self.arcs + eps)

    def to_dict(self):
        return {"arcs": self.arcs.tolist()}

    @classmethod
    def from_dict(cls, data):
        if "arcs" not in data:
            raise LayoutError("Layout description lacks the key 'arcs'.")
        return cls(data["arcs"])

    def __eq__(self, other):
        return isinstance(other, ElectrodeLayout) and numpy.array_equal(
            self.arcs, other.arcs
        )

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.arcs.tobytes())

    def __repr__(self):
        return "ElectrodeLayout(M=%d)" % self.num_electrodes


def side_layout(centers, width):
    """Same electrodes on every side, centered at the given side positions."""
    arcs = [
        [side + c - 0.5 * width, side + c + 0.5 * width]
        for side in range(4)
        for c in centers
    ]
    return ElectrodeLayout(arcs)


LAYOUTS = {
    "default8": lambda: side_layout([0.25, 0.75], 0.25),
    "default12": lambda: side_layout([0.25, 0.5, 0.75], 0.125),
    "default16": lambda: side_layout([0.125, 0.375, 0.625, 0.875], 0.125),
}


def get_layout(name_or_file):
    """Named layout from :data:`LAYOUTS`, or a JSON file ``{"arcs": [...]}``."""
    if name_or_file in LAYOUTS:
        return LAYOUTS[name_or_file]()
    try:
        with open(name_or_file) as f:
            data = json.load(f)
    except (IOError, OSError, ValueError) as e:
        raise LayoutError("Cannot read layout %r: %s" % (name_or_file, e))
    return ElectrodeLayout.from_dict(data)


class Mesh(object):
    """Uniform triangulation of the unit square.

    Every grid square is split along its ``/`` diagonal. For quadratic
    elements the edge midpoints are appended to the degrees of freedom after
    the vertices; the mesh size h is always the boundary edge width.
    """

    def __init__(
        self,
        nodes,
        triangles,
        boundary_edges,
        boundary_arcs,
        electrode_tags,
        level,
        layout,
        element_order=1,
        triangle_dofs=None,
        boundary_dofs=None,
        dof_coords=None,
    ):
        self.nodes = nodes
        self.triangles = triangles
        self.boundary_edges = boundary_edges
        self.boundary_arcs = boundary_arcs
        self.electrode_tags = electrode_tags
        self.level = level
        self.layout = layout
        self.element_order = element_order
        self.triangle_dofs = triangles if triangle_dofs is None else triangle_dofs
        self.boundary_dofs = boundary_edges if boundary_dofs is None else boundary_dofs
        self.dof_coords = nodes if dof_coords is None else dof_coords
        for a in [self.nodes, self.triangles, self.boundary_edges, self.boundary_arcs]:
            a.flags.writeable = False
        return

    @property
    def h(self):
        return 1.0 / 2 ** self.level

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def num_dofs(self):
        return len(self.dof_coords)

    def signed_areas(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def boundary_lengths(self):
        return self.boundary_arcs[:, 1] - self.boundary_arcs[:, 0]

    def electrode_edges(self, m):
        """Boundary edge indices covered by electrode m (1-based)."""
        if not 1 <= m <= self.layout.num_electrodes:
            raise ElectrodeIndexError(
                "Electrode index %r not in 1..%d." % (m, self.layout.num_electrodes)
            )
        return numpy.flatnonzero(self.electrode_tags == m)

    def locate(self, s):
        """Boundary edge index and local coordinate in [0, 1] of arclengths."""
        s = check_arclength(s)
        t = s / self.h
        edge = numpy.minimum(numpy.floor(t).astype(int), len(self.boundary_edges) - 1)
        return edge, t - edge

    def to_meshplex(self):
        return meshplex.MeshTri(self.nodes, self.triangles)

    def to_dict(self):
        return {
            "level": self.level,
            "element_order": self.element_order,
            "h": self.h,
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": [
                {"nodes": e.tolist(), "arc": a.tolist(), "electrode": int(t)}
                for e, a, t in zip(
                    self.boundary_edges, self.boundary_arcs, self.electrode_tags
                )
            ],
            "layout": self.layout.to_dict(),
        }

    def write_json(self, filename):
        with open(filename, "w") as f:
            json.dump(self.to_dict(), f)
        return

    def __repr__(self):
        return "Mesh(level=%d, order=%d, nodes=%d)" % (
            self.level,
            self.element_order,
            self.num_nodes,
        )


def _check_alignment(layout, h):
    layout.check_corners()
    k = layout.arcs / h
    if numpy.any(numpy.abs(k - numpy.round(k)) > 1.0e-9):
        raise AlignmentError(
            "Electrode end points must be multiples of h = %g." % h
        )
    return


def build_mesh(level, layout, order=1):
    """Triangulate the unit square with (2**level + 1)**2 nodes.

    Electrode ends must be multiples of h = 2**-level, and no electrode may
    touch a corner.
    """
    if level < 2:
        raise ParameterError("Refinement level must be at least 2 (got %r)." % level)
    if order not in (1, 2):
        raise ParameterError("Element order must be 1 or 2 (got %r)." % order)
    n = 2 ** level
    h = 1.0 / n
    _check_alignment(layout, h)

    # nodes, numbered row by row
    ii, jj = numpy.meshgrid(numpy.arange(n + 1), numpy.arange(n + 1))
    nodes = numpy.column_stack([ii.ravel() * h, jj.ravel() * h])
    num_nodes = len(nodes)

    # two triangles per square, both counter-clockwise
    ii, jj = [a.ravel() for a in numpy.meshgrid(numpy.arange(n), numpy.arange(n))]
    a = jj * (n + 1) + ii
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    triangles = numpy.empty((2 * n * n, 3), dtype=int)
    triangles[0::2] = numpy.column_stack([a, b, c])
    triangles[1::2] = numpy.column_stack([a, c, d])

    # boundary, counter-clockwise from (0, 0)
    k = numpy.arange(n)
    top = n * (n + 1)
    starts = numpy.concatenate(
        [k, k * (n + 1) + n, top + n - k, (n - k) * (n + 1)]
    )
    ends = numpy.concatenate(
        [k + 1, (k + 1) * (n + 1) + n, top + n - k - 1, (n - k - 1) * (n + 1)]
    )
    boundary_edges = numpy.column_stack([starts, ends])
    s0 = numpy.arange(4 * n) * h
    boundary_arcs = numpy.column_stack([s0, s0 + h])
    electrode_tags = layout.electrode_at(s0 + 0.5 * h) + 1

    if order == 1:
        triangle_dofs = boundary_dofs = dof_coords = None
    else:
        # edge numbering: horizontal, vertical, diagonal
        num_h = n * (n + 1)

        def hor(i, j):
            return num_nodes + j * n + i

        def ver(i, j):
            return num_nodes + num_h + j * (n + 1) + i

        def diag(i, j):
            return num_nodes + 2 * num_h + j * n + i

        triangle_dofs = numpy.empty((2 * n * n, 6), dtype=int)
        triangle_dofs[0::2] = numpy.column_stack(
            [a, b, c, hor(ii, jj), ver(ii + 1, jj), diag(ii, jj)]
        )
        triangle_dofs[1::2] = numpy.column_stack(
            [a, c, d, diag(ii, jj), hor(ii, jj + 1), ver(ii, jj)]
        )
        mids = numpy.concatenate(
            [hor(k, 0), ver(n, k), hor(n - k - 1, n), ver(0, n - k - 1)]
        )
        boundary_dofs = numpy.column_stack([starts, ends, mids])

        hi, hj = [x.ravel() for x in numpy.meshgrid(numpy.arange(n), numpy.arange(n + 1))]
        vi, vj = [x.ravel() for x in numpy.meshgrid(numpy.arange(n + 1), numpy.arange(n))]
        dof_coords = numpy.concatenate(
            [
                nodes,
                numpy.column_stack([(hi + 0.5) * h, hj * h]),
                numpy.column_stack([vi * h, (vj + 0.5) * h]),
                numpy.column_stack([(ii + 0.5) * h, (jj + 0.5) * h]),
            ]
        )

    mesh = Mesh(
        nodes,
        triangles,
        boundary_edges,
        boundary_arcs,
        electrode_tags,
        level,
        layout,
        element_order=order,
        triangle_dofs=triangle_dofs,
        boundary_dofs=boundary_dofs,
        dof_coords=dof_coords,
    )
    logger.debug("Built %r with %d degrees of freedom.", mesh, mesh.num_dofs)
    return mesh


def electrode_edges(mesh, m):
    return mesh.electrode_edges(m)
