"""Uniform staggered (MAC) grids and their discrete calculus.

Scalars (density, pressure, potential) live at cell centres, velocity
components at the face centres of their own axis.  Face arrays for axis i
have one extra entry along axis i; entry s sits between cells s-1 and s,
so slots 0 and n are the exterior (or, for periodic axes, the wrap) faces.
All face values are stored as the +axis component.

The operators follow the usual finite-volume definitions:

    (grad q)_sigma = (q_R - q_L) / h        on interior faces,
    (div v)_K      = sum_sigma |sigma| v_{sigma,K} / |K|,

with exterior faces handled per boundary tag: zero gradient for wall and
transmissive (ghost copy), index wrap for periodic, and optional explicit
ghost-cell values for prescribed-state boundaries.  Summation order is the
fixed C order of the arrays, so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WALL = "wall"
PERIODIC = "periodic"
TRANSMISSIVE = "transmissive"
STEADY = "steady"

_TAGS = (WALL, PERIODIC, TRANSMISSIVE, STEADY)
LO, HI = 0, 1


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary tags per axis, as ((x_lo, x_hi), (y_lo, y_hi), ...)."""

    sides: tuple

    def __post_init__(self):
        for pair in self.sides:
            lo, hi = pair
            if lo not in _TAGS or hi not in _TAGS:
                raise ValueError(f"unknown boundary tag in {pair!r}")
            # periodic wrap needs both sides of the axis
            if (lo == PERIODIC) != (hi == PERIODIC):
                raise ValueError("periodic boundaries must pair up per axis")

    @classmethod
    def uniform(cls, tag, dim):
        return cls(tuple((tag, tag) for _ in range(dim)))

    @property
    def dim(self):
        return len(self.sides)

    def is_periodic(self, axis):
        return self.sides[axis][0] == PERIODIC

    def tag(self, axis, side):
        return self.sides[axis][side]


def _slc(ndim, axis, s):
    """Index tuple selecting slice s along one axis."""
    out = [slice(None)] * ndim
    out[axis] = s
    return tuple(out)


class FaceField:
    """One array per axis, shaped like that axis's face grid."""

    __slots__ = ("comps",)

    def __init__(self, comps):
        self.comps = tuple(np.asarray(c, dtype=float) for c in comps)

    @classmethod
    def zeros(cls, grid):
        return cls(tuple(np.zeros(grid.face_shape(i)) for i in range(grid.dim)))

    @property
    def dim(self):
        return len(self.comps)

    def __getitem__(self, axis):
        return self.comps[axis]

    def copy(self):
        return FaceField(tuple(c.copy() for c in self.comps))

    def _binary(self, other, op):
        if isinstance(other, FaceField):
            return FaceField(tuple(op(a, b) for a, b in zip(self.comps, other.comps)))
        return FaceField(tuple(op(a, other) for a in self.comps))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return FaceField(tuple(-a for a in self.comps))


class MacGrid:
    """Uniform Cartesian MAC grid on an axis-aligned box (dim 1 or 2)."""

    def __init__(self, lengths, n, bc, origin=None):
        lengths = tuple(float(L) for L in np.atleast_1d(lengths))
        n = tuple(int(m) for m in np.atleast_1d(n))
        if len(lengths) != len(n):
            raise ValueError("lengths and n must have the same dimension")
        if len(n) not in (1, 2):
            raise ValueError("only dim 1 and 2 are supported")
        if any(L <= 0 for L in lengths):
            raise ValueError("domain lengths must be positive")
        if any(m < 2 for m in n):
            raise ValueError("need at least 2 cells per axis")
        if bc.dim != len(n):
            raise ValueError("boundary condition dimension mismatch")

        self.dim = len(n)
        self.n = n
        self.lengths = lengths
        self.origin = tuple(float(o) for o in origin) if origin is not None else (0.0,) * self.dim
        self.bc = bc
        self.h = tuple(L / m for L, m in zip(lengths, n))
        self.cell_volume = float(np.prod(self.h))
        # |sigma| for an axis-i face is the product of the other cell widths
        self.face_area = tuple(self.cell_volume / self.h[i] for i in range(self.dim))
        self.total_volume = float(np.prod(lengths))
        # |dK|/|K|, identical for every cell on a uniform grid
        self.perimeter_ratio = 2.0 * sum(1.0 / h for h in self.h)

    # ---- geometry -----------------------------------------------------

    def cell_centers(self, axis):
        o, h, m = self.origin[axis], self.h[axis], self.n[axis]
        return o + (np.arange(m) + 0.5) * h

    def face_coords(self, axis):
        o, h, m = self.origin[axis], self.h[axis], self.n[axis]
        return o + np.arange(m + 1) * h

    def cell_center_mesh(self):
        axes = [self.cell_centers(i) for i in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    def face_center_mesh(self, axis):
        """Coordinates of the axis-i face centres, shaped like the face grid."""
        axes = []
        for j in range(self.dim):
            axes.append(self.face_coords(j) if j == axis else self.cell_centers(j))
        return np.meshgrid(*axes, indexing="ij")

    def face_shape(self, axis):
        return tuple(m + 1 if i == axis else m for i, m in enumerate(self.n))

    def zeros_cells(self):
        return np.zeros(self.n)

    def zeros_faces(self):
        return FaceField.zeros(self)

    # ---- face classification ------------------------------------------

    def interior_mask(self, axis):
        """True on faces with fluid on both sides (wrap faces included)."""
        mask = np.ones(self.face_shape(axis), dtype=bool)
        if not self.bc.is_periodic(axis):
            mask[_slc(self.dim, axis, 0)] = False
            mask[_slc(self.dim, axis, -1)] = False
        return mask

    def owned_mask(self, axis):
        """True on faces counted once in global sums (periodic drops slot n)."""
        mask = np.ones(self.face_shape(axis), dtype=bool)
        if self.bc.is_periodic(axis):
            mask[_slc(self.dim, axis, -1)] = False
        return mask

    def dual_volume(self, axis):
        """|D_sigma| per face: h*|sigma| interior, half that on exterior faces."""
        vol = np.full(self.face_shape(axis), self.cell_volume)
        if not self.bc.is_periodic(axis):
            vol[_slc(self.dim, axis, 0)] *= 0.5
            vol[_slc(self.dim, axis, -1)] *= 0.5
        return vol

    def face_cells(self, axis):
        """Flat cell indices (left, right) adjacent to each axis-i face.

        Exterior faces of non-periodic axes get -1 on the missing side;
        periodic faces wrap.
        """
        idx = np.arange(int(np.prod(self.n))).reshape(self.n)
        shape = self.face_shape(axis)
        left = np.full(shape, -1, dtype=int)
        right = np.full(shape, -1, dtype=int)
        nd = self.dim
        left[_slc(nd, axis, slice(1, None))] = idx
        right[_slc(nd, axis, slice(None, -1))] = idx
        if self.bc.is_periodic(axis):
            left[_slc(nd, axis, 0)] = idx[_slc(nd, axis, -1)]
            right[_slc(nd, axis, -1)] = idx[_slc(nd, axis, 0)]
        return left, right

    # ---- integrals ----------------------------------------------------

    def integrate_cells(self, q):
        """sum_K |K| q_K in fixed array order."""
        return self.cell_volume * float(np.asarray(q).sum())

    def sync_face(self, v):
        """Enforce the boundary structure of a FaceField in place.

        wall/steady pin exterior values to 0, transmissive copies the nearest
        interior face, periodic mirrors slot n from slot 0.
        """
        nd = self.dim
        for axis in range(nd):
            a = v[axis]
            if self.bc.is_periodic(axis):
                a[_slc(nd, axis, -1)] = a[_slc(nd, axis, 0)]
                continue
            for side, slot, nearest in ((LO, 0, 1), (HI, -1, -2)):
                tag = self.bc.tag(axis, side)
                if tag in (WALL, STEADY):
                    a[_slc(nd, axis, slot)] = 0.0
                elif tag == TRANSMISSIVE:
                    a[_slc(nd, axis, slot)] = a[_slc(nd, axis, nearest)]
        return v


def build_grid(lengths, n, bc, origin=None):
    """Construct a MacGrid; thin wrapper kept for API symmetry."""
    return MacGrid(lengths, n, bc, origin=origin)


# ---- discrete operators -----------------------------------------------


def discrete_gradient(grid, q, exterior_values=None):
    """Face-wise gradient of a cell field, oriented along +axis.

    exterior_values optionally maps (axis, side) -> ghost-cell values
    (broadcastable to the boundary layer) for prescribed-state boundaries;
    without them, non-periodic exterior faces get gradient 0.
    """
    q = np.asarray(q, dtype=float)
    nd = grid.dim
    comps = []
    for axis in range(nd):
        h = grid.h[axis]
        g = np.zeros(grid.face_shape(axis))
        g[_slc(nd, axis, slice(1, -1))] = np.diff(q, axis=axis) / h
        if grid.bc.is_periodic(axis):
            wrap = (q[_slc(nd, axis, 0)] - q[_slc(nd, axis, -1)]) / h
            g[_slc(nd, axis, 0)] = wrap
            g[_slc(nd, axis, -1)] = wrap
        elif exterior_values is not None:
            if (axis, LO) in exterior_values:
                ghost = exterior_values[(axis, LO)]
                g[_slc(nd, axis, 0)] = (q[_slc(nd, axis, 0)] - ghost) / h
            if (axis, HI) in exterior_values:
                ghost = exterior_values[(axis, HI)]
                g[_slc(nd, axis, -1)] = (ghost - q[_slc(nd, axis, -1)]) / h
        comps.append(g)
    return FaceField(comps)


def discrete_divergence(grid, v, face_weight=None):
    """Cell-wise divergence of a face field, optionally of (q v).

    face_weight, if given, is a FaceField of scalars multiplying v face-wise
    (e.g. interface densities for a mass flux).
    """
    nd = grid.dim
    out = np.zeros(grid.n)
    for axis in range(nd):
        a = v[axis]
        if face_weight is not None:
            a = a * face_weight[axis]
        out += np.diff(a, axis=axis) / grid.h[axis]
    return out


def discrete_laplacian(grid, q):
    """div(grad q) with zero-gradient exterior faces (wrap when periodic)."""
    return discrete_divergence(grid, discrete_gradient(grid, q))


def dual_average(grid, q):
    """Volume-weighted average of a cell field onto each face's dual cell.

    Interior faces get (q_L + q_R)/2 on uniform grids; exterior faces carry
    the adjacent cell value (their dual cell is the half cell).
    """
    q = np.asarray(q, dtype=float)
    nd = grid.dim
    comps = []
    for axis in range(nd):
        a = np.zeros(grid.face_shape(axis))
        lo = q[_slc(nd, axis, slice(None, -1))]
        hi = q[_slc(nd, axis, slice(1, None))]
        a[_slc(nd, axis, slice(1, -1))] = 0.5 * (lo + hi)
        if grid.bc.is_periodic(axis):
            wrap = 0.5 * (q[_slc(nd, axis, -1)] + q[_slc(nd, axis, 0)])
            a[_slc(nd, axis, 0)] = wrap
            a[_slc(nd, axis, -1)] = wrap
        else:
            a[_slc(nd, axis, 0)] = q[_slc(nd, axis, 0)]
            a[_slc(nd, axis, -1)] = q[_slc(nd, axis, -1)]
        comps.append(a)
    return FaceField(comps)
