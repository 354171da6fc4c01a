"""Domains, uniform node grids with interior/boundary/exterior masks, and
boundary panelizations with outward normals.

Two representations of the boundary coexist deliberately: the grid's
Boundary nodes (combinatorial: non-interior nodes 6-adjacent to an interior
node) carry Dirichlet data and flux stencils, while SurfaceMesh panels
(geometric: centroid, area, outward normal) carry surface charge densities
and surface quadrature.
"""

from __future__ import annotations

import base64
import csv
import json
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainTooSmall

# Node labels in Grid3.mask.
INTERIOR = 0
BOUNDARY = 1
EXTERIOR = 2


def _vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(3)
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box domain with lo < hi componentwise."""

    lo: np.ndarray
    hi: np.ndarray

    def __init__(self, lo, hi):
        object.__setattr__(self, "lo", _vec3(lo))
        object.__setattr__(self, "hi", _vec3(hi))
        if not np.all(self.lo < self.hi):
            raise ValueError(f"Box requires lo < hi componentwise, got {self.lo}, {self.hi}")

    def bounds(self):
        return self.lo.copy(), self.hi.copy()

    def contains(self, points, strict=True):
        p = np.asarray(points, dtype=np.float64)
        if strict:
            return np.all((p > self.lo) & (p < self.hi), axis=-1)
        return np.all((p >= self.lo) & (p <= self.hi), axis=-1)

    def project(self, points):
        """Nearest point of the closed box."""
        return np.clip(np.asarray(points, dtype=np.float64), self.lo, self.hi)

    def boundary_distance(self, points):
        """Distance from each point to the box surface (works inside and out)."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        center = 0.5 * (self.lo + self.hi)
        half = 0.5 * (self.hi - self.lo)
        q = np.abs(p - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        d = np.abs(outside + inside)
        return d if np.asarray(points).ndim > 1 else float(d[0])


@dataclass(frozen=True, eq=False)
class Ball:
    """Ball domain with positive radius."""

    center: np.ndarray
    radius: float

    def __init__(self, center, radius):
        object.__setattr__(self, "center", _vec3(center))
        object.__setattr__(self, "radius", float(radius))
        if not self.radius > 0.0:
            raise ValueError(f"Ball requires radius > 0, got {radius}")

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def contains(self, points, strict=True):
        p = np.asarray(points, dtype=np.float64)
        d2 = ((p - self.center) ** 2).sum(axis=-1)
        return d2 < self.radius**2 if strict else d2 <= self.radius**2

    def project(self, points):
        p = np.asarray(points, dtype=np.float64)
        d = np.linalg.norm(p - self.center, axis=-1, keepdims=True)
        scale = np.where(d > self.radius, self.radius / np.where(d > 0.0, d, 1.0), 1.0)
        return self.center + (p - self.center) * scale

    def boundary_distance(self, points):
        p = np.asarray(points, dtype=np.float64)
        d = np.linalg.norm(p - self.center, axis=-1)
        return np.abs(d - self.radius)


Domain = Box | Ball


@dataclass(frozen=True, eq=False)
class Grid3:
    """Uniform isotropic node grid with per-node classification.

    Nodes sit at origin + h * (i, j, k).  The mask invariants hold by
    construction: every INTERIOR node has all 6 axis neighbors in the grid,
    and BOUNDARY nodes are exactly the non-interior nodes 6-adjacent to an
    interior node.  Instances are immutable and safe to share.
    """

    origin: np.ndarray
    h: float
    dims: tuple[int, int, int]
    mask: np.ndarray

    @property
    def shape(self):
        return self.dims

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.mask == INTERIOR))

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.mask == BOUNDARY))

    def axis_coords(self, d: int) -> np.ndarray:
        return self.origin[d] + self.h * np.arange(self.dims[d])

    def meshgrid(self):
        return np.meshgrid(
            self.axis_coords(0), self.axis_coords(1), self.axis_coords(2), indexing="ij"
        )

    def points(self) -> np.ndarray:
        """All node positions as an (n_nodes, 3) array in C order."""
        X, Y, Z = self.meshgrid()
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def node_position(self, idx) -> np.ndarray:
        return self.origin + self.h * np.asarray(idx, dtype=np.float64)

    def boundary_indices(self) -> np.ndarray:
        """Integer (i, j, k) indices of boundary nodes in lexicographic order.

        This ordering defines the layout of BoundaryData vectors and of the
        boundary-value CSV format.
        """
        return np.argwhere(self.mask == BOUNDARY)

    def same_layout(self, other: "Grid3") -> bool:
        return (
            self.dims == other.dims
            and self.h == other.h
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.mask, other.mask)
        )


@dataclass(eq=False)
class ScalarField:
    """Real values sampled at every node of a Grid3."""

    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.dims:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid dims {self.grid.dims}"
            )

    @classmethod
    def zeros(cls, grid: Grid3) -> "ScalarField":
        return cls(grid, np.zeros(grid.dims))

    @classmethod
    def from_function(cls, grid: Grid3, fn) -> "ScalarField":
        """Sample fn(x, y, z) (vectorized over arrays) at every node."""
        X, Y, Z = grid.meshgrid()
        return cls(grid, np.asarray(fn(X, Y, Z), dtype=np.float64))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def assert_finite(self, what="field"):
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{what} contains non-finite values")
        return self

    def interp(self, points) -> np.ndarray:
        """Trilinear interpolation at points inside the grid's bounding box."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        t = (p - self.grid.origin) / self.grid.h
        dims = np.asarray(self.grid.dims)
        if np.any(t < -1e-9) or np.any(t > dims - 1 + 1e-9):
            raise ValueError("interpolation point outside the grid")
        i0 = np.clip(np.floor(t).astype(np.int64), 0, dims - 2)
        f = np.clip(t - i0, 0.0, 1.0)
        v = self.values
        out = np.zeros(len(p))
        for da in (0, 1):
            for db in (0, 1):
                for dc in (0, 1):
                    w = (
                        (f[:, 0] if da else 1.0 - f[:, 0])
                        * (f[:, 1] if db else 1.0 - f[:, 1])
                        * (f[:, 2] if dc else 1.0 - f[:, 2])
                    )
                    out += w * v[i0[:, 0] + da, i0[:, 1] + db, i0[:, 2] + dc]
        return out if np.asarray(points).ndim > 1 else float(out[0])


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Panelization of a domain boundary: centroids, areas, outward unit normals."""

    centroids: np.ndarray
    areas: np.ndarray
    normals: np.ndarray

    def __init__(self, centroids, areas, normals):
        c = np.ascontiguousarray(centroids, dtype=np.float64).reshape(-1, 3)
        a = np.ascontiguousarray(areas, dtype=np.float64).reshape(-1)
        n = np.ascontiguousarray(normals, dtype=np.float64).reshape(-1, 3)
        if not (len(c) == len(a) == len(n)):
            raise ValueError("centroids, areas, normals must have equal length")
        if np.any(a <= 0.0):
            raise ValueError("panel areas must be positive")
        norm_err = np.abs(np.linalg.norm(n, axis=1) - 1.0)
        if norm_err.size and norm_err.max() > 1e-12:
            raise ValueError(f"normals must be unit length (max dev {norm_err.max():.3e})")
        for arr in (c, a, n):
            arr.setflags(write=False)
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "areas", a)
        object.__setattr__(self, "normals", n)

    @property
    def n_panels(self) -> int:
        return len(self.areas)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def panel_radius(self) -> np.ndarray:
        """Radius of the equal-area disc for every panel (near-field scale)."""
        return np.sqrt(self.areas / np.pi)


def build_grid(domain: Domain, h: float, padding: float = 0.0) -> Grid3:
    """Node grid covering the domain's bounding box grown by ``padding``.

    Interior nodes are the nodes strictly inside the domain; boundary nodes
    the remaining nodes 6-adjacent to an interior node; all others exterior.
    Raises DomainTooSmall when no node lands strictly inside.
    """
    if not h > 0.0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    if padding < 0.0:
        raise ValueError(f"padding must be nonnegative, got {padding}")
    lo, hi = domain.bounds()
    origin = lo - padding
    span = hi + padding - origin
    dims = tuple(int(np.ceil(s / h - 1e-12)) + 1 for s in span)

    ax = [origin[d] + h * np.arange(dims[d]) for d in range(3)]
    X, Y, Z = np.meshgrid(*ax, indexing="ij")
    pts = np.stack([X, Y, Z], axis=-1)
    interior = domain.contains(pts, strict=True)
    if not interior.any():
        raise DomainTooSmall(
            f"no grid node lies strictly inside the domain at h={h}"
        )

    adjacent = np.zeros(dims, dtype=bool)
    adjacent[1:, :, :] |= interior[:-1, :, :]
    adjacent[:-1, :, :] |= interior[1:, :, :]
    adjacent[:, 1:, :] |= interior[:, :-1, :]
    adjacent[:, :-1, :] |= interior[:, 1:, :]
    adjacent[:, :, 1:] |= interior[:, :, :-1]
    adjacent[:, :, :-1] |= interior[:, :, 1:]

    mask = np.full(dims, EXTERIOR, dtype=np.uint8)
    mask[adjacent & ~interior] = BOUNDARY
    mask[interior] = INTERIOR
    mask.setflags(write=False)
    origin = origin.copy()
    origin.setflags(write=False)
    return Grid3(origin=origin, h=float(h), dims=dims, mask=mask)


def panelize(domain: Domain, n: int) -> SurfaceMesh:
    """Panelize the domain boundary at resolution n.

    Box: each face is split n x n (6 n^2 panels, exact areas).
    Ball: n latitude bands of equal area, each split into 2n longitude
    sectors (2 n^2 panels); band areas are exact, so the total is exactly
    4 pi R^2, with centroids placed on the sphere.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"panel resolution must be a positive integer, got {n}")
    n = int(n)
    if isinstance(domain, Box):
        return _panelize_box(domain, n)
    if isinstance(domain, Ball):
        return _panelize_ball(domain, n)
    raise TypeError(f"unsupported domain type {type(domain)!r}")


def _panelize_box(box: Box, n: int) -> SurfaceMesh:
    lo, hi = box.bounds()
    size = hi - lo
    centroids, areas, normals = [], [], []
    for axis in range(3):
        u, v = (axis + 1) % 3, (axis + 2) % 3
        du, dv = size[u] / n, size[v] / n
        uu = lo[u] + (np.arange(n) + 0.5) * du
        vv = lo[v] + (np.arange(n) + 0.5) * dv
        U, V = np.meshgrid(uu, vv, indexing="ij")
        for side, coord in ((-1.0, lo[axis]), (1.0, hi[axis])):
            c = np.empty((n * n, 3))
            c[:, axis] = coord
            c[:, u] = U.ravel()
            c[:, v] = V.ravel()
            nrm = np.zeros((n * n, 3))
            nrm[:, axis] = side
            centroids.append(c)
            areas.append(np.full(n * n, du * dv))
            normals.append(nrm)
    return SurfaceMesh(np.vstack(centroids), np.concatenate(areas), np.vstack(normals))


def _panelize_ball(ball: Ball, n: int) -> SurfaceMesh:
    R = ball.radius
    m = 2 * n
    z_edges = R * (1.0 - 2.0 * np.arange(n + 1) / n)
    z_mid = 0.5 * (z_edges[:-1] + z_edges[1:])
    phi = (np.arange(m) + 0.5) * (2.0 * np.pi / m)
    Zc, Phi = np.meshgrid(z_mid, phi, indexing="ij")
    rho = np.sqrt(np.maximum(R**2 - Zc**2, 0.0))
    x = rho * np.cos(Phi)
    y = rho * np.sin(Phi)
    centroids = np.stack([x.ravel(), y.ravel(), Zc.ravel()], axis=1) + ball.center
    normals = (centroids - ball.center) / R
    # exact equal-area bands: each band has area 2 pi R dz, split into m sectors
    areas = np.full(n * m, 4.0 * np.pi * R**2 / (n * m))
    return SurfaceMesh(centroids, areas, normals)


def normal_probe_points(mesh: SurfaceMesh, offset: float):
    """Probe points centroid +/- offset * normal for one-sided derivatives.

    Returns (outside, inside) arrays of shape (n_panels, 3).
    """
    if not offset > 0.0:
        raise ValueError(f"probe offset must be positive, got {offset}")
    shift = offset * mesh.normals
    return mesh.centroids + shift, mesh.centroids - shift


# ---------------------------------------------------------------------------
# Serialization: JSON metadata + flat CSV records.
# Field CSV column order: x,y,z,value.  Mesh CSV: cx,cy,cz,area,nx,ny,nz.
# ---------------------------------------------------------------------------


def grid_to_json(grid: Grid3, path):
    meta = {
        "origin": list(grid.origin),
        "h": grid.h,
        "dims": list(grid.dims),
        "mask_zlib_b64": base64.b64encode(zlib.compress(grid.mask.tobytes())).decode(),
        "counts": {
            "interior": grid.n_interior,
            "boundary": grid.n_boundary,
            "exterior": grid.n_nodes - grid.n_interior - grid.n_boundary,
        },
    }
    with open(path, "w") as f:
        json.dump(meta, f, indent=2)


def grid_from_json(path) -> Grid3:
    with open(path) as f:
        meta = json.load(f)
    dims = tuple(meta["dims"])
    mask = np.frombuffer(
        zlib.decompress(base64.b64decode(meta["mask_zlib_b64"])), dtype=np.uint8
    ).reshape(dims)
    origin = _vec3(meta["origin"])
    return Grid3(origin=origin, h=float(meta["h"]), dims=dims, mask=mask)


def field_to_csv(field: ScalarField, path):
    pts = field.grid.points()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "z", "value"])
        for (x, y, z), v in zip(pts, field.values.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(z)), repr(float(v))])


def field_from_csv(grid: Grid3, path) -> ScalarField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.n_nodes:
        raise ValueError(
            f"CSV has {data.shape[0]} rows but the grid has {grid.n_nodes} nodes"
        )
    return ScalarField(grid, data[:, 3].reshape(grid.dims))


def mesh_to_csv(mesh: SurfaceMesh, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cx", "cy", "cz", "area", "nx", "ny", "nz"])
        for c, a, nrm in zip(mesh.centroids, mesh.areas, mesh.normals):
            w.writerow([repr(float(c[0])), repr(float(c[1])), repr(float(c[2])), repr(float(a)),
                        repr(float(nrm[0])), repr(float(nrm[1])), repr(float(nrm[2]))])


def mesh_from_csv(path) -> SurfaceMesh:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return SurfaceMesh(data[:, 0:3], data[:, 3], data[:, 4:7])
