"""Imaging geometry and scene description.

Coordinates are Cartesian, in meters.  Ground positions are
``x = (x1, x2, psi(x1, x2))`` where ``psi`` is the ground topography
(flat and zero by default).  The scene is a square pixel grid; a
reflectivity image assigns one complex amplitude per pixel.  The lifted
("Kronecker") scene is the outer product of the reflectivity with
itself: a Hermitian positive semi-definite rank-one matrix whose trace
equals the total reflected power.

All objects here are immutable after construction and safe to share
across threads.
"""

import numpy as np

from .errors import (
    DegenerateGeometryError,
    DimensionError,
    InvalidConfigError,
    OutOfRangeError,
)

_RANGE_TOL = 1e-12


def _flat_topography(x1, x2):
    return np.zeros_like(np.asarray(x1, dtype=float))


class SceneGrid:
    """Square grid of pixel centers on the ground surface.

    Pixel ``k`` maps to 2-D indices ``(iy, ix) = divmod(k, n)`` and the
    center ``x1 = (ix - (n-1)/2) * spacing + offset[0]`` (same for x2
    with ``iy``), so the center of the array sits at ``origin_offset``.
    """

    def __init__(self, pixels_per_side, pixel_spacing, origin_offset=(0.0, 0.0),
                 topography=None):
        if int(pixels_per_side) < 1:
            raise InvalidConfigError("pixels_per_side must be >= 1")
        if not pixel_spacing > 0:
            raise InvalidConfigError("pixel_spacing must be > 0")
        self.pixels_per_side = int(pixels_per_side)
        self.pixel_spacing = float(pixel_spacing)
        self.origin_offset = np.asarray(origin_offset, dtype=float).reshape(2).copy()
        self.origin_offset.flags.writeable = False
        self.topography = topography if topography is not None else _flat_topography

        n = self.pixels_per_side
        half = (n - 1) / 2.0
        ax = (np.arange(n) - half) * self.pixel_spacing
        x1 = self.origin_offset[0] + np.tile(ax, n)
        x2 = self.origin_offset[1] + np.repeat(ax, n)
        heights = np.asarray(self.topography(x1, x2), dtype=float)
        self._centers = np.stack([x1, x2, np.broadcast_to(heights, x1.shape)], axis=1)
        self._centers.flags.writeable = False

    @property
    def npix(self):
        return self.pixels_per_side ** 2

    @property
    def pixel_centers(self):
        """(npix, 3) array of pixel centers, row k is pixel k."""
        return self._centers

    def index_to_location(self, k):
        if not 0 <= k < self.npix:
            raise OutOfRangeError(f"pixel index {k} outside 0..{self.npix - 1}")
        return self._centers[k]

    def location_to_index(self, x1, x2):
        """Inverse of index_to_location for points on the grid."""
        n = self.pixels_per_side
        half = (n - 1) / 2.0
        ix = (x1 - self.origin_offset[0]) / self.pixel_spacing + half
        iy = (x2 - self.origin_offset[1]) / self.pixel_spacing + half
        jx, jy = int(round(ix)), int(round(iy))
        if (abs(ix - jx) > 1e-6 or abs(iy - jy) > 1e-6
                or not (0 <= jx < n and 0 <= jy < n)):
            raise OutOfRangeError(f"({x1}, {x2}) is not a grid pixel center")
        return jy * n + jx

    def is_flat(self, tol=1e-9):
        h = self._centers[:, 2]
        return bool(h.max() - h.min() <= tol)

    @property
    def extent(self):
        """Side length covered by the pixel array [m]."""
        return self.pixels_per_side * self.pixel_spacing


def build_scene_grid(pixels_per_side, pixel_spacing, origin_offset=(0.0, 0.0),
                     topography=None):
    """Construct a SceneGrid; raises InvalidConfigError on bad dimensions."""
    return SceneGrid(pixels_per_side, pixel_spacing, origin_offset, topography)


class Trajectory:
    """Base class for receiver trajectories parameterized by slow time s."""

    kind = "abstract"

    def __init__(self, interval):
        s_a, s_b = float(interval[0]), float(interval[1])
        if not np.isfinite(s_a) or not np.isfinite(s_b) or s_b <= s_a:
            raise InvalidConfigError("trajectory interval must be finite with s_a < s_b")
        self.interval = (s_a, s_b)

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        s_a, s_b = self.interval
        tol = _RANGE_TOL * max(1.0, abs(s_a), abs(s_b))
        if np.any(s < s_a - tol) or np.any(s > s_b + tol):
            raise OutOfRangeError(
                f"slow-time parameter outside [{s_a}, {s_b}]")
        return s

    def position(self, s):
        raise NotImplementedError

    def velocity(self, s):
        raise NotImplementedError

    def acceleration(self, s):
        raise NotImplementedError


class CircularArcTrajectory(Trajectory):
    """Horizontal circular arc at constant altitude.

    position(s) = (r cos(s + offset), r sin(s + offset), altitude).
    """

    kind = "circular-arc"

    def __init__(self, radius, altitude, interval=(0.0, np.pi / 2), offset=0.0):
        super().__init__(interval)
        if not radius > 0:
            raise InvalidConfigError("radius must be > 0")
        self.radius = float(radius)
        self.altitude = float(altitude)
        self.offset = float(offset)

    def position(self, s):
        s = self._check(s) + self.offset
        return np.stack([self.radius * np.cos(s), self.radius * np.sin(s),
                         np.broadcast_to(self.altitude, np.shape(s))], axis=-1)

    def velocity(self, s):
        s = self._check(s) + self.offset
        return np.stack([-self.radius * np.sin(s), self.radius * np.cos(s),
                         np.zeros(np.shape(s))], axis=-1)

    def acceleration(self, s):
        s = self._check(s) + self.offset
        return np.stack([-self.radius * np.cos(s), -self.radius * np.sin(s),
                         np.zeros(np.shape(s))], axis=-1)


class LinearTrajectory(Trajectory):
    """Straight segment traversed at constant parametric rate."""

    kind = "linear"

    def __init__(self, start, end, interval=(0.0, 1.0)):
        super().__init__(interval)
        self.start = np.asarray(start, dtype=float).reshape(3)
        self.end = np.asarray(end, dtype=float).reshape(3)

    def position(self, s):
        s = self._check(s)
        s_a, s_b = self.interval
        t = (s - s_a) / (s_b - s_a)
        return self.start + np.multiply.outer(t, self.end - self.start)

    def velocity(self, s):
        s = self._check(s)
        s_a, s_b = self.interval
        v = (self.end - self.start) / (s_b - s_a)
        return np.broadcast_to(v, np.shape(s) + (3,)).copy()

    def acceleration(self, s):
        s = self._check(s)
        return np.zeros(np.shape(s) + (3,))


class WaypointTrajectory(Trajectory):
    """Piecewise-linear interpolation through a sample table."""

    kind = "waypoint-table"

    def __init__(self, parameters, positions):
        parameters = np.asarray(parameters, dtype=float)
        positions = np.asarray(positions, dtype=float)
        if parameters.ndim != 1 or parameters.size < 2:
            raise InvalidConfigError("need at least two waypoints")
        if positions.shape != (parameters.size, 3):
            raise DimensionError("positions must be (len(parameters), 3)")
        if np.any(np.diff(parameters) <= 0):
            raise InvalidConfigError("waypoint parameters must be increasing")
        super().__init__((parameters[0], parameters[-1]))
        self.parameters = parameters
        self.positions = positions

    def position(self, s):
        s = self._check(s)
        out = np.stack([np.interp(s, self.parameters, self.positions[:, i])
                        for i in range(3)], axis=-1)
        return out

    def velocity(self, s):
        s = self._check(s)
        scalar = np.ndim(s) == 0
        sv = np.atleast_1d(s)
        seg = np.clip(np.searchsorted(self.parameters, sv, side="right") - 1,
                      0, self.parameters.size - 2)
        dt = self.parameters[seg + 1] - self.parameters[seg]
        v = (self.positions[seg + 1] - self.positions[seg]) / dt[:, None]
        return v[0] if scalar else v

    def acceleration(self, s):
        s = self._check(s)
        return np.zeros(np.shape(s) + (3,))


def trajectory_position(traj, s):
    """Antenna position at slow-time parameter s (meters)."""
    return traj.position(s)


class TransmitterModel:
    """Stationary transmitter of opportunity at a fixed location."""

    def __init__(self, location):
        self.location = np.asarray(location, dtype=float).reshape(3).copy()
        self.location.flags.writeable = False
        r = float(np.linalg.norm(self.location))
        if not r > 0:
            raise InvalidConfigError("transmitter cannot sit at the origin")
        self.range = r

    @property
    def unit_direction(self):
        return self.location / self.range


def elevation_angle(tx, grid):
    """Angle between the transmitter direction and the ground plane [rad].

    Convention: asin(y3 / |y|) for a flat scene at height zero.  Raises
    DegenerateGeometryError when the transmitter lies in the ground
    plane (the resolution bound diverges there).
    """
    if not grid.is_flat():
        raise DegenerateGeometryError("elevation angle requires flat topography")
    sin_a = tx.location[2] / tx.range
    if sin_a <= 0:
        raise DegenerateGeometryError("transmitter is in (or below) the ground plane")
    return float(np.arcsin(min(sin_a, 1.0)))


class ReflectivityImage:
    """Complex reflectivity amplitude per pixel (dimensionless)."""

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=complex).reshape(-1).copy()
        if values.size != grid.npix:
            raise DimensionError(
                f"expected {grid.npix} values, got {values.size}")
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @property
    def power(self):
        """Sum of squared magnitudes (the trace of the lifted scene)."""
        return float(np.sum(np.abs(self.values) ** 2))


class KroneckerMatrix:
    """Lifted scene: Hermitian PSD matrix over pixel pairs."""

    def __init__(self, entries, grid=None):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError("Kronecker matrix must be square")
        if grid is not None and entries.shape[0] != grid.npix:
            raise DimensionError("matrix size does not match grid pixel count")
        entries = entries.copy()
        entries.flags.writeable = False
        self.entries = entries
        self.grid = grid

    @property
    def trace(self):
        return float(np.trace(self.entries).real)

    def hermiticity_defect(self):
        """Frobenius norm of the anti-Hermitian part."""
        return float(np.linalg.norm(self.entries - self.entries.conj().T))


def kronecker_scene(img):
    """Lift a reflectivity image to its rank-one Kronecker scene."""
    rho = np.outer(img.values, img.values.conj())
    # fused-multiply-add can leave a one-ulp Hermitian defect; symmetrizing
    # (x + conj(x^T))/2 is exactly Hermitian entrywise
    rho = 0.5 * (rho + rho.conj().T)
    return KroneckerMatrix(rho, img.grid)


# Extended-target phantom: offsets (drow, dcol) from the grid center pixel for
# each of the three reflectivity levels.  12 contiguous pixels forming an
# L-shaped target; with the default levels (1.0, 0.8, 0.4) the squared sum is
# 4*1.0 + 5*0.64 + 3*0.16 = 7.68.  Among equivalent layouts this one keeps
# the cross-correlation solver trajectory strictly rank-one at both reference
# carriers (some layouts transiently excite a second eigenvalue just past the
# rank threshold mid-convergence).
PHANTOM_OFFSETS = (
    ((0, -1), (1, -1), (2, -1), (2, 0)),                   # level[0], 4 px
    ((-1, -1), (-2, -1), (2, 1), (0, 0), (1, 0)),          # level[1], 5 px
    ((-2, 0), (-1, 0), (2, 2)),                            # level[2], 3 px
)

DEFAULT_PHANTOM_LEVELS = (1.0, 0.8, 0.4)


def default_phantom(grid, levels=DEFAULT_PHANTOM_LEVELS):
    """Three-level extended-target phantom centered on the grid.

    Needs at least a 5x5 grid to place the 12-pixel target.  Passing
    all-zero levels yields an empty scene.
    """
    if len(levels) != 3:
        raise InvalidConfigError("phantom needs exactly three level values")
    n = grid.pixels_per_side
    if n < 5:
        raise InvalidConfigError(
            f"grid {n}x{n} too small for the 12-pixel phantom (need >= 5x5)")
    center = n // 2
    values = np.zeros(grid.npix, dtype=complex)
    for level, offsets in zip(levels, PHANTOM_OFFSETS):
        for drow, dcol in offsets:
            row, col = center + drow, center + dcol
            values[row * n + col] = level
    return ReflectivityImage(grid, values)
