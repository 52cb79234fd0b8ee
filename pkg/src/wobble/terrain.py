"""Continuous ground surfaces with a certified slope bound.

Two variants: a sum of radial Gaussian bumps (analytic, smooth everywhere)
and a sampled grid with C1 bicubic Hermite interpolation. Both evaluate a
height and a gradient anywhere inside their extent; queries outside the
extent raise rather than extrapolate, because silent extrapolation would
break the slope certification the solver relies on.

All lengths share one arbitrary unit. Angles are radians internally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParseError, ValidationError

_DEFAULT_SLOPE_SAMPLES = 40_000


@dataclass(frozen=True)
class Extent:
    """Axis-aligned rectangle the terrain is certified over."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValidationError(
                f"extent must have min < max on both axes, got "
                f"[{self.xmin}, {self.xmax}] x [{self.ymin}, {self.ymax}]"
            )

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def contains_disc(self, cx: float, cy: float, r: float) -> bool:
        return (
            cx - r >= self.xmin
            and cx + r <= self.xmax
            and cy - r >= self.ymin
            and cy + r <= self.ymax
        )

    def require_inside(self, x, y) -> None:
        xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        bad = (xa < self.xmin) | (xa > self.xmax) | (ya < self.ymin) | (ya > self.ymax)
        if np.any(bad):
            i = int(np.argmax(bad.ravel()))
            raise DomainError(
                f"query point ({float(xa.ravel()[i])!r}, {float(ya.ravel()[i])!r}) "
                f"outside terrain extent "
                f"[{self.xmin}, {self.xmax}] x [{self.ymin}, {self.ymax}]"
            )

    def as_list(self) -> list[float]:
        return [self.xmin, self.xmax, self.ymin, self.ymax]


class Bump(NamedTuple):
    cx: float
    cy: float
    amplitude: float
    sigma: float


class BumpTerrain:
    """Sum of radial Gaussian bumps: z = sum A_k * exp(-r_k^2 / (2 s_k^2)).

    The profile is smooth, has an analytic gradient, and its single-bump
    slope maximum sits on the ring r = sigma with value |A| e^{-1/2} / sigma.
    Immutable after construction; evaluation is side-effect free.
    """

    kind = "bumps"

    def __init__(self, bumps, extent: Extent):
        self.bumps = tuple(Bump(*map(float, b)) for b in bumps)
        for b in self.bumps:
            if b.sigma <= 0.0:
                raise ValidationError(f"bump width must be positive, got {b.sigma}")
            if not all(math.isfinite(v) for v in b):
                raise ValidationError(f"bump has non-finite field: {b}")
        self.extent = extent
        # flat per-bump constants for the scalar fast path and vector loops
        self._cx = [b.cx for b in self.bumps]
        self._cy = [b.cy for b in self.bumps]
        self._amp = [b.amplitude for b in self.bumps]
        self._inv_s2 = [1.0 / (b.sigma * b.sigma) for b in self.bumps]
        self._packed = tuple(
            (b.cx, b.cy, b.amplitude, -0.5 / (b.sigma * b.sigma)) for b in self.bumps
        )
        self.kernel_arrays = (
            np.array(self._cx), np.array(self._cy), np.array(self._amp),
            np.array([p[3] for p in self._packed]),
        )
        for a in self.kernel_arrays:
            a.setflags(write=False)
        self._slope_cache: float | None = None

    def height(self, x, y):
        """Terrain height; accepts scalars or broadcastable arrays."""
        if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
            self.extent.require_inside(x, y)
            return self._height_array(np.asarray(x, float), np.asarray(y, float))
        e = self.extent
        if not (e.xmin <= x <= e.xmax and e.ymin <= y <= e.ymax):
            e.require_inside(x, y)
        z = 0.0
        mexp = math.exp
        for cx, cy, amp, neg_half_inv in self._packed:
            dx = x - cx
            dy = y - cy
            z += amp * mexp((dx * dx + dy * dy) * neg_half_inv)
        return z

    def _height_array(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        # accumulate bump by bump: far fewer large temporaries than one
        # (points x bumps) broadcast
        z = np.zeros(np.broadcast(x, y).shape)
        for k in range(len(self._amp)):
            dx = x - self._cx[k]
            dy = y - self._cy[k]
            z += self._amp[k] * np.exp((dx * dx + dy * dy) * (-0.5 * self._inv_s2[k]))
        return z

    def gradient(self, x, y):
        """(df/dx, df/dy); accepts scalars or broadcastable arrays."""
        if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
            self.extent.require_inside(x, y)
            x = np.asarray(x, float)
            y = np.asarray(y, float)
            shape = np.broadcast(x, y).shape
            gx = np.zeros(shape)
            gy = np.zeros(shape)
            for k in range(len(self._amp)):
                dx = x - self._cx[k]
                dy = y - self._cy[k]
                inv = self._inv_s2[k]
                w = (self._amp[k] * inv) * np.exp((dx * dx + dy * dy) * (-0.5 * inv))
                gx -= w * dx
                gy -= w * dy
            return gx, gy
        e = self.extent
        if not (e.xmin <= x <= e.xmax and e.ymin <= y <= e.ymax):
            e.require_inside(x, y)
        gx = 0.0
        gy = 0.0
        for k in range(len(self._amp)):
            dx = x - self._cx[k]
            dy = y - self._cy[k]
            w = self._amp[k] * math.exp(-0.5 * (dx * dx + dy * dy) * self._inv_s2[k])
            gx -= w * dx * self._inv_s2[k]
            gy -= w * dy * self._inv_s2[k]
        return gx, gy

    @property
    def slope_bound(self) -> float:
        """Cached sampled slope bound (radians); a lower-bound estimate."""
        if self._slope_cache is None:
            self._slope_cache = estimate_slope_bound(self)
        return self._slope_cache


class GridTerrain:
    """Row-major height samples with C1 piecewise-bicubic interpolation.

    Node x = origin_x + col * spacing, node y = origin_y + row * spacing.
    Node derivatives come from central finite differences (one-sided at the
    edges), which makes the interpolant reproduce node values exactly and
    keeps the gradient continuous across cell boundaries. Bilinear would be
    merely C0 and the solver needs a tangent plane everywhere.
    """

    kind = "grid"

    def __init__(self, origin, spacing: float, heights):
        h = np.asarray(heights, dtype=float)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise ValidationError(
                f"grid heights must be a 2-D array with at least 2x2 nodes, got {h.shape}"
            )
        if not np.all(np.isfinite(h)):
            raise ValidationError("grid heights contain non-finite values")
        if not (spacing > 0.0):
            raise ValidationError(f"grid spacing must be positive, got {spacing}")
        self.origin = (float(origin[0]), float(origin[1]))
        self.spacing = float(spacing)
        self.heights = h
        self.heights.setflags(write=False)
        d = self.spacing
        # per-cell Hermite data uses derivatives scaled to the unit cell
        self._fx = np.gradient(h, d, axis=1) * d
        self._fy = np.gradient(h, d, axis=0) * d
        self._fxy = np.gradient(self._fx, d, axis=0) * d
        for a in (self._fx, self._fy, self._fxy):
            a.setflags(write=False)
        rows, cols = h.shape
        self.extent = Extent(
            self.origin[0],
            self.origin[0] + (cols - 1) * d,
            self.origin[1],
            self.origin[1] + (rows - 1) * d,
        )
        self._slope_cache: float | None = None

    @classmethod
    def from_function(cls, fn, extent: Extent, spacing: float) -> "GridTerrain":
        """Sample fn(x, y) on a regular grid covering the extent."""
        nx = int(math.ceil(extent.width / spacing)) + 1
        ny = int(math.ceil(extent.height / spacing)) + 1
        xs = extent.xmin + spacing * np.arange(nx)
        ys = extent.ymin + spacing * np.arange(ny)
        grid = np.array([[float(fn(x, y)) for x in xs] for y in ys])
        return cls((extent.xmin, extent.ymin), spacing, grid)

    @staticmethod
    def _basis(t: np.ndarray):
        t2 = t * t
        t3 = t2 * t
        return (
            2.0 * t3 - 3.0 * t2 + 1.0,
            -2.0 * t3 + 3.0 * t2,
            t3 - 2.0 * t2 + t,
            t3 - t2,
        )

    @staticmethod
    def _dbasis(t: np.ndarray):
        t2 = t * t
        return (
            6.0 * t2 - 6.0 * t,
            -6.0 * t2 + 6.0 * t,
            3.0 * t2 - 4.0 * t + 1.0,
            3.0 * t2 - 2.0 * t,
        )

    def _locate(self, x, y):
        rows, cols = self.heights.shape
        tx = (np.asarray(x, float) - self.origin[0]) / self.spacing
        ty = (np.asarray(y, float) - self.origin[1]) / self.spacing
        j = np.clip(np.floor(tx).astype(int), 0, cols - 2)
        i = np.clip(np.floor(ty).astype(int), 0, rows - 2)
        return i, j, tx - j, ty - i

    def _corner_data(self, i, j):
        h, fx, fy, fxy = self.heights, self._fx, self._fy, self._fxy
        i1, j1 = i + 1, j + 1
        return (
            (h[i, j], h[i, j1], h[i1, j], h[i1, j1]),
            (fx[i, j], fx[i, j1], fx[i1, j], fx[i1, j1]),
            (fy[i, j], fy[i, j1], fy[i1, j], fy[i1, j1]),
            (fxy[i, j], fxy[i, j1], fxy[i1, j], fxy[i1, j1]),
        )

    def _tensor(self, bu, bv, f, fx, fy, fxy):
        f00, f10, f01, f11 = f
        x00, x10, x01, x11 = fx
        y00, y10, y01, y11 = fy
        k00, k10, k01, k11 = fxy
        return (
            bv[0] * (bu[0] * f00 + bu[1] * f10 + bu[2] * x00 + bu[3] * x10)
            + bv[1] * (bu[0] * f01 + bu[1] * f11 + bu[2] * x01 + bu[3] * x11)
            + bv[2] * (bu[0] * y00 + bu[1] * y10 + bu[2] * k00 + bu[3] * k10)
            + bv[3] * (bu[0] * y01 + bu[1] * y11 + bu[2] * k01 + bu[3] * k11)
        )

    def _cell(self, x: float, y: float):
        e = self.extent
        if not (e.xmin <= x <= e.xmax and e.ymin <= y <= e.ymax):
            e.require_inside(x, y)
        rows, cols = self.heights.shape
        tx = (x - self.origin[0]) / self.spacing
        ty = (y - self.origin[1]) / self.spacing
        j = min(int(tx), cols - 2)
        i = min(int(ty), rows - 2)
        return i, j, tx - j, ty - i

    def height(self, x, y):
        if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
            self.extent.require_inside(x, y)
            i, j, u, v = self._locate(x, y)
            f, fx, fy, fxy = self._corner_data(i, j)
            return self._tensor(self._basis(u), self._basis(v), f, fx, fy, fxy)
        i, j, u, v = self._cell(float(x), float(y))
        f, fx, fy, fxy = self._corner_data(i, j)
        return float(self._tensor(self._basis(u), self._basis(v), f, fx, fy, fxy))

    def gradient(self, x, y):
        scalar = not (isinstance(x, np.ndarray) or isinstance(y, np.ndarray))
        if scalar:
            i, j, u, v = self._cell(float(x), float(y))
        else:
            self.extent.require_inside(x, y)
            i, j, u, v = self._locate(x, y)
        f, fx, fy, fxy = self._corner_data(i, j)
        bu, bv = self._basis(u), self._basis(v)
        du, dv = self._dbasis(u), self._dbasis(v)
        gx = self._tensor(du, bv, f, fx, fy, fxy) / self.spacing
        gy = self._tensor(bu, dv, f, fx, fy, fxy) / self.spacing
        if scalar:
            return float(gx), float(gy)
        return gx, gy

    @property
    def slope_bound(self) -> float:
        if self._slope_cache is None:
            self._slope_cache = estimate_slope_bound(self)
        return self._slope_cache


Terrain = BumpTerrain | GridTerrain


def flat_terrain(extent: Extent | None = None) -> BumpTerrain:
    return BumpTerrain((), extent or Extent(-100.0, 100.0, -100.0, 100.0))


def _refine_candidates(terrain: Terrain, ext: Extent, xs, ys, spacing: float,
                       levels: int = 14) -> float:
    """Pattern-search refinement of |grad|^2 around candidate points."""
    px = np.array(xs, dtype=float)
    py = np.array(ys, dtype=float)
    offs = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)
    h = spacing
    for _ in range(levels):
        cx = np.clip(px[:, None] + offs[:, 0] * h, ext.xmin, ext.xmax)
        cy = np.clip(py[:, None] + offs[:, 1] * h, ext.ymin, ext.ymax)
        gx, gy = terrain.gradient(cx, cy)
        g2 = gx * gx + gy * gy
        pick = np.argmax(g2, axis=1)
        rows = np.arange(px.size)
        px = cx[rows, pick]
        py = cy[rows, pick]
        h *= 0.5
    gx, gy = terrain.gradient(px, py)
    return float(np.max(gx * gx + gy * gy))


def estimate_slope_bound(terrain: Terrain, extent: Extent | None = None,
                         samples: int = _DEFAULT_SLOPE_SAMPLES) -> float:
    """Sampled supremum of arctan |grad f| over the extent, refined locally.

    Uniform grid of about `samples` points, then pattern-search refinement
    around the top 1% (and, for bump terrain, around each bump's slope ring).
    The result is a lower bound on the true supremum and is reported as an
    estimate.
    """
    if samples < 10_000:
        raise DomainError(f"slope estimation needs at least 10^4 samples, got {samples}")
    ext = extent or terrain.extent
    n = max(int(math.isqrt(samples)), 100)
    xs = np.linspace(ext.xmin, ext.xmax, n)
    ys = np.linspace(ext.ymin, ext.ymax, n)
    gx, gy = terrain.gradient(xs[None, :], ys[:, None])
    g2 = (gx * gx + gy * gy).ravel()
    if float(np.max(g2)) == 0.0:
        if not (isinstance(terrain, BumpTerrain) and any(b.amplitude for b in terrain.bumps)):
            return 0.0
    k = max(1, g2.size // 100)
    top = np.argpartition(g2, g2.size - k)[g2.size - k:]
    X, Y = np.meshgrid(xs, ys)
    cand_x = list(X.ravel()[top])
    cand_y = list(Y.ravel()[top])
    if isinstance(terrain, BumpTerrain):
        ring = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
        for b in terrain.bumps:
            for a in ring:
                cx = min(max(b.cx + b.sigma * math.cos(a), ext.xmin), ext.xmax)
                cy = min(max(b.cy + b.sigma * math.sin(a), ext.ymin), ext.ymax)
                cand_x.append(cx)
                cand_y.append(cy)
    spacing = max(ext.width, ext.height) / (n - 1)
    best = _refine_candidates(terrain, ext, cand_x, cand_y, spacing)
    return math.atan(math.sqrt(best))


def generate_terrain(seed: int, target_slope: float, bump_count: int,
                     extent: Extent) -> BumpTerrain:
    """Seeded random bump terrain with slope bound at most target_slope.

    Deterministic in the seed (PCG64). Amplitudes are rescaled after
    generation so the sampled slope bound lands just under the target;
    bump_count = 0 or target 0 yields flat terrain.
    """
    if not (0.0 <= target_slope < math.pi / 2):
        raise DomainError(f"target slope must be in [0, pi/2), got {target_slope}")
    if bump_count < 0:
        raise DomainError(f"bump count must be non-negative, got {bump_count}")
    rng = np.random.default_rng(seed)
    span = min(extent.width, extent.height)
    sigma_lo, sigma_hi = 0.035 * span, 0.10 * span
    margin = 2.0 * sigma_hi
    bumps = []
    for _ in range(bump_count):
        cx = rng.uniform(extent.xmin + margin, extent.xmax - margin)
        cy = rng.uniform(extent.ymin + margin, extent.ymax - margin)
        sigma = rng.uniform(sigma_lo, sigma_hi)
        amp = rng.uniform(0.2, 1.0) * sigma
        if rng.uniform() < 0.5:
            amp = -amp
        bumps.append(Bump(cx, cy, amp, sigma))
    if bump_count == 0 or target_slope == 0.0:
        scaled = [Bump(b.cx, b.cy, 0.0, b.sigma) for b in bumps]
        t = BumpTerrain(scaled, extent)
        t._slope_cache = 0.0
        return t
    raw = BumpTerrain(bumps, extent)
    est = estimate_slope_bound(raw)
    if est == 0.0:
        return raw
    scale = (1.0 - 1e-9) * math.tan(target_slope) / math.tan(est)
    scaled = [Bump(b.cx, b.cy, b.amplitude * scale, b.sigma) for b in bumps]
    return BumpTerrain(scaled, extent)


def serialize_terrain(terrain: Terrain) -> str:
    """UTF-8 text form; round-trips through parse_terrain bit-identically."""
    if isinstance(terrain, BumpTerrain):
        doc = {
            "type": "bumps",
            "extent": terrain.extent.as_list(),
            "bumps": [
                {"cx": b.cx, "cy": b.cy, "amplitude": b.amplitude, "sigma": b.sigma}
                for b in terrain.bumps
            ],
        }
    elif isinstance(terrain, GridTerrain):
        rows, cols = terrain.heights.shape
        doc = {
            "type": "grid",
            "origin": [terrain.origin[0], terrain.origin[1]],
            "spacing": terrain.spacing,
            "rows": rows,
            "cols": cols,
            "heights": [float(v) for v in terrain.heights.ravel()],
        }
    else:
        raise ValidationError(f"cannot serialize terrain of type {type(terrain)!r}")
    return json.dumps(doc, indent=1) + "\n"


def _require_field(doc: dict, name: str, where: str):
    if name not in doc:
        raise ParseError(f"missing field '{name}' in {where}")
    return doc[name]


def parse_terrain(text: str) -> Terrain:
    """Parse the terrain file format; see serialize_terrain for the schema."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"terrain file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("terrain file must contain a JSON object")
    kind = _require_field(doc, "type", "terrain file")
    if kind == "bumps":
        raw = _require_field(doc, "bumps", "bumps terrain")
        bumps = []
        for idx, b in enumerate(raw):
            where = f"bump {idx + 1}"
            bumps.append(
                Bump(
                    float(_require_field(b, "cx", where)),
                    float(_require_field(b, "cy", where)),
                    float(_require_field(b, "amplitude", where)),
                    float(_require_field(b, "sigma", where)),
                )
            )
        if "extent" in doc:
            e = doc["extent"]
            if len(e) != 4:
                raise ValidationError(f"extent must have 4 entries, got {len(e)}")
            extent = Extent(*map(float, e))
        elif bumps:
            pad = 8.0 * max(b.sigma for b in bumps)
            extent = Extent(
                min(b.cx for b in bumps) - pad,
                max(b.cx for b in bumps) + pad,
                min(b.cy for b in bumps) - pad,
                max(b.cy for b in bumps) + pad,
            )
        else:
            extent = Extent(-100.0, 100.0, -100.0, 100.0)
        return BumpTerrain(bumps, extent)
    if kind == "grid":
        origin = _require_field(doc, "origin", "grid terrain")
        spacing = float(_require_field(doc, "spacing", "grid terrain"))
        rows = int(_require_field(doc, "rows", "grid terrain"))
        cols = int(_require_field(doc, "cols", "grid terrain"))
        heights = _require_field(doc, "heights", "grid terrain")
        if rows * cols != len(heights):
            raise ValidationError(
                f"grid declares {rows} x {cols} = {rows * cols} nodes but "
                f"carries {len(heights)} heights"
            )
        h = np.array([float(v) for v in heights]).reshape(rows, cols)
        return GridTerrain((float(origin[0]), float(origin[1])), spacing, h)
    raise ParseError(f"unknown terrain type {kind!r}")
