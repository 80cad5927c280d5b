"""Exact geometric queries for the supported C^{1,1} planar domains.

Two domain shapes are supported: disks (all queries in closed form) and
smooth star-shaped domains given by a radial profile r(theta) with two
continuous derivatives (nearest-point queries via Newton projection).
All operations are pure; ``Domain`` instances are immutable and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Domain",
    "BoundaryQuadrature",
    "disk",
    "star_shaped",
    "signed_distance",
    "nearest_boundary_point",
    "boundary_quadrature",
]


@dataclass(frozen=True)
class Domain:
    """A bounded planar domain with exact boundary queries.

    Parameters
    ----------
    kind : str
        ``"disk"`` or ``"star"``.
    center : ndarray, shape (2,)
        Center of the disk, resp. star point of the radial profile.
    radius : float
        Disk radius (ignored for ``"star"``).
    profile, dprofile, d2profile : callable, optional
        Radial profile r(theta) and its first two derivatives for the
        star-shaped case.  r must be positive and 2*pi-periodic.
    """

    kind: str
    center: np.ndarray
    radius: float = 1.0
    profile: Optional[Callable] = None
    dprofile: Optional[Callable] = None
    d2profile: Optional[Callable] = None
    dim: int = 2
    # filled in by __post_init__
    diameter: float = field(default=0.0)
    ball_radius: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.kind == "disk":
            if self.radius <= 0:
                raise ValueError("disk radius must be positive")
            object.__setattr__(self, "diameter", 2.0 * self.radius)
            object.__setattr__(self, "ball_radius", self.radius)
        elif self.kind == "star":
            if self.profile is None or self.dprofile is None or self.d2profile is None:
                raise ValueError("star domain needs profile and two derivatives")
            th = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
            r = self._rvec(th)
            if np.any(r <= 0):
                raise ValueError("radial profile must be positive")
            object.__setattr__(self, "diameter", float(2 * r.max()))
            # conservative reach estimate: min radius of curvature and min r
            rp, rpp = self._rvec(th, 1), self._rvec(th, 2)
            num = (r * r + rp * rp) ** 1.5
            den = np.abs(r * r + 2 * rp * rp - r * rpp)
            rho = min(float(np.min(num / np.maximum(den, 1e-300))), float(r.min()))
            object.__setattr__(self, "ball_radius", rho)
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    def _rvec(self, th, order=0):
        f = (self.profile, self.dprofile, self.d2profile)[order]
        return np.asarray(f(np.asarray(th, dtype=float)), dtype=float)

    # -- boundary parametrization -------------------------------------
    def boundary_point(self, theta):
        """Point gamma(theta) on the boundary."""
        theta = np.asarray(theta, dtype=float)
        r = self.radius if self.kind == "disk" else self._rvec(theta)
        return self.center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def boundary_speed(self, theta):
        """|gamma'(theta)| (arc-length density)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "disk":
            return np.full(theta.shape, self.radius)
        r, rp = self._rvec(theta), self._rvec(theta, 1)
        return np.hypot(r, rp)

    def outer_normal(self, theta):
        """Unit outer normal at gamma(theta)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "disk":
            return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        r, rp = self._rvec(theta), self._rvec(theta, 1)
        # tangent = rp*e_r + r*e_t ; outward normal = (r*e_r - rp*e_t)/|gamma'|
        er = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        et = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        n = r[..., None] * er - rp[..., None] * et
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def contains(self, x):
        """True for points in the open domain."""
        x = np.asarray(x, dtype=float)
        v = x - self.center
        rho = np.linalg.norm(v, axis=-1)
        if self.kind == "disk":
            return rho < self.radius
        th = np.arctan2(v[..., 1], v[..., 0])
        return rho < self._rvec(th)


def disk(radius=1.0, center=(0.0, 0.0)) -> Domain:
    """Disk of given radius and center."""
    return Domain(kind="disk", center=np.asarray(center, float), radius=radius)


def star_shaped(profile, dprofile, d2profile, center=(0.0, 0.0)) -> Domain:
    """Star-shaped domain with C^{1,1} radial profile r(theta) > 0."""
    return Domain(
        kind="star",
        center=np.asarray(center, float),
        profile=profile,
        dprofile=dprofile,
        d2profile=d2profile,
    )


# ----------------------------------------------------------------------
# distance / projection


def _project_star(domain: Domain, x: np.ndarray):
    """Newton projection of points onto a star-shaped boundary.

    Returns (theta, dist).  Shapes: x (n, 2) -> (n,), (n,).
    """
    v = x - domain.center
    # coarse global search, then Newton on d/dtheta |x - gamma(theta)|^2 = 0
    grid = np.linspace(0.0, 2 * np.pi, 256, endpoint=False)
    gp = domain.boundary_point(grid)  # (m, 2)
    d2 = ((x[:, None, :] - gp[None, :, :]) ** 2).sum(-1)
    th = grid[np.argmin(d2, axis=1)]
    for _ in range(40):
        g = domain.boundary_point(th)
        r, rp, rpp = (domain._rvec(th, k) for k in range(3))
        er = np.stack([np.cos(th), np.sin(th)], axis=-1)
        et = np.stack([-np.sin(th), np.cos(th)], axis=-1)
        dg = rp[:, None] * er + r[:, None] * et
        d2g = (rpp - r)[:, None] * er + 2 * rp[:, None] * et
        w = x - g
        f = -(w * dg).sum(-1)  # d/dth (|w|^2/2)
        fp = (dg * dg).sum(-1) - (w * d2g).sum(-1)
        step = f / np.where(np.abs(fp) > 1e-14, fp, 1e-14)
        step = np.clip(step, -0.2, 0.2)
        th = th - step
        if np.max(np.abs(step)) < 1e-15:
            break
    g = domain.boundary_point(th)
    return th, np.linalg.norm(x - g, axis=-1)


def signed_distance(domain: Domain, x) -> np.ndarray:
    """Distance d_x = dist(x, boundary) >= 0.

    Exact closed form for disks: ``| |x-c| - R |``.  Accepts a single
    point or an (..., 2) array and returns matching shape.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if domain.kind == "disk":
        d = np.abs(np.linalg.norm(pts - domain.center, axis=-1) - domain.radius)
    else:
        _, d = _project_star(domain, pts)
    return float(d[0]) if single else d.reshape(x.shape[:-1])


def nearest_boundary_point(domain: Domain, x) -> np.ndarray:
    """Closest boundary point to x.

    At the disk center the minimizer is not unique; the deterministic
    tie-break returns ``center + (R, 0)``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if domain.kind == "disk":
        v = pts - domain.center
        rho = np.linalg.norm(v, axis=-1)
        unit = np.where(
            rho[:, None] > 1e-300, v / np.maximum(rho, 1e-300)[:, None], [1.0, 0.0]
        )
        p = domain.center + domain.radius * unit
    else:
        th, _ = _project_star(domain, pts)
        p = domain.boundary_point(th)
    return p[0] if single else p.reshape(x.shape)


# ----------------------------------------------------------------------
# boundary quadrature


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Surface-measure quadrature on the domain boundary.

    ``sum(weights) ~ sigma(boundary)``; nodes lie on the boundary to
    machine accuracy and carry unit outer normals.
    """

    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    normals: np.ndarray  # (n, 2)
    thetas: np.ndarray  # (n,)

    def integrate(self, f) -> float:
        vals = np.asarray(f(self.points), dtype=float)
        return float(self.weights @ vals)


def boundary_quadrature(domain: Domain, n: int) -> BoundaryQuadrature:
    """Composite trapezoidal rule in the angle variable.

    For smooth 2*pi-periodic integrands this rule is spectrally accurate
    (exact for trigonometric polynomials of degree < n on the circle).

    Parameters
    ----------
    domain : Domain
    n : int
        Node count, at least 8.
    """
    if n < 8:
        raise ValueError("need at least 8 boundary nodes")
    th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    w = domain.boundary_speed(th) * (2 * np.pi / n)
    return BoundaryQuadrature(
        points=domain.boundary_point(th),
        weights=w,
        normals=domain.outer_normal(th),
        thetas=th,
    )
