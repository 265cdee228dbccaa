"""Shape coordinates for the triatomic system.

Forward and inverse maps between the two mass-weighted Jacobi vectors
(r1, r2) and the coordinates (rho, chi, phi; alpha, beta, gamma), the
rotation-invariant quadratic coordinates (q1, q2, q3), the reduced metric and
volume density on the shape half-space, the Maurer-Cartan frame components,
and the equivariant extension of shape-space wave functions.

Gauge conventions of the inverse map: at collinear configurations gamma = 0
(it parametrizes the isotropy circle), at beta in {0, pi} the whole
z-rotation is folded into alpha, and at the coordinate pole chi = pi/2 the
angle phi is reported as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .so3 import euler_from_rotation, generators, normalize_angle, rotation_from_euler

__all__ = [
    "ShapeError",
    "DragtCoords",
    "dragt_to_vectors",
    "section",
    "shape_invariants",
    "shape_from_invariants",
    "vectors_to_dragt",
    "reduced_metric",
    "volume_density",
    "maurer_cartan",
    "equivariant_extend",
    "ShapeGridFunction",
]


class ShapeError(ValueError):
    """Domain error on the shape chart (collision point, bad ranges)."""


@dataclass(frozen=True)
class DragtCoords:
    """Shape coordinates plus the Euler angles of the body frame."""

    rho: float
    chi: float
    phi: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    @property
    def shape(self):
        return (self.rho, self.chi, self.phi)

    @property
    def angles(self):
        return (self.alpha, self.beta, self.gamma)


def dragt_to_vectors(rho, chi, phi, alpha=0.0, beta=0.0, gamma=0.0):
    """Jacobi vectors of the coordinates; broadcasts over leading axes.

    r1 = rho (cos(chi/2) cos(phi/2) u3 + sin(chi/2) sin(phi/2) u2)
    r2 = rho (cos(chi/2) sin(phi/2) u3 - sin(chi/2) cos(phi/2) u2)
    with the frame (u1, u2, u3) obtained by rotating the standard basis.
    """
    rho = np.asarray(rho, dtype=float)
    c, s = np.cos(np.asarray(chi) / 2.0), np.sin(np.asarray(chi) / 2.0)
    cf, sf = np.cos(np.asarray(phi) / 2.0), np.sin(np.asarray(phi) / 2.0)
    u = rotation_from_euler(alpha, beta, gamma)
    u2, u3 = u[..., :, 1], u[..., :, 2]
    r1 = rho[..., None] * (
        (c * cf)[..., None] * u3 + (s * sf)[..., None] * u2
    )
    r2 = rho[..., None] * (
        (c * sf)[..., None] * u3 - (s * cf)[..., None] * u2
    )
    return r1, r2


def section(rho, chi, phi):
    """Global section: the configuration with identity body frame."""
    return dragt_to_vectors(rho, chi, phi)


def shape_invariants(r1, r2):
    """Rotation invariants (q1, q2, q3) of a Jacobi pair.

    q1 = |r1|^2 - |r2|^2, q2 = 2 (r1, r2), q3 = 2 |r1 x r2| >= 0.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    q1 = np.sum(r1 * r1, axis=-1) - np.sum(r2 * r2, axis=-1)
    q2 = 2.0 * np.sum(r1 * r2, axis=-1)
    q3 = 2.0 * np.linalg.norm(np.cross(r1, r2), axis=-1)
    return q1, q2, q3


def shape_from_invariants(q1, q2, q3):
    """Recover (rho, chi, phi) from the invariants.

    rho = (q1^2 + q2^2 + q3^2)^(1/4); chi = arcsin(q3 / rho^2) clamped into
    [0, pi/2]; phi = atan2(q2, q1) in [0, 2pi).  The collision point maps to
    (0, 0, 0).
    """
    q1, q2, q3 = (np.asarray(q, dtype=float) for q in (q1, q2, q3))
    rho2 = np.sqrt(q1 * q1 + q2 * q2 + q3 * q3)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(rho2 > 0.0, q3 / np.where(rho2 > 0.0, rho2, 1.0), 0.0)
    chi = np.arcsin(np.clip(ratio, 0.0, 1.0))
    phi = normalize_angle(np.arctan2(q2, q1))
    phi = np.where((q1 == 0.0) & (q2 == 0.0), 0.0, phi)
    return np.sqrt(rho2), chi, phi


_COLLINEAR_RTOL = 1e-12   # q3 below this fraction of rho^2 takes the axis branch


def vectors_to_dragt(r1, r2) -> DragtCoords:
    """Invert the coordinate map for a single Jacobi pair.

    Raises on the collision configuration.  Collinear pairs report the
    canonical gamma = 0 frame; the chi = pi/2 pole reports phi = 0.
    """
    r1 = np.asarray(r1, dtype=float).reshape(3)
    r2 = np.asarray(r2, dtype=float).reshape(3)
    q1, q2, q3 = shape_invariants(r1, r2)
    rho, chi, phi = (float(v) for v in shape_from_invariants(q1, q2, q3))
    rho2 = rho * rho
    if rho2 == 0.0:
        raise ShapeError("collision configuration has no body frame")

    if q3 <= _COLLINEAR_RTOL * rho2:
        # collinear: molecular axis u3, isotropy circle fixed by gamma = 0
        chi = 0.0
        u3 = (np.cos(phi / 2.0) * r1 + np.sin(phi / 2.0) * r2) / rho
        nrm = np.linalg.norm(u3)
        u3 = u3 / nrm
        sb = np.hypot(u3[0], u3[1])
        beta = float(np.arctan2(sb, u3[2]))
        alpha = float(normalize_angle(np.arctan2(u3[1], u3[0]))) if sb > 1e-15 else 0.0
        return DragtCoords(rho, chi, phi, alpha, beta, 0.0)

    c, s = np.cos(chi / 2.0), np.sin(chi / 2.0)
    cf, sf = np.cos(phi / 2.0), np.sin(phi / 2.0)
    # coefficients of (u2, u3) in (r1, r2): columns of B
    B = rho * np.array([[s * sf, -s * cf], [c * cf, c * sf]])
    u23 = np.stack([r1, r2], axis=1) @ np.linalg.inv(B)
    u2, u3 = u23[:, 0], u23[:, 1]
    u1 = np.cross(u2, u3)
    frame = np.stack([u1, u2, u3], axis=1)
    alpha, beta, gamma = euler_from_rotation(frame)
    return DragtCoords(rho, chi, phi, float(alpha), float(beta), float(gamma))


def reduced_metric(rho, chi):
    """Diagonal of the shape-space metric, diag(1, rho^2/4, rho^2 cos^2(chi)/4)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ShapeError("the reduced metric needs rho > 0")
    chi = np.asarray(chi, dtype=float)
    one = np.ones(np.broadcast_shapes(rho.shape, chi.shape))
    return np.stack(
        [one, one * rho**2 / 4.0, rho**2 * np.cos(chi) ** 2 / 4.0], axis=-1
    )


def volume_density(rho, chi):
    """Shape-space volume density (pi^2/2) rho^5 sin(2 chi)."""
    rho = np.asarray(rho, dtype=float)
    chi = np.asarray(chi, dtype=float)
    return 0.5 * np.pi**2 * rho**5 * np.sin(2.0 * chi)


def maurer_cartan(angles, dangles):
    """Left-invariant frame components (Theta1, Theta2, Theta3).

    Theta1 = sin(g) db - sin(b) cos(g) da
    Theta2 = cos(g) db + sin(b) sin(g) da
    Theta3 = dg + cos(b) da
    """
    _, b, g = (np.asarray(v, dtype=float) for v in np.moveaxis(np.asarray(angles, dtype=float), -1, 0))
    da, db, dg = (np.asarray(v, dtype=float) for v in np.moveaxis(np.asarray(dangles, dtype=float), -1, 0))
    t1 = np.sin(g) * db - np.sin(b) * np.cos(g) * da
    t2 = np.cos(g) * db + np.sin(b) * np.sin(g) * da
    t3 = dg + np.cos(b) * da
    return np.stack([t1, t2, t3], axis=-1)


def equivariant_extend(psi, ell, r1, r2):
    """Extension psi_full(r1, r2) = D^ell(g) psi(rho, chi, phi).

    `psi` maps (rho, chi, phi) to a (2*ell+1,) complex vector (a scalar is
    accepted for ell = 0).  Raises at the collision point.
    """
    c = vectors_to_dragt(r1, r2)
    val = np.atleast_1d(np.asarray(psi(c.rho, c.chi, c.phi), dtype=complex))
    d = 2 * ell + 1
    if val.shape != (d,):
        raise ShapeError(f"psi must return {d} components, got {val.shape}")
    D = generators(ell).wigner_d(c.alpha, c.beta, c.gamma)
    return D @ val


class ShapeGridFunction:
    """Tricubic-spline interpolant of grid samples on (rho, chi, phi).

    phi wraps periodically; rho and chi queries must stay inside the sampled
    node range.  Values may be scalar (ell = 0) or (2*ell+1,)-vector valued.
    """

    def __init__(self, rho_nodes, chi_nodes, phi_nodes, values):
        values = np.asarray(values, dtype=complex)
        if values.ndim == 3:
            values = values[..., None]
        npad = 3
        phi_nodes = np.asarray(phi_nodes, dtype=float)
        period = 2.0 * np.pi
        phi_ext = np.concatenate(
            [phi_nodes[-npad:] - period, phi_nodes, phi_nodes[:npad] + period]
        )
        vals_ext = np.concatenate(
            [values[:, :, -npad:], values, values[:, :, :npad]], axis=2
        )
        pts = (np.asarray(rho_nodes, dtype=float), np.asarray(chi_nodes, dtype=float), phi_ext)
        self._re = RegularGridInterpolator(pts, vals_ext.real, method="cubic")
        self._im = RegularGridInterpolator(pts, vals_ext.imag, method="cubic")
        self._phi0 = float(phi_nodes[0])
        self._period = period
        self.n_components = values.shape[-1]

    def __call__(self, rho, chi, phi):
        phi = self._phi0 + np.mod(np.asarray(phi, dtype=float) - self._phi0, self._period)
        pt = np.stack(np.broadcast_arrays(rho, chi, phi), axis=-1)
        out = self._re(pt) + 1j * self._im(pt)
        if self.n_components == 1:
            out = out[..., 0]
        return out
