"""N-body configuration geometry in the center-of-mass frame.

Mass-weighted Jacobi vectors, the kinetic metric, the angular-momentum form,
the inertia operator, stratum classification by configuration rank, and the
mechanical connection (inertia solve of the angular momentum).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "GeometryError",
    "AtomSystem",
    "JacobiFrame",
    "Stratum",
    "ConnectionValue",
    "COM_RTOL",
    "RANK_RTOL",
    "to_jacobi",
    "from_jacobi",
    "jacobi_tangent",
    "check_tangent",
    "kinetic_form",
    "angular_momentum",
    "angular_momentum_jacobi",
    "inertia_operator",
    "inertia_from_jacobi",
    "classify_stratum",
    "classify_jacobi",
    "infinitesimal_action",
    "connection_apply",
    "connection_from_jacobi",
    "rotate_system",
    "random_centered_system",
    "random_tangent",
]

COM_RTOL = 1e-12          # center-of-mass residual, relative to sum m*|x|
RANK_RTOL = 1e-9          # singular values below RANK_RTOL * s_max count as zero


class GeometryError(ValueError):
    """Domain error: invalid masses, broken center of mass, singular inertia."""


@dataclass(frozen=True)
class AtomSystem:
    """Point masses with positions summing to zero in the mass weighting."""

    masses: np.ndarray      # (N,)
    positions: np.ndarray   # (N, 3)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if m.ndim != 1 or x.shape != (m.size, 3):
            raise GeometryError(
                f"need N masses and N x 3 positions, got {m.shape} and {x.shape}"
            )
        if np.any(m <= 0.0):
            raise GeometryError("all masses must be strictly positive")
        com = m @ x
        scale = float(np.sum(m * np.linalg.norm(x, axis=1)))
        resid = float(np.linalg.norm(com))
        if resid > COM_RTOL * max(scale, 1e-300):
            raise GeometryError(
                f"center-of-mass residual {resid:.3e} exceeds "
                f"{COM_RTOL:.0e} * {scale:.3e}"
            )
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "positions", x)

    @property
    def n_atoms(self) -> int:
        return self.masses.size


@dataclass(frozen=True)
class JacobiFrame:
    """Mass-weighted Jacobi vectors r_1..r_{N-1} of a centered system."""

    vectors: np.ndarray  # (N-1, 3)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise GeometryError(f"Jacobi vectors must be (N-1, 3), got {v.shape}")
        object.__setattr__(self, "vectors", v)


class Stratum(Enum):
    """Orbit-type label keyed to the rank of the Jacobi configuration matrix."""

    COLLISION = 0
    COLLINEAR = 1
    PLANAR = 2
    GENERIC = 3

    @property
    def rank(self) -> int:
        return self.value


@dataclass(frozen=True)
class ConnectionValue:
    """Connection form value in R^3 ~ so(3).

    At collinear configurations the component along `isotropy_axis` is pure
    gauge; the stored `omega` is the canonical axis-orthogonal representative.
    """

    omega: np.ndarray
    isotropy_axis: np.ndarray | None = None


def _jacobi_coefficients(masses):
    """Reduced-mass square roots mu_i = (1/M_i + 1/m_{i+1})^(-1/2)."""
    m = np.asarray(masses, dtype=float)
    M = np.cumsum(m)
    return 1.0 / np.sqrt(1.0 / M[:-1] + 1.0 / m[1:])


def to_jacobi(sys: AtomSystem) -> JacobiFrame:
    """Jacobi vectors r_i = mu_i (x_{i+1} - X_i), X_i the partial barycenter."""
    m, x = sys.masses, sys.positions
    M = np.cumsum(m)
    X = np.cumsum(m[:, None] * x, axis=0) / M[:, None]
    mu = _jacobi_coefficients(m)
    return JacobiFrame(mu[:, None] * (x[1:] - X[:-1]))


def jacobi_tangent(sys: AtomSystem, v) -> np.ndarray:
    """Image of an atom-level tangent under the (linear) Jacobi map."""
    v = np.asarray(v, dtype=float)
    m = sys.masses
    M = np.cumsum(m)
    Vbar = np.cumsum(m[:, None] * v, axis=0) / M[:, None]
    mu = _jacobi_coefficients(m)
    return mu[:, None] * (v[1:] - Vbar[:-1])


def from_jacobi(masses, frame: JacobiFrame) -> AtomSystem:
    """Invert the Jacobi map back to centered atom positions."""
    m = np.asarray(masses, dtype=float)
    r = frame.vectors
    if r.shape[0] != m.size - 1:
        raise GeometryError(
            f"{m.size} masses need {m.size - 1} Jacobi vectors, got {r.shape[0]}"
        )
    M = np.cumsum(m)
    mu = _jacobi_coefficients(m)
    # build partial barycenters back to front: X_N = 0 in the COM frame
    X = np.zeros((m.size, 3))
    x = np.zeros((m.size, 3))
    for i in range(m.size - 1, 0, -1):
        d = r[i - 1] / mu[i - 1]           # x_{i+1} - X_i with 1-based i
        X[i - 1] = X[i] - (m[i] / M[i]) * d
        x[i] = X[i - 1] + d
    x[0] = X[0]
    return AtomSystem(m, x - (m @ x)[None, :] / M[-1])


def check_tangent(sys: AtomSystem, v, rtol=1e-12):
    """Validate the weighted-sum-zero tangent condition; returns v as array."""
    v = np.asarray(v, dtype=float)
    if v.shape != sys.positions.shape:
        raise GeometryError(f"tangent shape {v.shape} != {sys.positions.shape}")
    m = sys.masses
    resid = float(np.linalg.norm(m @ v))
    scale = float(np.sum(m * np.linalg.norm(v, axis=1)))
    if resid > rtol * max(scale, 1e-300):
        raise GeometryError(f"tangent violates the weighted-sum condition: {resid:.3e}")
    return v


def kinetic_form(sys: AtomSystem, v, w) -> float:
    """Kinetic inner product sum_i m_i (v_i, w_i)."""
    v = check_tangent(sys, v)
    w = check_tangent(sys, w)
    return float(np.sum(sys.masses[:, None] * v * w))


def angular_momentum(sys: AtomSystem, v) -> np.ndarray:
    """Angular momentum sum_i m_i x_i x v_i of an atom-level tangent."""
    v = check_tangent(sys, v)
    return np.sum(sys.masses[:, None] * np.cross(sys.positions, v), axis=0)


def angular_momentum_jacobi(frame: JacobiFrame, frame_dot) -> np.ndarray:
    """Angular momentum sum_i r_i x rdot_i in Jacobi variables."""
    return np.sum(np.cross(frame.vectors, np.asarray(frame_dot, dtype=float)), axis=0)


def inertia_from_jacobi(frame: JacobiFrame) -> np.ndarray:
    """Inertia operator sum_i (|r_i|^2 Id - r_i r_i^T); symmetric PSD."""
    r = frame.vectors
    return np.sum(r * r) * np.eye(3) - r.T @ r


def inertia_operator(sys: AtomSystem) -> np.ndarray:
    return inertia_from_jacobi(to_jacobi(sys))


def classify_jacobi(frame: JacobiFrame, tol=RANK_RTOL) -> Stratum:
    """Stratum from the rank of the 3 x (N-1) Jacobi matrix."""
    if tol < 0:
        raise GeometryError("rank tolerance must be nonnegative")
    s = np.linalg.svd(frame.vectors.T, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return Stratum.COLLISION
    rank = int(np.sum(s > tol * s[0]))
    return Stratum(min(rank, 3))


def classify_stratum(sys: AtomSystem, tol=RANK_RTOL) -> Stratum:
    return classify_jacobi(to_jacobi(sys), tol)


def infinitesimal_action(sys: AtomSystem, xi) -> np.ndarray:
    """Velocity field (xi x x_1, ..., xi x x_N) of a rotation generator xi."""
    xi = np.asarray(xi, dtype=float)
    return np.cross(xi[None, :], sys.positions)


def _solve_inertia(inertia, L, tol):
    """Pseudo-solve I omega = L on the image of I; returns (omega, kernel axes)."""
    lam, U = np.linalg.eigh(inertia)
    lmax = lam[-1]
    if lmax <= 0.0:
        raise GeometryError("singular inertia: collision configuration")
    live = lam > tol * lmax
    if not np.any(live):
        raise GeometryError("singular inertia: collision configuration")
    coeffs = (U.T @ L)[live] / lam[live]
    omega = U[:, live] @ coeffs
    kernel = U[:, ~live]
    return omega, kernel


def connection_from_jacobi(frame: JacobiFrame, frame_dot, tol=RANK_RTOL) -> ConnectionValue:
    """Connection value omega with I omega = L for a Jacobi-level tangent."""
    I = inertia_from_jacobi(frame)
    L = angular_momentum_jacobi(frame, frame_dot)
    omega, kernel = _solve_inertia(I, L, tol)
    axis = kernel[:, 0] if kernel.shape[1] == 1 else None
    return ConnectionValue(omega, axis)


def connection_apply(sys: AtomSystem, v, tol=RANK_RTOL) -> ConnectionValue:
    """Mechanical connection omega = I^{-1} L applied to an atom-level tangent.

    At collinear configurations the rank-2 system is solved and the canonical
    axis-orthogonal representative is returned, with the molecular axis noted.
    """
    v = check_tangent(sys, v)
    frame = to_jacobi(sys)
    return connection_from_jacobi(frame, jacobi_tangent(sys, v), tol)


def rotate_system(sys: AtomSystem, R) -> AtomSystem:
    """Apply a rotation matrix to every atom position."""
    return AtomSystem(sys.masses, sys.positions @ np.asarray(R, dtype=float).T)


def random_centered_system(n_atoms: int, rng: np.random.Generator) -> AtomSystem:
    """Random masses in [0.5, 2] and centered Gaussian positions."""
    m = rng.uniform(0.5, 2.0, size=n_atoms)
    x = rng.standard_normal((n_atoms, 3))
    x -= (m @ x)[None, :] / m.sum()
    return AtomSystem(m, x)


def random_tangent(sys: AtomSystem, rng: np.random.Generator) -> np.ndarray:
    """Random tangent with vanishing weighted sum."""
    v = rng.standard_normal(sys.positions.shape)
    v -= (sys.masses @ v)[None, :] / sys.masses.sum()
    return v
