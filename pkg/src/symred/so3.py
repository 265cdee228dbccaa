"""Rotation-group machinery for SO(3) and SO(2).

Provides ZYZ Euler-angle rotations, the spin-ell irreducible representations
(anti-Hermitian generator convention), exact product quadrature for the
normalized invariant measure on SO(3), and isotypic projection / intertwining
of functions sampled at the quadrature nodes.

Conventions
-----------
* Generators satisfy [J1, J2] = J3 (cyclic), matching the real 3x3 matrices
  J_i v = e_i x v.  They are anti-Hermitian with J3 = diag(i*ell, ..., -i*ell).
* A rotation is g = exp(alpha*J3) exp(beta*J2) exp(gamma*J3) with
  alpha in [0, 2pi), beta in [0, pi], gamma in [0, 2pi).
* Component ordering of a spin-ell vector is m = ell, ell-1, ..., -ell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "BandLimitError",
    "rotation_from_euler",
    "euler_from_rotation",
    "normalize_angle",
    "Irrep",
    "generators",
    "wigner_d",
    "HaarQuadrature",
    "haar_quadrature",
    "SampledGroupFunction",
    "peter_weyl_project",
    "intertwiner_v",
    "so2_irrep",
    "so2_nodes",
]

TWO_PI = 2.0 * np.pi


class BandLimitError(ValueError):
    """An operation would exceed the exactness band of a quadrature."""


def normalize_angle(a, period=TWO_PI):
    """Map angles into [0, period)."""
    return np.mod(a, period)


def _rz(angle):
    """Rotation matrix exp(angle*J3), batched over leading axes."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(angle.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


def _ry(angle):
    """Rotation matrix exp(angle*J2), batched over leading axes."""
    angle = np.asarray(angle, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(angle.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


def rotation_from_euler(alpha, beta, gamma):
    """Proper rotation exp(alpha*J3) exp(beta*J2) exp(gamma*J3).

    Accepts scalars or broadcastable arrays; returns shape (..., 3, 3).
    """
    return _rz(alpha) @ _ry(beta) @ _rz(gamma)


def euler_from_rotation(R, tol=1e-12):
    """ZYZ Euler angles (alpha, beta, gamma) of a single rotation matrix.

    At beta = 0 or pi the (alpha, gamma) pair is degenerate; the canonical
    representative with gamma = 0 is returned.
    """
    R = np.asarray(R, dtype=float)
    sb = np.hypot(R[0, 2], R[1, 2])
    beta = np.arctan2(sb, R[2, 2])
    if sb > tol:
        alpha = np.arctan2(R[1, 2], R[0, 2])
        gamma = np.arctan2(R[2, 1], -R[2, 0])
    elif R[2, 2] > 0.0:  # beta ~ 0: pure z-rotation by alpha+gamma
        alpha = np.arctan2(R[1, 0], R[0, 0])
        gamma = 0.0
    else:  # beta ~ pi: z-rotation by alpha-gamma
        alpha = np.arctan2(-R[1, 0], -R[0, 0])
        gamma = 0.0
    return normalize_angle(alpha), float(beta), normalize_angle(gamma)


@dataclass(frozen=True)
class Irrep:
    """Spin-ell irreducible representation of SO(3).

    Attributes
    ----------
    ell : int
        Nonnegative spin label; dimension is 2*ell + 1.
    j1, j2, j3 : ndarray
        Anti-Hermitian generators in the m = ell..-ell basis, satisfying
        [j1, j2] = j3 and cyclic permutations.
    """

    ell: int
    j1: np.ndarray
    j2: np.ndarray
    j3: np.ndarray
    # eigendecomposition of i*j2, used to exponentiate the middle Euler factor
    _j2_eigvals: np.ndarray = field(repr=False)
    _j2_eigvecs: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 2 * self.ell + 1

    @property
    def mvals(self) -> np.ndarray:
        return np.arange(self.ell, -self.ell - 1, -1)

    def wigner_d(self, alpha, beta, gamma):
        """Representation matrix exp(a*j3) exp(b*j2) exp(c*j3).

        Angles may be scalars or equal-shape arrays; returns (..., d, d)
        complex unitary matrices.
        """
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        m = self.mvals
        ea = np.exp(1j * alpha[..., None] * m)
        ec = np.exp(1j * gamma[..., None] * m)
        # exp(beta*j2) = U diag(exp(-i*beta*lam)) U^dagger with lam = eig(i*j2)
        U = self._j2_eigvecs
        phase = np.exp(-1j * beta[..., None] * self._j2_eigvals)
        mid = np.einsum("ik,...k,jk->...ij", U, phase, U.conj())
        return ea[..., :, None] * mid * ec[..., None, :]


@lru_cache(maxsize=None)
def generators(ell: int) -> Irrep:
    """Construct the spin-ell generators by the ladder-operator method."""
    if ell < 0:
        raise ValueError(f"spin label must be nonnegative, got {ell}")
    m = np.arange(ell, -ell - 1, -1)
    # raising operator: maps the state of weight m[i+1] to weight m[i]
    cplus = np.sqrt(ell * (ell + 1.0) - m[1:] * (m[1:] + 1.0))
    jp = np.diag(cplus, 1)
    jm = jp.T
    j1 = 0.5j * (jp + jm)
    j2 = -0.5 * (jp - jm)
    j3 = 1j * np.diag(m.astype(float))
    h2 = 1j * j2  # Hermitian
    lam, U = np.linalg.eigh(h2)
    irr = Irrep(ell, j1, j2.astype(complex), j3, lam, U)
    return irr


def wigner_d(ell, alpha, beta, gamma):
    """Wigner matrix of the spin-ell representation at the given Euler angles."""
    return generators(ell).wigner_d(alpha, beta, gamma)


class HaarQuadrature:
    """Product quadrature on SO(3), exact for band-limited integrands.

    Gauss-Legendre in cos(beta) with band_limit+1 points and uniform grids of
    2*band_limit+1 points in alpha and gamma.  Weights are normalized to the
    invariant probability measure, so products of two representation matrix
    elements with ell, ell' <= band_limit integrate exactly.
    """

    def __init__(self, band_limit: int):
        if band_limit < 0:
            raise ValueError("band limit must be nonnegative")
        self.band_limit = band_limit
        n_ab = 2 * band_limit + 1
        n_beta = band_limit + 1
        x, w_gl = leggauss(n_beta)
        betas = np.arccos(x)
        alphas = TWO_PI * np.arange(n_ab) / n_ab
        gammas = TWO_PI * np.arange(n_ab) / n_ab
        A, B, C = np.meshgrid(alphas, betas, gammas, indexing="ij")
        self.angles = np.stack([A.ravel(), B.ravel(), C.ravel()], axis=-1)
        W = np.broadcast_to(w_gl[None, :, None] / (2.0 * n_ab * n_ab), A.shape)
        self.weights = W.ravel().copy()
        self._dmatrices: dict[int, np.ndarray] = {}

    @property
    def n_nodes(self) -> int:
        return self.angles.shape[0]

    def dmatrices(self, ell: int) -> np.ndarray:
        """Representation matrices at all nodes, cached per ell; shape (N, d, d)."""
        if ell not in self._dmatrices:
            a, b, c = self.angles.T
            self._dmatrices[ell] = generators(ell).wigner_d(a, b, c)
        return self._dmatrices[ell]

    def integrate(self, values):
        """Integral of node samples against the normalized invariant measure."""
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))


def haar_quadrature(band_limit: int) -> HaarQuadrature:
    return HaarQuadrature(band_limit)


class SampledGroupFunction:
    """A band-limited function on SO(3) known by its quadrature-node samples.

    `values` has shape (N,) for scalar functions or (N, m) for vector-valued
    ones.  `band` declares the largest spin present; evaluation between nodes
    uses the exact reconstruction from the matrix-element expansion, which is
    lossless as long as band <= the quadrature's band limit.
    """

    def __init__(self, quad: HaarQuadrature, values, band: int):
        values = np.asarray(values, dtype=complex)
        if values.shape[0] != quad.n_nodes:
            raise ValueError("sample count does not match quadrature nodes")
        if band > quad.band_limit:
            raise BandLimitError(
                f"declared band {band} exceeds quadrature band limit "
                f"{quad.band_limit}"
            )
        self.quad = quad
        self.values = values
        self.band = int(band)
        self._coeffs: dict[int, np.ndarray] = {}
        self._ttable: np.ndarray | None = None

    @classmethod
    def from_callable(cls, quad, fn, band):
        """Sample fn(angles) at the quadrature nodes; fn maps (K,3) -> (K,...)."""
        return cls(quad, fn(quad.angles), band)

    def coefficient_block(self, ell: int) -> np.ndarray:
        """Expansion coefficients c_ij = int conj(D^ell_ij) f dmu, shape (d,d,...)."""
        if ell not in self._coeffs:
            D = self.quad.dmatrices(ell)
            self._coeffs[ell] = np.einsum(
                "a,aij,a...->ij...", self.quad.weights, D.conj(), self.values
            )
        return self._coeffs[ell]

    def evaluate(self, angles):
        """Evaluate at arbitrary Euler angles, shape (K,3) -> (K,...)."""
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        out = np.zeros((angles.shape[0],) + self.values.shape[1:], dtype=complex)
        for ell in range(self.band + 1):
            c = self.coefficient_block(ell)
            D = generators(ell).wigner_d(angles[:, 0], angles[:, 1], angles[:, 2])
            out += (2 * ell + 1) * np.einsum("aij,ij...->a...", D, c)
        return out

    def norm2(self) -> float:
        """Squared L2 norm against the invariant probability measure."""
        dens = np.abs(self.values) ** 2
        if dens.ndim > 1:
            dens = dens.reshape(dens.shape[0], -1).sum(axis=1)
        return float(self.quad.weights @ dens)

    def translated_table(self) -> np.ndarray:
        """Table K[a, b] = f(g_a^{-1} g_b) over all node pairs (cached)."""
        if self._ttable is not None:
            return self._ttable
        N = self.quad.n_nodes
        extra = self.values.shape[1:]
        K = np.zeros((N, N) + extra, dtype=complex)
        comps = 1 if not extra else int(np.prod(extra))
        for ell in range(self.band + 1):
            d = 2 * ell + 1
            D = self.quad.dmatrices(ell)
            c = self.coefficient_block(ell).reshape(d, d, comps)
            B = D.reshape(N, d * d)
            for q in range(comps):
                A = np.einsum("aki,ij->akj", D.conj(), c[:, :, q]).reshape(N, d * d)
                term = (2 * ell + 1) * (A @ B.T)
                if extra:
                    K.reshape(N, N, comps)[:, :, q] += term
                else:
                    K += term
        self._ttable = K
        return K


def _check_projection_band(f: SampledGroupFunction, ell: int):
    need = 2 * max(f.band, ell)
    if f.quad.band_limit < need:
        raise BandLimitError(
            f"projection onto spin {ell} of a band-{f.band} function needs "
            f"quadrature band limit >= {need}, have {f.quad.band_limit}"
        )


def intertwiner_v(f: SampledGroupFunction, ell: int, i: int, j: int):
    """Apply V^ell_ij: (Vf)(h) = d_ell * sum_a w_a D^ell_ij(g_a) f(g_a^{-1} h).

    Indices i, j are zero-based rows/columns of the spin-ell matrix in the
    m = ell..-ell ordering.
    """
    _check_projection_band(f, ell)
    d = 2 * ell + 1
    if not (0 <= i < d and 0 <= j < d):
        raise ValueError(f"indices must lie in [0, {d})")
    K = f.translated_table()
    Dij = f.quad.dmatrices(ell)[:, i, j]
    wD = f.quad.weights * Dij
    out = d * np.tensordot(wD, K, axes=(0, 0))
    return SampledGroupFunction(f.quad, out, band=min(ell, f.quad.band_limit))


def peter_weyl_project(f: SampledGroupFunction, ell: int, i: int):
    """Apply the isotypic projector P^ell_i = V^ell_ii to node samples."""
    return intertwiner_v(f, ell, i, i)


def so2_irrep(n: int):
    """Character alpha -> exp(i*n*alpha) of the integer-n SO(2) representation."""

    def character(alpha):
        return np.exp(1j * n * np.asarray(alpha, dtype=float))

    return character


def so2_nodes(band_limit: int):
    """Uniform circle quadrature (angles, weights) exact through band 2*band_limit."""
    K = 2 * band_limit + 1
    return TWO_PI * np.arange(K) / K, np.full(K, 1.0 / K)
