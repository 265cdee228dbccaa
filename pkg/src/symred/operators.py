"""Assembly of the reduced self-adjoint kinetic-energy operators.

Three assemblers share one discretization idiom: conservative (flux-form)
finite differences with coefficients sampled at cell faces, so that every
operator is exactly self-adjoint with respect to the discrete volume weights
and positive semi-definite by construction.

* `assemble_planar_radial` - the radial operator of the circularly symmetric
  planar system, sector n, on a disk of radius R with a Dirichlet wall.
* `assemble_rigid_body` - the finite rotational-energy matrix of a rigid
  body with a given inertia tensor.
* `assemble_triatomic` - the shape-space operator of the triatomic system on
  a staggered (rho, chi, phi) grid, spin sector ell, with the singular-stratum
  rows pinned per the vanishing conditions and a Dirichlet wall at rho_max.

Sign convention: operators are stored positive semi-definite (quadratic form
equals the integral of the squared covariant differential), so eigenvalues of
the planar sector-n operator converge to squared Bessel zeros.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .shape import volume_density
from .so3 import generators

__all__ = [
    "AssemblyError",
    "RadialGrid",
    "GridSpec",
    "BoundaryCondition",
    "ReducedOperator",
    "assemble_planar_radial",
    "assemble_rigid_body",
    "rotational_energy_block",
    "assemble_triatomic",
    "apply",
    "export_operator_csv",
]


class AssemblyError(ValueError):
    """Invalid grid or inertia input for operator assembly."""


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid on (0, r_max] with nodes at i*h and a wall at r_max."""

    r_max: float
    n_cells: int

    def __post_init__(self):
        if self.r_max <= 0.0 or self.n_cells < 2:
            raise AssemblyError("radial grid needs r_max > 0 and at least 2 cells")

    @property
    def h(self) -> float:
        return self.r_max / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(self.n_cells + 1)


@dataclass(frozen=True)
class GridSpec:
    """Staggered shape-space grid.

    rho and chi nodes sit at cell midpoints, so no node touches rho = 0,
    chi = 0 or chi = pi/2; phi is a uniform periodic grid.  The outer
    boundary is a Dirichlet wall at rho_max.
    """

    rho_max: float
    n_rho: int
    n_chi: int
    n_phi: int

    def __post_init__(self):
        if self.rho_max <= 0.0:
            raise AssemblyError("rho_max must be positive")
        if self.n_rho < 2 or self.n_chi < 2 or self.n_phi < 1:
            raise AssemblyError("need n_rho, n_chi >= 2 and n_phi >= 1")

    @property
    def h_rho(self) -> float:
        return self.rho_max / self.n_rho

    @property
    def h_chi(self) -> float:
        return 0.5 * np.pi / self.n_chi

    @property
    def h_phi(self) -> float:
        return 2.0 * np.pi / self.n_phi

    @property
    def rho_nodes(self) -> np.ndarray:
        return self.h_rho * (np.arange(self.n_rho) + 0.5)

    @property
    def chi_nodes(self) -> np.ndarray:
        return self.h_chi * (np.arange(self.n_chi) + 0.5)

    @property
    def phi_nodes(self) -> np.ndarray:
        return self.h_phi * np.arange(self.n_phi)

    @property
    def n_nodes(self) -> int:
        return self.n_rho * self.n_chi * self.n_phi


@dataclass(frozen=True)
class BoundaryCondition:
    """Pinned-row descriptor for the singular strata.

    `chi_pinned_m`: spin projections m whose components are pinned to zero on
    the grid layer adjacent to chi = 0.  `rho_pinned`: whether every component
    is pinned on the layer adjacent to rho = 0.
    """

    chi_pinned_m: tuple[int, ...]
    rho_pinned: bool


@dataclass
class ReducedOperator:
    """Sparse reduced operator over the unpinned degrees of freedom.

    `stiffness` is the Hermitian weighted form B; the operator itself is
    A = W^{-1} B, self-adjoint in the weighted inner product <u, v>_w and
    positive semi-definite.  `weights` is the discrete volume measure per
    retained degree of freedom.
    """

    stiffness: sp.csr_matrix
    weights: np.ndarray
    block_size: int
    full_shape: tuple
    free_mask: np.ndarray
    meta: dict
    bc: BoundaryCondition | None = None
    _matrix: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def n_free(self) -> int:
        return self.weights.size

    @property
    def matrix(self) -> sp.csr_matrix:
        """Operator matrix A = W^{-1} B."""
        if self._matrix is None:
            self._matrix = (sp.diags(1.0 / self.weights) @ self.stiffness).tocsr()
        return self._matrix

    def pencil(self):
        """(A, w) with A Hermitian solving A u = lambda diag(w) u."""
        return self.stiffness, self.weights

    def gather(self, psi) -> np.ndarray:
        """Restrict a full grid field to the free degrees of freedom."""
        psi = np.asarray(psi)
        if psi.shape == self.full_shape or psi.shape == (int(np.prod(self.full_shape)),):
            return psi.reshape(-1)[self.free_mask]
        raise ValueError(f"expected field of shape {self.full_shape}, got {psi.shape}")

    def scatter(self, vec) -> np.ndarray:
        """Embed a free-DOF vector into the full grid, zeros on pinned rows."""
        vec = np.asarray(vec)
        out = np.zeros(int(np.prod(self.full_shape)), dtype=vec.dtype)
        out[self.free_mask] = vec
        return out.reshape(self.full_shape)

    def apply(self, psi) -> np.ndarray:
        """Operator action; accepts a full grid field or a free-DOF vector."""
        psi = np.asarray(psi)
        if psi.shape == (self.n_free,):
            return self.matrix @ psi
        full = self.gather(psi)
        return self.scatter(self.matrix @ full)

    def selfadjoint_defect(self) -> float:
        """|| W A - A^H W ||_F / || W A ||_F, zero for exact self-adjointness."""
        B = self.stiffness
        num = spla.norm(B - B.conj().T, "fro")
        return float(num / spla.norm(B, "fro"))

    def rayleigh(self, vec) -> float:
        vec = np.asarray(vec)
        num = np.vdot(vec, self.stiffness @ vec).real
        den = np.vdot(vec, self.weights * vec).real
        return float(num / den)


def apply(op: ReducedOperator, psi) -> np.ndarray:
    """Module-level alias for ReducedOperator.apply."""
    return op.apply(psi)


def assemble_planar_radial(n: int, grid: RadialGrid) -> ReducedOperator:
    """Radial sector-n operator -(1/r)(r f')' + n^2 f / r^2 on (0, R].

    Conservative form against the projected measure 2 pi r dr.  The axis row
    is pinned for n != 0 and closed by the natural zero flux for n = 0; the
    wall node at R is always pinned (Dirichlet).
    """
    h = grid.h
    r = grid.nodes
    n_nodes = r.size

    # cell masses: half cell [0, h/2] at the axis, full cells elsewhere
    w = 2.0 * np.pi * r * h
    w[0] = np.pi * h * h / 4.0

    rows, cols, vals = [], [], []
    r_face = r[:-1] + 0.5 * h
    c_face = 2.0 * np.pi * r_face / h   # face conductances (r = 0 face carries none)
    for i in range(n_nodes - 1):
        c = c_face[i]
        rows += [i, i, i + 1, i + 1]
        cols += [i, i + 1, i, i + 1]
        vals += [c, -c, -c, c]
    B = sp.coo_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    if n != 0:
        pot = np.zeros(n_nodes)
        pot[1:] = float(n * n) / r[1:] ** 2
        B = B + sp.diags(pot * w)

    free = np.ones(n_nodes, dtype=bool)
    free[-1] = False          # Dirichlet wall
    if n != 0:
        free[0] = False       # axis value pinned for nonzero sector
    B_free = B[free][:, free].tocsr()
    return ReducedOperator(
        stiffness=B_free,
        weights=w[free],
        block_size=1,
        full_shape=(n_nodes,),
        free_mask=free,
        meta={"kind": "planar", "sector": int(n), "r_max": grid.r_max, "h": h,
              "n_cells": grid.n_cells},
        bc=None,
    )


def _principal_inverse_terms(inertia, tol):
    """Principal values and axes of an inertia tensor, small ones dropped."""
    inertia = np.asarray(inertia, dtype=float)
    if inertia.shape == (3,):
        inertia = np.diag(inertia)
    if inertia.shape != (3, 3):
        raise AssemblyError(f"inertia must be 3x3 or 3 eigenvalues, got {inertia.shape}")
    lam, U = np.linalg.eigh(0.5 * (inertia + inertia.T))
    if lam[-1] <= 0.0:
        raise AssemblyError("rank-0 inertia: a point has no rotational energy operator")
    live = lam > tol * lam[-1]
    return lam[live], U[:, live]


def assemble_rigid_body(ell: int, inertia, tol: float = 1e-12) -> np.ndarray:
    """Rotational energy matrix -sum_a (1/I_a) (J . v_a)^2 in the spin-ell space.

    `inertia` is a symmetric 3x3 tensor (or its three eigenvalues); the sum
    runs over principal axes v_a with principal value I_a above tol * I_max.
    Requires rank >= 2 (a rigid body is not a point).
    """
    lam, axes = _principal_inverse_terms(inertia, tol)
    if lam.size < 2:
        raise AssemblyError(f"inertia rank {lam.size} < 2 is not a rigid body")
    irr = generators(ell)
    J = np.stack([irr.j1, irr.j2, irr.j3])
    out = np.zeros((irr.dim, irr.dim), dtype=complex)
    for a in range(lam.size):
        Ja = np.tensordot(axes[:, a], J, axes=(0, 0))
        out -= (Ja @ Ja) / lam[a]
    return out


def rotational_energy_block(ell: int, rho: float, chi: float) -> np.ndarray:
    """Pointwise rotational block -(1/rho^2)[J1^2 + J2^2/cos^2(chi/2) + J3^2/sin^2(chi/2)].

    Defined for rho > 0 and chi in (0, pi/2]; the chi = 0 end is genuinely
    singular (the collinear stratum).
    """
    if rho <= 0.0:
        raise AssemblyError("rotational block needs rho > 0")
    if not 0.0 < chi <= 0.5 * np.pi:
        raise AssemblyError("rotational block needs chi in (0, pi/2]")
    irr = generators(ell)
    c2 = np.cos(0.5 * chi) ** 2
    s2 = np.sin(0.5 * chi) ** 2
    out = irr.j1 @ irr.j1 + (irr.j2 @ irr.j2) / c2 + (irr.j3 @ irr.j3) / s2
    return -out / rho**2


def _flat_node(grid: GridSpec, i, j, k):
    return (i * grid.n_chi + j) * grid.n_phi + k


def assemble_triatomic(
    ell: int,
    grid: GridSpec,
    potential: Callable | None = None,
) -> ReducedOperator:
    """Shape-space operator of the triatomic system in spin sector ell.

    Flux-form vibrational part with density rho^5 sin(2 chi) and inverse
    metric diag(1, 4/rho^2, 4/(rho^2 cos^2 chi)); the phi derivative is gauged
    by (1/2) sin(chi) J1 applied at faces through the two-node average, which
    keeps it skew-adjoint.  The pointwise rotational block is added per node.
    For ell >= 1, components with m != 0 are pinned on the chi-collar layer
    and all components on the rho-collar layer; the outer wall is Dirichlet.

    `potential`, if given, maps (rho, chi, phi) node arrays to a real value
    added as a diagonal (invariant multiplication) term.
    """
    if ell < 0:
        raise AssemblyError("spin sector must be nonnegative")
    d = 2 * ell + 1
    nr, nc, nph = grid.n_rho, grid.n_chi, grid.n_phi
    hr, hc, hp = grid.h_rho, grid.h_chi, grid.h_phi
    cell = hr * hc * hp
    rho = grid.rho_nodes
    chi = grid.chi_nodes
    if rho[0] <= 0.0 or chi[0] <= 0.0 or chi[-1] >= 0.5 * np.pi:
        raise AssemblyError("grid touches a singular locus")
    n_nodes = grid.n_nodes
    real = ell == 0
    dtype = float if real else complex

    I, Jc, K = np.meshgrid(
        np.arange(nr), np.arange(nc), np.arange(nph), indexing="ij"
    )

    # --- rho fluxes -----------------------------------------------------
    rows, cols, vals, cf = [], [], [], []
    face_id = 0
    # interior faces at rho = (i+1) h_r
    ii, jj, kk = np.meshgrid(np.arange(nr - 1), np.arange(nc), np.arange(nph),
                             indexing="ij")
    ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
    nfaces = ii.size
    fid = np.arange(nfaces)
    left = _flat_node(grid, ii, jj, kk)
    right = _flat_node(grid, ii + 1, jj, kk)
    rows += [fid, fid]
    cols += [left, right]
    vals += [np.full(nfaces, -1.0 / hr), np.full(nfaces, 1.0 / hr)]
    cf.append(volume_density(hr * (ii + 1.0), chi[jj]) * cell)
    face_id = nfaces
    # wall faces at rho_max (ghost reflection: one-sided difference, half cell)
    jj, kk = np.meshgrid(np.arange(nc), np.arange(nph), indexing="ij")
    jj, kk = jj.ravel(), kk.ravel()
    fid = face_id + np.arange(jj.size)
    rows.append(fid)
    cols.append(_flat_node(grid, nr - 1, jj, kk))
    vals.append(np.full(jj.size, -2.0 / hr))
    cf.append(volume_density(grid.rho_max, chi[jj]) * 0.5 * cell)
    face_id += jj.size
    G_r = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(face_id, n_nodes),
    ).tocsr()
    C_r = np.concatenate(cf)
    B_scalar = (G_r.T @ sp.diags(C_r) @ G_r).tocsr()

    # --- chi fluxes (faces at chi = (j+1) h_c; the chi = 0, pi/2 faces carry
    # no flux since the density vanishes there) --------------------------
    ii, jj, kk = np.meshgrid(np.arange(nr), np.arange(nc - 1), np.arange(nph),
                             indexing="ij")
    ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
    fid = np.arange(ii.size)
    G_c = sp.coo_matrix(
        (
            np.concatenate([np.full(ii.size, -1.0 / hc), np.full(ii.size, 1.0 / hc)]),
            (
                np.concatenate([fid, fid]),
                np.concatenate(
                    [_flat_node(grid, ii, jj, kk), _flat_node(grid, ii, jj + 1, kk)]
                ),
            ),
        ),
        shape=(ii.size, n_nodes),
    ).tocsr()
    C_c = (4.0 / rho[ii] ** 2) * volume_density(rho[ii], hc * (jj + 1.0)) * cell
    B_scalar = B_scalar + (G_c.T @ sp.diags(C_c) @ G_c).tocsr()

    B = sp.kron(B_scalar, sp.identity(d, format="csr"), format="csr").astype(dtype)

    # --- gauged phi fluxes (faces at phi = (k + 1/2) h_p, periodic) ------
    irr = generators(ell)
    ii, jj, kk = I.ravel(), Jc.ravel(), K.ravel()
    fid = np.arange(ii.size)
    this = _flat_node(grid, ii, jj, kk)
    nxt = _flat_node(grid, ii, jj, (kk + 1) % nph)
    gauge = 0.5 * np.sin(chi) if ell > 0 else np.zeros(nc)
    a_idx, b_idx = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    a_idx, b_idx = a_idx.ravel(), b_idx.ravel()
    eye = (a_idx == b_idx).astype(float)
    j1ab = np.asarray(irr.j1)[a_idx, b_idx]
    # block on the left node: -I/h + (gauge/2) J1 ; right node: +I/h + (gauge/2) J1
    gj = gauge[jj][:, None] * (0.5 * j1ab)[None, :]
    rows = np.concatenate([fid[:, None] * d + a_idx[None, :]] * 2, axis=0).ravel()
    cols = np.concatenate(
        [this[:, None] * d + b_idx[None, :], nxt[:, None] * d + b_idx[None, :]],
        axis=0,
    ).ravel()
    vals = np.concatenate(
        [(-eye / hp)[None, :] + gj, (eye / hp)[None, :] + gj], axis=0
    ).ravel()
    G_p = sp.coo_matrix((vals, (rows, cols)), shape=(ii.size * d, n_nodes * d)).tocsr()
    C_p = (4.0 / (rho[ii] ** 2 * np.cos(chi[jj]) ** 2)) * volume_density(
        rho[ii], chi[jj]
    ) * cell
    C_p_blocks = np.repeat(C_p, d)
    B = B + (G_p.conj().T @ sp.diags(C_p_blocks) @ G_p).tocsr().astype(dtype)

    # --- node weights, rotational blocks, optional potential -------------
    v_nodes = volume_density(rho[I.ravel()], chi[Jc.ravel()]) * cell
    if ell > 0:
        blocks = np.empty((nr, nc, d, d), dtype=complex)
        for i in range(nr):
            for j in range(nc):
                blocks[i, j] = rotational_energy_block(ell, rho[i], chi[j])
        node_blocks = blocks[I.ravel(), Jc.ravel()] * v_nodes[:, None, None]
        B = B + sp.block_diag(node_blocks, format="csr")
    if potential is not None:
        vpot = np.asarray(
            potential(rho[I.ravel()], chi[Jc.ravel()], grid.phi_nodes[K.ravel()]),
            dtype=float,
        )
        B = B + sp.diags(np.repeat(vpot * v_nodes, d)).astype(dtype)

    w_full = np.repeat(v_nodes, d)

    # --- pinned rows on the singular collars ------------------------------
    free = np.ones(n_nodes * d, dtype=bool)
    if ell > 0:
        mvals = irr.mvals
        comp = np.tile(mvals, n_nodes)
        jlayer = np.repeat(Jc.ravel(), d)
        ilayer = np.repeat(I.ravel(), d)
        free &= ~((jlayer == 0) & (comp != 0))
        free &= ilayer != 0
        bc = BoundaryCondition(tuple(int(m) for m in mvals if m != 0), True)
    else:
        bc = BoundaryCondition((), False)

    B_free = B[free][:, free].tocsr()
    return ReducedOperator(
        stiffness=B_free,
        weights=w_full[free],
        block_size=d,
        full_shape=(nr, nc, nph, d),
        free_mask=free,
        meta={"kind": "triatomic", "ell": int(ell), "rho_max": grid.rho_max,
              "n_rho": nr, "n_chi": nc, "n_phi": nph},
        bc=bc,
    )


def export_operator_csv(op: ReducedOperator, matrix_path, weights_path):
    """Write the operator as coordinate triplets and its weight vector.

    The matrix file has header `row,col,re,im`; the weights file has header
    `row,weight`.  Floats carry 17 significant digits.
    """
    A = op.matrix.tocoo()
    with open(matrix_path, "w") as fh:
        fh.write("row,col,re,im\n")
        for r, c, v in zip(A.row, A.col, A.data):
            z = complex(v)
            fh.write(f"{r},{c},{z.real:.17g},{z.imag:.17g}\n")
    with open(weights_path, "w") as fh:
        fh.write("row,weight\n")
        for i, w in enumerate(op.weights):
            fh.write(f"{i},{w:.17g}\n")
