"""Independent brute-force verifiers.

Nothing here reuses the discretization machinery it checks:

* Bessel zeros from scratch (power series / downward recurrence plus
  bracketing bisection) for the planar spectra.
* A full, unreduced polar-grid Laplacian on the disk whose spectrum must
  equal the multiset union of the reduced sector spectra; eigenvectors are
  sector-labeled by discrete Fourier projection.
* A flat six-dimensional central-difference stencil applied to the
  equivariant extension of a shape-space function, compared pointwise against
  the closed-form action of the reduced triatomic operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .shape import dragt_to_vectors, equivariant_extend
from .so3 import generators

__all__ = [
    "bessel_j",
    "bessel_zero",
    "DiskMode",
    "planar_full_spectrum",
    "Factor",
    "GaussFactor",
    "PolyFactor",
    "TrigFactor",
    "SeparableShapeFunction",
    "standard_test_functions",
    "reduced_action",
    "ambient_stencil",
    "compare_reduced_vs_ambient",
    "export_report_csv",
]


# --------------------------------------------------------------------------
# Bessel functions and their zeros
# --------------------------------------------------------------------------

_SERIES_CUT = 9.0


def _bessel_series(n: int, x: float) -> float:
    """Ascending power series; accurate for |x| <= ~9."""
    half = 0.5 * x
    term = 1.0
    for k in range(1, n + 1):
        term *= half / k
    total = term
    k = 1
    x2 = -half * half
    while True:
        term *= x2 / (k * (n + k))
        total += term
        if abs(term) <= 1e-18 * max(abs(total), 1e-300) or k > 200:
            return total
        k += 1


def _bessel_miller(n: int, x: float) -> float:
    """Downward recurrence with the even-order normalization sum."""
    m0 = int(x + 20 + 10.0 * np.sqrt(x))
    m0 += m0 % 2
    jp, jc = 0.0, 1e-30
    norm = 0.0
    out = 0.0
    for k in range(m0, 0, -1):
        jm = (2.0 * k / x) * jc - jp
        jp, jc = jc, jm
        if abs(jc) > 1e100:
            jc *= 1e-100
            jp *= 1e-100
            norm *= 1e-100
            out *= 1e-100
        if k - 1 == n:
            out = jc
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * jc
    norm += jc  # J_0 term
    return out / norm


def bessel_j(n: int, x: float) -> float:
    """J_n(x) for n >= 0, x >= 0, by series (small x) or recurrence (large x)."""
    if n < 0 or x < 0.0:
        raise ValueError("need n >= 0 and x >= 0")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x <= _SERIES_CUT:
        return _bessel_series(n, x)
    return _bessel_miller(n, x)


def bessel_zero(n: int, k: int) -> float:
    """k-th positive zero of J_n, bracketed by scanning and refined by bisection.

    Supported range n <= 10, k <= 20; absolute accuracy ~1e-12.
    """
    if not (0 <= n <= 10 and 1 <= k <= 20):
        raise ValueError("supported range is 0 <= n <= 10, 1 <= k <= 20")
    step = 0.25
    x = max(float(n), 0.5)
    f_prev = bessel_j(n, x)
    found = 0
    while found < k:
        x_next = x + step
        f_next = bessel_j(n, x_next)
        if f_prev == 0.0:
            found += 1
            if found == k:
                return x
        elif f_prev * f_next < 0.0:
            found += 1
            if found == k:
                a, b = x, x_next
                fa = f_prev
                for _ in range(80):
                    m = 0.5 * (a + b)
                    fm = bessel_j(n, m)
                    if fa * fm <= 0.0:
                        b = m
                    else:
                        a, fa = m, fm
                    if b - a < 1e-13:
                        break
                return 0.5 * (a + b)
        x, f_prev = x_next, f_next
        if x > 1e4:
            raise RuntimeError("zero scan ran away")
    raise AssertionError("unreachable")


# --------------------------------------------------------------------------
# Full 2D disk Laplacian with sector labeling
# --------------------------------------------------------------------------


@dataclass
class DiskMode:
    eigenvalue: float
    sector: int | None        # |n| of the dominant Fourier pair, None if mixed
    fraction: float           # weighted norm fraction in that pair


def planar_full_spectrum(R: float, n_r: int, n_theta: int, k: int,
                         label_threshold: float = 0.9) -> list[DiskMode]:
    """k lowest modes of the unreduced disk Laplacian on a polar grid.

    Cell-centered radii (i+1/2) h, periodic theta, Dirichlet wall at R via
    ghost reflection.  Each eigenvector is labeled by the Fourier pair +-n
    holding at least `label_threshold` of its weighted norm.
    """
    h = R / n_r
    ht = 2.0 * np.pi / n_theta
    r = h * (np.arange(n_r) + 0.5)
    n = n_r * n_theta

    def idx(i, j):
        return i * n_theta + j

    rows, cols, vals = [], [], []
    w = r * h * ht  # cell measure (the 2*pi is spread over theta cells)
    # radial fluxes at faces (i+1) h
    for i in range(n_r - 1):
        rf = h * (i + 1.0)
        c = rf * ht / h
        for j in range(n_theta):
            a, b = idx(i, j), idx(i + 1, j)
            rows += [a, a, b, b]
            cols += [a, b, a, b]
            vals += [c, -c, -c, c]
    # wall: ghost reflection through r = R
    c = R * ht * 2.0 / h
    for j in range(n_theta):
        a = idx(n_r - 1, j)
        rows.append(a)
        cols.append(a)
        vals.append(c)
    # angular fluxes
    for i in range(n_r):
        c = h / (r[i] * ht)
        for j in range(n_theta):
            a, b = idx(i, j), idx(i, (j + 1) % n_theta)
            rows += [a, a, b, b]
            cols += [a, b, a, b]
            vals += [c, -c, -c, c]
    B = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    wfull = np.repeat(w, n_theta)
    M = sp.diags(wfull).tocsc()
    v0 = np.cos(0.31 * np.arange(n)) + 1.2
    lam, vecs = spla.eigsh(B, k=k, M=M, sigma=0.0, which="LM", v0=v0)
    order = np.argsort(lam)
    lam, vecs = lam[order], vecs[:, order]

    out = []
    for j in range(k):
        grid = vecs[:, j].reshape(n_r, n_theta)
        F = np.fft.fft(grid, axis=1) / n_theta
        power = w @ (np.abs(F) ** 2)
        total = power.sum()
        nmax = n_theta // 2
        best, frac = None, 0.0
        for m in range(nmax + 1):
            p = power[m] if m == 0 else power[m] + power[(-m) % n_theta]
            if p > frac:
                best, frac = m, p
        frac /= total
        out.append(DiskMode(float(lam[j]), best if frac >= label_threshold else None,
                            float(frac)))
    return out


# --------------------------------------------------------------------------
# Closed-form separable test functions with analytic derivatives
# --------------------------------------------------------------------------


class Factor:
    """One-dimensional smooth factor with value and two derivatives."""

    def v(self, x):
        raise NotImplementedError

    def d(self, x):
        raise NotImplementedError

    def dd(self, x):
        raise NotImplementedError


class GaussFactor(Factor):
    def __init__(self, center: float, width: float):
        self.c, self.w = float(center), float(width)

    def v(self, x):
        return np.exp(-(((x - self.c) / self.w) ** 2))

    def d(self, x):
        return self.v(x) * (-2.0 * (x - self.c) / self.w**2)

    def dd(self, x):
        u = (x - self.c) / self.w
        return self.v(x) * (4.0 * u * u - 2.0) / self.w**2


class PolyFactor(Factor):
    def __init__(self, coeffs: Sequence[float]):
        self.p = np.polynomial.Polynomial(list(coeffs))
        self.p1 = self.p.deriv()
        self.p2 = self.p1.deriv()

    def v(self, x):
        return self.p(x)

    def d(self, x):
        return self.p1(x)

    def dd(self, x):
        return self.p2(x)


class TrigFactor(Factor):
    """a0 + sum_k (a_k cos(k x) + b_k sin(k x)); 2pi-periodic."""

    def __init__(self, a0=0.0, cos_coeffs=(), sin_coeffs=()):
        self.a0 = float(a0)
        self.ac = np.asarray(cos_coeffs, dtype=float)
        self.asn = np.asarray(sin_coeffs, dtype=float)

    def _terms(self, x, da=0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x) + (self.a0 if da == 0 else 0.0)
        for k, a in enumerate(self.ac, start=1):
            if da == 0:
                out += a * np.cos(k * x)
            elif da == 1:
                out += -a * k * np.sin(k * x)
            else:
                out += -a * k * k * np.cos(k * x)
        for k, b in enumerate(self.asn, start=1):
            if da == 0:
                out += b * np.sin(k * x)
            elif da == 1:
                out += b * k * np.cos(k * x)
            else:
                out += -b * k * k * np.sin(k * x)
        return out

    def v(self, x):
        return self._terms(x, 0)

    def d(self, x):
        return self._terms(x, 1)

    def dd(self, x):
        return self._terms(x, 2)


class SeparableShapeFunction:
    """Sum of separable terms coef * p(rho) t(chi) s(phi) per spin component.

    `terms` is a list of (coef_vector, rho_factor, chi_factor, phi_factor)
    with coef_vector of length 2*ell + 1.  Partial derivatives up to second
    order are available in closed form, which makes the continuum action of
    the reduced operator exact to rounding.
    """

    def __init__(self, ell: int, terms):
        self.ell = int(ell)
        self.dim = 2 * self.ell + 1
        self.terms = [(np.asarray(c, dtype=complex), p, t, s) for c, p, t, s in terms]
        for c, *_ in self.terms:
            if c.shape != (self.dim,):
                raise ValueError(f"coefficient vectors must have length {self.dim}")

    def __call__(self, rho, chi, phi):
        return self.partial(rho, chi, phi, 0, 0, 0)

    def partial(self, rho, chi, phi, dr=0, dc=0, dp=0):
        """Mixed partial derivative of the given orders, shape (dim,)."""
        pick = {0: "v", 1: "d", 2: "dd"}
        out = np.zeros(self.dim, dtype=complex)
        for c, p, t, s in self.terms:
            out += (
                c
                * getattr(p, pick[dr])(rho)
                * getattr(t, pick[dc])(chi)
                * getattr(s, pick[dp])(phi)
            )
        return out


def standard_test_functions(ell: int):
    """Two smooth, rho-localized test functions used by the pointwise checks."""
    d = 2 * ell + 1
    rng = np.random.default_rng(2024 + ell)
    c1 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    c2 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    f1 = SeparableShapeFunction(
        ell,
        [
            (c1, GaussFactor(1.1, 0.55), TrigFactor(1.0, (0.4,), (0.2,)),
             TrigFactor(1.0, (0.5,), ())),
            (np.roll(c1, 1), GaussFactor(0.9, 0.7), PolyFactor([0.3, 0.5, 0.25]),
             TrigFactor(0.7, (), (0.4,))),
        ],
    )
    f2 = SeparableShapeFunction(
        ell,
        [
            (c2, GaussFactor(1.3, 0.5), TrigFactor(0.8, (-0.3, 0.1), ()),
             TrigFactor(1.0, (0.2,), (0.3,))),
            (c2[::-1], GaussFactor(1.0, 0.6), TrigFactor(0.5, (), (0.35,)),
             TrigFactor(0.9, (), ())),
        ],
    )
    return f1, f2


# --------------------------------------------------------------------------
# Pointwise operator comparison: reduced (closed form) vs ambient stencil
# --------------------------------------------------------------------------


def reduced_action(psi: SeparableShapeFunction, rho: float, chi: float, phi: float
                   ) -> np.ndarray:
    """Continuum action of the reduced operator on psi, exact to rounding.

    Returns the positive-operator side: minus the divergence-form expression
    plus the rotational block.
    """
    ell = psi.ell
    irr = generators(ell)
    val = psi(rho, chi, phi)
    dr = psi.partial(rho, chi, phi, dr=1)
    drr = psi.partial(rho, chi, phi, dr=2)
    dc = psi.partial(rho, chi, phi, dc=1)
    dcc = psi.partial(rho, chi, phi, dc=2)
    dp = psi.partial(rho, chi, phi, dp=1)
    dpp = psi.partial(rho, chi, phi, dp=2)

    vib = drr + (5.0 / rho) * dr
    vib = vib + (4.0 / rho**2) * (dcc + 2.0 / np.tan(2.0 * chi) * dc)
    gauge = 0.5 * np.sin(chi) * irr.j1
    cov2 = dpp + 2.0 * (gauge @ dp) + gauge @ (gauge @ val)
    vib = vib + (4.0 / (rho**2 * np.cos(chi) ** 2)) * cov2

    c2 = np.cos(0.5 * chi) ** 2
    s2 = np.sin(0.5 * chi) ** 2
    rot = (irr.j1 @ (irr.j1 @ val)
           + (irr.j2 @ (irr.j2 @ val)) / c2
           + (irr.j3 @ (irr.j3 @ val)) / s2) / rho**2
    return -vib - rot


def ambient_stencil(psi, ell: int, point, h: float) -> np.ndarray:
    """Flat 6D Laplacian of the equivariant extension by central differences.

    `point` provides (rho, chi, phi, alpha, beta, gamma); the extension
    psi_full(r1, r2) = D(g) psi(shape) is evaluated at 12 shifted Jacobi
    pairs with step h.  Returns the positive-operator side (minus the sum of
    second differences).
    """
    r1, r2 = dragt_to_vectors(point.rho, point.chi, point.phi,
                              point.alpha, point.beta, point.gamma)
    x0 = np.concatenate([np.asarray(r1, float).ravel(), np.asarray(r2, float).ravel()])

    def ext(x):
        return equivariant_extend(psi, ell, x[:3], x[3:])

    center = ext(x0)
    acc = np.zeros_like(center)
    for i in range(6):
        e = np.zeros(6)
        e[i] = h
        acc += ext(x0 + e) - 2.0 * center + ext(x0 - e)
    return -acc / (h * h)


def compare_reduced_vs_ambient(ell: int, psi, points, h: float):
    """Pointwise error table of |reduced - ambient| at steps h and h/2.

    Returns a list of dict rows with fields point_id, rho, chi, phi, h,
    err_h, err_h2, ratio; the ratio should approach 4 for the second-order
    stencil.
    """
    rows = []
    for pid, pt in enumerate(points):
        exact = reduced_action(psi, pt.rho, pt.chi, pt.phi)
        exact_amb = generators(ell).wigner_d(pt.alpha, pt.beta, pt.gamma) @ exact
        e1 = np.linalg.norm(ambient_stencil(psi, ell, pt, h) - exact_amb)
        e2 = np.linalg.norm(ambient_stencil(psi, ell, pt, 0.5 * h) - exact_amb)
        rows.append({
            "point_id": pid, "rho": pt.rho, "chi": pt.chi, "phi": pt.phi,
            "h": h, "err_h": float(e1), "err_h2": float(e2),
            "ratio": float(e1 / e2) if e2 > 0 else np.inf,
        })
    return rows


def export_report_csv(rows, path):
    with open(path, "w") as fh:
        fh.write("point_id,rho,chi,phi,h,err_h,err_h2,ratio\n")
        for r in rows:
            fh.write(
                f"{r['point_id']},{r['rho']:.17g},{r['chi']:.17g},"
                f"{r['phi']:.17g},{r['h']:.17g},{r['err_h']:.17g},"
                f"{r['err_h2']:.17g},{r['ratio']:.17g}\n"
            )
