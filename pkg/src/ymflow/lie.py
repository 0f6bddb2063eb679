"""Structure group K and its Lie algebra.

Elements of the Lie algebra are handled in two forms: as n x n anti-Hermitian
matrices, and as real coordinate vectors in an orthonormal basis for the
Ad-invariant inner product <X, Y> = -2 scale tr(XY).  Lattice fields always use
the coordinate form, with the algebra index as the leading axis, so that the
bracket becomes a contraction with the structure constants.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


class LieAlgebra:
    """A compact matrix Lie algebra with an orthonormal basis.

    Parameters
    ----------
    name : str
        ``"su2"`` or ``"u1"``.
    scale : float
        The inner product is ``-2 * scale * tr(XY)``.
    """

    def __init__(self, name: str, scale: float = 1.0):
        if name == "su2":
            raw = -0.5j * PAULI
        elif name == "u1":
            raw = np.array([[[1j / np.sqrt(2.0)]]])
        else:
            raise ValueError(f"unknown group {name!r}")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.name = name
        self.scale = float(scale)
        self.basis = raw / np.sqrt(scale)
        self.dim = self.basis.shape[0]
        self.n = self.basis.shape[1]
        # [e_a, e_b] = sum_c f[a, b, c] e_c
        f = np.zeros((self.dim, self.dim, self.dim))
        for a in range(self.dim):
            for b in range(self.dim):
                f[a, b] = self.coords(self.bracket(self.basis[a], self.basis[b]))
        self.structure = f
        self.abelian = not np.any(f)

    def __repr__(self):
        return f"LieAlgebra({self.name!r}, scale={self.scale})"

    def __eq__(self, other):
        return isinstance(other, LieAlgebra) and (self.name, self.scale) == (other.name, other.scale)

    def __hash__(self):
        return hash((self.name, self.scale))

    # matrix form -------------------------------------------------------

    def inner(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Ad-invariant inner product of matrices (broadcast over leading axes)."""
        return -2.0 * self.scale * np.real(np.einsum("...ij,...ji->...", x, y))

    @staticmethod
    def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Matrix commutator XY - YX."""
        return x @ y - y @ x

    def matrix(self, coords: np.ndarray) -> np.ndarray:
        """Coordinates (dim, ...) to matrices (..., n, n)."""
        coords = np.asarray(coords, dtype=float)
        return np.einsum("a...,aij->...ij", coords, self.basis)

    def coords(self, x: np.ndarray) -> np.ndarray:
        """Project matrices (..., n, n) to the algebra and return coordinates (dim, ...)."""
        p = self.project(x)
        out = -2.0 * self.scale * np.real(np.einsum("aij,...ji->a...", self.basis, p))
        return out

    def project(self, x: np.ndarray) -> np.ndarray:
        """Anti-Hermitian (and, for su(n), traceless) part of a matrix."""
        x = np.asarray(x, dtype=complex)
        p = 0.5 * (x - np.conj(np.swapaxes(x, -1, -2)))
        if self.name == "su2":
            tr = np.trace(p, axis1=-2, axis2=-1)[..., None, None] / self.n
            p = p - tr * np.eye(self.n)
        return p

    # coordinate form ---------------------------------------------------

    def bracket_coords(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Bracket of coordinate arrays with the algebra index leading."""
        if self.abelian:
            return np.zeros(np.broadcast_shapes(x.shape, y.shape))
        if self.name == "su2" and self.scale == 1.0:
            # structure constants are the Levi-Civita symbol
            return np.stack(
                [
                    x[1] * y[2] - x[2] * y[1],
                    x[2] * y[0] - x[0] * y[2],
                    x[0] * y[1] - x[1] * y[0],
                ]
            )
        return np.einsum("abc,a...,b...->c...", self.structure, x, y)

    def ad_matrix(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad(x) on coordinates: (ad x)[c, b] = f[a, b, c] x_a."""
        return np.einsum("abc,a->cb", self.structure, np.asarray(x, dtype=float))

    def commutator_bound(self) -> float:
        """sup { ||ad x|| : ||x|| <= 1 }, the largest singular value of ad."""
        if self.abelian:
            return 0.0

        def neg_norm(v):
            v = v / np.linalg.norm(v)
            return -np.linalg.svd(self.ad_matrix(v), compute_uv=False)[0]

        rng = np.random.default_rng(0)
        starts = list(np.eye(self.dim)) + list(rng.standard_normal((8, self.dim)))
        best = max(-neg_norm(v) for v in starts)
        v0 = max(starts, key=lambda v: -neg_norm(v))
        res = minimize(neg_norm, v0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14})
        return float(max(best, -res.fun))

    # group -------------------------------------------------------------

    def identity(self, shape=()) -> np.ndarray:
        return np.broadcast_to(np.eye(self.n, dtype=complex), tuple(shape) + (self.n, self.n)).copy()

    def exp(self, coords: np.ndarray) -> np.ndarray:
        """exp of the algebra element with coordinates (dim, ...); returns (..., n, n)."""
        coords = np.asarray(coords, dtype=float)
        if self.name == "u1":
            theta = coords[0] / np.sqrt(2.0 * self.scale)
            return np.exp(1j * theta)[..., None, None]
        # X = -(i/2) v . sigma with v = coords / sqrt(scale); exp X = cos(|v|/2) - i sin(|v|/2) n . sigma
        v = coords / np.sqrt(self.scale)
        r = np.sqrt(np.sum(v * v, axis=0))
        half = 0.5 * r
        c = np.cos(half)
        # sin(r/2)/r, with the removable singularity at r = 0
        s = np.where(r > 1e-8, np.sin(half) / np.where(r > 1e-8, r, 1.0), 0.5 - r * r / 48.0)
        out = np.empty(r.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = c - 1j * s * v[2]
        out[..., 1, 1] = c + 1j * s * v[2]
        out[..., 0, 1] = -1j * s * v[0] - s * v[1]
        out[..., 1, 0] = -1j * s * v[0] + s * v[1]
        return out

    def exp_matrix(self, x: np.ndarray) -> np.ndarray:
        """exp of a matrix algebra element (single matrix)."""
        return self.exp(self.coords(x)) if self.name in ("su2", "u1") else expm(x)

    def Ad(self, g: np.ndarray) -> np.ndarray:
        """Matrix of Ad(g) on coordinates: R[..., c, a] = <e_c, g e_a g^-1>."""
        g = np.asarray(g, dtype=complex)
        if self.abelian:
            return np.ones(g.shape[:-2] + (1, 1))
        ginv = np.conj(np.swapaxes(g, -1, -2))
        conj = np.einsum("...ij,ajk,...kl->...ail", g, self.basis, ginv)
        return -2.0 * self.scale * np.real(np.einsum("cij,...aji->...ca", self.basis, conj))

    @staticmethod
    def inv(g: np.ndarray) -> np.ndarray:
        """Inverse of a unitary matrix field."""
        return np.conj(np.swapaxes(g, -1, -2))

    def unitarity_defect(self, g: np.ndarray) -> float:
        gg = np.conj(np.swapaxes(g, -1, -2)) @ g
        return float(np.max(np.abs(gg - np.eye(self.n))))

    def reproject(self, g: np.ndarray, tol: float = 1e-8) -> np.ndarray:
        """Polar-decomposition repair of a group field whose unitarity drifted past tol."""
        if self.unitarity_defect(g) <= tol:
            return g
        u, _, vh = np.linalg.svd(g)
        q = u @ vh
        if self.name == "su2":
            det = np.linalg.det(q)
            q = q / np.sqrt(det)[..., None, None]
        return q


def check_lie_element(x: np.ndarray, algebra: LieAlgebra, tol: float = 1e-12) -> bool:
    """Anti-Hermitian and (for su(2)) traceless within tol."""
    herm = np.max(np.abs(x + np.conj(np.swapaxes(x, -1, -2))))
    ok = herm <= tol
    if algebra.name == "su2":
        ok = ok and np.max(np.abs(np.trace(x, axis1=-2, axis2=-1))) <= tol
    return bool(ok)


def check_group_element(g: np.ndarray, algebra: LieAlgebra, tol: float = 1e-10) -> bool:
    """g^dagger g = I and (for SU(2)) det g = 1 within tol."""
    ok = algebra.unitarity_defect(g) <= tol
    if algebra.name == "su2":
        ok = ok and np.max(np.abs(np.linalg.det(g) - 1.0)) <= tol
    return bool(ok)


SU2 = LieAlgebra("su2")
U1 = LieAlgebra("u1")


def get_algebra(name: str) -> LieAlgebra:
    if name == "su2":
        return SU2
    if name == "u1":
        return U1
    raise ValueError(f"unknown group {name!r}")
