"""Lie-algebra valued differential forms on a lattice.

A p-form is stored as an array of shape (ncomp, dim, N1, N2, N3): one block of
algebra coordinates per basis form dx^S with S a sorted index set.  The lattice
inner product is (u, v) = dV * sum(u * v), which equals the sum of squared
spectral coefficients because every transform is orthonormal.

Sign conventions:

* d on 0-forms is the gradient; d* is the L^2 adjoint of d (d* = -div on 1-forms).
* [u ^ v] multiplies the algebra parts with the bracket and the form parts with
  the wedge product.  The interior product is fixed by <[u _| v], w> = <v, [u ^ w]>.
* d_C w = dw + [C ^ w] and d_C* w = d*w + [C _| w].
* B_C = dC + 1/2 [C ^ C].
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import lattice as lt
from .lattice import Lattice, components
from .lie import LieAlgebra


class FormField:
    """A Lie-algebra valued p-form on a lattice."""

    __slots__ = ("data", "degree", "lattice", "algebra")

    def __init__(self, data: np.ndarray, degree: int, lattice: Lattice, algebra: LieAlgebra):
        data = np.asarray(data, dtype=float)
        ncomp = len(components(degree))
        expected = (ncomp, algebra.dim) + lattice.shape
        if data.shape != expected:
            raise ValueError(f"form data has shape {data.shape}, expected {expected}")
        self.data = data
        self.degree = degree
        self.lattice = lattice
        self.algebra = algebra

    @classmethod
    def zeros(cls, degree, lattice, algebra):
        ncomp = len(components(degree))
        return cls(np.zeros((ncomp, algebra.dim) + lattice.shape), degree, lattice, algebra)

    def like(self, data, degree=None):
        return FormField(data, self.degree if degree is None else degree, self.lattice, self.algebra)

    def copy(self):
        return self.like(self.data.copy())

    @property
    def tags(self):
        return self.lattice.form_parities(self.degree)

    def _check(self, other):
        if not isinstance(other, FormField):
            raise TypeError("expected a FormField")
        if other.degree != self.degree or other.lattice != self.lattice or other.algebra != self.algebra:
            raise ValueError("incompatible forms")

    def __add__(self, other):
        self._check(other)
        return self.like(self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return self.like(self.data - other.data)

    def __neg__(self):
        return self.like(-self.data)

    def __mul__(self, s):
        return self.like(self.data * float(s))

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self.like(self.data / float(s))

    # norms ---------------------------------------------------------------

    def inner(self, other) -> float:
        self._check(other)
        return float(np.sum(self.data * other.data) * self.lattice.cell_volume)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.data**2) * self.lattice.cell_volume))

    def pointwise_norm(self) -> np.ndarray:
        """|w(x)| over components and algebra coordinates."""
        return np.sqrt(np.sum(self.data**2, axis=(0, 1)))

    def lp_norm(self, p: float) -> float:
        return lp_norm(self.pointwise_norm(), p, self.lattice)

    # spectral ------------------------------------------------------------

    def transform(self) -> lt.SpectralField:
        tags = self.tags
        coeffs = np.stack([lt.forward(self.data[i], tags[i]) for i in range(len(tags))])
        return lt.SpectralField(coeffs, tags, self.lattice, self.degree, self.algebra)

    @classmethod
    def from_spectral(cls, spec: lt.SpectralField) -> "FormField":
        data = np.stack([lt.inverse(spec.coeffs[i], spec.tags[i]) for i in range(len(spec.tags))])
        return cls(data, spec.degree, spec.lattice, spec.algebra)

    def spectral_map(self, fn) -> "FormField":
        """Multiply each mode by fn(lambda)."""
        return FormField.from_spectral(self.transform().multiply(fn))

    def masked(self, masks) -> "FormField":
        tags = self.tags
        out = np.empty_like(self.data)
        for i, t in enumerate(tags):
            out[i] = lt.inverse(lt.forward(self.data[i], t) * masks(t), t)
        return self.like(out)

    def project(self) -> "FormField":
        """Remove inadmissible modes."""
        return self.masked(lambda t: lt.admissible_mask(self.lattice, t))

    def dealias(self) -> "FormField":
        """Two-thirds rule filter."""
        return self.masked(lambda t: lt.dealias_mask(self.lattice, t))

    def heat(self, t: float) -> "FormField":
        """e^{t Delta} applied per mode."""
        if t < 0:
            raise ValueError("heat semigroup needs t >= 0")
        return self.spectral_map(lambda lam: np.exp(-t * lam))

    def fractional_power(self, a: float) -> "FormField":
        """(1 - Delta)^{a/2}."""
        if not -2.0 <= a <= 2.0:
            raise ValueError("fractional exponent out of [-2, 2]")
        return self.spectral_map(lambda lam: (1.0 + lam) ** (0.5 * a))

    def sobolev_norm(self, a: float) -> float:
        """||(1 - Delta)^{a/2} w||_2, evaluated as a weighted coefficient sum."""
        if not -2.0 <= a <= 2.0:
            raise ValueError("Sobolev index out of [-2, 2]")
        val = lt.mode_weighted_energy(self.data, self.tags, self.lattice, lambda lam: (1.0 + lam) ** a)
        return float(np.sqrt(val))

    def laplacian(self) -> "FormField":
        """Spectral Delta (= -(d*d + dd*))."""
        return self.spectral_map(lambda lam: -lam)


def lp_norm(f: np.ndarray, p: float, lattice: Lattice) -> float:
    """L^p norm of a nonnegative site function with midpoint quadrature."""
    f = np.abs(f)
    if np.isinf(p):
        return float(np.max(f)) if f.size else 0.0
    m = float(np.max(f)) if f.size else 0.0
    if m == 0.0:
        return 0.0
    return float(m * (np.sum((f / m) ** p) * lattice.cell_volume) ** (1.0 / p))


# exterior algebra index tables -------------------------------------------------


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def wedge_table(r: int, p: int):
    """Entries (iT, iS, iR, sign) with dx^S ^ dx^R = sign dx^T."""
    out_index = {s: i for i, s in enumerate(components(r + p))}
    table = []
    for i_s, s in enumerate(components(r)):
        for i_r, rr in enumerate(components(p)):
            if set(s) & set(rr):
                continue
            t = tuple(sorted(s + rr))
            table.append((out_index[t], i_s, i_r, _perm_sign(s + rr)))
    return tuple(table)


def _bracket_add(out, algebra, x, y, sign):
    if sign == 1:
        out += algebra.bracket_coords(x, y)
    else:
        out -= algebra.bracket_coords(x, y)


def wedge_bracket(u: FormField, v: FormField) -> FormField:
    """[u ^ v]; pointwise, no filtering."""
    r, p = u.degree, v.degree
    if r + p > 3:
        raise ValueError("wedge degree exceeds 3")
    if u.lattice != v.lattice or u.algebra != v.algebra:
        raise ValueError("incompatible forms")
    out = FormField.zeros(r + p, u.lattice, u.algebra)
    if u.algebra.abelian:
        return out
    for i_t, i_s, i_r, sign in wedge_table(r, p):
        _bracket_add(out.data[i_t], u.algebra, u.data[i_s], v.data[i_r], sign)
    return out


def interior_bracket(u: FormField, v: FormField) -> FormField:
    """[u _| v], the adjoint of w -> [u ^ w]:  [u _| v]_R = sum_S sign(S,R) [v_{S+R}, u_S]."""
    r, p = u.degree, v.degree
    if r > p:
        raise ValueError("interior product degree mismatch")
    if u.lattice != v.lattice or u.algebra != v.algebra:
        raise ValueError("incompatible forms")
    out = FormField.zeros(p - r, u.lattice, u.algebra)
    if u.algebra.abelian:
        return out
    for i_t, i_s, i_r, sign in wedge_table(r, p - r):
        _bracket_add(out.data[i_r], u.algebra, v.data[i_t], u.data[i_s], sign)
    return out


def bracket_scalar(u: FormField, phi: FormField) -> FormField:
    """[u, phi] for a 0-form phi, i.e. [u ^ phi]."""
    return wedge_bracket(u, phi)


# exterior derivative ------------------------------------------------------------


@lru_cache(maxsize=None)
def d_table(p: int):
    """Entries (iT, iS, j, sign) with (dw)_T = sum sign * d_j w_S, T = S + {j}."""
    # the 1-form index set (j,) has component number j
    return tuple((i_t, i_r, j, sign) for i_t, j, i_r, sign in wedge_table(1, p))


def d(w: FormField) -> FormField:
    """Exterior derivative (spectral)."""
    p = w.degree
    if p > 2:
        raise ValueError("d is defined for degrees 0..2")
    lat = w.lattice
    out = FormField.zeros(p + 1, lat, w.algebra)
    tags = w.tags
    for i_t, i_s, j, sign in d_table(p):
        der, _ = lt.partial(w.data[i_s], j, tags[i_s][j], lat.lengths[j])
        out.data[i_t] += sign * der
    return out


def d_star(w: FormField) -> FormField:
    """Coderivative, the lattice adjoint of d."""
    p = w.degree
    if p < 1:
        raise ValueError("d* is defined for degrees 1..3")
    lat = w.lattice
    out = FormField.zeros(p - 1, lat, w.algebra)
    tags = w.tags
    for i_t, i_s, j, sign in d_table(p - 1):
        der, _ = lt.partial(w.data[i_t], j, tags[i_t][j], lat.lengths[j])
        out.data[i_s] -= sign * der
    return out


def covariant_d(c: FormField, w: FormField) -> FormField:
    """d_C w = dw + [C ^ w]."""
    return d(w) + wedge_bracket(c, w)


def covariant_d_star(c: FormField, w: FormField) -> FormField:
    """d_C* w = d*w + [C _| w]."""
    return d_star(w) + interior_bracket(c, w)


def curvature(c: FormField) -> FormField:
    """B_C = dC + 1/2 [C ^ C]."""
    if c.degree != 1:
        raise ValueError("curvature needs a 1-form")
    return d(c) + 0.5 * wedge_bracket(c, c)


def hodge_laplacian(w: FormField) -> FormField:
    """(d*d + dd*) w by composition of spectral derivatives."""
    out = FormField.zeros(w.degree, w.lattice, w.algebra)
    if w.degree < 3:
        out = out + d_star(d(w))
    if w.degree > 0:
        out = out + d(d_star(w))
    return out


def nonlinearity_x(c: FormField, b: FormField | None = None, phi: FormField | None = None) -> FormField:
    """X(C) with C' = Delta C + X(C) equivalent to C' = -d_C* B_C - d_C d*C.

    -X(C) = [C _| B] + 1/2 d*[C ^ C] + [C, d*C].  The bracket-interior term enters
    with a plus sign; that is the sign for which the splitting identity
    d_C* B + d_C d*C = (d*d + dd*) C - X(C) holds with d_C* = d* + [C _| .].
    """
    if b is None:
        b = curvature(c)
    if phi is None:
        phi = d_star(c)
    cc = wedge_bracket(c, c)
    return -(interior_bracket(c, b) + 0.5 * d_star(cc) + bracket_scalar(c, phi))


def augmented_velocity(c: FormField, b: FormField | None = None, phi: FormField | None = None) -> FormField:
    """C' = -(d_C* B_C + d_C phi) with phi = d*C."""
    if b is None:
        b = curvature(c)
    if phi is None:
        phi = d_star(c)
    return -(covariant_d_star(c, b) + covariant_d(c, phi))


def direct_velocity(a: FormField, b: FormField | None = None) -> FormField:
    """A' = -d_A* B_A."""
    if b is None:
        b = curvature(a)
    return -covariant_d_star(a, b)


# covariant site derivatives and the Bochner product --------------------------------


def covariant_partial(c: FormField, arr: np.ndarray, tags: list, j: int) -> tuple[np.ndarray, list]:
    """nabla_j^C applied to a component array (ncomp, dim, ...) with per-component tags."""
    lat = c.lattice
    ctags = c.tags
    out = np.empty_like(arr)
    new_tags = []
    for i in range(arr.shape[0]):
        der, nt = lt.partial(arr[i], j, tags[i][j], lat.lengths[j])
        t = list(tags[i])
        t[j] = nt
        out[i] = der + c.algebra.bracket_coords(c.data[j], arr[i])
        new_tags.append(tuple(t))
    return out, new_tags


def rough_laplacian(c: FormField, w: FormField) -> FormField:
    """sum_j nabla_j^C nabla_j^C w."""
    total = np.zeros_like(w.data)
    for j in range(3):
        first, t1 = covariant_partial(c, w.data, w.tags, j)
        second, _ = covariant_partial(c, first, t1, j)
        total += second
    return w.like(total)


@lru_cache(maxsize=None)
def bochner_table(p: int):
    """Entries (iT, iR, i, j, sign) for e^i ^ iota_j acting on dx^R giving sign dx^T."""
    comps = components(p)
    index = {s: k for k, s in enumerate(comps)}
    table = []
    for i_r, rset in enumerate(comps):
        for j in rset:
            pos = rset.index(j)
            rest = rset[:pos] + rset[pos + 1:]
            s1 = (-1) ** pos
            for i in range(3):
                if i in rest:
                    continue
                t = tuple(sorted((i,) + rest))
                s2 = _perm_sign((i,) + rest)
                table.append((index[t], i_r, i, j, s1 * s2))
    return tuple(table)


def bochner_product(b: FormField, w: FormField) -> FormField:
    """B # w = sum_{i,j} e^i ^ iota_j [B_ij, w].

    Commuting covariant derivatives gives [nabla_i, nabla_j] = ad(B_ij); substituting
    d_C = sum e^i ^ nabla_i and d_C* = -sum iota_j nabla_j into d_C d_C* + d_C* d_C
    and using iota_j e^i + e^i iota_j = delta_ij yields

        -(d_C d_C* + d_C* d_C) w = sum_j nabla_j^2 w + sum_{i,j} e^i ^ iota_j [B_ij, w].

    For a 1-form this reads (B # w)_i = sum_j [B_ij, w_j]; it vanishes on 0-forms.
    """
    if b.degree != 2:
        raise ValueError("first argument must be a 2-form")
    out = FormField.zeros(w.degree, w.lattice, w.algebra)
    if w.algebra.abelian or w.degree == 0:
        return out
    pair = {s: k for k, s in enumerate(components(2))}
    for i_t, i_r, i, j, sign in bochner_table(w.degree):
        if i == j:
            continue
        key = (min(i, j), max(i, j))
        s = sign if i < j else -sign
        _bracket_add(out.data[i_t], w.algebra, b.data[pair[key]], w.data[i_r], s)
    return out


# vertical projection -----------------------------------------------------------------


def inverse_scalar_laplacian(f: FormField) -> FormField:
    """Solve (d*d) u = f on 0-forms, discarding lambda = 0 modes."""
    def inv(lam):
        out = np.zeros_like(lam)
        nz = lam > 0
        out[nz] = 1.0 / lam[nz]
        return out

    return f.spectral_map(inv)


def vertical_projection(w: FormField) -> FormField:
    """P^perp w = d (d*d)^{-1} d* w, the L^2 projection onto exact 1-forms."""
    if w.degree != 1:
        raise ValueError("vertical projection acts on 1-forms")
    return d(inverse_scalar_laplacian(d_star(w)))


# identities used as checks ------------------------------------------------------------


def splitting_residual(c: FormField) -> float:
    """|| (d*d + dd*)C - X(C) - d_C* B_C - d_C d*C || / ||C||_{H1}."""
    b = curvature(c)
    phi = d_star(c)
    lhs = covariant_d_star(c, b) + covariant_d(c, phi)
    rhs = hodge_laplacian(c) - nonlinearity_x(c, b, phi)
    scale = c.sobolev_norm(1.0)
    return (lhs - rhs).norm() / scale if scale > 0 else (lhs - rhs).norm()


def bianchi_residual(c: FormField) -> float:
    """||d_C B_C||_2."""
    return covariant_d(c, curvature(c)).norm()


def orthogonality_residual(c: FormField) -> float:
    """| ||d_C*B + d_C phi||^2 - ||d_C*B||^2 - ||d_C phi||^2 | / (||d_C*B||^2 + ||d_C phi||^2)."""
    b = curvature(c)
    phi = d_star(c)
    u = covariant_d_star(c, b)
    v = covariant_d(c, phi)
    denom = u.norm() ** 2 + v.norm() ** 2
    diff = abs((u + v).norm() ** 2 - denom)
    return diff / denom if denom > 0 else diff


def weitzenbock_residual(c: FormField, w: FormField) -> float:
    """||(d_C d_C* + d_C* d_C) w + sum nabla_j^2 w + B # w|| / ||w||_{H2}."""
    b = curvature(c)
    total = rough_laplacian(c, w) + bochner_product(b, w)
    if w.degree > 0:
        total = total + covariant_d(c, covariant_d_star(c, w))
    if w.degree < 3:
        total = total + covariant_d_star(c, covariant_d(c, w))
    scale = w.sobolev_norm(2.0)
    return total.norm() / scale if scale > 0 else total.norm()


# random test fields ---------------------------------------------------------------------


def random_form(lattice: Lattice, algebra: LieAlgebra, degree: int, seed: int,
                band: int | None = None, amplitude: float = 1.0, decay: float = 0.0) -> FormField:
    """Random admissible p-form with iid Gaussian coefficients.

    Coefficients are restricted to per-axis mode labels <= band and damped by
    (1 + lambda)^(-decay/2); the result is scaled to have L^2 norm ``amplitude``.
    """
    rng = np.random.default_rng(seed)
    ncomp = len(components(degree))
    noise = rng.standard_normal((ncomp, algebra.dim) + lattice.shape)
    tags = lattice.form_parities(degree)
    data = np.empty_like(noise)
    for i, t in enumerate(tags):
        mask = lt.admissible_mask(lattice, t) if band is None else lt.band_mask(lattice, t, band)
        weight = mask * (1.0 + lt.eigenvalues(lattice, t)) ** (-0.5 * decay)
        data[i] = lt.inverse(lt.forward(noise[i], t) * weight, t)
    out = FormField(data, degree, lattice, algebra)
    nrm = out.norm()
    return out * (amplitude / nrm) if nrm > 0 else out
