"""Box and torus lattices with mixed sine/cosine/Fourier spectral transforms.

Periodic lattices sample x = n L / N and use the DFT on every axis.  Neumann and
Dirichlet boxes sample the cell centres x = (n + 1/2) L / N and use the
orthonormal DCT-II (cosine modes k = 0..N-1) or DST-II (sine modes k = 1..N).
A p-form component with index set S carries, per axis m, the tag

    Neumann    sin if m in S else cos
    Dirichlet  cos if m in S else sin

so that d and d* map between the parity classes of consecutive degrees.

A few modes are treated as inadmissible and are projected out: the sine mode
k = N of a box axis and the Nyquist mode of an even periodic axis.  Their
spectral derivatives vanish on the grid, so keeping them would break the exact
agreement between the spectral Laplacian and the composition d*d + dd*.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
import scipy.fft as sfft

BC_FLAVORS = ("periodic", "neumann", "dirichlet")


def workers() -> int:
    """Thread cap for transforms, taken from YMFLOW_THREADS."""
    try:
        return max(1, int(os.environ.get("YMFLOW_THREADS", "1")))
    except ValueError:
        return 1


def components(degree: int) -> list[tuple[int, ...]]:
    """Sorted index sets of the basis p-forms dx^S."""
    if not 0 <= degree <= 3:
        raise ValueError(f"form degree {degree} out of range")
    return list(combinations(range(3), degree))


@dataclass(frozen=True)
class Lattice:
    """A 3D rectangular lattice.

    Parameters
    ----------
    shape : tuple of int
        Grid points per axis (each >= 4).
    lengths : tuple of float
        Physical extents.
    bc : str
        ``"periodic"`` (torus surrogate for R^3), ``"neumann"`` (absolute) or
        ``"dirichlet"`` (relative) boundary conditions on a box.
    """

    shape: tuple = (16, 16, 16)
    lengths: tuple = (2 * np.pi, 2 * np.pi, 2 * np.pi)
    bc: str = "periodic"

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        lengths = tuple(float(x) for x in self.lengths)
        if len(shape) != 3 or len(lengths) != 3:
            raise ValueError("lattice must be three dimensional")
        if min(shape) < 4:
            raise ValueError("need at least 4 points per axis")
        if min(lengths) <= 0:
            raise ValueError("extents must be positive")
        if self.bc not in BC_FLAVORS:
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def cube(cls, n: int, bc: str = "periodic", length: float | None = None) -> "Lattice":
        """Cube with default extent 2 pi (periodic) or pi (box), giving integer wave numbers."""
        if length is None:
            length = 2 * np.pi if bc == "periodic" else np.pi
        return cls((n, n, n), (length, length, length), bc)

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def spacing(self) -> np.ndarray:
        return np.array(self.lengths) / np.array(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def axis_points(self, m: int) -> np.ndarray:
        n = self.shape[m]
        h = self.lengths[m] / n
        offset = 0.0 if self.periodic else 0.5
        return (np.arange(n) + offset) * h

    def grid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(*(self.axis_points(m) for m in range(3)), indexing="ij")

    # parity bookkeeping ---------------------------------------------------

    def parity(self, index_set: tuple[int, ...]) -> tuple[str, str, str]:
        """Per-axis transform tag of a form component dx^S."""
        if self.periodic:
            return ("fourier",) * 3
        inside, outside = ("sin", "cos") if self.bc == "neumann" else ("cos", "sin")
        return tuple(inside if m in index_set else outside for m in range(3))

    def form_parities(self, degree: int) -> list[tuple[str, str, str]]:
        return [self.parity(s) for s in components(degree)]

    def scalar_parity(self) -> tuple[str, str, str]:
        """Tag of scalar functions under the Neumann (or periodic) scalar Laplacian."""
        return ("fourier",) * 3 if self.periodic else ("cos",) * 3


# 1D mode tables ---------------------------------------------------------


@lru_cache(maxsize=None)
def wavenumbers(n: int, length: float, tag: str) -> np.ndarray:
    """Wave numbers of the transform coefficients along one axis."""
    if tag == "fourier":
        return 2 * np.pi * sfft.fftfreq(n, d=length / n)
    if tag == "cos":
        return np.pi * np.arange(n) / length
    if tag == "sin":
        return np.pi * np.arange(1, n + 1) / length
    raise ValueError(f"unknown tag {tag!r}")


@lru_cache(maxsize=None)
def mode_index(n: int, tag: str) -> np.ndarray:
    """Integer mode label |k| along one axis (used for band limits and filters)."""
    if tag == "fourier":
        return np.abs(np.rint(sfft.fftfreq(n, d=1.0 / n))).astype(int)
    if tag == "cos":
        return np.arange(n)
    return np.arange(1, n + 1)


@lru_cache(maxsize=None)
def admissible_1d(n: int, tag: str) -> np.ndarray:
    idx = mode_index(n, tag)
    if tag == "fourier":
        return ~((n % 2 == 0) & (idx == n // 2))
    if tag == "sin":
        return idx < n
    return np.ones(n, dtype=bool)


def _expand(vec: np.ndarray, axis: int) -> np.ndarray:
    shape = [1, 1, 1]
    shape[axis] = vec.size
    return vec.reshape(shape)


@lru_cache(maxsize=None)
def eigenvalues(lattice: Lattice, tags: tuple[str, str, str]) -> np.ndarray:
    """lambda_k = |k|^2 of -Delta for every coefficient of a component with these tags."""
    lam = np.zeros(lattice.shape)
    for m in range(3):
        k = wavenumbers(lattice.shape[m], lattice.lengths[m], tags[m])
        lam = lam + _expand(k * k, m)
    return lam


@lru_cache(maxsize=None)
def admissible_mask(lattice: Lattice, tags: tuple[str, str, str]) -> np.ndarray:
    mask = np.ones(lattice.shape, dtype=bool)
    for m in range(3):
        mask = mask & _expand(admissible_1d(lattice.shape[m], tags[m]), m)
    return mask


@lru_cache(maxsize=None)
def band_mask(lattice: Lattice, tags: tuple[str, str, str], band: int) -> np.ndarray:
    """Admissible modes with per-axis mode label <= band."""
    mask = admissible_mask(lattice, tags).copy()
    for m in range(3):
        mask = mask & _expand(mode_index(lattice.shape[m], tags[m]) <= band, m)
    return mask


@lru_cache(maxsize=None)
def dealias_mask(lattice: Lattice, tags: tuple[str, str, str]) -> np.ndarray:
    """Two-thirds rule: keep per-axis mode labels below 2/3 of the axis maximum."""
    mask = admissible_mask(lattice, tags).copy()
    for m in range(3):
        n = lattice.shape[m]
        top = n / 2 if tags[m] == "fourier" else n
        mask = mask & _expand(mode_index(n, tags[m]) < (2.0 / 3.0) * top, m)
    return mask


# transforms ----------------------------------------------------------------


def forward_axis(f: np.ndarray, axis: int, tag: str) -> np.ndarray:
    if tag == "fourier":
        return sfft.fft(f, axis=axis, norm="ortho", workers=workers())
    if tag == "cos":
        return sfft.dct(f, type=2, axis=axis, norm="ortho", workers=workers())
    return sfft.dst(f, type=2, axis=axis, norm="ortho", workers=workers())


def inverse_axis(c: np.ndarray, axis: int, tag: str) -> np.ndarray:
    if tag == "fourier":
        return sfft.ifft(c, axis=axis, norm="ortho", workers=workers())
    if tag == "cos":
        return sfft.idct(c, type=2, axis=axis, norm="ortho", workers=workers())
    return sfft.idst(c, type=2, axis=axis, norm="ortho", workers=workers())


def forward(f: np.ndarray, tags: tuple[str, str, str]) -> np.ndarray:
    """Orthonormal 3D transform over the last three axes."""
    if tags == ("fourier",) * 3:
        return sfft.fftn(f, axes=(-3, -2, -1), norm="ortho", workers=workers())
    out = f
    for m in range(3):
        out = forward_axis(out, m - 3, tags[m])
    return out


def inverse(c: np.ndarray, tags: tuple[str, str, str]) -> np.ndarray:
    """Inverse of :func:`forward`; real output."""
    if tags == ("fourier",) * 3:
        return np.real(sfft.ifftn(c, axes=(-3, -2, -1), norm="ortho", workers=workers()))
    out = c
    for m in range(3):
        out = inverse_axis(out, m - 3, tags[m])
    return np.real(out)


def apply_multiplier(f: np.ndarray, tags: tuple[str, str, str], mult: np.ndarray) -> np.ndarray:
    """Multiply the spectral coefficients of f (trailing 3 axes) by mult."""
    return inverse(forward(f, tags) * mult, tags)


FLIP = {"cos": "sin", "sin": "cos", "fourier": "fourier"}


def partial(f: np.ndarray, axis: int, tag: str, length: float) -> tuple[np.ndarray, str]:
    """Spectral derivative along one spatial axis (0..2 counted from the last three axes).

    Returns the derivative and its new tag on that axis.
    """
    ax = axis - 3
    n = f.shape[ax]
    if tag == "fourier":
        k = wavenumbers(n, length, tag).copy()
        if n % 2 == 0:
            k[n // 2] = 0.0
        shape = [1] * f.ndim
        shape[ax] = n
        c = forward_axis(f, ax, tag) * (1j * k).reshape(shape)
        out = inverse_axis(c, ax, tag)
        if np.isrealobj(f):
            out = np.real(out)
        return out, tag
    c = forward_axis(f, ax, tag)
    c = np.moveaxis(c, ax, -1)
    out = np.zeros_like(c)
    k = np.pi * np.arange(1, n) / length
    if tag == "cos":
        # cos mode j -> -(pi j / L) sin mode j, stored at sine index j - 1
        out[..., : n - 1] = -k * c[..., 1:]
    else:
        # sin mode j (index j - 1) -> (pi j / L) cos mode j; sine mode N is dropped
        out[..., 1:] = k * c[..., : n - 1]
    out = np.moveaxis(out, -1, ax)
    new = FLIP[tag]
    return inverse_axis(out, ax, new), new


def multiply_tags(t1: tuple[str, str, str], t2: tuple[str, str, str]) -> tuple[str, str, str]:
    """Parity of a pointwise product."""
    out = []
    for a, b in zip(t1, t2):
        if a == "fourier":
            out.append("fourier")
        else:
            out.append("cos" if a == b else "sin")
    return tuple(out)


class SpectralField:
    """Coefficients of a p-form field, one array per component.

    Attributes
    ----------
    coeffs : ndarray
        Shape (ncomp, dim, N1, N2, N3); complex for periodic lattices.
    tags : list
        Per-component parity signature.
    eigenvalues : list of ndarray
        lambda_k per component.
    """

    def __init__(self, coeffs, tags, lattice, degree, algebra):
        self.coeffs = coeffs
        self.tags = list(tags)
        self.lattice = lattice
        self.degree = degree
        self.algebra = algebra
        self.eigenvalues = [eigenvalues(lattice, t) for t in self.tags]

    def energy(self) -> float:
        """Sum of |coeff|^2 times the cell volume (equals the squared L^2 norm)."""
        return float(np.sum(np.abs(self.coeffs) ** 2) * self.lattice.cell_volume)

    def multiply(self, fn) -> "SpectralField":
        """Apply fn(lambda) per mode."""
        out = np.empty_like(self.coeffs)
        for i, lam in enumerate(self.eigenvalues):
            out[i] = self.coeffs[i] * fn(lam)
        return SpectralField(out, self.tags, self.lattice, self.degree, self.algebra)


def mode_weighted_energy(field_data: np.ndarray, tags: list, lattice: Lattice, weight) -> float:
    """sum_k weight(lambda_k) |coeff_k|^2 dV over the components of a field array."""
    total = 0.0
    for i, t in enumerate(tags):
        c = forward(field_data[i], t)
        total += float(np.sum(weight(eigenvalues(lattice, t)) * np.abs(c) ** 2))
    return total * lattice.cell_volume
