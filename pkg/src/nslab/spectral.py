"""Real <-> spectral field representation on a periodic box and exact
spectral calculus.

Conventions shared by every other module:

* The box is ``[0, L)^3`` sampled on an ``n^3`` uniform lattice,
  ``x_i = i L / n``.  Physical arrays are indexed ``values[ix, iy, iz]``
  with axis 0 along the first coordinate.
* Spectral coefficients are full complex cubes in numpy FFT layout.
  ``coeffs[k1, k2, k3]`` multiplies ``exp(i zeta . x)`` where
  ``zeta = (2 pi / L) k`` and the integer frequencies ``k`` run over
  ``{-n/2+1, ..., n/2}`` (the index ``n/2`` holds the Nyquist mode).
* Normalisation: ``coeffs = fftn(values) / n^3``.  Parseval then reads

      ||u||_{L^2}^2 = parseval_constant * sum_zeta |coeffs|^2

  with ``parseval_constant = L^3``; all norm code reads this single
  constant from :attr:`GridSpec.parseval_constant`.
* Differentiation multiplies by ``i zeta``; the Nyquist frequency
  ``k = -n/2`` is zeroed on differentiation because its odd-order
  derivative has no well defined sign on the real lattice.

Real fields are real valued in physical space, so coefficient cubes are
Hermitian symmetric: ``coeffs(-k) = conj(coeffs(k))``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

__all__ = [
    "GridSpec",
    "RealScalarField",
    "SpectralScalarField",
    "SpectralVectorField",
    "HermitianSymmetryError",
    "forward_transform",
    "inverse_transform",
    "partial_derivative",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "dealias",
    "random_spectral_noise",
    "write_snapshot",
    "read_snapshot",
    "set_fft_workers",
    "get_fft_workers",
]

_fft_workers = 1

HERMITIAN_TOL = 1e-13


def set_fft_workers(workers: int) -> None:
    """Set the worker count for batched transforms (1 keeps runs bit-reproducible)."""
    global _fft_workers
    _fft_workers = max(1, int(workers))


def get_fft_workers() -> int:
    return _fft_workers


class HermitianSymmetryError(ValueError):
    """Coefficients are not conjugate symmetric within tolerance."""


@dataclass(frozen=True)
class GridSpec:
    """Discretisation of the periodic box: modes per axis, period, dealias rule."""

    n: int
    box_length: float = 2.0 * np.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 4, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )
        if self.dealias_fraction * (self.n // 2) < 1.0:
            raise ValueError("dealias rule retains no nonzero wavevector")

    @property
    def shape(self) -> tuple:
        return (self.n, self.n, self.n)

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def parseval_constant(self) -> float:
        """c in ||u||_{L^2}^2 = c * sum |coeffs|^2 (equals the box volume)."""
        return self.box_length**3

    def axis_coordinates(self) -> np.ndarray:
        return self.box_length * np.arange(self.n) / self.n

    def meshgrid(self):
        x = self.axis_coordinates()
        return np.meshgrid(x, x, x, indexing="ij")


@lru_cache(maxsize=None)
def integer_frequencies(grid: GridSpec) -> np.ndarray:
    """1-D integer frequency array in FFT layout, entries in {-n/2+1, ..., n/2}."""
    k = np.fft.fftfreq(grid.n) * grid.n
    return np.round(k).astype(np.int64)


@lru_cache(maxsize=None)
def wavenumbers(grid: GridSpec):
    """Broadcastable (zx, zy, zz) wavenumber arrays, zeta = 2 pi k / L."""
    z = 2.0 * np.pi / grid.box_length * integer_frequencies(grid).astype(float)
    return z[:, None, None], z[None, :, None], z[None, None, :]


@lru_cache(maxsize=None)
def wavenumber_square(grid: GridSpec) -> np.ndarray:
    zx, zy, zz = wavenumbers(grid)
    return zx**2 + zy**2 + zz**2


@lru_cache(maxsize=None)
def derivative_factor(grid: GridSpec, axis: int) -> np.ndarray:
    """1-D i*zeta multiplier for 0-based axis, Nyquist entry zeroed."""
    z = 2.0 * np.pi / grid.box_length * integer_frequencies(grid).astype(float)
    z = z.copy()
    z[grid.n // 2] = 0.0
    shape = [1, 1, 1]
    shape[axis] = grid.n
    return (1j * z).reshape(shape)


@lru_cache(maxsize=None)
def dealias_mask(grid: GridSpec, fraction: float | None = None) -> np.ndarray:
    """Boolean keep-mask for the 2/3-style truncation rule (fraction 1 keeps all)."""
    frac = grid.dealias_fraction if fraction is None else fraction
    if frac >= 1.0:
        return np.ones(grid.shape, dtype=bool)
    k = integer_frequencies(grid)
    keep = np.abs(k) < frac * (grid.n / 2.0)
    return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]


# Half-spectrum layout (rfftn over the last axis), used by the batched
# kernels in the solver hot path.  half = full[..., :n//2 + 1].


@lru_cache(maxsize=None)
def wavenumbers_half(grid: GridSpec):
    z = 2.0 * np.pi / grid.box_length * integer_frequencies(grid).astype(float)
    zh = z[: grid.n // 2 + 1]
    return z[:, None, None], z[None, :, None], zh[None, None, :]


@lru_cache(maxsize=None)
def wavenumber_square_half(grid: GridSpec) -> np.ndarray:
    zx, zy, zz = wavenumbers_half(grid)
    return zx**2 + zy**2 + zz**2


@lru_cache(maxsize=None)
def derivative_factors_half(grid: GridSpec) -> tuple:
    zx, zy, zz = wavenumbers_half(grid)
    out = []
    for axis, z in enumerate((zx.copy(), zy.copy(), zz.copy())):
        idx = [slice(None)] * 3
        if axis < 2:
            idx[axis] = grid.n // 2
            z[tuple(idx)] = 0.0
        else:
            z[..., -1] = 0.0
        out.append(1j * z)
    return tuple(out)


@lru_cache(maxsize=None)
def dealias_mask_half(grid: GridSpec, fraction: float | None = None) -> np.ndarray:
    return dealias_mask(grid, fraction)[:, :, : grid.n // 2 + 1]


def half_to_full(grid: GridSpec, half: np.ndarray) -> np.ndarray:
    """Rebuild the full coefficient cube from the rfftn half spectrum."""
    n = grid.n
    m = n // 2 + 1
    full = np.empty(half.shape[:-1] + (n,), dtype=np.complex128)
    full[..., :m] = half
    rev = (-np.arange(n)) % n
    tail = np.arange(m, n)
    src = np.conj(half[..., rev[:, None, None], rev[None, :, None], (n - tail)[None, None, :]])
    full[..., m:] = src
    return full


def full_to_half(grid: GridSpec, full: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(full[..., : grid.n // 2 + 1])


def fftn_batch(values: np.ndarray) -> np.ndarray:
    return _fft.fftn(values, axes=(-3, -2, -1), workers=_fft_workers)


def ifftn_batch(coeffs: np.ndarray) -> np.ndarray:
    return _fft.ifftn(coeffs, axes=(-3, -2, -1), workers=_fft_workers)


def rfftn_batch(values: np.ndarray, n: int) -> np.ndarray:
    return _fft.rfftn(values, axes=(-3, -2, -1), workers=_fft_workers) / float(n**3)


def irfftn_batch(half: np.ndarray, n: int) -> np.ndarray:
    return _fft.irfftn(half, s=(n, n, n), axes=(-3, -2, -1), workers=_fft_workers) * float(n**3)


@dataclass
class RealScalarField:
    """Scalar samples on the collocation lattice."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")

    def copy(self) -> "RealScalarField":
        return RealScalarField(self.grid, self.values.copy())


def _hermitian_defect(coeffs: np.ndarray) -> float:
    n = coeffs.shape[-1]
    rev = (-np.arange(n)) % n
    mirrored = np.conj(coeffs[np.ix_(rev, rev, rev)])
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs - mirrored)) / scale)


@dataclass
class SpectralScalarField:
    """Complex coefficients indexed by integer wavevector (FFT layout)."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def hermitian_defect(self) -> float:
        """Relative size of coeffs(-k) - conj(coeffs(k))."""
        return _hermitian_defect(self.coeffs)

    def check_hermitian(self, tol: float = HERMITIAN_TOL) -> None:
        defect = self.hermitian_defect()
        if defect > tol:
            raise HermitianSymmetryError(
                f"Hermitian symmetry violated: relative defect {defect:.3e} > {tol:.1e}"
            )

    def copy(self) -> "SpectralScalarField":
        return SpectralScalarField(self.grid, self.coeffs.copy())

    def __add__(self, other):
        _require_same_grid(self, other)
        return SpectralScalarField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _require_same_grid(self, other)
        return SpectralScalarField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralScalarField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralScalarField(self.grid, -self.coeffs)


@dataclass
class SpectralVectorField:
    """Three spectral scalar components sharing one grid."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != 3:
            raise ValueError("a vector field needs exactly three components")
        grid = comps[0].grid
        for c in comps[1:]:
            if c.grid != grid:
                raise ValueError("vector components must share one grid")
        self.components = comps

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    @classmethod
    def from_stack(cls, grid: GridSpec, stacked: np.ndarray) -> "SpectralVectorField":
        return cls(tuple(SpectralScalarField(grid, stacked[i]) for i in range(3)))

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "SpectralVectorField":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (3,) + grid.shape:
            raise ValueError("physical vector data must have shape (3, n, n, n)")
        coeffs = fftn_batch(values.astype(np.complex128)) / float(grid.n**3)
        return cls.from_stack(grid, coeffs)

    def stack(self) -> np.ndarray:
        return np.stack([c.coeffs for c in self.components])

    def to_physical(self) -> np.ndarray:
        return np.real(ifftn_batch(self.stack())) * float(self.grid.n**3)

    def hermitian_defect(self) -> float:
        return max(c.hermitian_defect() for c in self.components)

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(tuple(c.copy() for c in self.components))

    def __add__(self, other):
        return SpectralVectorField(
            tuple(a + b for a, b in zip(self.components, other.components))
        )

    def __sub__(self, other):
        return SpectralVectorField(
            tuple(a - b for a, b in zip(self.components, other.components))
        )

    def __mul__(self, scalar):
        return SpectralVectorField(tuple(c * scalar for c in self.components))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralVectorField(tuple(-c for c in self.components))


def _require_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def forward_transform(field: RealScalarField) -> SpectralScalarField:
    """Physical samples -> spectral coefficients (coeffs = fftn(values)/n^3)."""
    coeffs = _fft.fftn(field.values, workers=_fft_workers) / float(field.grid.n**3)
    return SpectralScalarField(field.grid, coeffs)


def inverse_transform(
    field: SpectralScalarField, symmetry_tol: float = HERMITIAN_TOL
) -> RealScalarField:
    """Spectral coefficients -> real samples; rejects non-Hermitian input."""
    field.check_hermitian(symmetry_tol)
    values = np.real(_fft.ifftn(field.coeffs, workers=_fft_workers)) * float(
        field.grid.n**3
    )
    return RealScalarField(field.grid, values)


def partial_derivative(field, axis: int):
    """Exact spectral d/dx_axis, axis in {1, 2, 3}."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    if isinstance(field, SpectralVectorField):
        return SpectralVectorField(
            tuple(partial_derivative(c, axis) for c in field.components)
        )
    factor = derivative_factor(field.grid, axis - 1)
    return SpectralScalarField(field.grid, factor * field.coeffs)


def gradient(field: SpectralScalarField) -> SpectralVectorField:
    return SpectralVectorField(tuple(partial_derivative(field, ax) for ax in (1, 2, 3)))


def divergence(field: SpectralVectorField) -> SpectralScalarField:
    out = np.zeros(field.grid.shape, dtype=np.complex128)
    for ax, comp in enumerate(field.components):
        out += derivative_factor(field.grid, ax) * comp.coeffs
    return SpectralScalarField(field.grid, out)


def curl(field: SpectralVectorField) -> SpectralVectorField:
    g = field.grid
    d = [derivative_factor(g, ax) for ax in range(3)]
    c = [comp.coeffs for comp in field.components]
    return SpectralVectorField(
        (
            SpectralScalarField(g, d[1] * c[2] - d[2] * c[1]),
            SpectralScalarField(g, d[2] * c[0] - d[0] * c[2]),
            SpectralScalarField(g, d[0] * c[1] - d[1] * c[0]),
        )
    )


def laplacian(field):
    """Multiplier -|zeta|^2, for scalar or vector fields."""
    if isinstance(field, SpectralVectorField):
        return SpectralVectorField(tuple(laplacian(c) for c in field.components))
    return SpectralScalarField(field.grid, -wavenumber_square(field.grid) * field.coeffs)


def dealias(field, fraction: float | None = None):
    """Zero all modes outside the truncation band."""
    if isinstance(field, SpectralVectorField):
        return SpectralVectorField(tuple(dealias(c, fraction) for c in field.components))
    mask = dealias_mask(field.grid, fraction)
    return SpectralScalarField(field.grid, np.where(mask, field.coeffs, 0.0))


def random_spectral_noise(
    grid: GridSpec, seed: int, vector: bool = True, fraction: float | None = None
):
    """Seeded band-limited noise, Hermitian by construction (white noise on the
    lattice, transformed and truncated to the dealias band)."""
    rng = np.random.default_rng(seed)
    shape = ((3,) if vector else ()) + grid.shape
    values = rng.standard_normal(shape)
    coeffs = fftn_batch(values.astype(np.complex128)) / float(grid.n**3)
    coeffs = np.where(dealias_mask(grid, fraction), coeffs, 0.0)
    if vector:
        return SpectralVectorField.from_stack(grid, coeffs)
    return SpectralScalarField(grid, coeffs)


# Snapshot file format (byte exact):
#
#   line 1:  b"nslab-snapshot 1\n"
#   then     b"n <int>\n"
#            b"box_length <repr float>\n"
#            b"time <repr float>\n"
#            b"field <name>\n"
#            b"components <1 or 3>\n"
#            b"end\n"
#   then, per component, n^3 little-endian IEEE-754 float64 physical samples
#   in x-fastest order: the flattened index is ix + n*(iy + n*iz).
#
# Header lines are ASCII, space separated, newline terminated.

_SNAPSHOT_MAGIC = b"nslab-snapshot 1\n"


def write_snapshot(path, name: str, time: float, grid: GridSpec, physical: np.ndarray):
    """Write physical component data (shape (c, n, n, n) or (n, n, n))."""
    data = np.asarray(physical, dtype=np.float64)
    if data.shape == grid.shape:
        data = data[None]
    if data.ndim != 4 or data.shape[1:] != grid.shape or data.shape[0] not in (1, 3):
        raise ValueError("snapshot data must have shape (n,n,n) or (c,n,n,n), c in {1,3}")
    with open(path, "wb") as fh:
        fh.write(_SNAPSHOT_MAGIC)
        fh.write(f"n {grid.n}\n".encode("ascii"))
        fh.write(f"box_length {grid.box_length!r}\n".encode("ascii"))
        fh.write(f"time {float(time)!r}\n".encode("ascii"))
        fh.write(f"field {name}\n".encode("ascii"))
        fh.write(f"components {data.shape[0]}\n".encode("ascii"))
        fh.write(b"end\n")
        for comp in data:
            fh.write(comp.astype("<f8").tobytes(order="F"))


def read_snapshot(path):
    """Return (meta dict, array of shape (components, n, n, n))."""
    with open(path, "rb") as fh:
        raw = fh.read()
    buf = io.BytesIO(raw)
    if buf.readline() != _SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not an nslab snapshot")
    meta = {}
    while True:
        line = buf.readline().decode("ascii").rstrip("\n")
        if line == "end":
            break
        if not line:
            raise ValueError(f"{path}: truncated snapshot header")
        key, value = line.split(" ", 1)
        meta[key] = value
    n = int(meta["n"])
    ncomp = int(meta["components"])
    meta["n"] = n
    meta["components"] = ncomp
    meta["box_length"] = float(meta["box_length"])
    meta["time"] = float(meta["time"])
    data = np.empty((ncomp, n, n, n), dtype=np.float64)
    count = n**3
    for c in range(ncomp):
        flat = np.frombuffer(buf.read(8 * count), dtype="<f8", count=count)
        data[c] = flat.reshape((n, n, n), order="F")
    return meta, data
