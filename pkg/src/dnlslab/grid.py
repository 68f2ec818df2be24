"""Uniform periodic grid, unitary Fourier transforms, and the norm zoo.

The spatial domain is ``[-half_width, half_width)`` sampled at ``n_points``
equispaced nodes.  The transform convention is the continuum one,

    u_hat(xi) = (2 pi)^{-1/2} * integral e^{-i x xi} u(x) dx,

discretised so that Parseval holds exactly:  ``||u_hat||_2 == ||u||_2`` with
the spectral L2 norm taken with the mode spacing ``pi / half_width``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .errors import BoundaryError, ShapeMismatchError

#: Relative magnitude allowed at the domain edge before a field counts as
#: touching the boundary.
BOUNDARY_TOL = 1e-10

_SNAPSHOT_MAGIC = b"DNLS"
_SNAPSHOT_VERSION = 1


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-half_width, half_width)``.

    ``n_points`` must be a power of two, at least 8.  Mode ``k`` carries the
    physical frequency ``xi_k = pi * k / half_width`` for integer ``k`` in
    ``[-n/2, n/2)``.
    """

    half_width: float
    n_points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.n_points < 8 or not _is_power_of_two(self.n_points):
            raise ValueError(
                f"n_points must be a power of two >= 8, got {self.n_points}"
            )
        x = -self.half_width + self.dx * np.arange(self.n_points)
        modes = np.rint(_fft.fftfreq(self.n_points) * self.n_points).astype(int)
        xi = np.pi * modes / self.half_width
        # (-1)^k accounts for the domain starting at -half_width rather than 0.
        phase = 1.0 - 2.0 * (modes & 1)
        for name, arr in (("x", x), ("modes", modes), ("xi", xi), ("_phase", phase)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def dxi(self) -> float:
        return np.pi / self.half_width

    @property
    def xi_max(self) -> float:
        return np.pi / self.dx


@dataclass(frozen=True)
class ComplexField:
    """A complex-valued function sampled on ``grid`` at time ``time``."""

    grid: GridSpec
    time: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n_points,):
            raise ShapeMismatchError(
                f"values shape {vals.shape} does not match grid with "
                f"{self.grid.n_points} points"
            )
        if not np.all(np.isfinite(vals.view(float))):
            raise ValueError("field values must be finite")
        if self.time < 0:
            raise ValueError(f"time must be nonnegative, got {self.time}")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, time: float | None = None) -> "ComplexField":
        """New field on the same grid, optionally at a different time."""
        return ComplexField(self.grid, self.time if time is None else time, values)


def fft(field: ComplexField) -> np.ndarray:
    """Forward transform, continuum normalization, modes in fftfreq order."""
    g = field.grid
    return g.dx / np.sqrt(2.0 * np.pi) * g._phase * _fft.fft(field.values)


def inverse_fft(spectrum: np.ndarray, grid: GridSpec, time: float = 0.0) -> ComplexField:
    """Inverse of :func:`fft`; raises if the spectrum does not fit the grid."""
    spectrum = np.asarray(spectrum, dtype=complex)
    if spectrum.shape != (grid.n_points,):
        raise ShapeMismatchError(
            f"spectrum length {spectrum.shape} does not match grid with "
            f"{grid.n_points} points"
        )
    vals = _fft.ifft(spectrum * grid._phase) * np.sqrt(2.0 * np.pi) / grid.dx
    return ComplexField(grid, time, vals)


def spectral_derivative(field: ComplexField, order: int = 1) -> ComplexField:
    """d^order/dx^order via the Fourier multiplier ``(i xi)^order``.

    The Nyquist mode is zeroed for odd orders to keep derivatives of real
    fields real.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be in {{1, 2, 3}}, got {order}")
    g = field.grid
    mult = (1j * g.xi) ** order
    if order % 2 == 1:
        mult = mult.copy()
        mult[g.modes == -g.n_points // 2] = 0.0
    vals = _fft.ifft(mult * _fft.fft(field.values))
    return ComplexField(g, field.time, vals)


@dataclass(frozen=True)
class FieldNorms:
    l2: float
    h1: float
    linf: float


def l2_norm(field: ComplexField) -> float:
    """Physical-side L2 norm, dx-weighted."""
    return float(np.sqrt(np.sum(np.abs(field.values) ** 2) * field.grid.dx))


def sobolev_norm(field: ComplexField, k: float) -> float:
    """H^k norm via the Japanese-bracket multiplier ``<xi>^k``."""
    g = field.grid
    spec2 = np.abs(_fft.fft(field.values)) ** 2 * (g.dx / g.n_points)
    return float(np.sqrt(np.sum((1.0 + g.xi**2) ** k * spec2)))


def linf_norm(field: ComplexField) -> float:
    return float(np.max(np.abs(field.values)))


def norms(field: ComplexField) -> FieldNorms:
    """The L2, H1 and Linf norms used throughout the diagnostics."""
    return FieldNorms(
        l2=l2_norm(field), h1=sobolev_norm(field, 1.0), linf=linf_norm(field)
    )


def x_weighted(field: ComplexField) -> ComplexField:
    """The field ``x * u`` on the same grid."""
    return field.with_values(field.grid.x * field.values)


def boundary_ratio(field: ComplexField) -> float:
    """Max field magnitude on the two edge nodes relative to the peak."""
    peak = linf_norm(field)
    if peak == 0.0:
        return 0.0
    edge = max(abs(field.values[0]), abs(field.values[-1]))
    return float(edge / peak)


def boundary_ok(field: ComplexField, tol: float = BOUNDARY_TOL) -> bool:
    return boundary_ratio(field) < tol


def require_boundary_negligible(field: ComplexField, tol: float = BOUNDARY_TOL) -> None:
    r = boundary_ratio(field)
    if not r < tol:
        raise BoundaryError(
            f"field magnitude at the boundary is {r:.3e} of the peak "
            f"(tolerance {tol:.1e}); enlarge half_width"
        )


def eval_at(field: ComplexField, points: np.ndarray) -> np.ndarray:
    """Band-limited (trigonometric) evaluation of the field at arbitrary x."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    g = field.grid
    coeffs = g._phase * _fft.fft(field.values) / g.n_points
    return np.exp(1j * np.outer(points, g.xi)) @ coeffs


def spectrum_at(field: ComplexField, xi_points: np.ndarray) -> np.ndarray:
    """Continuum-normalized transform evaluated at arbitrary frequencies."""
    xi_points = np.atleast_1d(np.asarray(xi_points, dtype=float))
    g = field.grid
    kern = np.exp(-1j * np.outer(xi_points, g.x))
    return (kern @ field.values) * (g.dx / np.sqrt(2.0 * np.pi))


def upsample(field: ComplexField, factor: int) -> ComplexField:
    """Zero-pad the spectrum to refine the sampling by ``factor`` (exact for
    resolved fields)."""
    if factor < 1 or not _is_power_of_two(factor):
        raise ValueError(f"upsample factor must be a power of two >= 1, got {factor}")
    if factor == 1:
        return field
    g = field.grid
    n = g.n_points
    spec = _fft.fft(field.values)
    big = np.zeros(factor * n, dtype=complex)
    big[: n // 2] = spec[: n // 2]
    big[-(n // 2):] = spec[-(n // 2):]
    fine = GridSpec(g.half_width, factor * n)
    return ComplexField(fine, field.time, factor * _fft.ifft(big))


def save_field(field: ComplexField, path) -> None:
    """Write the binary snapshot: DNLS magic, version, n, half_width, time,
    then interleaved (re, im) little-endian f64 pairs."""
    header = _SNAPSHOT_MAGIC + struct.pack(
        "<IIdd",
        _SNAPSHOT_VERSION,
        field.grid.n_points,
        field.grid.half_width,
        field.time,
    )
    inter = np.empty(2 * field.grid.n_points, dtype="<f8")
    inter[0::2] = field.values.real
    inter[1::2] = field.values.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inter.tobytes())


def load_field(path) -> ComplexField:
    """Read a snapshot written by :func:`save_field`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a DNLS snapshot file")
    version, n_points = struct.unpack("<II", blob[4:12])
    if version != _SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    half_width, time = struct.unpack("<dd", blob[12:28])
    data = np.frombuffer(blob[28:], dtype="<f8")
    if data.size != 2 * n_points:
        raise ShapeMismatchError(
            f"{path}: expected {2 * n_points} payload floats, found {data.size}"
        )
    vals = data[0::2] + 1j * data[1::2]
    return ComplexField(GridSpec(half_width, n_points), time, vals)
