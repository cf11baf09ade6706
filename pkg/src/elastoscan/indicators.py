"""Direct sampling indicators: weighted quadratic forms of the MSR matrix.

For a sampling point z the test functions on the direction grid are

    phi_p(theta) = e^{-i kp z.theta} (q.theta),
    phi_s(theta) = e^{-i ks z.theta} (q.theta_perp),

and with the direction-grid weight w = pi/m the indicators are

    I_FF(z) = | w^2  phi(z)^H  F  phi(z) |,     phi = [phi_p; phi_s],
    I_PP(z) = | w^2  phi_p^H  F_pp  phi_p |,
    I_SS(z) = | w^2  phi_s^H  F_ss  phi_s |,

where F is the assembled 4m x 4m operator layout [[pp, sp], [ps, ss]].
Grid evaluation is one chunked matrix-matrix product over all sampling
points; nothing is re-assembled per z.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .elastic import Medium
from .forward import MSRMatrix, direction_grid

EVAL_CHUNK = 8192


class IndicatorKind(Enum):
    FF = "ff"
    PP = "pp"
    SS = "ss"


@dataclass(frozen=True)
class SamplingGrid:
    """Rectangular grid of sampling points, x fastest within each y row."""

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int

    def __post_init__(self) -> None:
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("need x1 > x0 and y1 > y0")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need nx, ny >= 2")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    def points(self) -> np.ndarray:
        """All grid points, shape (nx*ny, 2), ordered (iy, ix) row-major."""
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)


@dataclass(frozen=True)
class IndicatorField:
    """Indicator values on a grid; values[iy, ix] >= 0."""

    grid: SamplingGrid
    values: np.ndarray            # (ny, nx) float
    kind: IndicatorKind
    q: tuple[float, float]
    normalized: bool = False

    def argmax_point(self) -> np.ndarray:
        iy, ix = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return np.array([self.grid.xs[ix], self.grid.ys[iy]])

    def to_csv(self, path) -> None:
        """nx*ny rows of 'x,y,value'."""
        pts = self.grid.points()
        with open(path, "w") as fh:
            fh.write("x,y,value\n")
            for (x, y), v in zip(pts, self.values.ravel()):
                fh.write(f"{x!r},{y!r},{v!r}\n")


def test_vectors(z, q, directions: np.ndarray, medium: Medium
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Samples of (phi_p, phi_s) at the given unit directions for one z."""
    phi_p, phi_s = _test_vector_batch(np.atleast_2d(np.asarray(z, float)),
                                      np.asarray(q, float), directions, medium)
    return phi_p[:, 0], phi_s[:, 0]


def _test_vector_batch(z: np.ndarray, q: np.ndarray, directions: np.ndarray,
                       medium: Medium) -> tuple[np.ndarray, np.ndarray]:
    """z (M, 2) -> (phi_p, phi_s) each (2m, M)."""
    dq = directions @ q                                   # (2m,)
    dqp = -directions[:, 1] * q[0] + directions[:, 0] * q[1]
    zdot = directions @ z.T                               # (2m, M)
    phi_p = np.exp(-1j * medium.k_p * zdot) * dq[:, None]
    phi_s = np.exp(-1j * medium.k_s * zdot) * dqp[:, None]
    return phi_p, phi_s


def indicator_values_at(points: np.ndarray, msr_full: np.ndarray, m: int,
                        medium: Medium, q, kind: IndicatorKind) -> np.ndarray:
    """Indicator at arbitrary points (M, 2) from an assembled 4m x 4m matrix.

    Chunked BLAS3: per chunk, one product F @ Phi and one column-wise sesquilinear
    contraction. Works on masked (zero-filled) matrices as well.
    """
    q = np.asarray(q, float)
    points = np.atleast_2d(np.asarray(points, float))
    dirs = direction_grid(m)
    w = np.pi / m
    out = np.empty(len(points))
    for lo in range(0, len(points), EVAL_CHUNK):
        hi = min(lo + EVAL_CHUNK, len(points))
        phi_p, phi_s = _test_vector_batch(points[lo:hi], q, dirs, medium)
        if kind is IndicatorKind.FF:
            phi = np.vstack([phi_p, phi_s])               # (4m, C)
            fmat = msr_full
        elif kind is IndicatorKind.PP:
            phi = phi_p
            fmat = msr_full[: 2 * m, : 2 * m]
        else:
            phi = phi_s
            fmat = msr_full[2 * m:, 2 * m:]
        out[lo:hi] = np.abs(w**2 * np.einsum("dm,dm->m", np.conj(phi), fmat @ phi))
    return out


def _field_from_values(grid: SamplingGrid, vals: np.ndarray, kind: IndicatorKind,
                       q) -> IndicatorField:
    return IndicatorField(grid, vals.reshape(grid.ny, grid.nx), kind,
                          (float(q[0]), float(q[1])))


def indicator_ff(msr: MSRMatrix, grid: SamplingGrid, q=(1.0, 0.0)) -> IndicatorField:
    """Full-data indicator from all four MSR blocks."""
    vals = indicator_values_at(grid.points(), msr.assembled(), msr.m, msr.medium,
                               q, IndicatorKind.FF)
    return _field_from_values(grid, vals, IndicatorKind.FF, q)


def indicator_pp(msr: MSRMatrix, grid: SamplingGrid, q=(1.0, 0.0)) -> IndicatorField:
    """Compressional-only indicator (F_pp block, phi_p test vectors)."""
    vals = indicator_values_at(grid.points(), msr.assembled(), msr.m, msr.medium,
                               q, IndicatorKind.PP)
    return _field_from_values(grid, vals, IndicatorKind.PP, q)


def indicator_ss(msr: MSRMatrix, grid: SamplingGrid, q=(1.0, 0.0)) -> IndicatorField:
    """Shear-only indicator (F_ss block, phi_s test vectors)."""
    vals = indicator_values_at(grid.points(), msr.assembled(), msr.m, msr.medium,
                               q, IndicatorKind.SS)
    return _field_from_values(grid, vals, IndicatorKind.SS, q)


def indicator_field(msr: MSRMatrix, grid: SamplingGrid, kind: IndicatorKind,
                    q=(1.0, 0.0)) -> IndicatorField:
    return {IndicatorKind.FF: indicator_ff,
            IndicatorKind.PP: indicator_pp,
            IndicatorKind.SS: indicator_ss}[kind](msr, grid, q)


def normalize_field(field: IndicatorField, square: bool = False) -> IndicatorField:
    """Optionally square, then scale so the maximum is 1."""
    vmax = float(field.values.max())
    if not vmax > 0:
        raise ValueError("cannot normalize an all-zero field")
    vals = field.values**2 / vmax**2 if square else field.values / vmax
    return replace(field, values=vals, normalized=True)
