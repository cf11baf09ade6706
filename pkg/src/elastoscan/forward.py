"""Nystrom single-layer forward solver and multi-static response synthesis.

Discretization
--------------
The scattered field is a single-layer potential over the union boundary,
u^sc = S[psi], and psi solves

    Dirichlet:  S psi            = -u^in        (first kind, log-singular)
    Neumann:    (-I/2 + K') psi  = -T_nu u^in   (second kind, Cauchy-singular)

on the trapezoid grid t_k = 2 pi k / n per component.  Singular quadrature
on the per-component diagonal blocks:

  * log part      -- Kussmaul-Martensen splitting K = K1 ln(4 sin^2((t-tau)/2)) + K2
                     with K1 the analytic J-Bessel coefficient and the exact
                     spectral weights R_j; smooth diagonals in closed form.
  * Cauchy part   -- the traction kernel's strong singularity is the constant
                     skew matrix Lam = mu/(2 pi (lam+2mu)) [[0,-1],[1,0]] times
                     cot((tau-t)/2)/2 (the elastostatic limit); subtracted
                     globally and integrated by the exact cotangent rule, with
                     the smooth remainder's diagonal Richardson-extrapolated.

Cross-component blocks are smooth and use plain trapezoid weights.  Off the
diagonal both schemes reduce to kernel-times-weight, so assembly is fully
vectorized; one LU factorization per (scene, medium, bc) is reused for all
right-hand sides.

Far fields of a density follow the trapezoid rule

    u_p(xhat) = sum_k w_k e^{-i kp xhat.y_k} (psi_k . xhat),
    u_s(xhat) = sum_k w_k e^{-i ks xhat.y_k} (psi_k . xhat_perp),

and the MSR matrix collects them over the direction grid
theta_i = (i-1) pi / m, i = 1..2m (rows = observation, columns = incidence).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Union

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack as _lapack
from scipy.special import ndtri

from .elastic import (
    EULER_GAMMA,
    Medium,
    PlaneWave,
    PointSource,
    WaveMode,
    hankel_pack,
    logcoef_pack,
    perp,
    traction_of_green,
)
from .geometry import (
    BoundaryCondition,
    BoundaryCurve,
    Quadrature,
    Scene,
    boundary_quadrature,
    curve_point,
    curve_tangent,
)

logger = logging.getLogger(__name__)

RCOND_LIMIT = 1e-12           # condition estimate > 1e12 is treated as resonance
NOISE_NORM = "frobenius"
MSR_FORMAT_VERSION = "MSR/1"

Incident = Union[PlaneWave, PointSource]


class NumericError(RuntimeError):
    """Numerical failure (ill-conditioned or singular system)."""


# ---------------------------------------------------------------------------
# Quadrature weight tables (per grid size, cached)
# ---------------------------------------------------------------------------
@lru_cache(maxsize=32)
def log_quadrature_weights(n: int) -> np.ndarray:
    """R[l], l = (i-j) mod n: spectral weights for the ln(4 sin^2((t-tau)/2)) kernel."""
    l = np.arange(n)
    m = np.arange(1, n // 2)
    table = np.cos(2.0 * np.pi * np.outer(l, m) / n) / m
    return -(4.0 * np.pi / n) * table.sum(axis=1) - (4.0 * np.pi / n**2) * np.cos(np.pi * l)


@lru_cache(maxsize=32)
def cot_quadrature_weights(n: int) -> np.ndarray:
    """H[l], l = (i-j) mod n: spectral weights for p.v. of the cot((tau-t)/2) kernel."""
    l = np.arange(n)
    h = np.zeros(n)
    odd = (l % 2) == 1
    h[odd] = -(4.0 * np.pi / n) / np.tan(np.pi * l[odd] / n)
    return h


def _toeplitz_circ(table: np.ndarray) -> np.ndarray:
    n = len(table)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return table[idx]


# ---------------------------------------------------------------------------
# Kernel blocks
# ---------------------------------------------------------------------------
def _single_layer_smooth_diag(medium: Medium, speeds: np.ndarray) -> tuple[np.ndarray, float]:
    """Diagonal of the smooth part K2(t,t) = s (A I + B that that^T): returns (A, B)."""
    lam, mu, om = medium.lam, medium.mu, medium.omega
    ks, kp = medium.k_s, medium.k_p
    sig = ks**2 - kp**2
    logs = np.log(speeds)
    g1 = (-sig / 2.0 + 1j * sig / (2.0 * np.pi)
          - (1j / np.pi) * (ks**2 * np.log(ks / 2.0) - kp**2 * np.log(kp / 2.0)
                            + sig * (EULER_GAMMA + logs)))
    a = (0.25j / mu - (np.log(ks / 2.0) + EULER_GAMMA + logs) / (2.0 * np.pi * mu)
         + 0.25j / om**2 * g1)
    b = sig / (4.0 * np.pi * om**2)
    return a, b


def _single_layer_log_diag_coef(medium: Medium) -> float:
    """K1(t,t) = coef * s * I (J-Bessel log coefficient at r = 0)."""
    return -(1.0 / (8.0 * np.pi)) * (1.0 / medium.mu + 1.0 / (medium.lam + 2.0 * medium.mu))


def cauchy_strength(medium: Medium) -> np.ndarray:
    """Lam: constant skew 2x2 Cauchy coefficient of the traction kernel."""
    c = medium.mu / (2.0 * np.pi * (medium.lam + 2.0 * medium.mu))
    return c * np.array([[0.0, -1.0], [1.0, 0.0]])


def _green_block(xi: np.ndarray, xj: np.ndarray, medium: Medium, pack_fn) -> np.ndarray:
    """Phi(x_i, x_j) for all pairs: (Ni, Nj, 2, 2). Assumes no coincident points."""
    return _kernel_from_w(xi[:, None, :] - xj[None, :, :], medium, pack_fn)


def _traction_block(xi, nui, xj, medium: Medium, pack_fn) -> np.ndarray:
    """M(x_i - x_j, nu_i) for all pairs: (Ni, Nj, 2, 2)."""
    w = xi[:, None, :] - xj[None, :, :]
    nu = np.broadcast_to(nui[:, None, :], w.shape)
    return traction_of_green(w, nu, medium, pack_fn=pack_fn)


def _mask_diagonal(n: int) -> np.ndarray:
    return np.eye(n, dtype=bool)


def _dirichlet_self_block(quad: Quadrature, medium: Medium) -> np.ndarray:
    """Singular Nystrom block of the single-layer operator on one component."""
    n = quad.n_nodes
    x, s = quad.points, quad.speeds
    t = quad.t
    diag = _mask_diagonal(n)

    # keep the diagonal finite during vectorized evaluation; overwritten below
    w = x[:, None, :] - x[None, :, :]
    w[diag] = (1.0, 0.0)
    kern = _kernel_from_w(w, medium, hankel_pack) * s[None, :, None, None]
    kern_log = _kernel_from_w(w, medium, logcoef_pack) * s[None, :, None, None]

    dt = t[:, None] - t[None, :]
    logterm = np.log(np.where(diag, 1.0, 4.0 * np.sin(dt / 2.0) ** 2))
    smooth = kern - kern_log * logterm[..., None, None]

    a_diag, b_diag = _single_layer_smooth_diag(medium, s)
    that = (curve_tangent_from(quad))
    eye = np.eye(2)
    smooth[diag] = s[:, None, None] * (a_diag[:, None, None] * eye
                                       + b_diag * that[:, :, None] * that[:, None, :])
    kern_log[diag] = _single_layer_log_diag_coef(medium) * s[:, None, None] * eye

    rmat = _toeplitz_circ(log_quadrature_weights(n))
    return rmat[..., None, None] * kern_log + (2.0 * np.pi / n) * smooth


def _kernel_from_w(w: np.ndarray, medium: Medium, pack_fn) -> np.ndarray:
    r = np.linalg.norm(w, axis=-1)
    pack = pack_fn(r, medium)
    what = w / r[..., None]
    eye = np.eye(2)
    return (pack["phi1"][..., None, None] * eye
            + pack["phi2"][..., None, None] * what[..., :, None] * what[..., None, :])


def curve_tangent_from(quad: Quadrature) -> np.ndarray:
    """Unit tangents recovered from the stored normals (nu = (t2, -t1))."""
    nu = quad.normals
    return np.stack([-nu[:, 1], nu[:, 0]], axis=-1)


def _neumann_self_block(curve: BoundaryCurve, quad: Quadrature, medium: Medium) -> np.ndarray:
    """Singular Nystrom block of (-I/2 + K') on one component."""
    n = quad.n_nodes
    x, s, nu, t = quad.points, quad.speeds, quad.normals, quad.t
    diag = _mask_diagonal(n)

    w = x[:, None, :] - x[None, :, :]
    w[diag] = (1.0, 0.0)
    nui = np.broadcast_to(nu[:, None, :], w.shape)
    full = traction_of_green(w, nui, medium, pack_fn=hankel_pack) * s[None, :, None, None]
    blog = traction_of_green(w, nui, medium, pack_fn=logcoef_pack) * s[None, :, None, None]

    lam_mat = cauchy_strength(medium)
    dt = t[:, None] - t[None, :]
    cot = np.where(diag, 0.0, 1.0 / np.tan(np.where(diag, 1.0, -dt) / 2.0))
    logterm = np.log(np.where(diag, 1.0, 4.0 * np.sin(dt / 2.0) ** 2))
    smooth = full - 0.5 * cot[..., None, None] * lam_mat - logterm[..., None, None] * blog
    blog[diag] = 0.0
    smooth[np.arange(n), np.arange(n)] = _neumann_smooth_diag(curve, quad, medium)

    rmat = _toeplitz_circ(log_quadrature_weights(n))
    hmat = _toeplitz_circ(cot_quadrature_weights(n))
    block = (0.5 * hmat[..., None, None] * lam_mat
             + rmat[..., None, None] * blog
             + (2.0 * np.pi / n) * smooth)
    block[diag] += -0.5 * np.eye(2)
    return block


def _neumann_smooth_diag(curve: BoundaryCurve, quad: Quadrature, medium: Medium) -> np.ndarray:
    """Diagonal of the smooth traction remainder by even-power Richardson extrapolation.

    The cot part is odd and cancels in the symmetric average, so only the log
    part is subtracted; the remainder is analytic with an even local expansion,
    and (64 g(e/4) - 20 g(e/2) + g(e)) / 45 removes the e^2 and e^4 terms.
    """
    t, x, nu = quad.t, quad.points, quad.normals
    eps0 = min(4e-3, 0.1 / medium.k_s)
    vals = []
    for eps in (eps0, eps0 / 2.0, eps0 / 4.0):
        acc = 0.0
        logterm = np.log(4.0 * np.sin(eps / 2.0) ** 2)
        for sgn in (+1.0, -1.0):
            xt = curve_point(curve, t + sgn * eps)
            st = np.linalg.norm(curve_tangent(curve, t + sgn * eps), axis=-1)
            w = x - xt
            fv = traction_of_green(w, nu, medium, pack_fn=hankel_pack) * st[:, None, None]
            bv = traction_of_green(w, nu, medium, pack_fn=logcoef_pack) * st[:, None, None]
            acc = acc + fv - logterm * bv
        vals.append(acc / 2.0)
    v1, v2, v3 = vals
    return (64.0 * v3 - 20.0 * v2 + v1) / 45.0


# ---------------------------------------------------------------------------
# System assembly and solve
# ---------------------------------------------------------------------------
@dataclass
class SystemMatrix:
    """Assembled Nystrom system with its quadrature and factorization cache."""

    matrix: np.ndarray            # (2N, 2N) complex, layout [[xx, xy],[yx, yy]]
    quadrature: Quadrature
    scene: Scene
    medium: Medium
    conditions: tuple[BoundaryCondition, ...]
    _lu: tuple | None = None

    @property
    def n_nodes(self) -> int:
        return self.quadrature.n_nodes

    def factorization(self):
        """LU with a one-norm condition estimate; raises NumericError near resonance."""
        if self._lu is None:
            anorm = np.linalg.norm(self.matrix, 1)
            lu, piv = sla.lu_factor(self.matrix, check_finite=False)
            gecon = _lapack.zgecon
            rcond, info = gecon(lu, anorm)
            if info != 0 or not np.isfinite(rcond) or rcond < RCOND_LIMIT:
                raise NumericError(
                    f"system is numerically singular (rcond={rcond:.2e}); "
                    "omega may be an interior resonance for this scene"
                )
            logger.debug("system factorized: N=%d rcond=%.2e", self.n_nodes, rcond)
            self._lu = (lu, piv)
        return self._lu

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        lu = self.factorization()
        return sla.lu_solve(lu, rhs, check_finite=False)


def _assemble(scene: Scene, medium: Medium, n_per_component: int,
              conditions: tuple[BoundaryCondition, ...]) -> SystemMatrix:
    quads = [boundary_quadrature(curve, n_per_component, component_id=i)
             for i, (curve, _) in enumerate(scene.components)]
    ncomp = len(quads)
    sizes = [q.n_nodes for q in quads]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    ntot = offsets[-1]
    blocks = np.zeros((ntot, ntot, 2, 2), dtype=complex)
    for i in range(ncomp):
        qi = quads[i]
        bc = conditions[i]
        for j in range(ncomp):
            qj = quads[j]
            si, sj = slice(offsets[i], offsets[i + 1]), slice(offsets[j], offsets[j + 1])
            if i == j:
                if bc is BoundaryCondition.DIRICHLET:
                    blocks[si, sj] = _dirichlet_self_block(qi, medium)
                else:
                    blocks[si, sj] = _neumann_self_block(scene.components[i][0], qi, medium)
            else:
                if bc is BoundaryCondition.DIRICHLET:
                    smooth = _green_block(qi.points, qj.points, medium, hankel_pack)
                else:
                    smooth = _traction_block(qi.points, qi.normals, qj.points, medium, hankel_pack)
                blocks[si, sj] = smooth * qj.weights[None, :, None, None]

    matrix = np.block([[blocks[..., 0, 0], blocks[..., 0, 1]],
                       [blocks[..., 1, 0], blocks[..., 1, 1]]])
    quad = Quadrature(*(np.concatenate([getattr(q, f) for q in quads])
                        for f in ("t", "points", "normals", "speeds", "weights", "component")))
    return SystemMatrix(matrix, quad, scene, medium, conditions)


def assemble_dirichlet_system(scene: Scene, medium: Medium, n_per_component: int) -> SystemMatrix:
    """Single-layer (S) system for an all-Dirichlet scene."""
    conds = tuple(BoundaryCondition.DIRICHLET for _ in scene.components)
    return _assemble(scene, medium, n_per_component, conds)


def assemble_neumann_system(scene: Scene, medium: Medium, n_per_component: int) -> SystemMatrix:
    """(-I/2 + K') system for an all-Neumann scene."""
    conds = tuple(BoundaryCondition.NEUMANN for _ in scene.components)
    return _assemble(scene, medium, n_per_component, conds)


def assemble_system(scene: Scene, medium: Medium, n_per_component: int) -> SystemMatrix:
    """System honoring each component's own boundary-condition tag."""
    conds = tuple(bc for _, bc in scene.components)
    return _assemble(scene, medium, n_per_component, conds)


@dataclass(frozen=True)
class Density:
    """Single-layer density: one complex 2-vector per quadrature node."""

    values: np.ndarray            # (N, 2) complex
    nodes: Quadrature


def _incident_rhs(system: SystemMatrix, incident: Incident) -> np.ndarray:
    """Stacked right-hand side [-f_x; -f_y] with f = u^in or T_nu u^in per row block."""
    quad = system.quadrature
    medium = system.medium
    rhs = np.zeros((quad.n_nodes, 2), dtype=complex)
    for i, bc in enumerate(system.conditions):
        sel = quad.component == i
        if bc is BoundaryCondition.DIRICHLET:
            rhs[sel] = -incident.field(quad.points[sel], medium)
        else:
            rhs[sel] = -incident.traction(quad.points[sel], quad.normals[sel], medium)
    return np.concatenate([rhs[:, 0], rhs[:, 1]])


def solve_density(system: SystemMatrix, incident: Incident) -> Density:
    """Solve for the single-layer density of one incident field."""
    sol = system.solve(_incident_rhs(system, incident))
    n = system.n_nodes
    return Density(np.stack([sol[:n], sol[n:]], axis=-1), system.quadrature)


def farfield_from_density(density: Density, medium: Medium, directions: np.ndarray
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid far fields (u_p, u_s) of a density at unit directions (L, 2)."""
    up, us = _farfield_batch(density.values[:, :, None], density.nodes, medium,
                             np.asarray(directions, float))
    return up[:, 0], us[:, 0]


def _farfield_batch(psi: np.ndarray, quad: Quadrature, medium: Medium,
                    directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """psi (N, 2, K) -> far fields (L, K) for both components."""
    y, w = quad.points, quad.weights
    phase_p = np.exp(-1j * medium.k_p * (directions @ y.T)) * w[None, :]   # (L, N)
    phase_s = np.exp(-1j * medium.k_s * (directions @ y.T)) * w[None, :]
    px, py = psi[:, 0, :], psi[:, 1, :]                                    # (N, K)
    gx_p, gy_p = phase_p @ px, phase_p @ py                                # (L, K)
    gx_s, gy_s = phase_s @ px, phase_s @ py
    d0, d1 = directions[:, 0:1], directions[:, 1:2]
    up = d0 * gx_p + d1 * gy_p
    us = -d1 * gx_s + d0 * gy_s                                            # xhat_perp = (-d1, d0)
    return up, us


# ---------------------------------------------------------------------------
# MSR matrix
# ---------------------------------------------------------------------------
def direction_grid(m: int) -> np.ndarray:
    """2m unit directions at theta_i = (i-1) pi / m, i = 1..2m."""
    theta = np.pi * np.arange(2 * m) / m
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


@dataclass
class MSRMatrix:
    """Multi-static far-field data over the equidistant direction grid.

    Blocks F_ab[j, i] = u_ab(xhat_j, d_i): received component a, incident
    mode b, row = observation, column = incidence.
    """

    m: int
    f_pp: np.ndarray
    f_ps: np.ndarray
    f_sp: np.ndarray
    f_ss: np.ndarray
    lam: float
    mu: float
    omega: float
    scene: str                    # canonical scene string
    bc: str
    delta: float = 0.0
    seed: int | None = None
    noise_norm: str = NOISE_NORM
    retrieval: str | None = None  # "R=.. nB=.. alpha=.." when rows were extrapolated

    def __post_init__(self) -> None:
        shape = (2 * self.m, 2 * self.m)
        for name in ("f_pp", "f_ps", "f_sp", "f_ss"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}")

    @property
    def medium(self) -> Medium:
        return Medium(self.lam, self.mu, self.omega)

    @property
    def scene_hash(self) -> str:
        import hashlib

        return hashlib.sha256(self.scene.encode()).hexdigest()

    def assembled(self) -> np.ndarray:
        """4m x 4m far-field operator layout [[pp, sp], [ps, ss]]."""
        return np.block([[self.f_pp, self.f_sp], [self.f_ps, self.f_ss]])

    def with_blocks_from(self, full: np.ndarray) -> "MSRMatrix":
        n = 2 * self.m
        return replace(self, f_pp=full[:n, :n], f_sp=full[:n, n:],
                       f_ps=full[n:, :n], f_ss=full[n:, n:])

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.assembled()))


def synthesize_msr(scene: Scene, medium: Medium, m: int, n_per_component: int) -> MSRMatrix:
    """Solve the forward problem for all 2m P and S incidences and fill the MSR."""
    if m < 4:
        raise ValueError(f"need m >= 4, got {m}")
    system = assemble_system(scene, medium, n_per_component)
    quad = system.quadrature
    dirs = direction_grid(m)
    n2m = 2 * m

    rhs = np.empty((2 * quad.n_nodes, 2 * n2m), dtype=complex)
    for i in range(n2m):
        for k, mode in enumerate((WaveMode.P, WaveMode.S)):
            wave = PlaneWave(mode, (float(dirs[i, 0]), float(dirs[i, 1])))
            rhs[:, 2 * i + k] = _incident_rhs(system, wave)
    sol = system.solve(rhs)
    n = quad.n_nodes
    psi = np.stack([sol[:n], sol[n:]], axis=1)                 # (N, 2, 2*2m)
    up, us = _farfield_batch(psi, quad, medium, dirs)          # (2m, 2*2m)

    f_pp, f_ps = up[:, 0::2], us[:, 0::2]
    f_sp, f_ss = up[:, 1::2], us[:, 1::2]
    bc_names = ",".join(bc.value for bc in system.conditions)
    return MSRMatrix(m, f_pp, f_ps, f_sp, f_ss,
                     medium.lam, medium.mu, medium.omega,
                     scene=scene.describe(), bc=bc_names)


def add_noise(msr: MSRMatrix, delta: float, seed: int) -> MSRMatrix:
    """F + delta ||F||_F (R1 + i R2)/||R1 + i R2||_F with Philox-seeded normals.

    R1 then R2 are drawn row-major over the assembled 4m x 4m matrix; normals
    come from the inverse CDF of Philox uniforms so the stream is reproducible
    across platforms and library versions.  The relative Frobenius perturbation
    equals delta exactly by construction.
    """
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if delta == 0.0:
        return replace(msr, delta=0.0, seed=seed)
    n = 4 * msr.m
    gen = np.random.Generator(np.random.Philox(seed))
    u = gen.random(2 * n * n)
    normals = ndtri(u)
    r1 = normals[: n * n].reshape(n, n)
    r2 = normals[n * n:].reshape(n, n)
    noise = r1 + 1j * r2
    full = msr.assembled()
    fullnoisy = full + delta * np.linalg.norm(full) * noise / np.linalg.norm(noise)
    out = msr.with_blocks_from(fullnoisy)
    out.delta = delta
    out.seed = seed
    return out


# ---------------------------------------------------------------------------
# MSR/1 persistence
# ---------------------------------------------------------------------------
class MsrFormatError(ValueError):
    """Malformed MSR/1 file."""


class MsrVersionError(MsrFormatError):
    """Unsupported MSR format version."""


class MsrDimensionError(MsrFormatError):
    """Header dimensions disagree with the data rows."""


_HEADER_KEYS = ("version", "m", "lambda", "mu", "omega", "scene", "bc", "delta", "seed", "norm")


def save_msr(msr: MSRMatrix, path) -> None:
    """Write the MSR/1 text format: #key=value headers, then 4m rows of re/im pairs."""
    full = msr.assembled()
    n = 4 * msr.m
    with open(path, "w") as fh:
        fh.write(f"#version={MSR_FORMAT_VERSION}\n")
        fh.write(f"#m={msr.m}\n")
        fh.write(f"#lambda={msr.lam!r}\n")
        fh.write(f"#mu={msr.mu!r}\n")
        fh.write(f"#omega={msr.omega!r}\n")
        fh.write(f"#scene={msr.scene}\n")
        fh.write(f"#bc={msr.bc}\n")
        fh.write(f"#delta={msr.delta!r}\n")
        fh.write(f"#seed={'none' if msr.seed is None else msr.seed}\n")
        fh.write(f"#norm={msr.noise_norm}\n")
        if msr.retrieval is not None:
            fh.write(f"#retrieval={msr.retrieval}\n")
        for j in range(n):
            row = full[j]
            fh.write(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row))
            fh.write("\n")


def load_msr(path) -> MSRMatrix:
    """Read an MSR/1 file; raises MsrVersionError / MsrDimensionError / MsrFormatError."""
    header: dict[str, str] = {}
    rows: list[np.ndarray] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if not sep:
                    raise MsrFormatError(f"line {lineno}: malformed header {line!r}")
                header[key] = value
                continue
            parts = line.split(" ")
            if len(parts) % 2 != 0:
                raise MsrFormatError(f"line {lineno}: odd number of fields")
            try:
                nums = np.array([float(p) for p in parts])
            except ValueError:
                raise MsrFormatError(f"line {lineno}: non-numeric entry") from None
            rows.append(nums[0::2] + 1j * nums[1::2])

    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise MsrFormatError(f"missing header keys: {missing}")
    if header["version"] != MSR_FORMAT_VERSION:
        raise MsrVersionError(f"unsupported version {header['version']!r}")
    try:
        m = int(header["m"])
    except ValueError:
        raise MsrFormatError(f"bad m header {header['m']!r}") from None
    n = 4 * m
    if len(rows) != n or any(len(r) != n for r in rows):
        raise MsrDimensionError(
            f"expected {n} rows of {n} entries for m={m}, got {len(rows)} rows "
            f"of lengths {sorted({len(r) for r in rows})}"
        )
    full = np.vstack(rows)
    seed = None if header["seed"] == "none" else int(header["seed"])
    base = MSRMatrix(m, np.zeros((2 * m, 2 * m), complex), np.zeros((2 * m, 2 * m), complex),
                     np.zeros((2 * m, 2 * m), complex), np.zeros((2 * m, 2 * m), complex),
                     float(header["lambda"]), float(header["mu"]), float(header["omega"]),
                     scene=header["scene"], bc=header["bc"], delta=float(header["delta"]),
                     seed=seed, noise_norm=header["norm"],
                     retrieval=header.get("retrieval"))
    return base.with_blocks_from(full)
