"""Experiment harness: config grammar, presets, pipeline runner, artifact emission.

Config files are flat ``key = value`` text with ``#`` comments; unknown keys
are rejected and every default is echoed back by :func:`emit_config`.  The
canonical grammar (all keys optional except none; defaults in parentheses):

    scene    = kite@(0.0,0.0)*1.0 + peanut@(3.0,-3.0)*1.0     (kite@(0,0)*1)
    bc       = dirichlet | neumann                            (dirichlet)
    lambda   = 1.0
    mu       = 1.0
    omega    = 25.132741228718345                             (8 pi)
    m        = 256          # 2m incident/observation directions
    n        = 512          # quadrature nodes per boundary component
    grid     = -6.0 6.0 -6.0 6.0 321 321                      (x0 x1 y0 y1 nx ny)
    delta    = 0.0          # relative noise level
    seed     = 1
    kinds    = ss pp ff
    q        = 1.0 0.0      # polarization (unit vector)
    observed = full | arcs [a,b) ... | indices i1 i2 ...      (full, 1-based indices)
    incident = full | arcs [a,b) ... | indices i1 i2 ...      (full)
    retrieve = off | R=5.0 nB=256 alpha=auto                  (off)
    out      = out

Pipeline per config: synthesize MSR -> add noise -> (mask -> reciprocity fill
-> Tikhonov retrieval) -> indicators -> emit CSV (raw values), PGM (squared,
normalized) and a JSON manifest listing every artifact with its sha256.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .aperture import ApertureMask, apply_mask, limited_indicator, reciprocity_fill, tikhonov_retrieve
from .elastic import Medium
from .forward import MSRMatrix, add_noise, save_msr, synthesize_msr
from .geometry import BoundaryCondition, BoundaryCurve, BoundaryKind, Scene, scene_from_string
from .indicators import IndicatorField, IndicatorKind, SamplingGrid, indicator_field, normalize_field

logger = logging.getLogger(__name__)

ENV_OUT = "ELASTOSCAN_OUT"
ENV_THREADS = "ELASTOSCAN_THREADS"

DEFAULT_OMEGA = 8.0 * np.pi
DEFAULT_GRID = (-6.0, 6.0, -6.0, 6.0, 321, 321)
# m=64 would put the direction grid below the aliasing bound 2m >= k_s (|z|max + R)
# for the default omega = 8 pi on [-6,6]^2, contaminating the outer field
SMALL_M, SMALL_N, SMALL_GRID_PTS = 128, 256, 161

class ConfigError(Exception):
    """Base class for configuration problems (CLI exit code 2)."""

class ConfigSyntaxError(ConfigError):
    pass

class ConfigKeyError(ConfigError):
    pass

class ConfigValueError(ConfigError):
    pass

@dataclass(frozen=True)
class MaskSpec:
    """Either radian arcs [a, b) or an explicit 1-based index list."""

    arcs: tuple[tuple[float, float], ...] | None = None
    indices: tuple[int, ...] | None = None

    def to_indices(self, m: int) -> frozenset[int]:
        if self.indices is not None:
            return frozenset(i - 1 for i in self.indices)
        return ApertureMask.from_arcs(m, self.arcs, None).observed

@dataclass(frozen=True)
class RetrieveSpec:
    radius: float = 5.0
    n_boundary: int = 256
    alpha: float | None = None    # None = auto default

@dataclass(frozen=True)
class ExperimentConfig:
    scene: tuple[tuple[BoundaryKind, tuple[float, float], float], ...] = (
        (BoundaryKind.KITE, (0.0, 0.0), 1.0),)
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    lam: float = 1.0
    mu: float = 1.0
    omega: float = DEFAULT_OMEGA
    m: int = 256
    n: int = 512
    grid: tuple[float, float, float, float, int, int] = DEFAULT_GRID
    delta: float = 0.0
    seed: int = 1
    kinds: tuple[IndicatorKind, ...] = (IndicatorKind.SS, IndicatorKind.PP, IndicatorKind.FF)
    q: tuple[float, float] = (1.0, 0.0)
    observed: MaskSpec | None = None
    incident: MaskSpec | None = None
    retrieve: RetrieveSpec | None = None
    out: str = "out"

    def scene_object(self) -> Scene:
        return Scene(tuple((BoundaryCurve(kind, center, rho), self.bc)
                           for kind, center, rho in self.scene))

    def medium(self) -> Medium:
        return Medium(self.lam, self.mu, self.omega)

    def sampling_grid(self) -> SamplingGrid:
        return SamplingGrid(*self.grid)

    def validate(self) -> None:
        try:
            self.scene_object()
            self.medium()
            self.sampling_grid()
        except ValueError as exc:
            raise ConfigValueError(str(exc)) from None
        if self.m < 4:
            raise ConfigValueError(f"need m >= 4, got {self.m}")
        if self.n < 64:
            raise ConfigValueError(f"need n >= 64, got {self.n}")
        if self.delta < 0:
            raise ConfigValueError(f"need delta >= 0, got {self.delta}")
        if abs(np.hypot(*self.q) - 1.0) > 1e-12:
            raise ConfigValueError(f"polarization must be unit, got {self.q}")
        if self.retrieve is not None and self.retrieve.alpha is not None \
                and not self.retrieve.alpha > 0:
            raise ConfigValueError("retrieval alpha must be positive")

_CONFIG_KEYS = ("scene", "bc", "lambda", "mu", "omega", "m", "n", "grid", "delta",
                "seed", "kinds", "q", "observed", "incident", "retrieve", "out")

def _parse_scene(value: str, lineno: int):
    try:
        scene = scene_from_string(value)
    except ValueError as exc:
        raise ConfigValueError(f"line {lineno}: {exc}") from None
    return tuple((c.kind, c.center, c.rho) for c, _ in scene.components)

def _parse_mask(value: str, lineno: int) -> MaskSpec | None:
    value = value.strip()
    if value == "full":
        return None
    if value.startswith("indices"):
        try:
            idx = tuple(int(tok) for tok in value[len("indices"):].split())
        except ValueError:
            raise ConfigSyntaxError(f"line {lineno}: bad index list {value!r}") from None
        if not idx or min(idx) < 1:
            raise ConfigValueError(f"line {lineno}: indices are 1-based and nonempty")
        return MaskSpec(indices=idx)
    if value.startswith("arcs"):
        arcs = []
        for tok in value[len("arcs"):].split():
            if not (tok.startswith("[") and tok.endswith(")")):
                raise ConfigSyntaxError(f"line {lineno}: arc must look like [a,b), got {tok!r}")
            a_s, _, b_s = tok[1:-1].partition(",")
            try:
                arcs.append((float(a_s), float(b_s)))
            except ValueError:
                raise ConfigSyntaxError(f"line {lineno}: bad arc bounds {tok!r}") from None
        if not arcs:
            raise ConfigValueError(f"line {lineno}: empty arc list")
        return MaskSpec(arcs=tuple(arcs))
    raise ConfigSyntaxError(f"line {lineno}: expected full | arcs ... | indices ..., got {value!r}")

def parse_config(text: str) -> ExperimentConfig:
    """Parse the canonical config grammar; strict about keys, values, invariants."""
    cfg = ExperimentConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigSyntaxError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigKeyError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigSyntaxError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            if key == "scene":
                cfg = replace(cfg, scene=_parse_scene(value, lineno))
            elif key == "bc":
                cfg = replace(cfg, bc=BoundaryCondition(value))
            elif key == "lambda":
                cfg = replace(cfg, lam=float(value))
            elif key == "mu":
                cfg = replace(cfg, mu=float(value))
            elif key == "omega":
                cfg = replace(cfg, omega=float(value))
            elif key == "m":
                cfg = replace(cfg, m=int(value))
            elif key == "n":
                cfg = replace(cfg, n=int(value))
            elif key == "grid":
                parts = value.split()
                if len(parts) != 6:
                    raise ConfigSyntaxError(
                        f"line {lineno}: grid needs 'x0 x1 y0 y1 nx ny', got {value!r}")
                cfg = replace(cfg, grid=(float(parts[0]), float(parts[1]), float(parts[2]),
                                         float(parts[3]), int(parts[4]), int(parts[5])))
            elif key == "delta":
                cfg = replace(cfg, delta=float(value))
            elif key == "seed":
                cfg = replace(cfg, seed=int(value))
            elif key == "kinds":
                cfg = replace(cfg, kinds=tuple(IndicatorKind(tok) for tok in value.split()))
            elif key == "q":
                qx, qy = value.split()
                cfg = replace(cfg, q=(float(qx), float(qy)))
            elif key == "observed":
                cfg = replace(cfg, observed=_parse_mask(value, lineno))
            elif key == "incident":
                cfg = replace(cfg, incident=_parse_mask(value, lineno))
            elif key == "retrieve":
                cfg = replace(cfg, retrieve=_parse_retrieve(value, lineno))
            elif key == "out":
                cfg = replace(cfg, out=value)
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigValueError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    cfg.validate()
    return cfg

def _parse_retrieve(value: str, lineno: int) -> RetrieveSpec | None:
    if value == "off":
        return None
    spec = RetrieveSpec()
    for tok in value.split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise ConfigSyntaxError(f"line {lineno}: retrieve token {tok!r}")
        if key == "R":
            spec = replace(spec, radius=float(val))
        elif key == "nB":
            spec = replace(spec, n_boundary=int(val))
        elif key == "alpha":
            spec = replace(spec, alpha=None if val == "auto" else float(val))
        else:
            raise ConfigKeyError(f"line {lineno}: unknown retrieve key {key!r}")
    return spec

def _emit_mask(spec: MaskSpec | None) -> str:
    if spec is None:
        return "full"
    if spec.indices is not None:
        return "indices " + " ".join(str(i) for i in spec.indices)
    return "arcs " + " ".join(f"[{a!r},{b!r})" for a, b in spec.arcs)

def emit_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse(emit(cfg)) == cfg."""
    scene_s = " + ".join(f"{kind.value}@({c[0]!r},{c[1]!r})*{rho!r}"
                         for kind, c, rho in cfg.scene)
    if cfg.retrieve is None:
        retrieve_s = "off"
    else:
        alpha_s = "auto" if cfg.retrieve.alpha is None else repr(cfg.retrieve.alpha)
        retrieve_s = f"R={cfg.retrieve.radius!r} nB={cfg.retrieve.n_boundary} alpha={alpha_s}"
    lines = [
        f"scene = {scene_s}",
        f"bc = {cfg.bc.value}",
        f"lambda = {cfg.lam!r}",
        f"mu = {cfg.mu!r}",
        f"omega = {cfg.omega!r}",
        f"m = {cfg.m}",
        f"n = {cfg.n}",
        "grid = " + " ".join(repr(v) if i < 4 else str(v) for i, v in enumerate(cfg.grid)),
        f"delta = {cfg.delta!r}",
        f"seed = {cfg.seed}",
        "kinds = " + " ".join(k.value for k in cfg.kinds),
        f"q = {cfg.q[0]!r} {cfg.q[1]!r}",
        f"observed = {_emit_mask(cfg.observed)}",
        f"incident = {_emit_mask(cfg.incident)}",
        f"retrieve = {retrieve_s}",
        f"out = {cfg.out}",
    ]
    return "\n".join(lines) + "\n"

# ---------------------------------------------------------------------------
# Heatmap rendering
# ---------------------------------------------------------------------------
def render_heatmap(fld: IndicatorField) -> bytes:
    """16-bit binary PGM (P5) of the squared, max-normalized field.

    Image row 0 is the top of the y-range; the gray map is linear.
    """
    vmax = float(fld.values.max())
    if not vmax > 0 or not np.isfinite(vmax):
        raise ValueError("cannot render a degenerate (all-zero or non-finite) field")
    norm = (fld.values / vmax) ** 2
    pix = np.flipud(np.round(norm * 65535.0).astype(np.uint16))
    header = f"P5\n{fld.grid.nx} {fld.grid.ny}\n65535\n".encode()
    return header + pix.astype(">u2").tobytes()

# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------
def _scene1(kind: BoundaryKind, center=(0.0, 0.0), rho=1.0):
    return ((kind, center, rho),)

PRESET_BUILDERS = {}

def _preset(name, doc):
    def deco(fn):
        fn.__doc__ = doc
        PRESET_BUILDERS[name] = fn
        return fn
    return deco

@_preset("dirichlet-kite", "rigid kite at the origin, 30% noise")
def _p_dkite():
    return ExperimentConfig(scene=_scene1(BoundaryKind.KITE), delta=0.3)

@_preset("dirichlet-pear", "rigid pear at the origin, 30% noise")
def _p_dpear():
    return ExperimentConfig(scene=_scene1(BoundaryKind.PEAR), delta=0.3)

@_preset("neumann-kite", "kite cavity at the origin, 30% noise")
def _p_nkite():
    return ExperimentConfig(scene=_scene1(BoundaryKind.KITE),
                            bc=BoundaryCondition.NEUMANN, delta=0.3)

@_preset("neumann-pear", "pear cavity at the origin, 30% noise")
def _p_npear():
    return ExperimentConfig(scene=_scene1(BoundaryKind.PEAR),
                            bc=BoundaryCondition.NEUMANN, delta=0.3)

@_preset("multiple", "rigid kite at (-3,3) + peanut at (3,-3), 30% noise, 641x641 grid")
def _p_multiple():
    return ExperimentConfig(
        scene=((BoundaryKind.KITE, (-3.0, 3.0), 1.0), (BoundaryKind.PEANUT, (3.0, -3.0), 1.0)),
        delta=0.3, grid=(-6.0, 6.0, -6.0, 6.0, 641, 641))

@_preset("multiscalar", "big rigid pear (rho=2) + mini disk (rho=0.1) at (4,4), 30% noise")
def _p_multiscalar():
    return ExperimentConfig(
        scene=((BoundaryKind.PEAR, (0.0, 0.0), 2.0), (BoundaryKind.CIRCLE, (4.0, 4.0), 0.1)),
        delta=0.3)

@_preset("resolutionlimit", "big disk (rho=3) at (-2,0) + kite at (2.75,0), 30% noise, 641x641 grid")
def _p_resolution():
    return ExperimentConfig(
        scene=((BoundaryKind.CIRCLE, (-2.0, 0.0), 3.0), (BoundaryKind.KITE, (2.75, 0.0), 1.0)),
        delta=0.3, grid=(-6.0, 6.0, -6.0, 6.0, 641, 641))

@_preset("limited-quarters", "kite, noise-free, four quarter observation arcs")
def _p_quarters():
    return ExperimentConfig(scene=_scene1(BoundaryKind.KITE), delta=0.0)

@_preset("limited-retrieval", "kite, omega=4pi, 10% noise, observed [0,pi/2), retrieval R=5")
def _p_retrieval():
    return ExperimentConfig(
        scene=_scene1(BoundaryKind.KITE), omega=4.0 * np.pi, delta=0.1,
        observed=MaskSpec(arcs=((0.0, np.pi / 2.0),)),
        retrieve=RetrieveSpec(radius=5.0, n_boundary=256, alpha=None))

@_preset("few-incident", "kite, 10% noise, 1/2/4/8/16 incident shear directions, SS indicator")
def _p_few():
    # q = (0,1): the default (1,0) polarization is degenerate for shear
    # incidence along the x axis (q . d_perp = 0 kills the test function)
    return ExperimentConfig(scene=_scene1(BoundaryKind.KITE), delta=0.1,
                            kinds=(IndicatorKind.SS,), q=(0.0, 1.0))

FEW_INCIDENT_COUNTS = (1, 2, 4, 8, 16)
QUARTER_ARCS = ((0.0, np.pi / 2), (np.pi / 2, np.pi), (np.pi, 3 * np.pi / 2),
                (3 * np.pi / 2, 2 * np.pi))

def preset_names() -> list[str]:
    return sorted(PRESET_BUILDERS)

def build_preset(name: str, small: bool = False) -> ExperimentConfig:
    if name not in PRESET_BUILDERS:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    cfg = PRESET_BUILDERS[name]()
    if small:
        g = cfg.grid
        cfg = replace(cfg, m=SMALL_M, n=SMALL_N,
                      grid=(g[0], g[1], g[2], g[3], SMALL_GRID_PTS, SMALL_GRID_PTS))
    return cfg

# ---------------------------------------------------------------------------
# Pipeline runner
# ---------------------------------------------------------------------------
@dataclass
class RunManifest:
    config_text: str
    seed: int
    threads: int
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    env_overrides: dict = field(default_factory=dict)

    def add_file(self, path: str) -> None:
        with open(path, "rb") as fh:
            data = fh.read()
        self.files.append({"path": os.path.basename(path),
                           "sha256": hashlib.sha256(data).hexdigest(),
                           "bytes": len(data)})

    def to_json(self) -> str:
        return json.dumps({"config": self.config_text, "seed": self.seed,
                           "threads": self.threads, "timings": self.timings,
                           "files": self.files, "env_overrides": self.env_overrides},
                          indent=2, sort_keys=True)

class _Emitter:
    """Tracks written files so a failed run can clean up after itself."""

    def __init__(self, outdir: str, manifest: RunManifest):
        self.outdir = outdir
        self.manifest = manifest
        self.written: list[str] = []
        os.makedirs(outdir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.outdir, name)

    def write_bytes(self, name: str, data: bytes) -> None:
        p = self.path(name)
        with open(p, "wb") as fh:
            fh.write(data)
        self.written.append(p)
        self.manifest.add_file(p)

    def write_msr(self, name: str, msr: MSRMatrix) -> None:
        p = self.path(name)
        save_msr(msr, p)
        self.written.append(p)
        self.manifest.add_file(p)

    def write_field(self, label: str, fld: IndicatorField) -> None:
        csv_path = self.path(f"{label}.csv")
        fld.to_csv(csv_path)
        self.written.append(csv_path)
        self.manifest.add_file(csv_path)
        self.write_bytes(f"{label}.pgm", render_heatmap(fld))

    def cleanup(self) -> None:
        for p in self.written:
            try:
                os.remove(p)
            except OSError:
                pass

def _emit_fields(emitter: _Emitter, label: str, fields: dict) -> None:
    for kind, fld in fields.items():
        emitter.write_field(f"{label}_{kind.value}", fld)

def _compute_fields(kinds, compute_one, threads: int) -> dict:
    if threads > 1 and len(kinds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {k: pool.submit(compute_one, k) for k in kinds}
            return {k: f.result() for k, f in futs.items()}
    return {k: compute_one(k) for k in kinds}

def run_experiment(config: ExperimentConfig, label: str = "run", outdir: str | None = None,
                   threads: int = 1, manifest: RunManifest | None = None) -> RunManifest:
    """Synthesize, perturb, (mask/fill/retrieve), indicate, and emit artifacts.

    Deterministic for a fixed config: the only randomness is the seeded noise.
    On failure, files written so far are removed.
    """
    config.validate()
    outdir = outdir or config.out
    if manifest is None:
        manifest = RunManifest(config_text=emit_config(config), seed=config.seed,
                               threads=threads)
    emitter = _Emitter(outdir, manifest)
    try:
        t0 = time.perf_counter()
        scene = config.scene_object()
        medium = config.medium()
        msr = synthesize_msr(scene, medium, config.m, config.n)
        manifest.timings[f"{label}.synth_s"] = round(time.perf_counter() - t0, 3)

        if config.delta > 0:
            t0 = time.perf_counter()
            msr = add_noise(msr, config.delta, config.seed)
            manifest.timings[f"{label}.noise_s"] = round(time.perf_counter() - t0, 3)
        emitter.write_msr(f"{label}.msr", msr)

        grid = config.sampling_grid()
        t0 = time.perf_counter()
        if config.observed is None and config.incident is None:
            fields = _compute_fields(
                config.kinds, lambda k: indicator_field(msr, grid, k, config.q), threads)
            _emit_fields(emitter, label, fields)
        else:
            mask = ApertureMask(
                observed=(config.observed.to_indices(config.m) if config.observed
                          else frozenset(range(2 * config.m))),
                incident=(config.incident.to_indices(config.m) if config.incident
                          else frozenset(range(2 * config.m))))
            masked = apply_mask(msr, mask)
            fields = _compute_fields(
                config.kinds, lambda k: limited_indicator(masked, grid, config.q, k), threads)
            _emit_fields(emitter, f"{label}_limit", fields)
            if config.retrieve is not None:
                filled = reciprocity_fill(masked)
                retrieved = tikhonov_retrieve(filled, config.retrieve.radius,
                                              config.retrieve.n_boundary,
                                              config.retrieve.alpha)
                emitter.write_msr(f"{label}_retrieved.msr", retrieved)
                fields = _compute_fields(
                    config.kinds, lambda k: indicator_field(retrieved, grid, k, config.q),
                    threads)
                _emit_fields(emitter, f"{label}_retr", fields)
        manifest.timings[f"{label}.indicate_s"] = round(time.perf_counter() - t0, 3)
        return manifest
    except Exception:
        emitter.cleanup()
        raise

def run_preset(name: str, outdir: str, small: bool = False, threads: int = 1,
               seed: int | None = None) -> RunManifest:
    """Run a named preset (its variants included) and write manifest.json."""
    cfg = build_preset(name, small=small)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    cfg = replace(cfg, out=outdir)
    manifest = RunManifest(config_text=emit_config(cfg), seed=cfg.seed, threads=threads)
    manifest.env_overrides = {k: os.environ[k] for k in (ENV_OUT, ENV_THREADS)
                              if k in os.environ}

    if name == "limited-quarters":
        for idx, arc in enumerate(QUARTER_ARCS, start=1):
            sub = replace(cfg, observed=MaskSpec(arcs=(arc,)))
            run_experiment(sub, label=f"{name}_q{idx}", outdir=outdir, threads=threads,
                           manifest=manifest)
    elif name == "few-incident":
        for count in FEW_INCIDENT_COUNTS:
            step = (2 * cfg.m) // count
            idx = tuple(1 + j * step for j in range(count))
            sub = replace(cfg, incident=MaskSpec(indices=idx))
            run_experiment(sub, label=f"{name}_n{count}", outdir=outdir, threads=threads,
                           manifest=manifest)
    else:
        run_experiment(cfg, label=name, outdir=outdir, threads=threads, manifest=manifest)

    mpath = os.path.join(outdir, "manifest.json")
    with open(mpath, "w") as fh:
        fh.write(manifest.to_json())
    return manifest
