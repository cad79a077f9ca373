"""Benchmark pipeline: encode/decode, footprint-matched sweeps and timing runs.

The direct route factors the image itself at rank k; the patched route
reorders the image into its patch-column matrix, factors that at the largest
rank khat whose footprint fits the direct rank-k budget, and inverts the
reordering.  Reconstructions are clamped to [0, 1] before metrics, matching
how a display treats out-of-range intensities.
"""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .atlas import AtlasSpec, atlas_sidecar, render_atlas, save_ppm
from .factor import (Factorization, NmfConfig, nmf_factor, read_factorization,
                     svd_truncate, write_factorization)
from .footprint import footprint, select_khat
from .image import ImageMatrix, load_pgm, synth_image
from .metrics import SsimConfig, quality_report
from .reorder import ReorderedMatrix, inverse_reorder, max_rank, reorder

log = logging.getLogger(__name__)

SWEEP_CSV_HEADER = "image,backend,mode,k,p,khat,footprint,mse,psnr_db,mssim,wall_time_ms,nmf_iters,seed"
TIMING_CSV_HEADER = "n,m,p,k,t_direct_ms,t_patched_ms,t_reorder_ms,measured_ratio,predicted_ratio"

# every sweep renders one dictionary atlas per (image, backend) at the rank
# matching this budget and patch size
ATLAS_BUDGET_K = 32
ATLAS_PATCH = 16

_GEOMETRY_SIDECAR = "geometry.txt"


@dataclass(frozen=True)
class SweepConfig:
    """One sweep run: images, backends and the parameter grids."""

    images: tuple[tuple[str, str], ...]
    backends: tuple[str, ...] = ("svd", "nmf")
    k_values: tuple[int, ...] = tuple(range(2, 51, 2))
    p_values: tuple[int, ...] = (4, 8, 16, 32, 64)
    nmf: NmfConfig = NmfConfig()
    ssim: SsimConfig = SsimConfig()
    output_dir: str = "sweep-out"
    repeat: int = 1
    record_wall_time: bool = True

    def __post_init__(self):
        if not self.k_values or not self.p_values:
            raise ValueError("k_values and p_values must be non-empty")
        if min(self.k_values) < 1 or min(self.p_values) < 1:
            raise ValueError("k_values and p_values must be positive")
        for backend in self.backends:
            if backend not in ("svd", "nmf"):
                raise ValueError(f"unknown backend {backend!r}")
        if self.repeat < 1:
            raise ValueError(f"repeat must be >= 1, got {self.repeat}")
        for name, _ in self.images:
            if "," in name or not name:
                raise ValueError(f"image name {name!r} must be non-empty and comma-free")


@dataclass(frozen=True)
class SweepRecord:
    """One (image, backend, mode, rank, patch) experiment cell."""

    image: str
    backend: str
    mode: str              # "direct" or "patched"
    k: int
    p: int                 # 0 for direct
    khat: int              # equals k for direct
    footprint: int
    mse: float
    psnr_db: float
    mssim: float
    wall_time_ms: float
    nmf_iters: int         # 0 for svd
    seed: int

    def csv_row(self) -> str:
        return (f"{self.image},{self.backend},{self.mode},{self.k},{self.p},"
                f"{self.khat},{self.footprint},{self.mse:.6g},{self.psnr_db:.6g},"
                f"{self.mssim:.6g},{self.wall_time_ms:.3f},{self.nmf_iters},{self.seed}")


@dataclass(frozen=True)
class TimingRecord:
    rows: int
    cols: int
    p: int
    k: int
    t_direct_ms: float
    t_patched_ms: float
    t_reorder_ms: float
    measured_ratio: float
    predicted_ratio: float

    def csv_row(self) -> str:
        return (f"{self.rows},{self.cols},{self.p},{self.k},{self.t_direct_ms:.3f},"
                f"{self.t_patched_ms:.3f},{self.t_reorder_ms:.3f},"
                f"{self.measured_ratio:.6g},{self.predicted_ratio:.6g}")


def load_image_source(source: str) -> ImageMatrix:
    """Resolve an image source: a PGM path or "synth:<kind>:<rows>:<cols>[:<seed>]"."""
    if source.startswith("synth:"):
        parts = source.split(":")
        if len(parts) not in (4, 5):
            raise ValueError(
                f"bad synthetic spec {source!r}; want synth:<kind>:<rows>:<cols>[:<seed>]"
            )
        kind = parts[1]
        rows, cols = int(parts[2]), int(parts[3])
        seed = int(parts[4]) if len(parts) == 5 else 0
        return synth_image(kind, rows, cols, seed)
    return load_pgm(Path(source).read_bytes())


def _factor(matrix, backend, rank, nmf_cfg):
    if backend == "svd":
        return svd_truncate(matrix, rank)
    return nmf_factor(matrix, rank, nmf_cfg)


def encode_decode_direct(img: ImageMatrix, backend: str, k: int,
                         nmf: NmfConfig | None = None,
                         ssim: SsimConfig | None = None,
                         image_name: str = ""):
    """Factor the image itself at rank k and reconstruct; returns (image, record)."""
    nmf_cfg = nmf or NmfConfig()
    t0 = time.perf_counter()
    fact = _factor(img.pixels, backend, k, nmf_cfg)
    recon = ImageMatrix(np.clip(fact.reconstruct(), 0.0, 1.0))
    wall_ms = (time.perf_counter() - t0) * 1e3
    q = quality_report(img, recon, ssim)
    record = SweepRecord(
        image=image_name, backend=backend, mode="direct", k=k, p=0, khat=k,
        footprint=footprint("direct", img.rows, img.cols, k=k),
        mse=q.mse, psnr_db=q.psnr, mssim=q.mssim, wall_time_ms=wall_ms,
        nmf_iters=int(fact.objective_trace.size),
        seed=nmf_cfg.seed if backend == "nmf" else 0,
    )
    return recon, record


def encode_decode_patched(img: ImageMatrix, backend: str, khat: int, p: int,
                          nmf: NmfConfig | None = None,
                          ssim: SsimConfig | None = None,
                          image_name: str = "", budget_k: int | None = None):
    """Reorder, factor the patch-column matrix at rank khat, invert the reordering.

    budget_k is the direct-route rank whose footprint the patched encoding was
    matched against; it defaults to khat and only labels the record.
    """
    nmf_cfg = nmf or NmfConfig()
    t0 = time.perf_counter()
    rm = reorder(img, p)
    if khat > max_rank(rm):
        raise ValueError(f"rank {khat} exceeds maximal rank {max_rank(rm)} at patch size {p}")
    fact = _factor(rm.data, backend, khat, nmf_cfg)
    product = np.clip(fact.reconstruct(), 0.0, 1.0)
    recon = inverse_reorder(ReorderedMatrix(product, p, img.rows, img.cols))
    wall_ms = (time.perf_counter() - t0) * 1e3
    q = quality_report(img, recon, ssim)
    record = SweepRecord(
        image=image_name, backend=backend, mode="patched",
        k=budget_k if budget_k is not None else khat, p=p, khat=khat,
        footprint=footprint("patched", img.rows, img.cols, khat=khat, p=p),
        mse=q.mse, psnr_db=q.psnr, mssim=q.mssim, wall_time_ms=wall_ms,
        nmf_iters=int(fact.objective_trace.size),
        seed=nmf_cfg.seed if backend == "nmf" else 0,
    )
    return recon, record


def _write_sweep_atlas(out_dir, name, backend, img, nmf_cfg):
    n, m = img.rows, img.cols
    if n % ATLAS_PATCH or m % ATLAS_PATCH:
        log.info("image %s: no atlas, patch size %d infeasible", name, ATLAS_PATCH)
        return
    khat = select_khat(n, m, ATLAS_PATCH, ATLAS_BUDGET_K)
    spec = AtlasSpec(patch_size=ATLAS_PATCH)
    if not 1 <= khat <= spec.grid_rows * spec.grid_cols:
        log.info("image %s: no atlas, rank %d outside grid capacity", name, khat)
        return
    fact = _factor(reorder(img, ATLAS_PATCH).data, backend, khat, nmf_cfg)
    stem = f"atlas_{name}_{backend}"
    (out_dir / f"{stem}.ppm").write_bytes(save_ppm(render_atlas(fact, spec)))
    (out_dir / f"{stem}.txt").write_text(atlas_sidecar(fact), encoding="ascii")


def run_sweep(cfg: SweepConfig) -> list[SweepRecord]:
    """Run the full footprint-matched sweep; writes sweep.csv and atlas PPMs.

    For every (image, backend, k): one direct record, then one patched record
    per feasible patch size whose selected rank is nonzero.  Rows are sorted
    by (image, backend, mode, k, p, seed) and the run is deterministic given
    the seeds (wall_time_ms excepted; see record_wall_time).
    """
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records: list[SweepRecord] = []
    for name, source in cfg.images:
        try:
            img = load_image_source(source)
        except (OSError, ValueError) as exc:
            log.warning("skipping image %s (%s): %s", name, source, exc)
            continue
        n, m = img.rows, img.cols
        feasible_ps = []
        for p in cfg.p_values:
            if n % p or m % p:
                log.info("image %s: patch size %d does not divide %dx%d, skipped",
                         name, p, n, m)
            else:
                feasible_ps.append(p)
        for backend in cfg.backends:
            seeds = ([cfg.nmf.seed + r for r in range(cfg.repeat)]
                     if backend == "nmf" else [cfg.nmf.seed])
            for k in cfg.k_values:
                if k > min(n, m):
                    log.info("image %s: rank %d exceeds min dimension, skipped", name, k)
                    continue
                for seed in seeds:
                    nmf_cfg = replace(cfg.nmf, seed=seed)
                    _, rec = encode_decode_direct(img, backend, k, nmf=nmf_cfg,
                                                  ssim=cfg.ssim, image_name=name)
                    records.append(rec)
                    for p in feasible_ps:
                        khat = select_khat(n, m, p, k)
                        if khat == 0:
                            continue
                        _, rec = encode_decode_patched(img, backend, khat, p,
                                                       nmf=nmf_cfg, ssim=cfg.ssim,
                                                       image_name=name, budget_k=k)
                        records.append(rec)
            _write_sweep_atlas(out_dir, name, backend, img, cfg.nmf)
    records.sort(key=lambda r: (r.image, r.backend, r.mode, r.k, r.p, r.seed))
    if not cfg.record_wall_time:
        records = [replace(r, wall_time_ms=0.0) for r in records]
    if records:
        lines = [SWEEP_CSV_HEADER] + [r.csv_row() for r in records]
        (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    return records


def _median_ms(fn, trials):
    fn()  # warm-up, untimed
    times = []
    for _ in range(trials):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times)


def run_timing(rows: int, cols: int, p_values, k: int, trials: int,
               output_dir=None, seed: int = 0) -> list[TimingRecord]:
    """Median wall time of direct factorization vs the full patched route.

    The patched route times reordering, the patch-matrix SVD at rank k (or
    the maximal rank if smaller), the factor product and the inverse
    reordering.  The reorder column times the bare reorder + inverse round
    trip.  The predicted ratio is p^4 over the squared minimum dimension.
    """
    if trials < 3:
        raise ValueError(f"trials must be >= 3, got {trials}")
    if not 1 <= k <= min(rows, cols):
        raise ValueError(f"rank {k} outside [1, {min(rows, cols)}]")
    img = synth_image("uniform-noise", rows, cols, seed)
    t_direct = _median_ms(lambda: svd_truncate(img.pixels, k), trials)
    records = []
    for p in p_values:
        if rows % p or cols % p:
            log.info("patch size %d does not divide %dx%d, skipped", p, rows, cols)
            continue
        rank = min(k, p * p, (rows * cols) // (p * p))
        if rank < k:
            log.info("patch size %d caps the rank at %d (requested %d)", p, rank, k)

        def patched():
            rm = reorder(img, p)
            fact = svd_truncate(rm.data, rank)
            product = np.clip(fact.reconstruct(), 0.0, 1.0)
            inverse_reorder(ReorderedMatrix(product, p, rows, cols))

        def roundtrip():
            inverse_reorder(reorder(img, p))

        t_patched = _median_ms(patched, trials)
        t_reorder = _median_ms(roundtrip, trials)
        rec = TimingRecord(rows, cols, p, rank, t_direct, t_patched, t_reorder,
                           t_patched / t_direct, p ** 4 / min(rows, cols) ** 2)
        log.info("p=%d: reorder is %.1f%% of the patched route",
                 p, 100.0 * t_reorder / t_patched)
        records.append(rec)
    if output_dir is not None and records:
        out_dir = Path(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = [TIMING_CSV_HEADER] + [r.csv_row() for r in records]
        (out_dir / "timing.csv").write_text("\n".join(lines) + "\n", encoding="ascii")
    return records


def write_encoded(directory, fact: Factorization, rows: int, cols: int, patch: int) -> None:
    """Store an encoded image: the factorization files plus a geometry sidecar.

    patch == 0 marks a direct encoding; a positive patch means the factors
    approximate the patch-column matrix of the image.
    """
    directory = Path(directory)
    write_factorization(fact, directory)
    line = f"rows={rows} cols={cols} patch={patch}\n"
    (directory / _GEOMETRY_SIDECAR).write_text(line, encoding="ascii")


def read_encoded(directory):
    """Load an encoded image; returns (factorization, rows, cols, patch)."""
    directory = Path(directory)
    fact = read_factorization(directory)
    fields = dict(item.split("=", 1)
                  for item in (directory / _GEOMETRY_SIDECAR).read_text().split())
    return fact, int(fields["rows"]), int(fields["cols"]), int(fields["patch"])


def decode_encoded(directory) -> ImageMatrix:
    """Reconstruct the image stored in an encoded bundle, clamped to [0, 1]."""
    fact, rows, cols, patch = read_encoded(directory)
    product = np.clip(fact.reconstruct(), 0.0, 1.0)
    if patch == 0:
        if product.shape != (rows, cols):
            raise ValueError(f"factor product shape {product.shape} != {(rows, cols)}")
        return ImageMatrix(product)
    return inverse_reorder(ReorderedMatrix(product, patch, rows, cols))


_CONFIG_INT_KEYS = ("nmf_max_iters", "nmf_seed", "ssim_window_side", "repeat")
_CONFIG_FLOAT_KEYS = ("nmf_rel_tol", "nmf_epsilon_guard", "ssim_sigma")


def parse_sweep_config(text: str) -> SweepConfig:
    """Parse the flat key=value sweep config format.

    Recognized keys: image (repeatable, "<name> <source>"), backends,
    k_values, p_values (comma-separated), nmf_max_iters, nmf_rel_tol,
    nmf_seed, nmf_epsilon_guard, ssim_window_side, ssim_sigma, output_dir,
    repeat, record_wall_time.  Lines starting with '#' are comments.
    """
    images = []
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "image":
            parts = value.split(None, 1)
            if len(parts) != 2:
                raise ValueError(f"config line {lineno}: image wants '<name> <source>'")
            images.append((parts[0], parts[1]))
        elif key in _CONFIG_INT_KEYS + _CONFIG_FLOAT_KEYS + (
                "backends", "k_values", "p_values", "output_dir", "record_wall_time"):
            values[key] = value
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")

    kwargs: dict = {"images": tuple(images)}
    if "backends" in values:
        kwargs["backends"] = tuple(b.strip() for b in values["backends"].split(",") if b.strip())
    if "k_values" in values:
        kwargs["k_values"] = tuple(int(v) for v in values["k_values"].split(","))
    if "p_values" in values:
        kwargs["p_values"] = tuple(int(v) for v in values["p_values"].split(","))
    if "output_dir" in values:
        kwargs["output_dir"] = values["output_dir"]
    if "repeat" in values:
        kwargs["repeat"] = int(values["repeat"])
    if "record_wall_time" in values:
        flag = values["record_wall_time"].lower()
        if flag not in ("true", "false"):
            raise ValueError(f"record_wall_time must be true or false, got {flag!r}")
        kwargs["record_wall_time"] = flag == "true"
    nmf_kwargs = {}
    for key, attr in (("nmf_max_iters", "max_iters"), ("nmf_rel_tol", "rel_tol"),
                      ("nmf_seed", "seed"), ("nmf_epsilon_guard", "epsilon_guard")):
        if key in values:
            cast = int if key in _CONFIG_INT_KEYS else float
            nmf_kwargs[attr] = cast(values[key])
    if nmf_kwargs:
        kwargs["nmf"] = NmfConfig(**nmf_kwargs)
    ssim_kwargs = {}
    if "ssim_window_side" in values:
        ssim_kwargs["window_side"] = int(values["ssim_window_side"])
    if "ssim_sigma" in values:
        ssim_kwargs["gaussian_sigma"] = float(values["ssim_sigma"])
    if ssim_kwargs:
        kwargs["ssim"] = SsimConfig(**ssim_kwargs)
    return SweepConfig(**kwargs)
