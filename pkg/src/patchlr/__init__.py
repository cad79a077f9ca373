"""Patch-reordered low-rank grayscale image compression.

Encode an image by rearranging its non-overlapping patches into the columns
of a small matrix, factoring that matrix at low rank with SVD or NMF, and
decode by inverting the rearrangement.  Includes footprint planning, quality
metrics (PSNR, MSSIM), dictionary atlas rendering and a benchmark CLI.
"""

from .image import ImageMatrix, PgmError, load_pgm, save_pgm, synth_image
from .reorder import ReorderedMatrix, inverse_reorder, max_rank, reorder
from .factor import (Factorization, NmfConfig, nmf_factor, read_factorization,
                     svd_truncate, write_factorization)
from .metrics import (QualityReport, SsimConfig, gaussian_kernel, mse, mssim,
                      psnr, psnr_from_mse, quality_report, ssim_local)
from .footprint import (FootprintInequality, FootprintReport, best_patch_size,
                        check_footprint_inequality, feasible_patch_sizes,
                        footprint, footprint_report, optimal_patch_size,
                        per_rank_footprint, select_khat)
from .atlas import (AtlasSpec, atlas_sidecar, column_to_patch,
                    dictionary_sparsity, render_atlas, save_ppm)
from .pipeline import (SweepConfig, SweepRecord, TimingRecord, decode_encoded,
                       encode_decode_direct, encode_decode_patched,
                       load_image_source, parse_sweep_config, read_encoded,
                       run_sweep, run_timing, write_encoded)

__all__ = [
    "ImageMatrix", "PgmError", "load_pgm", "save_pgm", "synth_image",
    "ReorderedMatrix", "reorder", "inverse_reorder", "max_rank",
    "Factorization", "NmfConfig", "svd_truncate", "nmf_factor",
    "write_factorization", "read_factorization",
    "QualityReport", "SsimConfig", "mse", "psnr", "psnr_from_mse",
    "ssim_local", "mssim", "gaussian_kernel", "quality_report",
    "FootprintReport", "FootprintInequality", "footprint", "footprint_report",
    "per_rank_footprint", "optimal_patch_size", "feasible_patch_sizes",
    "best_patch_size", "select_khat", "check_footprint_inequality",
    "AtlasSpec", "render_atlas", "dictionary_sparsity", "column_to_patch",
    "save_ppm", "atlas_sidecar",
    "SweepConfig", "SweepRecord", "TimingRecord", "encode_decode_direct",
    "encode_decode_patched", "run_sweep", "run_timing", "load_image_source",
    "parse_sweep_config", "write_encoded", "read_encoded", "decode_encoded",
]

__version__ = "0.1.0"
