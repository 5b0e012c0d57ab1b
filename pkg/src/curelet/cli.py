"""Command-line surface: file formats, flag parsing, and exit codes.

The only module that touches the filesystem. Magnitude images travel as
16-bit big-endian binary PGM (P5), masks as 8-bit PGM where nonzero
marks background, and intermediate float fields as 32-bit little-endian
raw next to a JSON sidecar naming the grid. Exit codes: 0 success,
1 config error, 2 I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .chi2model import estimate_sigma_background, sample_rician
from .pipeline import (
    METHODS,
    SIGMA_GRID,
    ExperimentProtocol,
    denoise_mr,
    format_csv,
    make_phantom,
    monte_carlo_experiment,
    quality_report,
)

PGM_MAXVAL = 65535
SPIN_COUNTS = {"haar-cs1": 1, "haar-cs16": 16}


class ConfigError(Exception):
    """Bad flag value or combination; the process exits with 1."""


class DataError(Exception):
    """Unreadable or malformed input file; the process exits with 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 means I/O here
    def error(self, message):
        raise ConfigError(message)


def _header_tokens(blob: bytes, count: int) -> tuple[list[bytes], int]:
    # whitespace-separated tokens; '#' starts a comment running to EOL
    tokens, i = [], 0
    while len(tokens) < count:
        if i >= len(blob):
            raise DataError("truncated PGM header")
        ch = blob[i:i + 1]
        if ch == b"#":
            j = blob.find(b"\n", i)
            i = len(blob) if j < 0 else j + 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(blob) and not blob[j:j + 1].isspace() and blob[j:j + 1] != b"#":
                j += 1
            tokens.append(blob[i:j])
            i = j
    return tokens, i


def read_pgm(path) -> np.ndarray:
    """Binary PGM to a float image, one or two (big-endian) bytes per pixel."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    try:
        tokens, i = _header_tokens(blob, 4)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if tokens[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric PGM header") from exc
    if width <= 0 or height <= 0 or not 0 < maxval <= PGM_MAXVAL:
        raise DataError(f"{path}: bad PGM geometry {width}x{height} maxval {maxval}")
    if i >= len(blob) or not blob[i:i + 1].isspace():
        raise DataError(f"{path}: missing whitespace after the PGM maxval")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    data = blob[i + 1:]
    if len(data) < need:
        raise DataError(f"{path}: PGM pixel data truncated")
    pixels = np.frombuffer(data[:need], dtype=dtype).reshape(height, width)
    return pixels.astype(np.float64)


def write_pgm(path, image, maxval: int = PGM_MAXVAL) -> None:
    """Clip, round, and store an image as binary PGM."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ConfigError("PGM output needs a 2-D image")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    pixels = np.clip(np.rint(image), 0, maxval).astype(dtype)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n{maxval}\n".encode("ascii")
    try:
        Path(path).write_bytes(header + pixels.tobytes())
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def write_field(path, data, semantics: str) -> None:
    """Float32 little-endian raw plus a JSON sidecar at path + '.json'."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ConfigError("field output needs a 2-D array")
    sidecar = {"width": int(data.shape[1]), "height": int(data.shape[0]),
               "semantics": semantics}
    try:
        Path(path).write_bytes(data.astype("<f4").tobytes())
        Path(f"{path}.json").write_text(json.dumps(sidecar) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


@dataclass
class JobConfig:
    """One resolved invocation; the union of every command's knobs."""

    command: str
    input_path: str | None = None
    output_path: str | None = None
    ref_path: str | None = None
    mask_path: str | None = None
    dump_path: str | None = None
    method: str = "uwt-bdct"
    sigma: float | str | None = None
    lam: float = 0.5
    levels: int = 3
    spins: int | None = None
    seed: int = 0
    lambda1: float | None = None
    lambda2: float | None = None
    phantom: str | None = None
    size: int = 128
    sigmas: tuple = ()
    methods: tuple = ()
    seeds: int = 10

    def lambdas(self) -> tuple[float, float] | None:
        if (self.lambda1 is None) != (self.lambda2 is None):
            raise ConfigError("--lambda1 and --lambda2 must be given together")
        if self.lambda1 is None:
            return None
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ConfigError("--lambda1 and --lambda2 must be positive")
        return (self.lambda1, self.lambda2)


def _require(value, flag: str) -> None:
    if not value:
        raise ConfigError(f"{flag} is required for this command")


def _check_common(config: JobConfig) -> None:
    if not 0.0 <= config.lam <= 1.0:
        raise ConfigError("--lambda must lie in [0, 1]")
    if config.levels < 1:
        raise ConfigError("--levels must be at least 1")
    if config.seed < 0:
        raise ConfigError("--seed must be nonnegative")


def _check_spins(config: JobConfig) -> None:
    # spin counts live in the method names; the flag only cross-checks
    if config.spins is None:
        return
    expected = SPIN_COUNTS.get(config.method)
    if expected is None:
        raise ConfigError("--spins only applies to the haar-cs methods")
    if config.spins != expected:
        raise ConfigError(
            f"--spins {config.spins} conflicts with method {config.method}")


def _print_config(config: JobConfig, keys: tuple[str, ...]) -> None:
    parts = [f"command={config.command}"]
    parts += [f"{key}={getattr(config, key)}" for key in keys]
    print("config: " + " ".join(parts))


def cmd_denoise(config: JobConfig) -> int:
    _require(config.input_path, "--in")
    _require(config.output_path, "--out")
    _check_common(config)
    _check_spins(config)
    lambdas = config.lambdas()
    if config.sigma == "auto" and not config.mask_path:
        raise ConfigError("--sigma auto requires --mask to locate background")
    _print_config(config, ("input_path", "output_path", "method", "sigma",
                           "mask_path", "lam", "levels", "lambda1", "lambda2"))
    m = read_pgm(config.input_path)
    mask = read_pgm(config.mask_path) if config.mask_path else None
    start = time.perf_counter()
    try:
        result = denoise_mr(m, sigma=config.sigma, method=config.method,
                            lam=config.lam, J=config.levels, mask=mask,
                            lambdas=lambdas)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not np.isfinite(result.estimate).all():
        raise RuntimeError("denoised image contains non-finite values")
    write_pgm(config.output_path, result.estimate)
    if config.dump_path:
        write_field(config.dump_path, result.xhat, "squared-rescaled")
    wall = time.perf_counter() - start
    print(f"sigma={result.sigma:.6g} method={result.method} "
          f"cure={result.cure:.6g} wall_s={wall:.3f}")
    return 0


def cmd_simulate(config: JobConfig) -> int:
    _require(config.output_path, "--out")
    _check_common(config)
    if config.ref_path and config.phantom:
        raise ConfigError("give either --ref or --phantom, not both")
    if not config.ref_path and not config.phantom:
        raise ConfigError("simulate needs --ref or --phantom")
    if not isinstance(config.sigma, float) or not config.sigma > 0:
        raise ConfigError("--sigma must be a positive number for simulate")
    _print_config(config, ("ref_path", "phantom", "size", "output_path",
                           "sigma", "seed"))
    if config.ref_path:
        mu = read_pgm(config.ref_path)
    else:
        try:
            mu = make_phantom(config.phantom, config.size)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    m = sample_rician(mu, config.sigma, config.seed)
    write_pgm(config.output_path, m)
    print(f"wrote {config.output_path} sigma={config.sigma:.6g} "
          f"seed={config.seed}")
    return 0


def cmd_evaluate(config: JobConfig) -> int:
    _require(config.input_path, "--est")
    _require(config.ref_path, "--ref")
    _print_config(config, ("input_path", "ref_path"))
    est = read_pgm(config.input_path)
    ref = read_pgm(config.ref_path)
    try:
        report = quality_report(est, ref)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    a, b = report.affine
    print("psnr,cipsnr,ssim,affine_a,affine_b")
    print(f"{report.psnr:.6g},{report.cipsnr:.6g},{report.ssim:.6g},"
          f"{a:.6g},{b:.6g}")
    return 0


def cmd_benchmark(config: JobConfig) -> int:
    _require(config.output_path, "--out")
    _check_common(config)
    if config.seeds < 1:
        raise ConfigError("--seeds must be at least 1")
    protocol = ExperimentProtocol(
        phantom=config.phantom or "shepp-logan",
        size=config.size,
        sigmas=config.sigmas or SIGMA_GRID,
        methods=config.methods or METHODS,
        seeds=tuple(range(config.seeds)),
        lam=config.lam,
        J=config.levels,
    )
    try:
        protocol.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _print_config(config, ("phantom", "size", "sigmas", "methods", "seeds",
                           "lam", "levels", "output_path"))
    rows = monte_carlo_experiment(protocol)
    text = format_csv(rows)
    try:
        Path(config.output_path).write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write {config.output_path}: {exc}") from exc
    for method in protocol.methods:
        times = [row["runtime_s"] for row in rows if row["method"] == method]
        print(f"method={method} mean_runtime_s={float(np.mean(times)):.3f}")
    return 0


def cmd_estimate_sigma(config: JobConfig) -> int:
    _require(config.input_path, "--in")
    _require(config.mask_path, "--mask")
    _print_config(config, ("input_path", "mask_path"))
    m = read_pgm(config.input_path)
    mask = read_pgm(config.mask_path) != 0
    try:
        sigma = estimate_sigma_background(m, mask)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"sigma={sigma:.6g}")
    return 0


HANDLERS = {
    "denoise": cmd_denoise,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
    "estimate-sigma": cmd_estimate_sigma,
}


def _sigma_flag(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number or 'auto', got {text!r}")


def _float_tuple(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}")


def _name_tuple(text: str) -> tuple:
    return tuple(tok for tok in text.split(",") if tok)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="curelet",
                     description="Risk-optimized denoising of magnitude MR "
                                 "images with squared chi-square statistics.")
    sub = parser.add_subparsers(dest="command", required=True)

    dn = sub.add_parser("denoise", help="denoise a magnitude PGM image")
    dn.add_argument("--in", dest="input_path", required=True, metavar="PGM",
                    help="noisy magnitude image, 16-bit binary PGM")
    dn.add_argument("--out", dest="output_path", required=True, metavar="PGM")
    dn.add_argument("--sigma", type=_sigma_flag, default="auto",
                    help="noise level, or 'auto' to fit it on --mask")
    dn.add_argument("--mask", dest="mask_path", metavar="PGM",
                    help="background mask, nonzero pixels are signal-free")
    dn.add_argument("--method", choices=METHODS, default="uwt-bdct")
    dn.add_argument("--lambda", dest="lam", type=float, default=0.5,
                    help="negative-estimate blend: 0 clips, 1 reflects")
    dn.add_argument("--levels", type=int, default=3,
                    help="decomposition depth")
    dn.add_argument("--spins", type=int, choices=(1, 16),
                    help="cross-check against the haar-cs method name")
    dn.add_argument("--lambda1", type=float, help="first atom shape override")
    dn.add_argument("--lambda2", type=float, help="second atom shape override")
    dn.add_argument("--dump-x", dest="dump_path", metavar="RAW",
                    help="also write the chi-square-domain estimate as "
                         "float32 raw with a JSON sidecar")

    sim = sub.add_parser("simulate", help="draw a noisy magnitude image")
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--ref", dest="ref_path", metavar="PGM",
                     help="clean reference image")
    src.add_argument("--phantom", choices=("shepp-logan", "piecewise",
                                           "constant"))
    sim.add_argument("--size", type=int, default=128,
                     help="phantom side length")
    sim.add_argument("--sigma", type=_sigma_flag, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", dest="output_path", required=True,
                     metavar="PGM")

    ev = sub.add_parser("evaluate", help="score an estimate against a "
                                         "reference")
    ev.add_argument("--est", dest="input_path", required=True, metavar="PGM")
    ev.add_argument("--ref", dest="ref_path", required=True, metavar="PGM")

    bm = sub.add_parser("benchmark", help="phantom sweep over methods and "
                                          "noise levels")
    bm.add_argument("--phantom", choices=("shepp-logan", "piecewise",
                                          "constant"), default="shepp-logan")
    bm.add_argument("--size", type=int, default=128)
    bm.add_argument("--sigmas", type=_float_tuple, default=(),
                    help="comma-separated noise levels")
    bm.add_argument("--methods", type=_name_tuple, default=(),
                    help="comma-separated method names")
    bm.add_argument("--seeds", type=int, default=10,
                    help="number of noise realizations per cell")
    bm.add_argument("--lambda", dest="lam", type=float, default=0.5)
    bm.add_argument("--levels", type=int, default=3)
    bm.add_argument("--out", dest="output_path", required=True, metavar="CSV")

    es = sub.add_parser("estimate-sigma", help="fit the noise level on a "
                                               "background mask")
    es.add_argument("--in", dest="input_path", required=True, metavar="PGM")
    es.add_argument("--mask", dest="mask_path", required=True, metavar="PGM")

    return parser


def _config_from_args(args: argparse.Namespace) -> JobConfig:
    values = {f.name: getattr(args, f.name) for f in fields(JobConfig)
              if hasattr(args, f.name)}
    return JobConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        return HANDLERS[config.command](config)
    except SystemExit as exc:
        # argparse --help lands here; error() no longer raises it
        return exc.code if isinstance(exc.code, int) else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
