"""End-to-end magnitude MR denoising, quality metrics, and experiments.

The four-step chain: estimate sigma from a background region if needed,
square and rescale the magnitudes into the unitless chi-square domain,
run a risk-optimized denoiser there, and map the estimate back to
magnitudes through the blended square root. The rest of the module is
measurement plumbing: PSNR against the clean peak, its affine-corrected
variant, mean SSIM, deterministic phantoms, and a Monte Carlo driver
that emits CSV-ready rows.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .chi2model import (
    estimate_sigma_background,
    reconstruct_magnitude,
    rescale_squared,
    sample_rician,
)
from .shrinkage import (
    cureshrink_denoise,
    haar_curelet_denoise,
    uwt_curelet_denoise,
)
from .transforms import cycle_spin

__all__ = [
    "ImageBuffer",
    "QualityReport",
    "DenoiseResult",
    "ExperimentProtocol",
    "CSV_COLUMNS",
    "METHODS",
    "SIGMA_GRID",
    "PSNR_CAP",
    "psnr",
    "cipsnr",
    "ssim_mean",
    "quality_report",
    "make_phantom",
    "denoise_mr",
    "monte_carlo_experiment",
    "format_csv",
]

PSNR_CAP = 99.0
SIGMA_GRID = (5.0, 10.0, 20.0, 30.0, 50.0, 100.0)
METHODS = ("haar-cs1", "haar-cs16", "uwt", "uwt-bdct")
CSV_COLUMNS = (
    "method", "sigma", "seed_count",
    "psnr_mean", "psnr_se", "cipsnr_mean", "cipsnr_se",
    "ssim_mean", "ssim_se", "cure_mean", "mse_mean", "runtime_s",
)


@dataclass
class ImageBuffer:
    """Row-major 2-D scalar field with value semantics.

    semantics says what the numbers mean: "magnitude" (nonnegative MR
    magnitudes), "squared-rescaled" (chi-square domain samples), or
    "clean-reference". bit_depth is an I/O hint only.
    """

    width: int
    height: int
    data: np.ndarray
    semantics: str = "magnitude"
    bit_depth: int = 16

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64).ravel()
        if self.width <= 0 or self.height <= 0:
            raise ValueError("width and height must be positive")
        if self.data.size != self.width * self.height:
            raise ValueError("data length must equal width * height")
        if self.semantics == "magnitude" and self.data.size and self.data.min() < 0:
            raise ValueError("magnitude data must be nonnegative")

    @classmethod
    def from_array(cls, arr, semantics: str = "magnitude", bit_depth: int = 16):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(width=arr.shape[1], height=arr.shape[0], data=arr.ravel(),
                   semantics=semantics, bit_depth=bit_depth)

    def as_array(self) -> np.ndarray:
        return self.data.reshape(self.height, self.width)


@dataclass
class QualityReport:
    """Full-reference scores of one estimate against its clean image."""

    psnr: float
    cipsnr: float
    ssim: float
    affine: tuple[float, float]

    def __post_init__(self):
        # least squares over (a, b) includes (1, 0), so the corrected
        # error can never exceed the raw one
        if self.cipsnr < self.psnr - 1e-9:
            raise ValueError("cipsnr below psnr: affine fit must not lose")
        if not -1.0 <= self.ssim <= 1.0:
            raise ValueError("ssim out of [-1, 1]")


def _as_image(value) -> np.ndarray:
    if isinstance(value, ImageBuffer):
        return value.as_array()
    return np.asarray(value, dtype=np.float64)


def _check_pair(est, ref) -> tuple[np.ndarray, np.ndarray]:
    est, ref = _as_image(est), _as_image(ref)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    return est, ref


def psnr(est, ref) -> float:
    """10 log10(N max(ref)^2 / ||est - ref||^2), capped at 99 dB."""
    est, ref = _check_pair(est, ref)
    peak = float(np.abs(ref).max())
    if peak == 0.0:
        raise ValueError("reference image is all zero")
    sse = float(((est - ref) ** 2).sum())
    if sse == 0.0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(ref.size * peak ** 2 / sse), PSNR_CAP))


def cipsnr(est, ref) -> tuple[float, tuple[float, float]]:
    """PSNR after the best affine (contrast/brightness) correction.

    (a*, b*) minimize ||a est + b - ref||^2 in closed form. A constant
    estimate makes the fit degenerate; then a*=0 and b* is the plain
    mean, which is the limit of the general solution.
    """
    est, ref = _check_pair(est, ref)
    n = est.size
    se, sr = float(est.sum()), float(ref.sum())
    see = float((est * est).sum())
    sre = float((ref * est).sum())
    denom = n * see - se * se
    if denom <= 1e-12 * max(n * see, 1.0):
        a, b = 0.0, sr / n
    else:
        a = (n * sre - sr * se) / denom
        b = (sr * see - sre * se) / denom
    return psnr(a * est + b, ref), (a, b)


def _ssim_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim_mean(est, ref, dynamic_range: float | None = None) -> float:
    """Mean structural similarity over the valid window positions.

    11x11 Gaussian window (sigma 1.5), C1=(0.01 L)^2, C2=(0.03 L)^2.
    L defaults to max(ref); a fixed 255 would be wrong for 16-bit data.
    """
    est, ref = _check_pair(est, ref)
    if dynamic_range is None:
        dynamic_range = float(np.abs(ref).max())
    if dynamic_range <= 0:
        raise ValueError("dynamic range must be positive")
    w = _ssim_window()
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2
    mu1 = convolve2d(est, w, mode="valid")
    mu2 = convolve2d(ref, w, mode="valid")
    s11 = convolve2d(est * est, w, mode="valid") - mu1 ** 2
    s22 = convolve2d(ref * ref, w, mode="valid") - mu2 ** 2
    s12 = convolve2d(est * ref, w, mode="valid") - mu1 * mu2
    num = (2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)
    den = (mu1 ** 2 + mu2 ** 2 + c1) * (s11 + s22 + c2)
    return float(np.clip((num / den).mean(), -1.0, 1.0))


def quality_report(est, ref, dynamic_range: float | None = None) -> QualityReport:
    ci, ab = cipsnr(est, ref)
    return QualityReport(psnr=psnr(est, ref), cipsnr=ci,
                         ssim=ssim_mean(est, ref, dynamic_range), affine=ab)


# ----------------------------------------------------------------- phantoms

# Shepp-Logan ellipses: (intensity step, semi-axis a, semi-axis b,
# center x, center y, rotation degrees) in the [-1, 1]^2 frame.
_SHEPP_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def _shepp_logan(size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    u = (xx - (size - 1) / 2.0) / (size / 2.0)
    v = ((size - 1) / 2.0 - yy) / (size / 2.0)
    img = np.zeros((size, size))
    for val, a, b, x0, y0, deg in _SHEPP_ELLIPSES:
        t = np.deg2rad(deg)
        ur = (u - x0) * np.cos(t) + (v - y0) * np.sin(t)
        vr = -(u - x0) * np.sin(t) + (v - y0) * np.cos(t)
        img += val * ((ur / a) ** 2 + (vr / b) ** 2 <= 1.0)
    # float fuzz can leave values like -1e-14 where ellipses cancel
    return np.maximum(img, 0.0) * 255.0


def _piecewise(size: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, size)
    yy, xx = np.meshgrid(t, t, indexing="ij")
    img = 30.0 + 50.0 * xx + 30.0 * yy * (1.0 - xx)
    disc = (xx - 0.34) ** 2 + (yy - 0.38) ** 2 <= 0.23 ** 2
    img[disc] = 150.0 + 70.0 * np.sin(9.0 * np.pi * xx[disc]) * np.cos(7.0 * np.pi * yy[disc])
    band = (np.abs(xx - 0.72) <= 0.10) & (yy >= 0.15) & (yy <= 0.85)
    img[band] = 90.0 + 140.0 * (yy[band] - 0.15) / 0.70
    blob = ((xx - 0.62) / 0.18) ** 2 + ((yy - 0.78) / 0.10) ** 2 <= 1.0
    img[blob] = 225.0
    return np.clip(img, 0.0, 255.0)


def make_phantom(kind: str, size: int) -> np.ndarray:
    """Deterministic clean magnitude image with values in [0, 255]."""
    if size < 32:
        raise ValueError("phantom size must be at least 32")
    if kind == "constant":
        return np.full((size, size), 128.0)
    if kind == "shepp-logan":
        return _shepp_logan(size)
    if kind == "piecewise":
        return _piecewise(size)
    raise ValueError(f"unknown phantom kind {kind!r}")


# ----------------------------------------------------------------- denoising


@dataclass
class DenoiseResult:
    """Denoised magnitudes plus everything the run learned on the way."""

    estimate: np.ndarray
    xhat: np.ndarray
    sigma: float
    method: str
    cure: float
    runtime_s: float

    def __array__(self, dtype=None):
        return np.asarray(self.estimate, dtype=dtype)


def _run_method(y: np.ndarray, K: float, method: str, J: int, lambdas=None):
    if method == "haar-cs1":
        kw = {} if lambdas is None else {"lambdas": lambdas}
        return haar_curelet_denoise(y, K, J=J, **kw)
    if method == "haar-cs16":
        cures = []
        kw = {} if lambdas is None else {"lambdas": lambdas}

        def spin_once(ys, Ks):
            est, rep = haar_curelet_denoise(ys, Ks, J=J, **kw)
            cures.append(rep.cure)
            return est

        est = cycle_spin(y, K, spin_once, 16)
        return est, float(np.mean(cures))
    kw = {} if lambdas is None else {"lambdas": lambdas}
    if method == "uwt":
        return uwt_curelet_denoise(y, K, transform="haar-uwt", J=J, **kw)
    if method == "uwt-bdct":
        return uwt_curelet_denoise(y, K, transform="mixed", J=J, **kw)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def denoise_mr(m, sigma="auto", method: str = "uwt-bdct", lam: float = 0.5,
               J: int = 3, mask=None, lambdas=None) -> DenoiseResult:
    """Denoise a magnitude MR image under the squared-chi-square model.

    sigma may be a known positive noise level or "auto", which moment-
    matches over the background mask (nonzero mask pixels are background).
    The x-domain estimate runs through the chosen risk-optimized method
    and comes back as magnitudes via the lambda-blended square root.
    lambdas overrides the method's atom shape pair: (3, 9) for the
    filterbank families, (1, 9) for the joint inter-scale one.
    """
    m = _as_image(m)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if (m < 0).any():
        raise ValueError("magnitude image must be nonnegative")
    if isinstance(sigma, str):
        if sigma != "auto":
            raise ValueError(f"sigma must be positive or 'auto', got {sigma!r}")
        if mask is None:
            raise ValueError("sigma='auto' requires a background mask")
        sigma = estimate_sigma_background(m, _as_image(mask) != 0)
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    start = time.perf_counter()
    noisy = rescale_squared(m, sigma)
    y = noisy.samples.reshape(m.shape)
    out = _run_method(y, noisy.dof, method, J, lambdas)
    xhat, rep = out
    cure = rep if isinstance(rep, float) else rep.cure
    estimate = reconstruct_magnitude(xhat, sigma, lam)
    return DenoiseResult(estimate=estimate, xhat=np.asarray(xhat),
                         sigma=sigma, method=method, cure=float(cure),
                         runtime_s=time.perf_counter() - start)


# ---------------------------------------------------------------- protocols


@dataclass
class ExperimentProtocol:
    """What to run: one phantom, a sigma sweep, methods, and seeds."""

    phantom: str = "shepp-logan"
    size: int = 128
    sigmas: tuple = SIGMA_GRID
    methods: tuple = ("haar-cs1", "uwt")
    seeds: tuple = tuple(range(10))
    lam: float = 0.5
    J: int = 3

    def validate(self):
        if not self.sigmas or not self.methods or not self.seeds:
            raise ValueError("protocol needs at least one sigma, method, and seed")
        for s in self.sigmas:
            if not 5.0 <= float(s) <= 100.0:
                raise ValueError(f"sigma {s} outside the studied range [5, 100]")
        for mth in self.methods:
            if mth not in METHODS:
                raise ValueError(f"unknown method {mth!r}")
        make_phantom(self.phantom, self.size)


def _max_workers(n_jobs: int) -> int:
    cap = os.environ.get("CURE_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_jobs, limit))


def _mc_single(mu, protocol, method, sig, seed):
    m = sample_rician(mu, sig, seed)
    res = denoise_mr(m, sigma=sig, method=method, lam=protocol.lam, J=protocol.J)
    x = (mu / sig) ** 2
    return {
        "psnr": psnr(res.estimate, mu),
        "cipsnr": cipsnr(res.estimate, mu)[0],
        "ssim": ssim_mean(res.estimate, mu),
        "cure": res.cure,
        "mse": float(((res.xhat - x) ** 2).mean()),
        "runtime": res.runtime_s,
    }


def monte_carlo_experiment(protocol: ExperimentProtocol) -> list[dict]:
    """Mean and standard error of every metric per (method, sigma) cell.

    Runs are independent and pure, so they fan out over a thread pool
    (numpy releases the GIL in the heavy kernels); CURE_THREADS caps the
    pool. Results are keyed, not appended, so scheduling cannot change
    the table. cure and mse are both x-domain quantities: their means
    converge to each other by unbiasedness.
    """
    protocol.validate()
    mu = make_phantom(protocol.phantom, protocol.size)
    jobs = [(method, float(sig), seed)
            for method in protocol.methods
            for sig in protocol.sigmas
            for seed in protocol.seeds]
    with ThreadPoolExecutor(max_workers=_max_workers(len(jobs))) as pool:
        futures = {job: pool.submit(_mc_single, mu, protocol, *job) for job in jobs}
        outcomes = {job: fut.result() for job, fut in futures.items()}

    def cell(values):
        arr = np.asarray(values, dtype=np.float64)
        se = arr.std(ddof=1) / np.sqrt(arr.size) if arr.size > 1 else 0.0
        return float(arr.mean()), float(se)

    rows = []
    for method in protocol.methods:
        for sig in protocol.sigmas:
            runs = [outcomes[(method, float(sig), seed)] for seed in protocol.seeds]
            pm, ps = cell([r["psnr"] for r in runs])
            cm, cs = cell([r["cipsnr"] for r in runs])
            sm, ss = cell([r["ssim"] for r in runs])
            rows.append({
                "method": method,
                "sigma": float(sig),
                "seed_count": len(protocol.seeds),
                "psnr_mean": pm, "psnr_se": ps,
                "cipsnr_mean": cm, "cipsnr_se": cs,
                "ssim_mean": sm, "ssim_se": ss,
                "cure_mean": float(np.mean([r["cure"] for r in runs])),
                "mse_mean": float(np.mean([r["mse"] for r in runs])),
                "runtime_s": float(np.mean([r["runtime"] for r in runs])),
            })
    return rows


def format_csv(rows: list[dict]) -> str:
    """Render experiment rows in the fixed column order."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(
            f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c])
            for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
