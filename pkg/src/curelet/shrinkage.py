"""Thresholding atoms, risk-optimal weight solves, and the denoisers.

Estimators are linear expansions of fixed nonlinear atoms. Each atom is a
smooth function of a coefficient and its variance channel (or scaling
companion), with every diagonal partial derivative available in closed
form so the unbiased risk estimate is exact. Minimizing the risk over the
expansion weights is then ordinary least squares on a tiny normal system.

Three denoisers:

* uwt_curelet_denoise: pointwise shrinkage atoms per undecimated band
  (Haar frame, overlapping block DCT, or both pooled), weights solved
  globally in the image domain.
* cureshrink_denoise: per-subband soft thresholding in the unnormalized
  Haar DWT, threshold = a * sqrt(s) with scalar a picked by risk search.
* haar_curelet_denoise: per-subband 8-atom expansion mixing the
  coefficient, its smoothed local energy, and a parent predictor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .risk import (
    RiskReport,
    SubbandEvaluation,
    band_divergence_fields,
    band_divergence_scalars,
    combine_evaluations,
    cure_subband,
)
from .transforms import (
    FilterBank,
    bdct8_bank,
    haar_dwt_analyze,
    haar_dwt_synthesize,
    haar_uwt_bank,
    parent_field,
)

__all__ = [
    "LetFamily",
    "NormalSystem",
    "smooth_pos",
    "let_atom_pointwise",
    "solve_weights",
    "pointwise_let_family",
    "combined_band_evaluations",
    "uwt_curelet_denoise",
    "cureshrink_evaluation",
    "cureshrink_subband",
    "cureshrink_denoise",
    "gamma_kernel",
    "joint_let_atoms",
    "haar_curelet_denoise",
]

DEFAULT_BETA = 0.02
POINTWISE_LAMBDAS = (3.0, 9.0)
JOINT_LAMBDAS = (1.0, 9.0)


# ------------------------------------------------------------ smooth atoms


def _smooth_pos3(u, beta: float):
    """(u + sqrt(u^2 + beta^2)) / 2 with first and second derivatives.

    The negative tail uses u + root = beta^2 / (root - u) (and likewise
    for the slope), since the direct sum cancels catastrophically there.
    """
    u = np.asarray(u, dtype=np.float64)
    root = np.sqrt(u ** 2 + beta ** 2)
    neg = u < 0
    # root - min(u, 0) never cancels and stays >= beta on both branches
    safe = root - np.minimum(u, 0.0)
    g = np.where(neg, 0.5 * beta ** 2 / safe, 0.5 * (u + root))
    dg = np.where(neg, 0.5 * beta ** 2 / (root * safe), 0.5 * (1.0 + u / root))
    d2g = 0.5 * beta ** 2 / root ** 3
    return g, dg, d2g


def smooth_pos(u, beta: float):
    """Smooth ramp approximating max(u, 0); returns (value, derivative)."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    g, dg, _ = _smooth_pos3(np.asarray(u, dtype=np.float64), beta)
    return g, dg


def let_atom_pointwise(w, wbar, lam: float, beta: float = DEFAULT_BETA,
                       eps: float | None = None) -> SubbandEvaluation:
    """Keep-factor atom theta = ramp(1 - 4 lam wbar / w^2) * w.

    wbar is the variance channel of the band: 4(E[wbar] - K/2) estimates
    Var(w), so 4 lam wbar / w^2 compares coefficient energy to lam times
    its noise level. All six diagonal partials are closed-form.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(wbar, dtype=np.float64)
    if eps is None:
        eps = 1e-12 * (float((w ** 2).mean()) + 1.0)
    q = w ** 2 + eps
    u = 1.0 - 4.0 * lam * v / q
    u_w = 8.0 * lam * v * w / q ** 2
    u_v = -4.0 * lam / q
    u_ww = 8.0 * lam * v * (eps - 3.0 * w ** 2) / q ** 3
    u_wv = 8.0 * lam * w / q ** 2
    g, dg, d2g = _smooth_pos3(u, beta)
    return SubbandEvaluation(
        theta=g * w,
        d1=dg * u_w * w + g,
        d2=dg * u_v * w,
        d11=(d2g * u_w ** 2 + dg * u_ww) * w + 2.0 * dg * u_w,
        d22=d2g * u_v ** 2 * w,
        d12=(d2g * u_w * u_v + dg * u_wv) * w + dg * u_v,
    )


# --------------------------------------------------------- weight solving


@dataclass(frozen=True)
class NormalSystem:
    """Least-squares system M a = c for the expansion weights."""

    M: np.ndarray
    c: np.ndarray
    solution: np.ndarray | None = None

    def __post_init__(self):
        M = np.asarray(self.M, dtype=np.float64)
        c = np.asarray(self.c, dtype=np.float64)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "c", c)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != c.size:
            raise ValueError("system shapes inconsistent")
        if not np.allclose(M, M.T, rtol=1e-8, atol=1e-8 * (abs(M).max() + 1)):
            raise ValueError("M must be symmetric")


def solve_weights(M, c, cond_limit: float = 1e12, ridge: float = 1e-9,
                  rcond: float = 1e-4) -> np.ndarray:
    """Minimal-norm pseudo-inverse solve of the normal system Ma = c.

    The risk surface is a quadratic whose Hessian is the atom Gram matrix;
    its near-null eigenmodes belong to almost-collinear atom combinations,
    where the estimated gradient is dominated by sampling noise and the
    formal minimizer runs far from zero without lowering the true risk.
    Eigenmodes below rcond * (largest eigenvalue) are therefore solved to
    zero weight. When the condition estimate exceeds cond_limit,
    ridge * trace(M)/I is added to the diagonal first; the returned
    weights satisfy the regularized normal equations restricted to the
    kept subspace to 1e-8 * (|c| + 1).
    """
    M = np.asarray(M, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if not (np.isfinite(M).all() and np.isfinite(c).all()):
        raise ValueError("non-finite entries in the normal system")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cond_limit:
        M = M + (ridge * np.trace(M) / c.size) * np.eye(c.size)
    lam, V = np.linalg.eigh((M + M.T) / 2.0)
    keep = lam > rcond * max(lam.max(), 0.0)
    if not keep.any():
        return np.zeros(c.size)
    V = V[:, keep]
    a = V @ ((V.T @ c) / lam[keep])
    residual = float(np.linalg.norm(V.T @ (M @ a - c)))
    if residual > 1e-8 * (float(np.linalg.norm(c)) + 1.0):
        raise RuntimeError(f"weight solve residual {residual:.3e} too large")
    return a


# ------------------------------------------------- filterbank LET denoiser


@dataclass
class LetFamily:
    """Atoms of one linear expansion plus solve metadata.

    band_index maps each atom to its filterbank band; weights stay None
    until a system has been solved.
    """

    atoms: list
    band_index: list
    labels: list
    beta: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not (len(self.atoms) == len(self.band_index) == len(self.labels)):
            raise ValueError("atom metadata misaligned")


def pointwise_let_family(bank: FilterBank, coeffs, variances, K: float,
                         lambdas=POINTWISE_LAMBDAS, beta: float = DEFAULT_BETA) -> LetFamily:
    """Per-band pointwise atoms plus one bias-removing lowpass atom.

    The lowpass atom synthesizes to the unbiased lowpass of x (the band
    carries tap_sum * K of chi-square mean per coefficient); each highpass
    band gets one keep-factor atom per lambda.
    """
    atoms, band_index, labels = [], [], []
    for i, band in enumerate(bank.bands):
        if band.kind == "lowpass":
            w = np.asarray(coeffs[i], dtype=np.float64)
            atoms.append(SubbandEvaluation(
                theta=w - band.tap_sum * K, d1=1.0, d2=0.0, d11=0.0, d22=0.0, d12=0.0,
            ))
            band_index.append(i)
            labels.append(f"{band.label}:bias")
        else:
            for lam in lambdas:
                atoms.append(let_atom_pointwise(coeffs[i], variances[i], lam, beta))
                band_index.append(i)
                labels.append(f"{band.label}:l{lam:g}")
    return LetFamily(atoms=atoms, band_index=band_index, labels=labels, beta=beta)


def combined_band_evaluations(family: LetFamily, weights, n_bands: int) -> list:
    """Collapse weighted atoms into one evaluation per band."""
    weights = np.asarray(weights, dtype=np.float64)
    evs = []
    for b in range(n_bands):
        members = [k for k, idx in enumerate(family.band_index) if idx == b]
        if not members:
            raise ValueError(f"band {b} has no atoms")
        evs.append(combine_evaluations([family.atoms[k] for k in members],
                                       weights[members]))
    return evs


def _bank_parts(y: np.ndarray, K: float, transform: str, J: int, lambdas, beta):
    names = {"haar-uwt", "bdct", "mixed"}
    if transform not in names:
        raise ValueError(f"transform must be one of {sorted(names)}")
    banks = []
    if transform in ("haar-uwt", "mixed"):
        banks.append(haar_uwt_bank(J, ndim=y.ndim))
    if transform in ("bdct", "mixed"):
        banks.append(bdct8_bank())
    parts = []
    for bank in banks:
        coeffs = bank.analyze(y)
        variances = bank.analyze_variance(y)
        fields = band_divergence_fields(y, K, bank)
        family = pointwise_let_family(bank, coeffs, variances, K, lambdas, beta)
        parts.append((bank, family, fields))
    return parts


def _live_atoms(energies: np.ndarray, data_energy: float) -> np.ndarray:
    """Mask of atoms whose field energy is non-negligible.

    A numerically dead atom contributes nothing to the estimate, yet its
    divergence entry still lands in c; keeping it would pair a zero Gram
    row with a nonzero right-hand side and the risk would have no minimum
    along that direction. Dead atoms are solved out with weight zero.
    """
    scale = max(float(energies.max()), float(data_energy))
    if scale <= 0.0:
        return np.zeros(energies.size, dtype=bool)
    return energies > 1e-12 * scale


def uwt_curelet_denoise(y, K: float, transform: str = "haar-uwt", J: int = 3,
                        lambdas=POINTWISE_LAMBDAS, beta: float = DEFAULT_BETA):
    """Risk-optimal linear expansion over undecimated-band atoms.

    Assembles the image-domain normal system (atom Gram matrix against the
    data-fit plus divergence vector), solves for the weights, and returns
    the synthesized estimate of x with a RiskReport. "mixed" pools the
    Haar-frame and block-DCT atoms into one joint system.
    """
    y = np.asarray(y, dtype=np.float64)
    if (y < 0).any():
        raise ValueError("squared-magnitude data must be nonnegative")
    parts = _bank_parts(y, K, transform, J, lambdas, beta)
    n = y.size

    rows, cvec = [], []
    for bank, family, fields in parts:
        for ev, b in zip(family.atoms, family.band_index):
            f_i = bank.synthesize_band(b, ev.theta)
            first, second = band_divergence_scalars(fields[b], ev)
            rows.append(f_i.ravel())
            cvec.append(float(((y - K) * f_i).sum()) - 4.0 * (first - second))
    F = np.stack(rows)
    c_full = np.asarray(cvec)
    live = _live_atoms((F ** 2).sum(axis=1), float(((y - K) ** 2).sum()))
    a = np.zeros(len(rows))
    if live.any():
        F_live = F[live]
        system = NormalSystem(M=F_live @ F_live.T, c=c_full[live])
        a[live] = solve_weights(system.M, system.c)

    estimate = (a @ F).reshape(y.shape)
    half = y - K / 2
    value = (float(((estimate - (y - K)) ** 2).sum()) - 4.0 * float(half.sum())) / n
    offset = 0
    weight_map = {}
    for bank, family, fields in parts:
        part_a = a[offset:offset + len(family.atoms)]
        family.weights = part_a
        evs = combined_band_evaluations(family, part_a, len(bank.bands))
        for fl, ev in zip(fields, evs):
            first, second = band_divergence_scalars(fl, ev)
            value += 8.0 / n * (first - second)
        for k, label in enumerate(family.labels):
            weight_map[f"{bank.name}/{label}"] = float(part_a[k])
        offset += len(family.atoms)
    return estimate, RiskReport(cure=value, per_band=weight_map)


# ------------------------------------------------------ subband CUREshrink


def cureshrink_evaluation(w, s, a: float, beta: float | None = None,
                          delta: float | None = None) -> SubbandEvaluation:
    """Smoothed soft threshold theta = (w/|w|) ramp(|w| - a sqrt(s)).

    |w| is smoothed as sqrt(w^2 + beta^2) and the same beta rounds the
    ramp knee; beta defaults to 2% of the mean noise scale sqrt(s), so the
    smoothing bias stays proportional to the data scale.
    """
    w = np.asarray(w, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if a < 0:
        raise ValueError("threshold scale a must be nonnegative")
    if delta is None:
        delta = 1e-6 * (float(s.mean()) + 1.0)
    sigma = np.sqrt(s + delta)
    if beta is None:
        beta = DEFAULT_BETA * float(sigma.mean())
    rho = np.sqrt(w ** 2 + beta ** 2)
    h = w / rho
    t = rho - a * sigma
    g, dg, d2g = _smooth_pos3(t, beta)
    h_w = beta ** 2 / rho ** 3
    h_ww = -3.0 * beta ** 2 * w / rho ** 5
    t_w = w / rho
    t_ww = beta ** 2 / rho ** 3
    t_s = -a / (2.0 * sigma)
    t_ss = a / (4.0 * sigma ** 3)
    return SubbandEvaluation(
        theta=h * g,
        d1=h_w * g + h * dg * t_w,
        d2=h * dg * t_s,
        d11=h_ww * g + 2.0 * h_w * dg * t_w + h * (d2g * t_w ** 2 + dg * t_ww),
        d22=h * (d2g * t_s ** 2 + dg * t_ss),
        d12=h_w * dg * t_s + h * d2g * t_w * t_s,
    )


def _golden_section(fun, lo: float, hi: float, tol: float) -> tuple[float, float]:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = fun(x2)
    mid = 0.5 * (lo + hi)
    return mid, fun(mid)


def cureshrink_subband(w, s, K_j: float, objective=None,
                       beta: float | None = None, delta: float | None = None,
                       grid_max: float = 4.0, grid_step: float = 0.05,
                       tol: float = 1e-3):
    """Pick the threshold scale a minimizing the subband risk estimate.

    Coarse grid {0, grid_step, ..., grid_max} followed by golden-section
    refinement of the best cell. objective(a, evaluation) -> float
    overrides the default risk objective (used for oracle comparisons).
    Returns (theta field, chosen a).
    """
    w = np.asarray(w, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if delta is None:
        delta = 1e-6 * (float(s.mean()) + 1.0)
    if beta is None:
        beta = DEFAULT_BETA * float(np.sqrt(s + delta).mean())

    def score(a):
        ev = cureshrink_evaluation(w, s, a, beta=beta, delta=delta)
        if objective is not None:
            return float(objective(a, ev))
        return cure_subband(w, s, K_j, ev)

    grid = np.arange(0.0, grid_max + 0.5 * grid_step, grid_step)
    values = [score(a) for a in grid]
    best = int(np.argmin(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    a_star, _ = _golden_section(score, lo, hi, tol)
    if values[best] < score(a_star):
        a_star = float(grid[best])
    ev = cureshrink_evaluation(w, s, a_star, beta=beta, delta=delta)
    return ev.theta, float(a_star)


# ----------------------------------------------- joint inter-/intra-scale


def gamma_kernel(ndim: int = 2, radius: int = 4, sigma: float = 1.0) -> np.ndarray:
    """Truncated Gaussian density weights for local-magnitude smoothing.

    Weights exp(-|m|^2 / 2 sigma^2) / sqrt(2 pi sigma^2)^ndim on the
    integer offsets |m_i| <= radius; the center weight is the density at
    zero (1/sqrt(2 pi) per axis), not renormalized after truncation.
    """
    if ndim not in (1, 2):
        raise ValueError("only 1-D and 2-D kernels supported")
    m = np.arange(-radius, radius + 1, dtype=np.float64)
    g1 = np.exp(-(m ** 2) / (2.0 * sigma ** 2)) / np.sqrt(2.0 * np.pi * sigma ** 2)
    return g1 if ndim == 1 else np.outer(g1, g1)


def _gamma_fields(u: np.ndarray, kernel: np.ndarray, delta: float):
    """Smoothed local magnitude and its diagonal self-term derivatives.

    gamma_n = sum_m G(m) |u_{n+m}| with |.| smoothed to sqrt(u^2+delta^2);
    only the m=0 term involves u_n, so the diagonal derivatives are the
    center weight times the smoothed-abs derivatives.
    """
    absu = np.sqrt(u ** 2 + delta ** 2)
    gamma = ndimage.correlate(absu, kernel, mode="wrap")
    g0 = float(kernel[tuple(s // 2 for s in kernel.shape)])
    return gamma, g0 * u / absu, g0 * delta ** 2 / absu ** 3


def _field_delta(u: np.ndarray) -> float:
    return 1e-3 * float(np.sqrt((u ** 2).mean())) + 1e-12


def joint_let_atoms(w, s, p, lambdas=JOINT_LAMBDAS, kernel: np.ndarray | None = None,
                    beta: float = DEFAULT_BETA, deltas=None) -> list:
    """The 8 inter-/intra-scale atoms of one subband.

    Modulators are ramp(1 - 4 lam gamma(s) / gamma(q)^2) with the
    denominator energy q in {w, p}; carriers are w and p; both lambdas are
    used, ordered (q=w,carrier=w), (q=p,carrier=w), (q=w,carrier=p),
    (q=p,carrier=p). The parent p is an exogenous predictor (built from
    neighboring scaling coefficients, never from (w_n, s_n)), so partials
    are taken w.r.t. (w_n, s_n) only; gamma's dependence on a
    coordinate is exactly its center kernel term.
    """
    w = np.asarray(w, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if kernel is None:
        kernel = gamma_kernel(ndim=w.ndim)
    if deltas is None:
        deltas = (_field_delta(w), _field_delta(s), _field_delta(p))
    dw, ds, dp = deltas

    A, A_s, A_ss = _gamma_fields(s, kernel, ds)
    Bw, Bw_w, Bw_ww = _gamma_fields(w, kernel, dw)
    Bp, _, _ = _gamma_fields(p, kernel, dp)
    eps_w = 1e-12 * (float((Bw ** 2).mean()) + 1.0)
    eps_p = 1e-12 * (float((Bp ** 2).mean()) + 1.0)

    zeros = np.zeros_like(w)
    atoms = []
    for carrier_is_w in (True, False):
        for denom_is_w in (True, False):
            B, B_w, B_ww, eps = (
                (Bw, Bw_w, Bw_ww, eps_w) if denom_is_w else (Bp, zeros, zeros, eps_p)
            )
            qe = B ** 2 + eps
            for lam in lambdas:
                u = 1.0 - 4.0 * lam * A / qe
                u_s = -4.0 * lam * A_s / qe
                u_ss = -4.0 * lam * A_ss / qe
                if denom_is_w:
                    u_w = 8.0 * lam * A * B * B_w / qe ** 2
                    u_ww = 8.0 * lam * A * (
                        (B_w ** 2 + B * B_ww) * qe - 4.0 * B ** 2 * B_w ** 2
                    ) / qe ** 3
                    u_ws = 8.0 * lam * A_s * B * B_w / qe ** 2
                else:
                    u_w = u_ww = u_ws = zeros
                g, dg, d2g = _smooth_pos3(u, beta)
                if carrier_is_w:
                    atoms.append(SubbandEvaluation(
                        theta=g * w,
                        d1=dg * u_w * w + g,
                        d2=dg * u_s * w,
                        d11=(d2g * u_w ** 2 + dg * u_ww) * w + 2.0 * dg * u_w,
                        d22=(d2g * u_s ** 2 + dg * u_ss) * w,
                        d12=(d2g * u_w * u_s + dg * u_ws) * w + dg * u_s,
                    ))
                else:
                    atoms.append(SubbandEvaluation(
                        theta=g * p,
                        d1=dg * u_w * p,
                        d2=dg * u_s * p,
                        d11=(d2g * u_w ** 2 + dg * u_ww) * p,
                        d22=(d2g * u_s ** 2 + dg * u_ss) * p,
                        d12=(d2g * u_w * u_s + dg * u_ws) * p,
                    ))
    return atoms


# ------------------------------------------------------- pyramid denoisers


def _subband_normal_system(w, s, K_j: float, atoms: list) -> NormalSystem:
    """Normal equations minimizing the subband risk over atom weights."""
    theta = np.stack([ev.theta.ravel() for ev in atoms])
    M = theta @ theta.T
    half = (s - K_j / 2).ravel()
    wv, sv = w.ravel(), s.ravel()
    c = np.array([
        float(wv @ ev.theta.ravel())
        - 4.0 * float(half @ ev.d1.ravel())
        - 4.0 * float(wv @ ev.d2.ravel())
        + 4.0 * float(wv @ (ev.d11 + ev.d22).ravel())
        + 8.0 * float(sv @ ev.d12.ravel())
        for ev in atoms
    ])
    return NormalSystem(M=M, c=c)


def _denoise_pyramid(y: np.ndarray, K: float, J: int, subband_fn):
    """Shared pyramid loop: process details, unbias the lowpass, invert.

    subband_fn(w, s, K_j, orientation) -> (theta, per-coefficient risk).
    The report's total risk recombines subband risks with the synthesis
    energy weights (each 2-D level carries 1/4 of the finer level's
    energy) plus the unbiased lowpass error estimate 4 sum(s - K_J/2).
    """
    y = np.asarray(y, dtype=np.float64)
    if (y < 0).any():
        raise ValueError("squared-magnitude data must be nonnegative")
    pyr = haar_dwt_analyze(y, J, dof=K)
    branch = 4.0 if pyr.ndim == 2 else 2.0
    per_band = {}
    total_sse = 0.0
    for j in range(1, J + 1):
        s = pyr.smooth_levels[j - 1]
        kj = pyr.dof(j)
        for orient, w in list(pyr.detail[j - 1].items()):
            theta, risk_j = subband_fn(w, s, kj, orient)
            pyr.detail[j - 1][orient] = theta
            per_band[f"{orient}{j}"] = risk_j
            total_sse += branch ** -j * w.size * risk_j
    s_top = pyr.smooth_levels[-1]
    k_top = pyr.dof(J)
    lowpass_sse = 4.0 * float((s_top - k_top / 2).sum())
    per_band["lowpass"] = lowpass_sse / s_top.size
    pyr.smooth_levels[-1] = s_top - k_top
    total_sse += branch ** -J * lowpass_sse
    n_pad = s_top.size * branch ** J
    estimate = haar_dwt_synthesize(pyr)
    return estimate, RiskReport(cure=total_sse / n_pad, per_band=per_band)


def cureshrink_denoise(y, K: float, J: int = 3):
    """Soft-threshold every detail subband with its risk-picked scale."""

    def fn(w, s, kj, orient):
        theta, a = cureshrink_subband(w, s, kj)
        ev = cureshrink_evaluation(w, s, a)
        return theta, cure_subband(w, s, kj, ev)

    return _denoise_pyramid(y, K, J, fn)


def haar_curelet_denoise(y, K: float, J: int = 3, lambdas=JOINT_LAMBDAS):
    """Per-subband 8-atom inter-/intra-scale expansion, weights by risk.

    Each detail subband gets its own normal system; the lowpass is
    unbiased by its accumulated dof (4^J K in 2-D).
    """

    def fn(w, s, kj, orient):
        p = parent_field(s, orient)
        atoms = joint_let_atoms(w, s, p, lambdas=lambdas)
        energies = np.array([float((ev.theta ** 2).sum()) for ev in atoms])
        live = _live_atoms(energies, float((w ** 2).sum()))
        a = np.zeros(len(atoms))
        if live.any():
            kept = [ev for ev, ok in zip(atoms, live) if ok]
            system = _subband_normal_system(w, s, kj, kept)
            a[live] = solve_weights(system.M, system.c)
        combined = combine_evaluations(atoms, a)
        return combined.theta, cure_subband(w, s, kj, combined)

    return _denoise_pyramid(y, K, J, fn)
