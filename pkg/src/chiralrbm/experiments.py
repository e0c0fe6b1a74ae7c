"""Decay scans, fractional-moment scans and scaling fits.

Rate conventions: the chiral corner block at ``n`` blocks is a product of
``(n - 2) / 2`` Ginibre factors, so a per-factor Lyapunov exponent ``gamma``
shows up as a per-block decay rate ``mu = -gamma / 2``.  That factor of two
lives in :func:`per_block_rate` and nowhere else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lyapunov import complex_ginibre_exponent, newman_exponent
from .resolvent import (
    NotInvertibleError,
    SingularMatrixError,
    _moment_from_logs,
    fractional_moment_samples,
    log_norm_corner,
)
from .sampling import RngStream

__all__ = [
    "CellStats",
    "ConfigError",
    "DecayFit",
    "DecayScan",
    "DecayScanConfig",
    "ExcessFailureError",
    "FmcScanConfig",
    "LineFit",
    "ScalingFit",
    "fit_exponential_decay",
    "fit_power_law",
    "per_block_rate",
    "run_decay_scan",
    "run_fractional_moment_scan",
]

MAX_FIT_FAILURE = 0.01
FIT_MIN_BLOCKS_PER_WIDTH = 8


class ConfigError(ValueError):
    """Invalid scan configuration."""


class ExcessFailureError(SingularMatrixError):
    """Too many Monte Carlo samples failed numerically."""


def per_block_rate(gamma_per_factor: float) -> float:
    """Decay rate per block index for a per-factor Lyapunov exponent."""
    return -gamma_per_factor / 2


# Fits ----------------------------------------------------------------------

@dataclass(frozen=True)
class LineFit:
    """``y = intercept - slope * x`` by weighted least squares."""

    slope: float
    intercept: float
    slope_se: float
    intercept_se: float
    chi2: float
    dof: int

    @property
    def goodness(self) -> float:
        """Reduced chi-square."""
        return self.chi2 / self.dof if self.dof else math.nan


def fit_exponential_decay(points) -> LineFit:
    """Fit ``mean_log_norm = intercept - slope * n``.

    Parameters
    ----------
    points : iterable of (n, mean_log_norm, std_error)

    The standard errors are taken as absolute; parameter errors come from
    the inverse of the weighted normal matrix.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 3:
        raise ValueError("need at least three (n, value, std_error) points")
    x, y, se = pts.T
    if len(np.unique(x)) < 3:
        raise ValueError("need at least three distinct n")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite point in decay fit")
    if np.any(se <= 0):
        raise ValueError("zero or negative standard error; weights undefined")
    w = 1.0 / se**2
    X = np.column_stack([np.ones_like(x), -x])
    normal = X.T @ (w[:, None] * X)
    cov = np.linalg.inv(normal)
    intercept, slope = cov @ (X.T @ (w * y))
    resid = y - X @ np.array([intercept, slope])
    return LineFit(
        slope=float(slope),
        intercept=float(intercept),
        slope_se=float(math.sqrt(cov[1, 1])),
        intercept_se=float(math.sqrt(cov[0, 0])),
        chi2=float(np.sum(w * resid**2)),
        dof=len(x) - 2,
    )


@dataclass(frozen=True)
class ScalingFit:
    """``log mu = log prefactor - alpha * log W``."""

    W: tuple
    mu: tuple
    alpha: float
    prefactor: float
    rss: float


def fit_power_law(W_list, mu_list) -> ScalingFit:
    W = np.asarray(W_list, dtype=float)
    mu = np.asarray(mu_list, dtype=float)
    if W.shape != mu.shape:
        raise ValueError("W and mu lists differ in length")
    if len(np.unique(W)) < 3:
        raise ValueError("need at least three distinct W")
    if np.any(W <= 0) or np.any(mu <= 0):
        raise ValueError("power-law fit needs positive W and mu")
    lw, lm = np.log(W), np.log(mu)
    (neg_alpha, logc), rss, *_ = np.polyfit(lw, lm, 1, full=True)
    return ScalingFit(
        W=tuple(W_list),
        mu=tuple(float(m) for m in mu),
        alpha=float(-neg_alpha),
        prefactor=float(math.exp(logc)),
        rss=float(rss[0]) if len(rss) else 0.0,
    )


# Decay scan ----------------------------------------------------------------

@dataclass(frozen=True)
class DecayScanConfig:
    W_list: tuple
    n_list: tuple
    samples: int = 200
    seed: int = 0
    norm: str = "op"
    fit_min_n: int | None = None

    def fit_threshold(self, W: int) -> int:
        """Smallest n entering the decay fit.

        Below roughly 8W blocks the corner norm has not yet reached its
        asymptotic slope (the product is still in the short, delocalized
        regime), so those cells are reported but not fitted.
        """
        return FIT_MIN_BLOCKS_PER_WIDTH * W if self.fit_min_n is None else self.fit_min_n

    def validate(self):
        if not self.W_list:
            raise ConfigError("empty W list")
        if any(int(W) != W or W < 1 for W in self.W_list):
            raise ConfigError("block sizes must be positive integers")
        if any(n % 2 or n < 2 for n in self.n_list):
            raise ConfigError("zero-energy chiral scans need even n >= 2")
        if len(set(self.n_list)) < 3:
            raise ConfigError("at least three distinct n are needed for a decay fit")
        if self.samples < 30:
            raise ConfigError("need at least 30 samples per cell")
        for W in self.W_list:
            fitted = {n for n in self.n_list if n >= self.fit_threshold(W)}
            if len(fitted) < 3:
                raise ConfigError(
                    f"W={W}: only {len(fitted)} distinct n >= {self.fit_threshold(W)}; the decay fit needs three"
                )
        return self


@dataclass(frozen=True)
class CellStats:
    W: int
    n: int
    samples: int
    failures: int
    mean_log_norm: float
    std_error: float
    log_mean_norm: float
    log_mean_std_error: float

    @property
    def failure_fraction(self) -> float:
        return self.failures / (self.samples + self.failures)


@dataclass(frozen=True)
class DecayFit:
    """Per-W decay rate from the mean of log-norms, plus the log-of-mean column."""

    W: int
    mu_hat: float
    mu_se: float
    intercept: float
    goodness: float
    mu_hat_log_mean: float
    mu_se_log_mean: float
    mu_newman: float
    mu_ginibre: float

    @property
    def half_width(self) -> float:
        """95% normal confidence half-width of mu_hat."""
        return 1.959963984540054 * self.mu_se


@dataclass
class DecayScan:
    config: DecayScanConfig
    cells: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def mu_hat(self):
        return {W: f.mu_hat for W, f in self.fits.items()}


def cell_stream(seed: int, W: int, n: int) -> RngStream:
    """Stream for grid cell (W, n); independent of the rest of the grid."""
    return RngStream(seed).substream(W).substream(n)


def summarize_cell(W, n, logs) -> CellStats:
    ok = logs[~np.isnan(logs)]
    m = len(ok)
    if m < 2:
        raise ExcessFailureError(f"cell W={W}, n={n}: fewer than two successful samples")
    norms = np.exp(ok)
    mean_norm = norms.mean()
    return CellStats(
        W=W,
        n=n,
        samples=m,
        failures=len(logs) - m,
        mean_log_norm=float(ok.mean()),
        std_error=float(ok.std(ddof=1) / math.sqrt(m)),
        log_mean_norm=float(math.log(mean_norm)),
        # delta method: se(log mean) = se(mean) / mean
        log_mean_std_error=float(norms.std(ddof=1) / math.sqrt(m) / mean_norm),
    )


def _fit_cells(W, cells, min_n) -> DecayFit:
    usable = [c for c in cells if c.failure_fraction < MAX_FIT_FAILURE and c.n >= min_n]
    if len({c.n for c in usable}) < 3:
        raise ExcessFailureError(f"W={W}: fewer than three cells below the failure threshold")
    main = fit_exponential_decay((c.n, c.mean_log_norm, c.std_error) for c in usable)
    try:
        side = fit_exponential_decay((c.n, c.log_mean_norm, c.log_mean_std_error) for c in usable)
        side_mu, side_se = side.slope, side.slope_se
    except ValueError:
        side_mu = side_se = math.nan
    return DecayFit(
        W=W,
        mu_hat=main.slope,
        mu_se=main.slope_se,
        intercept=main.intercept,
        goodness=main.goodness,
        mu_hat_log_mean=side_mu,
        mu_se_log_mean=side_se,
        mu_newman=per_block_rate(newman_exponent(W, 1)),
        mu_ginibre=per_block_rate(complex_ginibre_exponent(W, 1)),
    )


def run_decay_scan(config: DecayScanConfig, workers: int = 1) -> DecayScan:
    """Chiral zero-energy corner decay over a (W, n) grid.

    Each cell records the mean and standard error of ``log ||(H^{-1})_{1,n}||``
    and the log of the mean norm.  Per W, the mean log-norm of the cells with
    ``n >= config.fit_threshold(W)`` is fitted linearly in n; the slope is
    the per-block decay rate ``mu_hat``.

    Since log E||.|| >= E log||.||, the log-of-mean column bounds the primary
    statistic from above at every n.
    """
    config.validate()
    scan = DecayScan(config)
    for W in config.W_list:
        cells = []
        for n in sorted(config.n_list):
            logs = log_norm_corner(n, W, config.samples, cell_stream(config.seed, W, n),
                                   norm=config.norm, workers=workers)
            scan.raw[W, n] = logs
            cells.append(summarize_cell(W, n, logs))
        scan.cells.extend(cells)
        scan.fits[W] = _fit_cells(W, cells, config.fit_threshold(W))
    return scan


# Fractional-moment scan ----------------------------------------------------

@dataclass(frozen=True)
class FmcScanConfig:
    W_list: tuple
    n_list: tuple
    z_list: tuple
    s_list: tuple
    pairs: tuple = ((1, None),)
    samples: int = 100
    seed: int = 0
    model: str = "full"
    norm: str = "op"

    def validate(self):
        if not self.z_list:
            raise ConfigError("empty z list")
        if not self.s_list or any(not 0 < s < 1 for s in self.s_list):
            raise ConfigError("fractional exponents must lie in (0, 1)")
        if not self.W_list or not self.n_list:
            raise ConfigError("empty W or n list")
        if self.samples < 2:
            raise ConfigError("need at least two samples")
        if self.model.replace("-", "_") not in ("full", "chiral", "general_chiral"):
            raise ConfigError(f"unknown model {self.model!r}")
        return self


FMC_COLUMNS = ("W", "n", "x", "y", "z_re", "z_im", "s", "mean", "std_error", "samples", "failures")


def run_fractional_moment_scan(config: FmcScanConfig, workers: int = 1, raw: dict | None = None) -> list[dict]:
    """E ||(H - z)^{-1}_{x,y}||^s over a (W, n, z, (x, y), s) grid.

    Each (W, n, z, x, y) cell draws one set of models and reuses it for
    every s.  ``y = None`` stands for the last block.  If ``raw`` is a dict
    the per-sample log-norms are stored in it under ``(W, n, z, x, y)``.
    """
    config.validate()
    rows = []
    root = RngStream(config.seed)
    for W in config.W_list:
        for n in config.n_list:
            for zi, z in enumerate(config.z_list):
                for x, y in config.pairs:
                    y = n if y is None else y
                    if not (1 <= x <= n and 1 <= y <= n):
                        raise ConfigError(f"block pair ({x}, {y}) outside 1..{n}")
                    stream = root.substream(W).substream(n).substream(zi).substream(x).substream(y)
                    try:
                        logs = fractional_moment_samples(
                            n, W, z, x, y, config.samples, stream, config.model,
                            norm=config.norm, workers=workers,
                        )
                    except NotInvertibleError as err:
                        raise ConfigError(str(err)) from err
                    if raw is not None:
                        raw[W, n, complex(z), x, y] = logs
                    for s in config.s_list:
                        try:
                            est = _moment_from_logs(logs, s)
                        except SingularMatrixError as err:
                            raise ExcessFailureError(str(err)) from err
                        z = complex(z)
                        rows.append({
                            "W": W, "n": n, "x": x, "y": y,
                            "z_re": z.real, "z_im": z.imag, "s": float(s),
                            "mean": est.mean, "std_error": est.std_error,
                            "samples": est.samples, "failures": est.failures,
                        })
    return rows


# Tables --------------------------------------------------------------------

DECAY_CELL_COLUMNS = (
    "W", "n", "samples", "failures", "mean_log_norm", "std_error", "log_mean_norm", "log_mean_std_error",
)
DECAY_FIT_COLUMNS = (
    "W", "mu_hat", "mu_se", "half_width", "intercept", "goodness",
    "mu_hat_log_mean", "mu_se_log_mean", "mu_newman", "mu_ginibre",
)


def decay_cell_rows(scan: DecayScan):
    for c in scan.cells:
        yield {col: getattr(c, col) for col in DECAY_CELL_COLUMNS}


def decay_fit_rows(scan: DecayScan):
    for f in scan.fits.values():
        yield {col: getattr(f, col) for col in DECAY_FIT_COLUMNS}
