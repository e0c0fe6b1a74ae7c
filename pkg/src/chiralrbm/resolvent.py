"""Green's function blocks of block-tridiagonal Hamiltonians.

Three routes to ``(H - z)^{-1}_{x,y}``:

* :func:`zero_energy_corner_block` -- the O(n) alternating product for the
  (1, n) block of a chiral operator at z = 0,
* :func:`resolvent_block` -- a dense LU solve for small N, a pivoted band
  LU otherwise,
* :func:`fractional_moment_estimate` / :func:`log_norm_corner` -- Monte
  Carlo averages over model draws.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, onenormest

from .model import (
    BlockTridiagonalOperator,
    build_chiral_model,
    build_full_model,
    build_general_chiral_model,
    to_dense,
)
from .sampling import RngStream
from .tables import table_to_csv

__all__ = [
    "COND_CAP",
    "DENSE_CAP",
    "FractionalMomentEstimate",
    "NearSpectrumError",
    "NotInvertibleError",
    "ResolventBlock",
    "SingularMatrixError",
    "block_norm",
    "dagger_inverse",
    "fractional_moment_estimate",
    "fractional_moment_samples",
    "log_norm_corner",
    "resolvent_block",
    "write_samples_csv",
    "zero_energy_corner_block",
]

COND_CAP = 1e12
DENSE_CAP = 2048

MODEL_BUILDERS = {
    "full": build_full_model,
    "chiral": build_chiral_model,
    "general_chiral": build_general_chiral_model,
}


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix that had to be inverted is singular or too ill-conditioned."""

    def __init__(self, message, condition=math.inf):
        super().__init__(f"{message} (condition estimate {condition:.3g})")
        self.condition = condition


class NearSpectrumError(SingularMatrixError):
    """z is (numerically) an eigenvalue of H."""


class NotInvertibleError(SingularMatrixError):
    """H is structurally singular: a chiral operator with an odd block count at z = 0."""

    def __init__(self, message):
        super().__init__(message, math.inf)


@dataclass(frozen=True)
class ResolventBlock:
    x: int
    y: int
    z: complex
    block: np.ndarray
    norm: float


@dataclass(frozen=True)
class FractionalMomentEstimate:
    s: float
    mean: float
    std_error: float
    samples: int
    failures: int = 0

    @property
    def failure_fraction(self) -> float:
        return self.failures / (self.samples + self.failures)


def block_norm(block: np.ndarray, norm: str = "op") -> float:
    """Operator (largest singular value) or Frobenius norm of a block."""
    if norm == "op":
        return float(np.linalg.norm(block, 2))
    if norm == "fro":
        return float(np.linalg.norm(block, "fro"))
    raise ValueError(f"unknown norm {norm!r}; use 'op' or 'fro'")


def _inverse(M: np.ndarray, cap: float) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    cond = np.linalg.cond(M)
    if not cond < cap:
        raise SingularMatrixError("matrix is singular to working precision", cond)
    return np.linalg.inv(M)


def dagger_inverse(M: np.ndarray, cap: float = COND_CAP) -> np.ndarray:
    """(M^{-1})^*, equivalently (M^*)^{-1}."""
    return _inverse(M, cap).conj().T


def zero_energy_corner_block(H: BlockTridiagonalOperator, cap: float = COND_CAP) -> np.ndarray:
    """Block (1, n) of H^{-1} for a chiral operator.

    With the sign layout of :class:`BlockTridiagonalOperator` the block is

        (-1)^{n/2} T_1^{-1} T_2^* T_3^{-1} T_4^* ... T_{n-1}^{-1},

    checked against dense inversion in the test suite.  Its singular values
    are those of the conjugate-transposed ordering ``T_1° T_2 T_3° ...``
    up to the reversal of factors, which has the same law for iid blocks.
    """
    if not H.is_chiral():
        raise ValueError("corner formula needs V_j = 0 for all j")
    n = H.n
    if n % 2:
        raise NotInvertibleError(f"chiral operator with odd block count n={n} is singular")
    W = H.W
    eye = np.eye(W)
    out = np.eye(W, dtype=complex)
    for j, t in enumerate(H.T, start=1):
        if j % 2:
            # identity hoppings in the chiral model need no solve
            if not np.array_equal(t, eye):
                out = out @ _inverse(t, cap)
        else:
            out = out @ t.conj().T
    return out if (n // 2) % 2 == 0 else -out


def _dense_block(H, z, x, y, cap):
    W = H.W
    A = to_dense(H) - z * np.eye(H.N)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    anorm = np.linalg.norm(A, 1)
    if anorm == 0:
        raise NearSpectrumError("H - z vanishes", math.inf)
    rcond, info = sla.lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or not rcond > 1.0 / cap:
        raise NearSpectrumError(f"z={z} is numerically in the spectrum", 1.0 / rcond if rcond > 0 else math.inf)
    rhs = np.zeros((H.N, W), dtype=complex)
    rhs[(y - 1) * W:y * W] = np.eye(W)
    col = sla.lu_solve((lu, piv), rhs, check_finite=False)
    return col[(x - 1) * W:x * W]


def _band_storage(H, z):
    """LAPACK general-band storage of H - z with kl = ku = 2W - 1."""
    W, N = H.W, H.N
    k = 2 * W - 1
    ab = np.zeros((3 * k + 1, N), dtype=complex)
    r, c = np.indices((W, W))
    diag, lower, upper = H.shifted(z)
    blocks = [(x, x, b) for x, b in enumerate(diag)]
    blocks += [(x + 1, x, b) for x, b in enumerate(lower)]
    blocks += [(x, x + 1, b) for x, b in enumerate(upper)]
    for bx, by, b in blocks:
        i = bx * W + r
        j = by * W + c
        ab[2 * k + i - j, j] = b
    return ab, k


def _banded_block(H, z, x, y, cap):
    """Column y of (H - z)^{-1} by pivoted band LU, then slice row x.

    Cost is O(N W^2); the condition number is estimated with a Hager-Higham
    1-norm estimate of the inverse driven by the same factorization.
    """
    W, N = H.W, H.N
    ab, k = _band_storage(H, z)
    anorm = np.abs(ab).sum(axis=0).max()
    lub, piv, info = sla.lapack.zgbtrf(ab, k, k)
    if info != 0 or anorm == 0:
        raise NearSpectrumError(f"z={z} is exactly in the spectrum", math.inf)

    def solve(rhs, trans=0):
        out, info = sla.lapack.zgbtrs(lub, k, k, rhs, piv, trans=trans)
        return out

    inv_op = LinearOperator(
        (N, N),
        matvec=lambda v: solve(np.asarray(v, dtype=complex).reshape(N, -1)),
        rmatvec=lambda v: solve(np.asarray(v, dtype=complex).reshape(N, -1), trans=2),
        dtype=complex,
    )
    cond = anorm * onenormest(inv_op)
    if not cond < cap:
        raise NearSpectrumError(f"z={z} is numerically in the spectrum", cond)
    rhs = np.zeros((N, W), dtype=complex)
    rhs[(y - 1) * W:y * W] = np.eye(W)
    return solve(rhs)[(x - 1) * W:x * W]


def resolvent_block(
    H: BlockTridiagonalOperator,
    z: complex,
    x: int,
    y: int,
    *,
    dense_cap: int = DENSE_CAP,
    cap: float = COND_CAP,
    norm: str = "op",
) -> ResolventBlock:
    """Block (x, y) of (H - z)^{-1}, 1-based block indices.

    Dense LU when ``N <= dense_cap``, otherwise a pivoted LU of the
    (4W - 1)-wide band.  Both routes refuse to answer when the estimated
    condition number of H - z reaches ``cap``.
    """
    if not (1 <= x <= H.n and 1 <= y <= H.n):
        raise IndexError(f"block index ({x}, {y}) outside 1..{H.n}")
    z = complex(z)
    if H.N <= dense_cap:
        block = _dense_block(H, z, x, y, cap)
    else:
        block = _banded_block(H, z, x, y, cap)
    return ResolventBlock(x, y, z, block, block_norm(block, norm))


# Monte Carlo ---------------------------------------------------------------

def _check_model_kind(kind):
    kind = kind.replace("-", "_")
    if kind not in MODEL_BUILDERS:
        raise ValueError(f"unknown model kind {kind!r}; choose from {sorted(MODEL_BUILDERS)}")
    return kind


def _one_sample(args):
    n, W, z, x, y, kind, stream, norm, dense_cap = args
    H = MODEL_BUILDERS[kind](n, W, stream)
    try:
        if z == 0 and kind != "full" and (x, y) == (1, n):
            value = block_norm(zero_energy_corner_block(H), norm)
        else:
            value = resolvent_block(H, z, x, y, dense_cap=dense_cap, norm=norm).norm
    except SingularMatrixError:
        return math.nan
    return math.log(value) if value > 0 else -math.inf


def _map(func, jobs, workers):
    if workers is None or workers <= 1:
        return [func(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs, chunksize=chunk))


def fractional_moment_samples(
    n, W, z, x, y, samples, rng: RngStream, model_kind="full", *, norm="op", workers=1, dense_cap=DENSE_CAP
) -> np.ndarray:
    """Per-sample ``log ||(H - z)^{-1}_{x,y}||``; NaN marks a failed sample.

    Sample i is drawn from ``rng.substream(i)``, so the output does not
    depend on ``workers``.
    """
    kind = _check_model_kind(model_kind)
    z = complex(z)
    if z == 0 and kind != "full" and n % 2:
        raise NotInvertibleError(f"chiral operator with odd block count n={n} is singular at z=0")
    jobs = [(n, W, z, x, y, kind, rng.substream(i), norm, dense_cap) for i in range(samples)]
    return np.array(_map(_one_sample, jobs, workers), dtype=float)


def _moment_from_logs(logs: np.ndarray, s: float, max_failure: float = 0.5) -> FractionalMomentEstimate:
    ok = logs[~np.isnan(logs)]
    failures = len(logs) - len(ok)
    if failures > max_failure * len(logs):
        raise SingularMatrixError(f"{failures} of {len(logs)} samples hit the spectrum")
    if len(ok) < 2:
        raise SingularMatrixError("fewer than two successful samples")
    values = np.exp(s * ok)
    return FractionalMomentEstimate(
        s=s,
        mean=float(values.mean()),
        std_error=float(values.std(ddof=1) / math.sqrt(len(values))),
        samples=len(ok),
        failures=failures,
    )


def fractional_moment_estimate(
    n, W, z, s, x, y, samples, rng: RngStream, model_kind="full", *, norm="op", workers=1
) -> FractionalMomentEstimate:
    """Monte Carlo estimate of E ||(H - z)^{-1}_{x,y}||^s over model draws.

    Failed samples (z numerically in the spectrum) are excluded and counted;
    more than half failing is an error.
    """
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    if samples < 2:
        raise ValueError("need at least two samples")
    logs = fractional_moment_samples(n, W, z, x, y, samples, rng, model_kind, norm=norm, workers=workers)
    return _moment_from_logs(logs, s)


def _corner_log_norm(args):
    n, W, stream, norm = args
    H = build_chiral_model(n, W, stream)
    try:
        return math.log(block_norm(zero_energy_corner_block(H), norm))
    except SingularMatrixError:
        return math.nan


def log_norm_corner(n: int, W: int, samples: int, rng: RngStream, *, norm="op", workers=1) -> np.ndarray:
    """``log ||(H^{-1})_{1,n}||`` for ``samples`` independent chiral draws."""
    if n % 2:
        raise NotInvertibleError(f"chiral operator with odd block count n={n} is singular")
    jobs = [(n, W, rng.substream(i), norm) for i in range(samples)]
    return np.array(_map(_corner_log_norm, jobs, workers), dtype=float)


SAMPLE_COLUMNS = ("sample_index", "n", "W", "z_re", "z_im", "s", "log_norm", "failed")


def sample_rows(logs, n, W, z, s):
    z = complex(z)
    for i, value in enumerate(logs):
        failed = bool(np.isnan(value))
        yield {
            "sample_index": i,
            "n": n,
            "W": W,
            "z_re": z.real,
            "z_im": z.imag,
            "s": s,
            "log_norm": None if failed else float(value),
            "failed": int(failed),
        }


def write_samples_csv(path, logs, n, W, z, s) -> None:
    """Per-sample raw output, one row per draw; a failed draw has an empty log_norm."""
    with open(path, "w", newline="") as fh:
        fh.write(table_to_csv(SAMPLE_COLUMNS, sample_rows(logs, n, W, z, s)))
