"""Lyapunov spectra of products of iid random matrices.

The estimator is the usual QR cocycle: push an orthonormal frame through
each factor, re-orthonormalize, and average the logs of the diagonal of R.
Two analytic references are provided:

``newman_exponent(W, k)``
    ``log(1/sqrt(W)) + (log 2 + psi((W - k + 1)/2)) / 2``, Newman's closed
    form.  It is exact for products of *real* Gaussian matrices with entry
    variance 1/W.
``complex_ginibre_exponent(W, k)``
    ``(psi(W - k + 1) - log W) / 2``, exact for complex Ginibre factors with
    E|a|^2 = 1/W, i.e. what :func:`chiralrbm.sampling.sample_ginibre`
    produces.  It coincides with ``newman_exponent(2W, 2k - 1)``.

Both approach ``-k/(2W)`` resp. ``-(2k - 1)/(4W)`` for large W.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .resolvent import COND_CAP, SingularMatrixError
from .sampling import RngStream, as_generator, sample_ginibre_stack
from .tables import table_to_csv

__all__ = [
    "EULER_GAMMA",
    "FactorGenerator",
    "LyapunovEstimate",
    "complex_ginibre_exponent",
    "digamma_half_integer",
    "estimate_lyapunov",
    "estimate_lyapunov_replicas",
    "lyapunov_rows",
    "newman_asymptotic",
    "newman_exponent",
    "qr_step",
    "write_lyapunov_csv",
]

EULER_GAMMA = 0.57721566490153286061
_LOG2 = math.log(2.0)


class PoleError(ValueError):
    """Digamma evaluated at a non-positive integer."""


def digamma_half_integer(twice_x: int) -> float:
    """psi(twice_x / 2) for a positive integer ``twice_x``.

    Built from psi(1) = -gamma and psi(1/2) = -gamma - 2 log 2 with the
    recurrence psi(x + 1) = psi(x) + 1/x.
    """
    if int(twice_x) != twice_x:
        raise ValueError(f"twice_x must be an integer, got {twice_x}")
    twice_x = int(twice_x)
    if twice_x <= 0:
        raise PoleError(f"digamma has a pole at x = {twice_x / 2}")
    m, odd = divmod(twice_x, 2)
    if odd:
        # x = m + 1/2; 1/(j + 1/2) = 2/(2j + 1)
        return math.fsum([-EULER_GAMMA, -2 * _LOG2] + [2.0 / (2 * j + 1) for j in range(m)])
    return math.fsum([-EULER_GAMMA] + [1.0 / j for j in range(1, m)])


def _check_index(W, k):
    if not 1 <= k <= W:
        raise IndexError(f"exponent index k={k} outside 1..{W}")


def newman_exponent(W: int, k: int) -> float:
    """k-th Lyapunov exponent from Newman's formula."""
    _check_index(W, k)
    return -0.5 * math.log(W) + 0.5 * (_LOG2 + digamma_half_integer(W - k + 1))


def newman_asymptotic(W: int, k: int) -> float:
    """Large-W form -k/(2W)."""
    _check_index(W, k)
    return -k / (2 * W)


def complex_ginibre_exponent(W: int, k: int) -> float:
    """k-th exponent for complex Ginibre factors with E|a|^2 = 1/W."""
    _check_index(W, k)
    return 0.5 * (digamma_half_integer(2 * (W - k + 1)) - math.log(W))


def qr_step(Q: np.ndarray, M: np.ndarray, tol: float = 1e-300) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``M @ Q = Q_next @ R`` with R having a positive real diagonal.

    Returns ``Q_next`` and ``log(diag(R))``.
    """
    Qn, R = np.linalg.qr(M @ Q)
    d = np.diagonal(R)
    mod = np.abs(d)
    if not np.all(mod > tol):
        raise SingularMatrixError("rank-deficient factor in QR step", math.inf)
    # move the phases of R's diagonal into Q
    Qn = Qn * (d / mod)
    return Qn, np.log(mod)


@dataclass
class FactorGenerator:
    """Iid factors for the QR cocycle.

    kind="ginibre" yields Ginibre(W) matrices.  kind="pair" yields
    ``(c A)° B = ((c A)^{-1})^* B`` with A, B independent; A is Ginibre(W)
    (``odd="ginibre"``) or the identity (``odd="identity"``), and c is
    ``odd_scale``.  One pair counts as one step.
    """

    kind: str
    W: int
    rng: object
    odd: str = "ginibre"
    odd_scale: float = 1.0
    cap: float = COND_CAP
    chunk: int = 1024
    failures: int = field(default=0, init=False)

    def __post_init__(self):
        if self.kind not in ("ginibre", "pair"):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.odd not in ("ginibre", "identity"):
            raise ValueError(f"unknown odd factor {self.odd!r}")

    def __iter__(self):
        g = as_generator(self.rng)
        W = self.W
        while True:
            if self.kind == "ginibre":
                yield from sample_ginibre_stack(W, self.chunk, g)
                continue
            if self.odd == "identity":
                yield from sample_ginibre_stack(W, self.chunk, g) / np.conj(self.odd_scale)
                continue
            draws = sample_ginibre_stack(W, 2 * self.chunk, g).reshape(self.chunk, 2, W, W)
            A = self.odd_scale * draws[:, 0]
            ok = np.linalg.cond(A) < self.cap
            pairs = np.empty_like(A)
            pairs[ok] = np.swapaxes(np.linalg.inv(A[ok]), -1, -2).conj() @ draws[ok, 1]
            for good, M in zip(ok, pairs):
                if good:
                    yield M
                else:
                    self.failures += 1
                    yield None


@dataclass(frozen=True)
class LyapunovEstimate:
    W: int
    gamma: np.ndarray
    std_error: np.ndarray
    steps: int
    burn_in: int = 0
    batch_size: int = 0
    order_violations: int = 0
    failures: int = 0

    def z_scores(self, reference) -> np.ndarray:
        """(gamma_k - reference(W, k)) / std_error_k."""
        ref = np.array([reference(self.W, k) for k in range(1, self.W + 1)])
        return (self.gamma - ref) / self.std_error


def _consume(factors, W, count, max_failure_fraction):
    """Yield ``count`` valid factors, aborting on too many ill-conditioned draws."""
    drawn = bad = 0
    it = iter(factors)
    got = 0
    while got < count:
        M = next(it)
        drawn += 1
        if M is None:
            bad += 1
            if bad > max_failure_fraction * count:
                raise SingularMatrixError(f"{bad} of {drawn} factors exceeded the condition cap")
            continue
        got += 1
        yield M


def estimate_lyapunov(gen: FactorGenerator, steps: int, burn_in: int = 100) -> LyapunovEstimate:
    """Time-average estimate of the full Lyapunov spectrum.

    Standard errors come from non-overlapping batch means with batch size
    ``round(sqrt(steps))``; trailing steps that do not fill a batch still
    enter the mean.
    """
    if steps < 100:
        raise ValueError("need at least 100 steps")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    W = gen.W
    Q = np.eye(W, dtype=complex)
    logs = np.empty((steps, W))
    factors = _consume(gen, W, burn_in + steps, 0.01)
    for _ in range(burn_in):
        Q, _ = qr_step(Q, next(factors))
    for i in range(steps):
        Q, logs[i] = qr_step(Q, next(factors))
    gamma = logs.mean(axis=0)
    batch = max(1, round(math.sqrt(steps)))
    nb = steps // batch
    means = logs[: nb * batch].reshape(nb, batch, W).mean(axis=1)
    err = means.std(axis=0, ddof=1) / math.sqrt(nb)
    violations = int(np.sum(np.diff(gamma) > 0))
    order = np.argsort(-gamma, kind="stable")
    return LyapunovEstimate(
        W=W,
        gamma=gamma[order],
        std_error=err[order],
        steps=steps,
        burn_in=burn_in,
        batch_size=batch,
        order_violations=violations,
        failures=gen.failures,
    )


def _replica(args):
    kind, W, rng, odd, odd_scale, steps, burn_in = args
    return estimate_lyapunov(FactorGenerator(kind, W, rng, odd=odd, odd_scale=odd_scale), steps, burn_in)


def estimate_lyapunov_replicas(
    kind: str,
    W: int,
    steps: int,
    rng: RngStream,
    replicas: int = 4,
    *,
    burn_in: int = 100,
    odd: str = "ginibre",
    odd_scale: float = 1.0,
    workers: int = 1,
) -> LyapunovEstimate:
    """Average of independent trajectories; the error is the spread across replicas.

    Replica r runs on ``rng.substream(r)``, so the result is independent of
    ``workers``.
    """
    if replicas < 2:
        raise ValueError("need at least two replicas for a spread-based error")
    jobs = [(kind, W, rng.substream(r), odd, odd_scale, steps, burn_in) for r in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_replica, jobs))
    else:
        runs = [_replica(j) for j in jobs]
    g = np.array([r.gamma for r in runs])
    return LyapunovEstimate(
        W=W,
        gamma=g.mean(axis=0),
        std_error=g.std(axis=0, ddof=1) / math.sqrt(replicas),
        steps=steps * replicas,
        burn_in=burn_in,
        batch_size=steps,
        order_violations=sum(r.order_violations for r in runs),
        failures=sum(r.failures for r in runs),
    )


LYAPUNOV_COLUMNS = (
    "W", "k", "gamma_hat", "std_error", "newman_value", "z_score", "ginibre_value", "ginibre_z_score",
)


def lyapunov_rows(est: LyapunovEstimate):
    """One row per exponent, compared to both analytic references."""
    for k in range(1, est.W + 1):
        g, e = float(est.gamma[k - 1]), float(est.std_error[k - 1])
        nv = newman_exponent(est.W, k)
        cv = complex_ginibre_exponent(est.W, k)
        yield {
            "W": est.W,
            "k": k,
            "gamma_hat": g,
            "std_error": e,
            "newman_value": nv,
            "z_score": (g - nv) / e,
            "ginibre_value": cv,
            "ginibre_z_score": (g - cv) / e,
        }


def write_lyapunov_csv(path, estimates) -> None:
    rows = [row for est in estimates for row in lyapunov_rows(est)]
    with open(path, "w", newline="") as fh:
        fh.write(table_to_csv(LYAPUNOV_COLUMNS, rows))
