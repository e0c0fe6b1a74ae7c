"""Block-tridiagonal random band Hamiltonians and the chiral grading.

The operator has Hermitian diagonal blocks ``V[0..n-1]`` and hopping blocks
``T[0..n-2]``; block ``(x+1, x)`` of the dense matrix is ``-T[x]`` and block
``(x, x+1)`` is ``-T[x]^*``.  Block indices in the public API are 1-based to
match the usual physics labelling ``V_1..V_n``, ``T_1..T_{n-1}``; the Python
lists are of course 0-based.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sampling import InvalidDimensionError, as_generator, sample_ginibre, sample_gue

__all__ = [
    "BlockTridiagonalOperator",
    "ChiralOperator",
    "anticommutator_norm",
    "build_chiral_model",
    "build_full_model",
    "build_general_chiral_model",
    "from_json",
    "load",
    "save",
    "to_dense",
    "to_json",
]

FORMAT_NAME = "chiralrbm.block-tridiagonal"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class BlockTridiagonalOperator:
    """H = tridiag(-T, V, -T^*) with n blocks of size W x W.

    Attributes
    ----------
    V : tuple of ndarray
        ``n`` Hermitian diagonal blocks.
    T : tuple of ndarray
        ``n - 1`` hopping blocks; the sub-diagonal carries ``-T_j`` and the
        super-diagonal ``-T_j^*``.
    """

    V: tuple
    T: tuple

    def __post_init__(self):
        V = tuple(np.array(v, dtype=complex) for v in self.V)
        T = tuple(np.array(t, dtype=complex) for t in self.T)
        if len(V) < 1:
            raise InvalidDimensionError("need at least one diagonal block")
        if len(T) != len(V) - 1:
            raise InvalidDimensionError(f"{len(V)} diagonal blocks need {len(V) - 1} hopping blocks, got {len(T)}")
        W = V[0].shape[0]
        for b in V + T:
            if b.shape != (W, W):
                raise InvalidDimensionError(f"block of shape {b.shape} in a W={W} operator")
            b.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "T", T)

    @property
    def n(self) -> int:
        return len(self.V)

    @property
    def W(self) -> int:
        return self.V[0].shape[0]

    @property
    def N(self) -> int:
        return self.n * self.W

    def is_chiral(self) -> bool:
        """True when every diagonal block vanishes exactly."""
        return not any(np.any(v) for v in self.V)

    def shifted(self, z: complex) -> tuple[list, list, list]:
        """Diagonal, lower and upper blocks of ``H - z``."""
        eye = np.eye(self.W)
        diag = [v - z * eye for v in self.V]
        lower = [-t for t in self.T]
        upper = [-t.conj().T for t in self.T]
        return diag, lower, upper


@dataclass(frozen=True)
class ChiralOperator:
    """The grading Pi = (-1)^X (x) 1_W, with Pi_xx = (-1)^x for x = 1..n."""

    n: int
    W: int

    def signs(self) -> np.ndarray:
        return (-1.0) ** np.arange(1, self.n + 1)

    def to_dense(self) -> np.ndarray:
        return np.diag(np.repeat(self.signs(), self.W))


def _check_blocks(n, W):
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"need at least two blocks, got n={n}")
    if int(W) != W or W < 1:
        raise InvalidDimensionError(f"block size must be a positive integer, got {W}")
    return int(n), int(W)


def build_full_model(n: int, W: int, rng) -> BlockTridiagonalOperator:
    """V_j iid GUE(W), T_j iid Ginibre(W)."""
    n, W = _check_blocks(n, W)
    g = as_generator(rng)
    V = [sample_gue(W, g) for _ in range(n)]
    T = [sample_ginibre(W, g) for _ in range(n - 1)]
    return BlockTridiagonalOperator(V, T)


def build_chiral_model(n: int, W: int, rng) -> BlockTridiagonalOperator:
    """V_j = 0, T_j = 1 for odd j, T_j ~ Ginibre(W) for even j."""
    n, W = _check_blocks(n, W)
    g = as_generator(rng)
    zero = np.zeros((W, W), dtype=complex)
    T = [np.eye(W, dtype=complex) if j % 2 else sample_ginibre(W, g) for j in range(1, n)]
    return BlockTridiagonalOperator([zero] * n, T)


def build_general_chiral_model(n: int, W: int, rng) -> BlockTridiagonalOperator:
    """V_j = 0 and every T_j iid Ginibre(W)."""
    n, W = _check_blocks(n, W)
    g = as_generator(rng)
    zero = np.zeros((W, W), dtype=complex)
    return BlockTridiagonalOperator([zero] * n, [sample_ginibre(W, g) for _ in range(n - 1)])


def to_dense(H: BlockTridiagonalOperator) -> np.ndarray:
    W = H.W
    out = np.zeros((H.N, H.N), dtype=complex)
    for x, v in enumerate(H.V):
        out[x * W:(x + 1) * W, x * W:(x + 1) * W] = v
    for x, t in enumerate(H.T):
        lo, mid, hi = x * W, (x + 1) * W, (x + 2) * W
        out[mid:hi, lo:mid] = -t
        out[lo:mid, mid:hi] = -t.conj().T
    return out


def anticommutator_norm(H: BlockTridiagonalOperator) -> float:
    """Frobenius norm of H Pi + Pi H.

    Off-diagonal blocks pick up opposite signs and cancel exactly, so the
    result is ``2 * sqrt(sum_j ||V_j||_F^2)``.
    """
    s = ChiralOperator(H.n, H.W).signs()
    total = 0.0
    for x, v in enumerate(H.V):
        total += np.linalg.norm(2 * s[x] * v) ** 2
    for x, t in enumerate(H.T):
        # block (x+1, x) of H Pi + Pi H is -t (s[x] + s[x+1])
        total += 2 * np.linalg.norm((s[x] + s[x + 1]) * t) ** 2
    return float(np.sqrt(total))


def _pack(block: np.ndarray) -> list:
    return [[float(a.real), float(a.imag)] for a in block.ravel()]


def _unpack(pairs, W) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(W * W, 2)
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(W, W)


def to_json(H: BlockTridiagonalOperator, meta: dict | None = None) -> dict:
    """JSON-ready container.

    Layout: ``{"format", "version", "n", "W", "V": [...], "T": [...], "meta"}``
    where each block is a row-major list of ``[re, im]`` pairs of length W*W.
    """
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n": H.n,
        "W": H.W,
        "V": [_pack(v) for v in H.V],
        "T": [_pack(t) for t in H.T],
    }
    if meta is not None:
        doc["meta"] = meta
    return doc


def from_json(doc: dict) -> BlockTridiagonalOperator:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} document")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported container version {doc.get('version')}")
    n, W = int(doc["n"]), int(doc["W"])
    V = [_unpack(b, W) for b in doc["V"]]
    T = [_unpack(b, W) for b in doc["T"]]
    if len(V) != n:
        raise ValueError(f"header says n={n} but {len(V)} diagonal blocks stored")
    return BlockTridiagonalOperator(V, T)


def save(H: BlockTridiagonalOperator, path, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(to_json(H, meta)))


def load(path) -> BlockTridiagonalOperator:
    return from_json(json.loads(Path(path).read_text()))
