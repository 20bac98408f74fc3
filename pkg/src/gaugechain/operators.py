"""Dense hermitian operator algebra on a chain of d-level sites.

Operators are plain complex ``numpy`` arrays.  Sites are labelled ``1..n``
and the first site is the most significant tensor factor, so that
``embed(a, {1}, 2) == kron(a, I)``.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CapacityError, DomainError, HermiticityError, SingularityError

MAX_DIM = 2**14
HERMITIAN_TOL = 1e-12
LOG_FLOOR = 1e-14

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def check_capacity(dim: int, max_dim: int | None = None, d: int | None = None) -> None:
    cap = MAX_DIM if max_dim is None else max_dim
    if dim > cap:
        suggestion = None
        if d is not None and d > 1:
            suggestion = int(math.floor(math.log(cap) / math.log(d) + 1e-12))
        raise CapacityError(dim, cap, suggestion)


def hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(a + a^*)/2`` after checking that ``a`` was hermitian to ``tol``.

    The deviation is measured in relative Frobenius norm.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise HermiticityError(f"expected a square matrix, got shape {a.shape}")
    scale = np.linalg.norm(a)
    dev = np.linalg.norm(a - a.conj().T)
    if scale > 0 and dev > tol * scale:
        raise HermiticityError(f"relative hermiticity defect {dev / scale:.3e} exceeds {tol:g}")
    return 0.5 * (a + a.conj().T)


def is_diagonal(a: np.ndarray, atol: float = 0.0) -> bool:
    off = a - np.diag(np.diag(a))
    if atol == 0.0:
        return not np.any(off)
    return bool(np.max(np.abs(off), initial=0.0) <= atol)


def site_count(dim: int, d: int) -> int:
    k = int(round(math.log(dim) / math.log(d))) if dim > 1 else 0
    if d**k != dim:
        raise DomainError(f"dimension {dim} is not a power of local dimension {d}")
    return k


def tensor(a: np.ndarray, b: np.ndarray, max_dim: int | None = None) -> np.ndarray:
    check_capacity(a.shape[0] * b.shape[0], max_dim)
    return np.kron(a, b)


def kron_all(ops: Sequence[np.ndarray], max_dim: int | None = None) -> np.ndarray:
    dim = int(np.prod([op.shape[0] for op in ops])) if ops else 1
    check_capacity(dim, max_dim)
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def tensor_power(a: np.ndarray, n: int, max_dim: int | None = None) -> np.ndarray:
    a = np.asarray(a)
    check_capacity(a.shape[0] ** n, max_dim, a.shape[0])
    return kron_all([a] * n, max_dim)


def _normalize_support(support: Iterable[int], n: int) -> list[int]:
    sites = sorted(set(int(s) for s in support))
    if not sites:
        raise DomainError("support must be nonempty")
    if sites[0] < 1 or sites[-1] > n:
        raise DomainError(f"support {sites} not contained in [1, {n}]")
    return sites


def embed(a: np.ndarray, support: Iterable[int], n: int, d: int | None = None,
          max_dim: int | None = None) -> np.ndarray:
    """Place ``a`` (acting on the sites of ``support`` in increasing order) into an n-site chain."""
    sites = _normalize_support(support, n)
    k = len(sites)
    if d is None:
        d = int(round(a.shape[0] ** (1.0 / k)))
    if a.shape != (d**k, d**k):
        raise DomainError(f"operator of shape {a.shape} does not act on {k} sites of dimension {d}")
    check_capacity(d**n, max_dim, d)
    rest = n - k
    full = np.kron(a, np.eye(d**rest, dtype=complex))
    if sites == list(range(1, k + 1)):
        return full
    # axes of ``full`` are (support sites..., remaining sites...) for rows and columns
    others = [s for s in range(1, n + 1) if s not in sites]
    order = sites + others
    perm = [order.index(s) for s in range(1, n + 1)]
    t = full.reshape((d,) * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(d**n, d**n)


def partial_trace(a: np.ndarray, keep: Iterable[int], n: int, d: int) -> np.ndarray:
    """Trace out every site not in ``keep``; the result acts on ``keep`` in increasing order."""
    keep = sorted(set(int(s) for s in keep))
    if keep and (keep[0] < 1 or keep[-1] > n):
        raise DomainError(f"keep set {keep} not contained in [1, {n}]")
    if a.shape != (d**n, d**n):
        raise DomainError(f"operator of shape {a.shape} does not act on {n} sites of dimension {d}")
    if len(keep) == n:
        return np.array(a, dtype=complex, copy=True)
    t = np.asarray(a).reshape((d,) * (2 * n))
    # einsum labels: row index i_k, column index j_k; traced sites share the label
    letters = [chr(ord("a") + i) for i in range(2 * n)] if 2 * n <= 26 else None
    if letters is None:
        return _partial_trace_loop(a, keep, n, d)
    rows = letters[:n]
    cols = letters[n:]
    cols = [cols[i] if (i + 1) in keep else rows[i] for i in range(n)]
    out = [rows[s - 1] for s in keep] + [cols[s - 1] for s in keep]
    spec = "".join(rows) + "".join(cols) + "->" + "".join(out)
    m = d ** len(keep)
    return np.einsum(spec, t).reshape(m, m)


def _partial_trace_loop(a, keep, n, d):
    t = np.asarray(a).reshape((d,) * (2 * n))
    traced = [s for s in range(1, n + 1) if s not in keep]
    remaining = n
    for s in sorted(traced, reverse=True):
        axis = s - 1
        t = np.trace(t, axis1=axis, axis2=axis + remaining)
        remaining -= 1
    m = d ** len(keep)
    return t.reshape(m, m)


def spectral(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a hermitian matrix; diagonal inputs skip LAPACK."""
    if is_diagonal(a):
        w = np.real(np.diag(a)).copy()
        order = np.argsort(w, kind="stable")
        v = np.eye(a.shape[0], dtype=complex)[:, order]
        return w[order], v
    return np.linalg.eigh(a)


def eigvalsh(a: np.ndarray) -> np.ndarray:
    if is_diagonal(a):
        return np.sort(np.real(np.diag(a)))
    return np.linalg.eigvalsh(a)


def apply_function(a: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    w, v = spectral(a)
    fw = f(w)
    return (v * fw) @ v.conj().T


def expm(a: np.ndarray) -> np.ndarray:
    return apply_function(a, np.exp)


def logm(a: np.ndarray, floor: float = LOG_FLOOR) -> np.ndarray:
    w, v = spectral(a)
    if w[0] < floor:
        raise SingularityError(f"smallest eigenvalue {w[0]:.3e} is below {floor:g}")
    return (v * np.log(w)) @ v.conj().T


def opnorm(a: np.ndarray) -> float:
    """Operator norm; uses the spectrum for hermitian input."""
    if a.size == 0:
        return 0.0
    if np.allclose(a, a.conj().T, atol=1e-14, rtol=0):
        w = eigvalsh(0.5 * (a + a.conj().T))
        return float(max(abs(w[0]), abs(w[-1])))
    return float(np.linalg.norm(a, 2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def cyclic_shift(sites: int, d: int, max_dim: int | None = None) -> np.ndarray:
    """Permutation unitary ``u`` with ``u (a_1 x ... x a_m) u^* = a_m x a_1 x ... x a_{m-1}``."""
    dim = d**sites
    check_capacity(dim, max_dim, d)
    idx = np.arange(dim).reshape((d,) * sites)
    # u|i_1..i_m> = |i_m, i_1, .., i_{m-1}>
    target = np.moveaxis(idx, sites - 1, 0).reshape(-1)
    u = np.zeros((dim, dim), dtype=complex)
    u[np.arange(dim), target] = 1.0
    return u


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
