"""Translation-invariant finite-range interactions and the operators built from them.

Chain windows are given as integer intervals ``(lo, hi)``; an operator on a
window acts on ``(C^d)^{hi-lo+1}`` with site ``lo`` as the most significant
factor.  Stored terms are keyed by offset tuples ``X`` with ``min(X) = 0``; the
translate ``X + k`` carries the same matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from . import operators as ops
from .errors import DomainError, GaugeViolationError
from .symmetry import SymmetrySpec, gauge_average, generates_subgroup, is_central_generator

GAUGE_TOL = 1e-10
GENERATOR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Interaction:
    """Finite-range potential ``Phi`` with terms stored at offset sets.

    ``gauge_invariant`` records whether every term lies in the fixed-point
    algebra; it is verified on construction when requested.
    """

    spec: SymmetrySpec
    terms: Mapping[tuple, np.ndarray]
    gauge_invariant: bool = True
    name: str = "custom"

    def __post_init__(self):
        d = self.spec.d
        clean = {}
        for key, mat in self.terms.items():
            x = tuple(sorted(set(int(s) for s in key)))
            if not x:
                raise DomainError("empty support is not allowed")
            if x[0] != 0:
                raise DomainError(f"offset set {x} must start at 0")
            m = ops.hermitian(mat, tol=1e-12)
            if m.shape != (d ** len(x), d ** len(x)):
                raise DomainError(f"term on {x} has shape {m.shape}")
            if x in clean:
                m = clean[x] + m
            clean[x] = m
        object.__setattr__(self, "terms", clean)
        if self.gauge_invariant:
            for x, m in clean.items():
                resid = np.linalg.norm(gauge_average(m, self.spec, len(x)) - m)
                if resid > GAUGE_TOL * max(1.0, np.linalg.norm(m)):
                    raise GaugeViolationError(f"term on {x} is not gauge invariant (residual {resid:.3e})")

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def range(self) -> int:
        return max((x[-1] for x in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return all(not np.any(m) for m in self.terms.values())

    @property
    def is_classical(self) -> bool:
        return all(ops.is_diagonal(m) for m in self.terms.values())

    def scaled(self, c: float) -> "Interaction":
        return Interaction(self.spec, {x: c * m for x, m in self.terms.items()}, self.gauge_invariant, self.name)

    def plus(self, other: "Interaction", c: float = 1.0) -> "Interaction":
        terms = dict(self.terms)
        for x, m in other.terms.items():
            terms[x] = terms[x] + c * m if x in terms else c * m
        return Interaction(self.spec, terms, self.gauge_invariant and other.gauge_invariant, self.name)

    def translates(self, lo: int, hi: int) -> Iterator[tuple]:
        """All ``(sites, matrix)`` with ``sites = X + k`` contained in ``[lo, hi]``."""
        for x, m in self.terms.items():
            for k in range(lo, hi - x[-1] + 1):
                yield tuple(s + k for s in x), m


@dataclass(frozen=True, eq=False)
class GeneratorH:
    """Single-site generator normalized so that ``tau_0(exp(-h)) = 1``.

    ``shift`` is the constant ``log tau_0(exp(-h_raw))`` that was added.
    """

    h: np.ndarray
    shift: float = 0.0

    @classmethod
    def normalize(cls, raw) -> "GeneratorH":
        raw = ops.hermitian(np.asarray(raw, dtype=complex))
        d = raw.shape[0]
        w = ops.eigvalsh(raw)
        # log tau_0(e^{-h}) by log-sum-exp
        wmin = w.min()
        c = float(-wmin + np.log(np.exp(-(w - wmin)).sum() / d))
        return cls(raw + c * np.eye(d), c)

    @classmethod
    def zero(cls, d: int) -> "GeneratorH":
        return cls(np.zeros((d, d), dtype=complex), 0.0)

    def __post_init__(self):
        h = ops.hermitian(np.asarray(self.h, dtype=complex))
        object.__setattr__(self, "h", h)
        tau = float(np.exp(-ops.eigvalsh(h)).mean())
        if abs(tau - 1.0) > GENERATOR_TOL * 10:
            raise DomainError(f"tau_0(exp(-h)) = {tau!r}; use GeneratorH.normalize")

    @property
    def d(self) -> int:
        return self.h.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.h)

    def is_central(self, spec: SymmetrySpec) -> bool:
        """``h`` commutes with the local gauge action and generates a subgroup of it."""
        return is_central_generator(self.h, spec) and generates_subgroup(self.h, spec)

    def exp_minus(self) -> np.ndarray:
        return ops.expm(-self.h)


# -- presets ---------------------------------------------------------------------


def gauge_ising(mu: float = 1.0, J: float = 1.0) -> Interaction:
    """``Phi({0}) = mu Z`` and ``Phi({0,1}) = J Z(x)Z`` with U(1) charges (1, -1)."""
    z = ops.PAULI_Z
    return Interaction(SymmetrySpec.u1([1, -1]), {(0,): mu * z, (0, 1): J * np.kron(z, z)}, name="gauge_ising")


def single_site(a, spec: SymmetrySpec | None = None) -> Interaction:
    """On-site term ``a`` only; no interactions between sites."""
    a = np.asarray(a, dtype=complex)
    spec = SymmetrySpec.trivial(a.shape[0]) if spec is None else spec
    return Interaction(spec, {(0,): a}, name="single_site")


def xxz_charge(jxy: float = 1.0, jz: float = 0.5, mu: float = 0.0) -> Interaction:
    """Charge-conserving XXZ chain ``jxy (XX + YY) + jz ZZ + mu Z``."""
    x, y, z = ops.PAULI_X, ops.PAULI_Y, ops.PAULI_Z
    bond = jxy * (np.kron(x, x) + np.kron(y, y)) + jz * np.kron(z, z)
    return Interaction(SymmetrySpec.u1([1, -1]), {(0,): mu * z, (0, 1): bond}, name="xxz_charge")


def heisenberg(J: float = 1.0) -> Interaction:
    """SU(2)-invariant exchange ``J (XX + YY + ZZ)``."""
    x, y, z = ops.PAULI_X, ops.PAULI_Y, ops.PAULI_Z
    bond = J * (np.kron(x, x) + np.kron(y, y) + np.kron(z, z))
    return Interaction(SymmetrySpec.su2(), {(0, 1): bond}, name="heisenberg")


def zero(spec: SymmetrySpec) -> Interaction:
    return Interaction(spec, {}, name="zero")


PRESETS = {
    "gauge_ising": gauge_ising,
    "single_site": single_site,
    "xxz_charge": xxz_charge,
    "heisenberg": heisenberg,
}


# -- operators on windows ------------------------------------------------------------


def _window(lam, n: int, origin: int):
    a, b = int(lam[0]), int(lam[1])
    lo, hi = origin, origin + n - 1
    if a > b:
        raise DomainError(f"empty interval {lam}")
    if a < lo or b > hi:
        raise DomainError(f"interval [{a}, {b}] not inside chain [{lo}, {hi}]")
    return a, b, lo, hi


def _sum_terms(phi: Interaction, items, n: int, lo: int, max_dim=None) -> np.ndarray:
    d = phi.d
    ops.check_capacity(d**n, max_dim, d)
    out = np.zeros((d**n, d**n), dtype=complex)
    for sites, m in items:
        out += ops.embed(m, [s - lo + 1 for s in sites], n, d)
    return out


def _sum_diagonal(phi: Interaction, items, n: int, lo: int) -> np.ndarray:
    d = phi.d
    out = np.zeros((d,) * n)
    for sites, m in items:
        v = np.real(np.diag(m)).reshape((d,) * len(sites))
        axes = [s - lo for s in sites]
        shape = [d if k in axes else 1 for k in range(n)]
        out = out + v.reshape(shape)
    return out.reshape(-1)


def local_hamiltonian(phi: Interaction, lam, n: int, origin: int = 1, max_dim=None) -> np.ndarray:
    """``H_Lambda``: all translates inside ``lam``, embedded in the chain ``[origin, origin+n-1]``."""
    a, b, lo, _ = _window(lam, n, origin)
    return _sum_terms(phi, phi.translates(a, b), n, lo, max_dim)


def local_energies(phi: Interaction, lam, n: int, origin: int = 1) -> np.ndarray:
    """Diagonal of ``H_Lambda`` for a classical interaction, as a vector of length ``d^n``."""
    if not phi.is_classical:
        raise DomainError("local_energies needs diagonal terms")
    a, b, lo, _ = _window(lam, n, origin)
    return _sum_diagonal(phi, phi.translates(a, b), n, lo)


def _straddling(phi: Interaction, lam, lo: int, hi: int):
    a, b = lam
    for sites, m in phi.translates(lo, hi):
        inside = [a <= s <= b for s in sites]
        if any(inside) and not all(inside):
            yield sites, m


def _check_collar(phi, lam, n, origin):
    a, b, lo, hi = _window(lam, n, origin)
    r = phi.range
    if a - r < lo or b + r > hi:
        raise DomainError(f"collar of width {r} around [{a}, {b}] leaves the chain [{lo}, {hi}]")
    return a, b, lo, hi


def surface_energy(phi: Interaction, lam, n: int, origin: int = 1, max_dim=None) -> np.ndarray:
    """``W_Lambda``: translates meeting both ``lam`` and its complement."""
    a, b, lo, hi = _check_collar(phi, lam, n, origin)
    return _sum_terms(phi, _straddling(phi, (a, b), lo, hi), n, lo, max_dim)


def surface_energies(phi: Interaction, lam, n: int, origin: int = 1) -> np.ndarray:
    if not phi.is_classical:
        raise DomainError("surface_energies needs diagonal terms")
    a, b, lo, hi = _check_collar(phi, lam, n, origin)
    return _sum_diagonal(phi, _straddling(phi, (a, b), lo, hi), n, lo)


def surface_norm(phi: Interaction, m: int) -> float:
    """``||W_[1,m]||`` evaluated on the chain ``[1-R, m+R]``."""
    r = phi.range
    n = m + 2 * r
    if phi.is_classical:
        w = surface_energies(phi, (1, m), n, origin=1 - r)
        return float(np.abs(w).max(initial=0.0))
    return ops.opnorm(surface_energy(phi, (1, m), n, origin=1 - r))


def norms(phi: Interaction) -> tuple:
    """``(|||Phi|||, ||Phi||_0)``.

    A stored term on ``X`` has ``|X|`` translates containing the origin, so the
    first norm is the sum of term norms and the local part of the second is
    the ``|X|``-weighted sum.  The surface supremum is attained for
    ``n <= 2R + 1`` and is taken as a maximum there.
    """
    triple = 0.0
    local = 0.0
    for x, m in phi.terms.items():
        nm = ops.opnorm(m)
        triple += nm
        local += len(x) * nm
    sup_w = max(surface_norm(phi, m) for m in range(1, 2 * phi.range + 2)) if phi.terms else 0.0
    return triple, local + sup_w


def mean_energy(phi: Interaction, n: int, max_dim=None) -> np.ndarray:
    """``A_Phi = sum_{X containing 0} Phi(X)/|X|`` placed at the centre of ``[1, n]``."""
    r = phi.range
    if n < 2 * r + 1:
        raise DomainError(f"mean energy needs n >= {2 * r + 1}")
    c = (n + 1) // 2
    items = []
    for x, m in phi.terms.items():
        for s0 in x:
            items.append((tuple(c - s0 + s for s in x), m / len(x)))
    return _sum_terms(phi, items, n, 1, max_dim)


def shifted_sum(a: np.ndarray, n: int, d: int) -> np.ndarray:
    """``sum_j theta^j(a)`` for a single-site operator over ``[1, n]``."""
    return sum(ops.embed(a, [k], n, d) for k in range(1, n + 1))


def perturb(phi: Interaction, gen: GeneratorH) -> Interaction:
    """``Phi^h``: single-site terms shifted by ``h``.

    The result is flagged gauge invariant only when ``h`` is central.
    """
    if gen.d != phi.d:
        raise DomainError("generator and interaction have different local dimension")
    central = gen.is_central(phi.spec)
    terms = dict(phi.terms)
    terms[(0,)] = terms.get((0,), 0) + gen.h
    return Interaction(phi.spec, terms, gauge_invariant=phi.gauge_invariant and central, name=phi.name + "^h")


def cyclic_derivation_bound(phi: Interaction, n: int, max_dim=None) -> tuple:
    """``(||delta_0(u_n)||, 4 ||Phi||_0)`` for the cyclic shift on ``[-n, n]``.

    ``u_n`` acts on the ``2n+1`` central sites; terms meeting ``[-n, n]`` are
    summed on the chain with an ``R``-collar, and the norm of
    ``i [sum_X Phi(X), u_n]`` equals that of ``K - u K u^*``.
    """
    r = phi.range
    m = 2 * n + 1
    lo, hi = -n - r, n + r
    size = hi - lo + 1
    d = phi.d
    ops.check_capacity(d**size, max_dim, d)
    u = np.kron(np.kron(np.eye(d**r), ops.cyclic_shift(m, d)), np.eye(d**r))
    items = [(s, t) for s, t in phi.translates(lo, hi) if any(-n <= x <= n for x in s)]
    k = _sum_terms(phi, items, size, lo)
    value = ops.opnorm(k - u @ k @ u.conj().T)
    return value, 4.0 * norms(phi)[1]


def cyclic_unitary(n: int, d: int) -> np.ndarray:
    return ops.cyclic_shift(2 * n + 1, d)
