"""Gauge actions on the chain, fixed-point algebras and their isotypic block structure."""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import operators as ops
from .densities import FixedAlgebraTrace, FullTrace, TracedDensity
from .errors import DecompositionError, DomainError
from .series import ThermoSeries
from .tags import TAGS

GROUP_TOL = 1e-10
CLUSTER_TOL = 1e-8
BLOCK_TOL = 1e-8
MAX_RETRIES = 5


# -- group backends ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    elements: tuple

    def __post_init__(self):
        els = tuple(np.asarray(g, dtype=complex) for g in self.elements)
        object.__setattr__(self, "elements", els)
        if not els:
            raise DomainError("finite group needs at least one element")
        d = els[0].shape[0]
        for g in els:
            if g.shape != (d, d):
                raise DomainError("group elements must share one square shape")
            if not np.allclose(g.conj().T @ g, np.eye(d), atol=GROUP_TOL):
                raise DomainError("group elements must be unitary")

        def member(x):
            return any(np.allclose(x, g, atol=GROUP_TOL) for g in els)

        if not member(np.eye(d)):
            raise DomainError("finite group must contain the identity")
        for a, b in itertools.product(els, els):
            if not member(a @ b):
                raise DomainError("finite group is not closed under multiplication")
        for a in els:
            if not member(a.conj().T):
                raise DomainError("finite group is not closed under inverses")

    @property
    def d(self) -> int:
        return self.elements[0].shape[0]


@dataclass(frozen=True, eq=False)
class AbelianCharges:
    """U(1) acting by ``diag(exp(i t c_k))`` on the local basis."""

    charges: tuple

    def __post_init__(self):
        ch = tuple(int(c) for c in self.charges)
        if any(c != float(x) for c, x in zip(ch, self.charges)):
            raise DomainError("charges must be integers")
        object.__setattr__(self, "charges", ch)

    @property
    def d(self) -> int:
        return len(self.charges)


@dataclass(frozen=True, eq=False)
class LieGenerators:
    """Hermitian generators of the Lie-algebra representation on one site."""

    generators: tuple

    def __post_init__(self):
        gens = tuple(ops.hermitian(np.asarray(x, dtype=complex), tol=GROUP_TOL) for x in self.generators)
        if not gens:
            raise DomainError("at least one generator required")
        d = gens[0].shape[0]
        if any(x.shape != (d, d) for x in gens):
            raise DomainError("generators must share one square shape")
        object.__setattr__(self, "generators", gens)

    @property
    def d(self) -> int:
        return self.generators[0].shape[0]


Backend = Union[FiniteGroup, AbelianCharges, LieGenerators]


@dataclass(frozen=True, eq=False)
class SymmetrySpec:
    backend: Backend

    @property
    def d(self) -> int:
        return self.backend.d

    @property
    def kind(self) -> str:
        return {FiniteGroup: "finite", AbelianCharges: "abelian", LieGenerators: "lie"}[type(self.backend)]

    @classmethod
    def trivial(cls, d: int) -> "SymmetrySpec":
        return cls(FiniteGroup((np.eye(d),)))

    @classmethod
    def u1(cls, charges: Sequence[int]) -> "SymmetrySpec":
        return cls(AbelianCharges(tuple(charges)))

    @classmethod
    def su2(cls) -> "SymmetrySpec":
        return cls(LieGenerators((ops.PAULI_X / 2, ops.PAULI_Y / 2, ops.PAULI_Z / 2)))

    @classmethod
    def finite(cls, elements) -> "SymmetrySpec":
        return cls(FiniteGroup(tuple(elements)))

    @classmethod
    def lie(cls, generators) -> "SymmetrySpec":
        return cls(LieGenerators(tuple(generators)))

    def key(self) -> str:
        h = hashlib.sha256(self.kind.encode())
        if isinstance(self.backend, AbelianCharges):
            h.update(np.asarray(self.backend.charges, dtype=np.int64).tobytes())
        else:
            mats = self.backend.elements if isinstance(self.backend, FiniteGroup) else self.backend.generators
            for m in mats:
                h.update(np.ascontiguousarray(np.round(m, 12)).tobytes())
        return h.hexdigest()

    def site_generators(self) -> list:
        """Hermitian generators of the local action (empty for finite groups)."""
        if isinstance(self.backend, AbelianCharges):
            return [np.diag(np.asarray(self.backend.charges, dtype=complex))]
        if isinstance(self.backend, LieGenerators):
            return list(self.backend.generators)
        return []


def total_charges(charges: Sequence[int], n: int) -> np.ndarray:
    """Total charge of every computational basis state of n sites."""
    c = np.asarray(charges, dtype=np.int64)
    q = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        q = (q[:, None] + c[None, :]).reshape(-1)
    return q


def total_generator(x: np.ndarray, n: int) -> np.ndarray:
    d = x.shape[0]
    return sum(ops.embed(x, [k], n, d) for k in range(1, n + 1))


def chain_action(g: np.ndarray, n: int) -> np.ndarray:
    return ops.tensor_power(g, n)


def _sites(dim: int, spec: SymmetrySpec) -> int:
    return ops.site_count(dim, spec.d)


# -- Haar average --------------------------------------------------------------


def gauge_average(a: np.ndarray, spec: SymmetrySpec, n: int | None = None) -> np.ndarray:
    """Haar average ``int gamma_g(a) dg`` of an operator on n sites.

    Finite groups are averaged exactly, U(1) charges by projecting onto equal
    total-charge sectors, and Lie generators by the orthogonal projection onto
    the joint commutant of the total generators.
    """
    a = np.asarray(a, dtype=complex)
    if n is None:
        n = _sites(a.shape[0], spec)
    b = spec.backend
    if isinstance(b, AbelianCharges):
        q = total_charges(b.charges, n)
        return np.where(q[:, None] == q[None, :], a, 0.0)
    if isinstance(b, FiniteGroup):
        out = np.zeros_like(a)
        for g in b.elements:
            u = chain_action(g, n)
            out += u @ a @ u.conj().T
        return out / len(b.elements)
    gens = [total_generator(x, n) for x in b.generators]
    return commutant_projection(a, gens)


def commutant_projection(a: np.ndarray, gens: Sequence[np.ndarray], rtol: float = 1e-14,
                         maxiter: int = 2000) -> np.ndarray:
    """Orthogonal (Hilbert-Schmidt) projection of ``a`` onto ``{x : [Y, x] = 0 for all Y}``.

    Solves ``L x = L a`` by conjugate gradients for the positive superoperator
    ``L(x) = sum_Y [Y, [Y, x]]``; the iterate stays in ``range(L)`` so it
    converges to the component of ``a`` orthogonal to the commutant.
    """

    def lap(x):
        out = np.zeros_like(x)
        for y in gens:
            c = y @ x - x @ y
            out += y @ c - c @ y
        return out

    rhs = lap(a)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return a.copy()
    x = np.zeros_like(a)
    r = rhs.copy()
    p = r.copy()
    rs = np.vdot(r, r).real
    for _ in range(maxiter):
        lp = lap(p)
        alpha = rs / np.vdot(p, lp).real
        x += alpha * p
        r -= alpha * lp
        rs_new = np.vdot(r, r).real
        if np.sqrt(rs_new) <= rtol * bnorm:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return a - x


def is_gauge_invariant(a: np.ndarray, spec: SymmetrySpec, n: int | None = None, tol: float = 1e-10) -> bool:
    return gauge_residual(a, spec, n) <= tol * max(1.0, np.linalg.norm(a))


def gauge_residual(a: np.ndarray, spec: SymmetrySpec, n: int | None = None) -> float:
    return float(np.linalg.norm(gauge_average(a, spec, n) - a))


def is_central_generator(h: np.ndarray, spec: SymmetrySpec, tol: float = 1e-10) -> bool:
    """True when ``exp(ith)`` commutes with every local gauge unitary."""
    return is_gauge_invariant(np.asarray(h, dtype=complex), spec, 1, tol)


def generates_subgroup(h: np.ndarray, spec: SymmetrySpec, tol: float = 1e-9) -> bool:
    """Whether ``Ad exp(ith)`` is implemented by a one-parameter subgroup of the gauge group.

    U(1): ``h`` diagonal and affine in the charges; Lie: traceless part of ``h``
    in the real span of the generators; finite groups: ``h`` scalar.
    """
    h = np.asarray(h, dtype=complex)
    d = spec.d
    h0 = h - np.trace(h) / d * np.eye(d)
    b = spec.backend
    if isinstance(b, FiniteGroup):
        return bool(np.linalg.norm(h0) <= tol)
    gens = spec.site_generators()
    basis = [g - np.trace(g) / d * np.eye(d) for g in gens]
    mat = np.stack([g.reshape(-1) for g in basis], axis=1)
    coef, *_ = np.linalg.lstsq(mat, h0.reshape(-1), rcond=None)
    if np.max(np.abs(coef.imag), initial=0.0) > tol:
        return False
    return bool(np.linalg.norm(mat @ coef.real - h0.reshape(-1)) <= tol * max(1.0, np.linalg.norm(h0)))


# -- block decomposition -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Isotypic structure of the fixed-point algebra on n sites.

    ``basis`` has orthonormal columns ordered block by block; inside block i
    column ``offset_i + k * d_i + alpha`` spans ``C^{m_i} (x) C^{d_i}``.
    """

    n: int
    d: int
    blocks: tuple
    basis: np.ndarray
    keys: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.d**self.n

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def offsets(self) -> list:
        out, o = [], 0
        for m, di in self.blocks:
            out.append(o)
            o += m * di
        return out

    @property
    def max_irrep_dim(self) -> int:
        return max(di for _, di in self.blocks)

    @property
    def fixed_trace_of_identity(self) -> int:
        return sum(m for m, _ in self.blocks)

    def diagonal_blocks(self, a: np.ndarray) -> list:
        """Isotypic diagonal blocks of ``U^* a U`` as ``(m, d, m, d)`` arrays."""
        out = []
        for (m, di), o in zip(self.blocks, self.offsets):
            v = self.basis[:, o:o + m * di]
            out.append((v.conj().T @ a @ v).reshape(m, di, m, di))
        return out

    def restrict(self, a: np.ndarray) -> list:
        """Blocks ``Tr_{d_i}`` of the isotypic diagonal; the density-restriction map."""
        return [np.einsum("kala->kl", t) for t in self.diagonal_blocks(a)]

    def compress(self, a: np.ndarray) -> list:
        """Coordinates ``a_i`` of an element ``sum_i a_i (x) 1_{d_i}`` of the fixed-point algebra."""
        return [blk / di for blk, (_, di) in zip(self.restrict(a), self.blocks)]

    def expand(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """Inverse of ``compress``: ``U (sum_i a_i (x) 1_{d_i}) U^*``."""
        parts = []
        for blk, (m, di) in zip(blocks, self.blocks):
            parts.append(np.kron(blk, np.eye(di)))
        mid = _block_diag(parts)
        return self.basis @ mid @ self.basis.conj().T

    def conditional_expectation(self, a: np.ndarray) -> np.ndarray:
        """Trace-preserving conditional expectation onto the fixed-point algebra."""
        return self.expand(self.compress(a))

    def off_block_mass(self, a: np.ndarray) -> float:
        """Frobenius norm of ``U^* a U`` outside the isotypic diagonal, relative to ``||a||``."""
        b = self.basis.conj().T @ a @ self.basis
        total = np.linalg.norm(b)
        for (m, di), o in zip(self.blocks, self.offsets):
            s = m * di
            b[o:o + s, o:o + s] = 0.0
        return float(np.linalg.norm(b) / max(total, 1e-300))


def _block_diag(parts: Sequence[np.ndarray]) -> np.ndarray:
    size = sum(p.shape[0] for p in parts)
    out = np.zeros((size, size), dtype=complex)
    o = 0
    for p in parts:
        s = p.shape[0]
        out[o:o + s, o:o + s] = p
        o += s
    return out


_DECOMPOSITIONS: dict = {}


def decompose(spec: SymmetrySpec, n: int, seed: int = 0, max_dim: int | None = None) -> BlockDecomposition:
    """Isotypic decomposition of the n-site fixed-point algebra.

    A gauge-averaged random probe is diagonalized; its eigenspaces (dimension
    ``d_i``) are linked into isotypic components through a second probe, whose
    compressions between eigenspaces of one component are multiples of
    unitaries that align the ``C^{d_i}`` factors.  Results are cached per
    ``(spec, n, seed)``.
    """
    ops.check_capacity(spec.d**n, max_dim, spec.d)
    cache_key = (spec.key(), n, seed)
    if cache_key in _DECOMPOSITIONS:
        return _DECOMPOSITIONS[cache_key]
    seeds = np.random.SeedSequence(seed).spawn(MAX_RETRIES)
    last_err = None
    for ss in seeds:
        rng = np.random.default_rng(ss)
        try:
            dec = _decompose_once(spec, n, rng)
        except DecompositionError as err:
            last_err = err
            continue
        _DECOMPOSITIONS[cache_key] = dec
        return dec
    raise DecompositionError(f"decomposition failed after {MAX_RETRIES} attempts: {last_err}")


def _probe(spec, n, rng):
    dim = spec.d**n
    a = gauge_average(ops.random_hermitian(dim, rng), spec, n)
    return 0.5 * (a + a.conj().T)


def _cluster(w: np.ndarray, tol: float) -> list:
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            groups.append(list(range(start, i)))
            start = i
    return groups


def _polar(m: np.ndarray) -> np.ndarray:
    u, s, vh = np.linalg.svd(m)
    return u @ vh


def _decompose_once(spec: SymmetrySpec, n: int, rng) -> BlockDecomposition:
    dim = spec.d**n
    a1 = _probe(spec, n, rng)
    a2 = _probe(spec, n, rng)
    w, v = np.linalg.eigh(a1)
    clusters = _cluster(w, CLUSTER_TOL)
    b = v.conj().T @ a2 @ v
    scale = max(1.0, float(np.max(np.abs(b))))
    nc = len(clusters)
    # adjacency between eigenspaces through the second probe
    link = np.zeros((nc, nc))
    for i, ci in enumerate(clusters):
        for j, cj in enumerate(clusters):
            if i < j:
                link[i, j] = link[j, i] = np.linalg.norm(b[np.ix_(ci, cj)])
    seen = [False] * nc
    components = []
    for start in range(nc):
        if seen[start]:
            continue
        comp, order, parent = [], [start], {start: None}
        seen[start] = True
        while order:
            k = order.pop(0)
            comp.append(k)
            for l in range(nc):
                if not seen[l] and link[k, l] > CLUSTER_TOL * scale:
                    seen[l] = True
                    parent[l] = k
                    order.append(l)
        components.append((comp, parent))

    cols, blocks, keys = [], [], []
    for comp, parent in components:
        di = len(clusters[comp[0]])
        if any(len(clusters[k]) != di for k in comp):
            raise DecompositionError("eigenspaces of one component differ in dimension")
        transports = {comp[0]: np.eye(di, dtype=complex)}
        for k in comp[1:]:
            p = parent[k]
            m = b[np.ix_(clusters[k], clusters[p])]
            gram = m.conj().T @ m
            c2 = np.trace(gram).real / di
            if np.linalg.norm(gram - c2 * np.eye(di)) > 1e-6 * max(c2, 1e-300):
                raise DecompositionError("probe compression is not a multiple of a unitary")
            transports[k] = _polar(m @ transports[p])
        basis_i = np.concatenate([v[:, clusters[k]] @ transports[k] for k in comp], axis=1)
        cols.append(basis_i)
        blocks.append((len(comp), di))
        keys.append(_block_key(spec, n, basis_i[:, :di], di, float(np.mean(w[clusters[comp[0]]]))))

    order = sorted(range(len(blocks)), key=lambda i: (blocks[i][1],) + keys[i])
    blocks = tuple(blocks[i] for i in order)
    keys = tuple(keys[i] for i in order)
    basis = np.concatenate([cols[i] for i in order], axis=1)
    if sum(m * di for m, di in blocks) != dim:
        raise DecompositionError("block dimensions do not add up")
    dec = BlockDecomposition(n, spec.d, blocks, basis, keys)
    _verify(dec, spec, [a1, a2])
    return dec


def _block_key(spec, n, copy_basis, di, probe_value) -> tuple:
    """Seed-independent invariant of one irrep copy, with the probe value as last tie-break."""
    bk = spec.backend
    if isinstance(bk, FiniteGroup):
        feats = []
        for g in bk.elements:
            chi = np.trace(copy_basis.conj().T @ chain_action(g, n) @ copy_basis)
            feats += [round(chi.real, 8), round(chi.imag, 8)]
        return tuple(feats) + (probe_value,)
    gens = [total_generator(x, n) for x in spec.site_generators()]
    comp = [copy_basis.conj().T @ y @ copy_basis for y in gens]
    casimir = sum(np.trace(c @ c).real for c in comp) / di
    charges = [round(np.trace(c).real / di, 8) for c in comp]
    return (round(casimir, 8), *charges, probe_value)


def _verify(dec: BlockDecomposition, spec: SymmetrySpec, probes) -> None:
    n = dec.n
    bk = spec.backend
    if isinstance(bk, FiniteGroup):
        actions = [chain_action(g, n) for g in bk.elements]
    else:
        actions = [total_generator(x, n) for x in spec.site_generators()]
    for g in actions:
        if dec.off_block_mass(g) > BLOCK_TOL:
            raise DecompositionError("group action leaks between isotypic blocks")
        for t, (m, di) in zip(dec.diagonal_blocks(g), dec.blocks):
            u = t[0, :, 0, :]
            expected = np.einsum("kl,ab->kalb", np.eye(m), u)
            if np.linalg.norm(t - expected) > BLOCK_TOL * max(1.0, np.linalg.norm(t)):
                raise DecompositionError("group action is not 1 (x) u on a block")
    for a in probes:
        if dec.off_block_mass(a) > BLOCK_TOL:
            raise DecompositionError("probe leaks between isotypic blocks")
        for t, (m, di) in zip(dec.diagonal_blocks(a), dec.blocks):
            coarse = np.einsum("kala->kl", t) / di
            expected = np.einsum("kl,ab->kalb", coarse, np.eye(di))
            if np.linalg.norm(t - expected) > BLOCK_TOL * max(1.0, np.linalg.norm(t)):
                raise DecompositionError("probe is not a (x) 1 on a block")


# -- densities on the fixed-point algebra ----------------------------------------


def restrict_density(density: TracedDensity, dec: BlockDecomposition) -> TracedDensity:
    """Density, w.r.t. the canonical fixed-algebra trace, of the restriction of a full-trace state."""
    if density.is_fixed:
        raise DomainError("density is already on the fixed-point algebra")
    if density.n != dec.n:
        raise DomainError("density and decomposition have different volumes")
    return TracedDensity.fixed(dec.restrict(density.data), dec)


def nu_density(dec: BlockDecomposition) -> TracedDensity:
    """Density of the restricted uniform product trace: ``d^{-n} d_i`` on block i."""
    scale = float(dec.d) ** (-dec.n)
    blocks = [scale * di * np.eye(m, dtype=complex) for m, di in dec.blocks]
    return TracedDensity.fixed(blocks, dec, normalize=False)


def max_irrep_dim_series(spec: SymmetrySpec, n_range: Iterable[int], seed: int = 0,
                         max_dim: int | None = None) -> ThermoSeries:
    ns = list(n_range)
    vals = [np.log(decompose(spec, n, seed, max_dim).max_irrep_dim) / n for n in ns]
    return ThermoSeries.from_values(TAGS["log_max_irrep_dim"], ns, vals)


def fixed_trace(dec: BlockDecomposition) -> FixedAlgebraTrace:
    return FixedAlgebraTrace(dec)


__all__ = [
    "AbelianCharges", "BlockDecomposition", "FiniteGroup", "FullTrace", "LieGenerators",
    "SymmetrySpec", "decompose", "gauge_average", "max_irrep_dim_series", "nu_density",
    "restrict_density",
]
