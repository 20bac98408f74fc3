"""Hypothesis testing on the chain: ``beta_eps`` optimization and error exponents.

``beta_eps(psi, ref)`` is the smallest reference weight of a projection
``q`` with ``psi(q) >= 1 - eps``.  Commuting instances are solved exactly in a
joint eigenbasis as a grouped minimum-weight cover; general instances get a
certified bracket ``lower <= beta_eps <= upper``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from . import operators as ops
from .cover import group_items, min_weight_cover
from .densities import FixedAlgebraTrace, FullTrace, TracedDensity
from .errors import DomainError, HypothesisError, NonCommutingError
from .interaction import GeneratorH, Interaction, local_energies, local_hamiltonian, perturb, surface_norm
from .series import richardson
from .states import (buffered_gibbs, buffered_gibbs_vector, classical_entropy,
                     classical_relative_entropy, entropy, gibbs_state, product_phi_hat, relative_entropy)
from .symmetry import AbelianCharges, FiniteGroup, decompose, restrict_density
from .tags import EXPONENT_TAGS

COMMUTE_TOL = 1e-10
CLUSTER_RTOL = 1e-10
MASS_TOL = 1e-12

Reference = Union[FullTrace, FixedAlgebraTrace, TracedDensity]


@dataclass(frozen=True, eq=False)
class TestInstance:
    """``beta_eps`` problem: null state, reference (canonical trace or second state) and ``eps``."""

    __test__ = False  # not a pytest class

    null: TracedDensity
    reference: Reference
    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps = {self.eps} outside (0, 1)")
        if isinstance(self.reference, TracedDensity):
            if not self.null.compatible(self.reference):
                raise DomainError("null and reference states live on different references")
        elif isinstance(self.reference, FixedAlgebraTrace):
            if not self.null.is_fixed or self.reference != self.null.reference:
                raise DomainError("fixed-algebra trace needs a fixed-algebra null state")
        elif isinstance(self.reference, FullTrace):
            if self.null.is_fixed:
                raise DomainError("full trace needs a full-algebra null state")
        else:
            raise DomainError(f"unsupported reference {self.reference!r}")

    @property
    def algebra(self) -> str:
        return "fixed" if self.null.is_fixed else "full"

    def block_pairs(self) -> list:
        """``(psi_i, ref_i)`` per block; canonical traces give identity blocks."""
        if isinstance(self.reference, TracedDensity):
            return list(zip(self.null.blocks, self.reference.blocks))
        return [(a, np.eye(a.shape[0])) for a in self.null.blocks]


@dataclass(frozen=True)
class BetaResult:
    value: float
    psi_mass: float
    rank: int
    groups: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class SearchResult:
    upper: float
    lower: float
    exact: bool
    certificate: tuple = field(default=(), repr=False)

    @property
    def gap(self) -> float:
        return self.upper - self.lower


# -- commuting path ---------------------------------------------------------------------


def commutation_defect(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.linalg.norm(a @ b - b @ a) / scale)


def is_commuting(inst: TestInstance) -> bool:
    return all(commutation_defect(a, b) <= COMMUTE_TOL for a, b in inst.block_pairs())


def joint_items(a: np.ndarray, b: np.ndarray) -> tuple:
    """Masses of ``a`` and ``b`` on a common eigenbasis of two commuting hermitian matrices."""
    if ops.is_diagonal(a) and ops.is_diagonal(b):
        return np.real(np.diag(a)).copy(), np.real(np.diag(b)).copy()
    if commutation_defect(a, b) > COMMUTE_TOL:
        raise NonCommutingError("densities do not commute; use beta_epsilon_search")
    wb, vb = np.linalg.eigh(b)
    tol = CLUSTER_RTOL * max(1.0, np.abs(wb).max())
    p_out, w_out = [], []
    start = 0
    for i in range(1, len(wb) + 1):
        if i == len(wb) or wb[i] - wb[i - 1] > tol:
            v = vb[:, start:i]
            p_out.append(np.linalg.eigvalsh(v.conj().T @ a @ v))
            w_out.append(np.full(i - start, wb[start:i].mean()))
            start = i
    return np.concatenate(p_out), np.concatenate(w_out)


def beta_from_items(p, w, eps: float) -> BetaResult:
    """Exact ``min sum w`` over subsets with ``sum p >= 1 - eps``, ties grouped."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    gp, gw, cnt = group_items(p, w)
    value, take = min_weight_cover(gp, gw, cnt, 1.0 - eps, tol=MASS_TOL)
    if not np.isfinite(value):
        raise DomainError("no projection reaches the required mass")
    groups = tuple((float(a), float(b), int(k), int(c)) for a, b, k, c in zip(gp, gw, take, cnt) if k)
    return BetaResult(value, float(np.dot(gp, take)), int(take.sum()), groups)


def beta_epsilon_commuting(inst: TestInstance) -> BetaResult:
    """Exact ``beta_eps`` for an instance whose null and reference densities commute blockwise."""
    ps, ws = [], []
    for a, b in inst.block_pairs():
        p, w = joint_items(a, b)
        ps.append(p)
        ws.append(w)
    return beta_from_items(np.concatenate(ps), np.concatenate(ws), inst.eps)


# -- general path -----------------------------------------------------------------------


def _prefix_value(eigs: list, pairs: list, target: float) -> tuple:
    """Best prefix of a pooled eigenbasis, taken in decreasing eigenvalue order."""
    pool = []
    for bi, ((w, v), (a, b)) in enumerate(zip(eigs, pairs)):
        pm = np.einsum("ik,ij,jk->k", v.conj(), a, v).real
        rm = np.einsum("ik,ij,jk->k", v.conj(), b, v).real
        for k in range(len(w)):
            pool.append((-w[k], bi, k, pm[k], rm[k]))
    pool.sort(key=lambda t: (t[0], t[1], t[2]))
    mass = 0.0
    weight = 0.0
    chosen = []
    for _, bi, k, pm, rm in pool:
        mass += pm
        weight += rm
        chosen.append((bi, k))
        if mass >= target - MASS_TOL:
            return weight, chosen
    return math.inf, chosen


def _np_dual(pairs: list, eps: float, t: float) -> float:
    """``t (1 - eps) - Tr (t psi - ref)_+``: a lower bound on ``beta_eps`` for every ``t >= 0``."""
    pos = 0.0
    for a, b in pairs:
        w = np.linalg.eigvalsh(t * a - b)
        pos += w[w > 0].sum()
    return t * (1.0 - eps) - pos


def relaxed_lower_bound(inst: TestInstance) -> tuple:
    """Value of the relaxed test ``0 <= q <= 1`` and the maximizing ``t``."""
    pairs = inst.block_pairs()
    scale = sum(np.trace(b).real for _, b in pairs)
    grid = np.concatenate([[0.0], np.geomspace(1e-8, 1e8, 161) * max(scale, 1e-300)])
    vals = [_np_dual(pairs, inst.eps, t) for t in grid]
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    best_t, best = grid[k], vals[k]
    if hi > lo:
        res = minimize_scalar(lambda t: -_np_dual(pairs, inst.eps, t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(hi, 1.0)})
        if -res.fun > best:
            best_t, best = float(res.x), float(-res.fun)
    return max(best, 0.0), best_t


def _top_rank(pairs: list, t: float, r: int) -> tuple:
    """Mass, weight and projection blocks of the top ``r`` pooled eigenvectors of ``psi - t ref``."""
    eigs = [np.linalg.eigh(a - t * b) for a, b in pairs]
    pool = sorted(((-w[k], bi, k) for bi, (w, _) in enumerate(eigs) for k in range(len(w))))[:r]
    blocks, mass, weight = [], 0.0, 0.0
    for bi, ((_, v), (a, b)) in enumerate(zip(eigs, pairs)):
        vv = v[:, [k for _, b2, k in pool if b2 == bi]]
        proj = vv @ vv.conj().T
        blocks.append(proj)
        mass += float(np.einsum("ij,ji->", a, proj).real)
        weight += float(np.einsum("ij,ji->", b, proj).real)
    return mass, weight, tuple(blocks)


def _refine_rank(pairs: list, ts: list, r: int, target: float, steps: int = 60) -> tuple:
    """Push ``t`` up to where the rank-``r`` prefix stops reaching ``target``.

    The optimal rank-``r`` projection makes the mass constraint tight, which a
    fixed grid of ``t`` almost never hits; bisection in ``log t`` between the
    last feasible and first infeasible grid point recovers it.  Returns
    ``(weight, blocks)`` of the best feasible point found, or ``(inf, ())``.
    """
    feas = [(t, _top_rank(pairs, t, r)) for t in ts]
    ok = [i for i, (_, (m, _, _)) in enumerate(feas) if m >= target - MASS_TOL]
    if not ok:
        return math.inf, ()
    i = max(ok)
    best = feas[i][1]
    if i + 1 < len(feas):
        lo, hi = math.log(feas[i][0]), math.log(feas[i + 1][0])
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            cand = _top_rank(pairs, math.exp(mid), r)
            if cand[0] >= target - MASS_TOL:
                lo = mid
                if cand[1] < best[1]:
                    best = cand
            else:
                hi = mid
    return best[1], best[2]


def beta_epsilon_search(inst: TestInstance, grid_size: int = 121) -> SearchResult:
    """Bracket ``beta_eps`` for a general instance.

    Commuting instances are handed to the exact solver.  Otherwise the upper
    bound is the best eigenvalue-ordered prefix of ``psi - t ref`` over a
    grid of ``t`` and of ``log psi - log ref``, refined by bisection in ``t``
    at the two ranks next to the best grid point; the lower bound is the
    relaxed Neyman-Pearson value.
    """
    if is_commuting(inst):
        res = beta_epsilon_commuting(inst)
        return SearchResult(res.value, res.value, True)
    pairs = inst.block_pairs()
    target = 1.0 - inst.eps
    lower, t_star = relaxed_lower_bound(inst)
    scale = sum(np.trace(b).real for _, b in pairs)
    ts = sorted(list(np.geomspace(1e-6, 1e6, grid_size) / max(scale, 1e-300)) + [1.0 / max(t_star, 1e-300)])
    candidates = [[a - t * b for a, b in pairs] for t in ts]
    faithful = all(ops.eigvalsh(a)[0] > ops.LOG_FLOOR and ops.eigvalsh(b)[0] > ops.LOG_FLOOR for a, b in pairs)
    if faithful:
        candidates.append([ops.logm(a) - ops.logm(b) for a, b in pairs])
    best = math.inf
    rank = 0
    cert = ()
    for ops_list in candidates:
        eigs = [np.linalg.eigh(x) for x in ops_list]
        value, chosen = _prefix_value(eigs, pairs, target)
        if value < best:
            best = value
            rank = len(chosen)
            blocks = []
            for bi, (w, v) in enumerate(eigs):
                cols = [k for b2, k in chosen if b2 == bi]
                vv = v[:, cols]
                blocks.append(vv @ vv.conj().T)
            cert = tuple(blocks)
    for r in {max(rank - 1, 1), rank}:
        value, blocks = _refine_rank(pairs, ts, r, target)
        if value < best:
            best, cert = value, blocks
    return SearchResult(best, min(lower, best), False, cert)


# -- exponent series --------------------------------------------------------------------

VARIANTS = {
    "proxy_product_fixed": ("omega", "phi", "fixed"),
    "gibbs_product_fixed": ("gibbs", "phi", "fixed"),
    "gibbs_product_full": ("gibbs", "phi", "full"),
    "proxy_trace_fixed": ("omega", None, "fixed"),
    "gibbs_trace_fixed": ("gibbs", None, "fixed"),
    "proxy_trace_full": ("omega", None, "full"),
    "gibbs_trace_full": ("gibbs", None, "full"),
    "proxy_product_full": ("omega", "phi", "full"),
}


@dataclass(frozen=True)
class ExponentReport:
    variant: str
    eps: float
    ns: tuple
    betas: tuple
    exponents: tuple
    lower_exponents: tuple
    exact: tuple
    target: float
    corridor: tuple
    in_corridor: tuple

    @property
    def label(self) -> str:
        return EXPONENT_TAGS[self.variant]


def _classical_ok(phi: Interaction, gen: GeneratorH, algebra: str) -> bool:
    if not (phi.is_classical and ops.is_diagonal(gen.h)):
        return False
    if algebra == "full":
        return True
    bk = phi.spec.backend
    return isinstance(bk, AbelianCharges) or (isinstance(bk, FiniteGroup) and len(bk.elements) == 1)


def _classical_vectors(phi, gen, n, buffer):
    psi = perturb(phi, gen)
    e = local_energies(psi, (1, n), n)
    g = np.exp(-(e - e.min()))
    gibbs = g / g.sum()
    loc = np.real(np.diag(gen.exp_minus())) / gen.d
    prod = loc
    for _ in range(n - 1):
        prod = np.kron(prod, loc)
    omega = buffered_gibbs_vector(psi, (1, n), buffer)
    return {"omega": omega, "gibbs": gibbs, "phi": prod}


def _dense_states(phi, gen, n, buffer, algebra, seed, max_dim):
    H = local_hamiltonian(perturb(phi, gen), (1, n), n, max_dim=max_dim)
    gibbs = gibbs_state(H, FullTrace(), n, phi.d)
    omega = buffered_gibbs(phi, (1, n), buffer, gen, max_dim)
    prod = product_phi_hat(gen, n)
    out = {"omega": omega, "gibbs": gibbs, "phi": prod}
    if algebra == "fixed":
        dec = decompose(phi.spec, n, seed, max_dim)
        out = {k: restrict_density(v, dec) for k, v in out.items()}
    return out


def _targets(phi, gen, ns, seed, max_dim) -> tuple:
    """Estimates of ``S_M`` and of the mean entropy from the local Gibbs states."""
    s_m, s_a = [], []
    for n in ns:
        if _classical_ok(phi, gen, "fixed"):
            v = _classical_vectors(phi, gen, n, 0)
            s_m.append(classical_relative_entropy(v["gibbs"], v["phi"]) / n)
            s_a.append(classical_entropy(v["gibbs"]) / n)
        else:
            st = _dense_states(phi, gen, n, 0, "fixed", seed, max_dim)
            s_m.append(relative_entropy(st["gibbs"], st["phi"]) / n)
            s_a.append(entropy(st["gibbs"]) / n)

    def est(vals):
        if len(vals) >= 3:
            return richardson(ns, vals).estimate
        return vals[-1]

    return est(s_m), est(s_a)


def exponent_series(phi: Interaction, gen: GeneratorH | None, eps: float, n_range: Iterable[int], variant: str,
                    buffer: int = 2, delta: float = 0.05, target: float | None = None, seed: int = 0,
                    max_dim: int | None = None) -> ExponentReport:
    """Per-volume exponents ``(1/n) log beta_eps`` for one of the variants in ``VARIANTS``.

    The null state is the buffered equilibrium proxy (``omega``) or the local
    Gibbs state (``gibbs``); the reference is the product state or the
    canonical trace.  Relative variants are compared with the corridor
    ``[T/(1-eps) - delta, T + delta]`` around ``T = -S_M``; unweighted ones with
    the same corridor for ``T = s - log d``, shifted by ``log d``.
    """
    if variant not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    gen = GeneratorH.zero(phi.d) if gen is None else gen
    null_key, ref_key, algebra = VARIANTS[variant]
    if ref_key is None and not gen.is_central(phi.spec):
        raise HypothesisError(f"variant {variant} needs a central generator")
    ns = tuple(n_range)
    classical = _classical_ok(phi, gen, algebra)
    betas, lowers, exact = [], [], []
    for n in ns:
        if classical:
            v = _classical_vectors(phi, gen, n, buffer)
            w = v[ref_key] if ref_key else np.ones_like(v[null_key])
            res = beta_from_items(v[null_key], w, eps)
            betas.append(res.value)
            lowers.append(res.value)
            exact.append(True)
            continue
        st = _dense_states(phi, gen, n, buffer, algebra, seed, max_dim)
        null = st[null_key]
        if ref_key:
            ref = st[ref_key]
        else:
            ref = null.reference
        out = beta_epsilon_search(TestInstance(null, ref, eps))
        betas.append(out.upper)
        lowers.append(out.lower)
        exact.append(out.exact)
    s_m, s_a = _targets(phi, gen, ns, seed, max_dim)
    log_d = math.log(phi.d)
    if ref_key:
        t = -s_m if target is None else target
        corridor = (t / (1.0 - eps) - delta, t + delta)
    else:
        s = s_a if target is None else target
        t = s
        corridor = ((s - log_d) / (1.0 - eps) + log_d - delta, s + delta)
    exps = tuple(math.log(b) / n for b, n in zip(betas, ns))
    low_exps = tuple(math.log(b) / n if b > 0 else -math.inf for b, n in zip(lowers, ns))
    flags = tuple(corridor[0] <= e <= corridor[1] for e in exps)
    return ExponentReport(variant, eps, ns, tuple(betas), exps, low_exps, tuple(exact), t, corridor, flags)


# -- classical oracles --------------------------------------------------------------------


def _compositions(n: int, d: int):
    for combo in combinations_with_replacement(range(d), n):
        yield np.bincount(combo, minlength=d)


def type_class_items(p, q, n: int) -> tuple:
    """Per-sequence masses and multiplicities of the type classes of ``n`` i.i.d. draws."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    lp = np.log(np.where(p > 0, p, 1.0))
    lq = np.log(np.where(q > 0, q, 1.0))
    ps, qs, cs = [], [], []
    for k in _compositions(n, len(p)):
        zero_p = np.any((p == 0) & (k > 0))
        zero_q = np.any((q == 0) & (k > 0))
        ps.append(0.0 if zero_p else math.exp(float(k @ lp)))
        qs.append(0.0 if zero_q else math.exp(float(k @ lq)))
        cs.append(int(round(math.exp(gammaln(n + 1) - gammaln(k + 1).sum()))))
    return np.array(ps), np.array(qs), np.array(cs, dtype=np.int64)


def classical_stein_beta(p, q, n: int, eps: float) -> float:
    """``beta_eps(p^n, q^n)`` solved over type classes."""
    ps, qs, cs = type_class_items(p, q, n)
    value, _ = min_weight_cover(ps, qs, cs, 1.0 - eps, tol=MASS_TOL)
    return value


def product_vector(p, n: int) -> np.ndarray:
    out = np.asarray(p, dtype=float)
    base = out
    for _ in range(n - 1):
        out = np.kron(out, base)
    return out


# -- spectral projections and the Gibbs log-ratio bound --------------------------------------


def _relative_density(rho: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """``ref^{-1/2} rho ref^{-1/2}``: the density of ``rho`` w.r.t. a faithful ``ref``."""
    w, v = ops.spectral(ref)
    if w[0] <= ops.LOG_FLOOR:
        raise DomainError("reference density must be faithful")
    s = (v * (w ** -0.5)) @ v.conj().T
    return ops.hermitian(s @ rho @ s, tol=1e-8)


@dataclass(frozen=True)
class AEPResult:
    projection: tuple = field(repr=False)
    psi_mass: float = 0.0
    ref_mass: float = 0.0
    target: float = 0.0
    bound_violation: float = 0.0


def aep_projection(phi: Interaction, gen: GeneratorH | None, n: int, delta: float, buffer: int = 2,
                   target: float | None = None, seed: int = 0, max_dim: int | None = None) -> AEPResult:
    """Spectral projection of ``-(1/n) log D_n`` onto ``(T - delta, T + delta)``, ``T = -S_M``.

    ``D_n`` is the density of the equilibrium proxy w.r.t. the product state,
    both on the fixed-point algebra.  ``bound_violation`` is the largest
    eigenvalue-wise failure of ``e^{n(T-delta)} D p <= p <= e^{n(T+delta)} D p``.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    gen = GeneratorH.zero(phi.d) if gen is None else gen
    st = _dense_states(phi, gen, n, buffer, "fixed", seed, max_dim)
    omega, ref = st["omega"], st["phi"]
    if target is None:
        target = -relative_entropy(st["gibbs"], ref) / n
    lo, hi = target - delta, target + delta
    proj, pm, rm, viol = [], 0.0, 0.0, 0.0
    for a, b in zip(omega.blocks, ref.blocks):
        D = _relative_density(a, b)
        w, v = np.linalg.eigh(D)
        x = -np.log(np.maximum(w, 1e-300)) / n
        sel = (x > lo) & (x < hi)
        vs = v[:, sel]
        proj.append(vs @ vs.conj().T)
        pm += float(np.einsum("ij,ji->", a, proj[-1]).real)
        rm += float(np.einsum("ij,ji->", b, proj[-1]).real)
        if sel.any():
            dsel = w[sel]
            viol = max(viol, float(np.max(np.exp(n * lo) * dsel - 1.0)), float(np.max(1.0 - np.exp(n * hi) * dsel)))
    return AEPResult(tuple(proj), pm, rm, target, max(viol, 0.0))


@dataclass(frozen=True)
class LogRatioBound:
    value: float
    bound: float

    @property
    def violation(self) -> float:
        """Amount by which the proxy exceeds the bound (zero when it holds)."""
        return max(0.0, self.value - self.bound)

    @property
    def slack(self) -> float:
        return self.bound - self.value


def gibbs_log_ratio_bound(phi: Interaction, gen: GeneratorH | None, n: int, buffer: int, seed: int = 0,
                          max_dim: int | None = None) -> LogRatioBound:
    """Largest eigenvalue of ``log D_n^G - log D_n`` on the fixed-point algebra and ``2 ||W_n||``."""
    gen = GeneratorH.zero(phi.d) if gen is None else gen
    st = _dense_states(phi, gen, n, buffer, "fixed", seed, max_dim)
    ref = st["phi"]
    top = -math.inf
    for g, o, r in zip(st["gibbs"].blocks, st["omega"].blocks, ref.blocks):
        diff = ops.logm(_relative_density(g, r)) - ops.logm(_relative_density(o, r))
        top = max(top, float(ops.eigvalsh(diff)[-1]))
    return LogRatioBound(top, 2.0 * surface_norm(phi, n))
