"""Gibbs, product and perturbed states; von Neumann and relative entropy."""
from __future__ import annotations

import numpy as np

from . import operators as ops
from .densities import FixedAlgebraTrace, FullTrace, StateTrace, TracedDensity
from .errors import DomainError, GaugeViolationError, ModelError, SingularityError
from .interaction import (GeneratorH, Interaction, local_energies, local_hamiltonian, perturb, surface_energies,
                          surface_energy)
from .symmetry import BlockDecomposition, decompose, restrict_density

COMMUTATION_TOL = 1e-8
ENTROPY_FLOOR = 1e-14
SUPPORT_TOL = 1e-12


def _exp_normalized(a: np.ndarray) -> tuple:
    """``(exp(-a)/Tr exp(-a), log Tr exp(-a))`` computed with a shifted spectrum."""
    w, v = ops.spectral(a)
    wmin = w[0]
    e = np.exp(-(w - wmin))
    z = e.sum()
    return (v * (e / z)) @ v.conj().T, float(np.log(z) - wmin)


def log_partition(H: np.ndarray, reference=None) -> float:
    """``log Tr exp(-H)`` against the full trace or a fixed-algebra trace."""
    if reference is None or isinstance(reference, FullTrace):
        w = ops.eigvalsh(H)
        return float(-w[0] + np.log(np.exp(-(w - w[0])).sum()))
    if isinstance(reference, FixedAlgebraTrace):
        ws = [ops.eigvalsh(b) for b in _fixed_blocks(H, reference.decomposition)]
        wmin = min(w[0] for w in ws)
        return float(-wmin + np.log(sum(np.exp(-(w - wmin)).sum() for w in ws)))
    raise DomainError(f"unsupported reference {reference!r}")


def _fixed_blocks(H: np.ndarray, dec: BlockDecomposition) -> list:
    blocks = dec.compress(H)
    back = dec.expand(blocks)
    resid = np.linalg.norm(back - H)
    if resid > 1e-8 * max(1.0, np.linalg.norm(H)):
        raise GaugeViolationError(f"operator is not in the fixed-point algebra (residual {resid:.3e})")
    return blocks


def gibbs_state(H: np.ndarray, reference=None, n: int | None = None, d: int = 2) -> TracedDensity:
    """Local Gibbs state ``a -> ref(exp(-H) a) / ref(exp(-H))``.

    With a ``StateTrace`` the reference density must commute with
    ``exp(-H)``; the returned density is then taken w.r.t. the full trace.
    """
    H = ops.hermitian(H)
    if reference is None:
        reference = FullTrace()
    if isinstance(reference, FixedAlgebraTrace):
        dec = reference.decomposition
        blocks = []
        for b in _fixed_blocks(H, dec):
            rho, _ = _exp_normalized(b)
            blocks.append(rho)
        # block weights: Tr exp(-H_i) relative to the total
        logz = [log_partition(b) for b in dec.compress(H)]
        top = max(logz)
        wts = np.exp(np.asarray(logz) - top)
        wts /= wts.sum()
        return TracedDensity.fixed([w * r for w, r in zip(wts, blocks)], dec)
    if n is None:
        n = ops.site_count(H.shape[0], d)
    if isinstance(reference, FullTrace):
        rho, _ = _exp_normalized(H)
        return TracedDensity.full(rho, n)
    if isinstance(reference, StateTrace):
        r = np.asarray(reference.density, dtype=complex)
        e = ops.expm(-(H - ops.eigvalsh(H)[0] * np.eye(H.shape[0])))
        defect = np.linalg.norm(r @ e - e @ r)
        if defect > COMMUTATION_TOL * max(1e-300, np.linalg.norm(r) * np.linalg.norm(e)):
            raise ModelError(f"reference density does not commute with exp(-H) (defect {defect:.3e})")
        return TracedDensity.full(0.5 * (r @ e + e @ r), n)
    raise DomainError(f"unsupported reference {reference!r}")


def product_density(gen: GeneratorH, n: int) -> np.ndarray:
    """``d^{-n} (exp(-h))^{(x) n}`` as a matrix."""
    return ops.tensor_power(gen.exp_minus() / gen.d, n)


def product_phi_hat(gen: GeneratorH, n: int) -> TracedDensity:
    return TracedDensity.full(product_density(gen, n), n)


def product_phi(gen: GeneratorH, dec: BlockDecomposition) -> TracedDensity:
    """Restriction of the product state to the fixed-point algebra."""
    return restrict_density(product_phi_hat(gen, dec.n), dec)


# -- entropies -------------------------------------------------------------------------


def _xlogx(w: np.ndarray) -> float:
    w = w[w > ENTROPY_FLOOR]
    return float(np.sum(w * np.log(w)))


def entropy(D: TracedDensity) -> float:
    """Von Neumann entropy w.r.t. the reference trace of ``D`` (nats)."""
    return -sum(_xlogx(w) for w, _ in D.eigensystems)


def relative_entropy(psi: TracedDensity, omega: TracedDensity) -> float:
    """``S(psi, omega) = Tr psi (log psi - log omega)``; ``inf`` when supports are not nested."""
    if not psi.compatible(omega):
        raise DomainError("relative entropy needs densities on the same reference and volume")
    total = 0.0
    for (wp, vp), (wo, vo) in zip(psi.eigensystems, omega.eigensystems):
        total += _xlogx(wp)
        # weights of psi on the eigenvectors of omega
        overlap = np.abs(vo.conj().T @ vp) ** 2 @ np.clip(wp, 0.0, None)
        # the entropy floor applies to x log x only; any positive eigenvalue of omega is in its support
        small = wo <= 0.0
        if np.any(overlap[small] > SUPPORT_TOL):
            return float("inf")
        total -= float(np.sum(overlap[~small] * np.log(wo[~small])))
    # clip rounding noise around zero only
    return 0.0 if -1e-12 < total < 0.0 else total


def classical_entropy(p: np.ndarray) -> float:
    return -_xlogx(np.asarray(p, dtype=float))


def classical_relative_entropy(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > ENTROPY_FLOOR
    if np.any(q[mask] <= ENTROPY_FLOOR):
        return float("inf")
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def perturbed_state(omega: TracedDensity, Q) -> TracedDensity:
    """``[omega^Q]``: density ``exp(log D - Q)`` renormalized."""
    out = []
    logs = []
    for (w, v), q in zip(omega.eigensystems, omega.operator_blocks(Q)):
        if w[0] < ops.LOG_FLOOR:
            raise SingularityError("perturbed state needs a faithful density")
        logd = (v * np.log(w)) @ v.conj().T
        a = -(logd - q)
        out.append(a)
        logs.append(ops.eigvalsh(a)[0])
    shift = min(logs)
    blocks = [ops.expm(-(a - shift * np.eye(a.shape[0]))) for a in out]
    if omega.is_fixed:
        return TracedDensity.fixed(blocks, omega.decomposition)
    return TracedDensity.full(blocks[0], omega.n)


# -- buffered proxies for infinite-volume states ------------------------------------


def _classical_marginal(energies: np.ndarray, size: int, d: int, keep_lo: int, keep_n: int) -> np.ndarray:
    """Marginal on ``keep_n`` consecutive sites of the Boltzmann weights ``exp(-E)``."""
    e = energies - energies.min()
    p = np.exp(-e).reshape((d,) * size)
    axes = tuple(k for k in range(size) if not keep_lo <= k < keep_lo + keep_n)
    m = p.sum(axis=axes).reshape(-1)
    return m / m.sum()


def buffered_gibbs_vector(phi: Interaction, lam, buffer: int) -> np.ndarray:
    """Diagonal of the buffered Gibbs state of a classical interaction, as a probability vector."""
    a, b = lam
    lo, hi = a - buffer, b + buffer
    size = hi - lo + 1
    if size > 24:
        raise DomainError("buffered window too wide")
    e = local_energies(phi, (lo, hi), size, origin=lo)
    return _classical_marginal(e, size, phi.d, buffer, b - a + 1)


def buffered_gibbs(phi: Interaction, lam, buffer: int, gen: GeneratorH | None = None,
                   max_dim: int | None = None) -> TracedDensity:
    """Restriction to ``lam`` of the full-trace Gibbs state of ``H(Phi^h)`` on ``lam`` widened by ``buffer``.

    Classical inputs are handled through energy vectors, so the buffered
    window may exceed the dense capacity.
    """
    a, b = lam
    psi = phi if gen is None else perturb(phi, gen)
    lo, hi = a - buffer, b + buffer
    size = hi - lo + 1
    n = b - a + 1
    d = phi.d
    if psi.is_classical:
        ops.check_capacity(d**n, max_dim, d)
        p = buffered_gibbs_vector(psi, lam, buffer)
        return TracedDensity.full(np.diag(p).astype(complex), n)
    ops.check_capacity(d**size, max_dim, d)
    H = local_hamiltonian(psi, (lo, hi), size, origin=lo)
    rho, _ = _exp_normalized(H)
    red = ops.partial_trace(rho, range(buffer + 1, buffer + n + 1), size, d)
    return TracedDensity.full(red, n)


def omega_proxy(phi: Interaction, gen: GeneratorH | None, n: int, buffer: int,
                dec: BlockDecomposition | None = None, max_dim: int | None = None) -> TracedDensity:
    """Finite-volume stand-in for the equilibrium state on ``[1, n]``.

    On the full algebra it is the buffered Gibbs state of ``H(Phi^h)``; given a
    decomposition it is restricted to the fixed-point algebra.
    """
    full = buffered_gibbs(phi, (1, n), buffer, gen, max_dim)
    return full if dec is None else restrict_density(full, dec)


def local_gibbs_fixed(phi: Interaction, gen: GeneratorH, dec: BlockDecomposition) -> TracedDensity:
    """``phi^G_n`` on the fixed-point algebra: Gibbs of ``H_n(Phi^h)`` restricted."""
    n = dec.n
    H = local_hamiltonian(perturb(phi, gen), (1, n), n)
    return restrict_density(gibbs_state(H, FullTrace(), n, phi.d), dec)


def weak_gibbs_residual(phi: Interaction, gen: GeneratorH | None, lam, buffer: int, outer: int = 1,
                        seed: int = 0, max_dim: int | None = None) -> float:
    """Trace distance between ``[omega^{-W_Lambda}]`` on the fixed algebra of ``lam`` and ``phi^G_Lambda``.

    ``omega`` on ``I = lam`` widened by ``buffer`` is the buffered Gibbs state
    with ``outer`` further sites on each side; ``W_Lambda`` is the surface
    energy of ``lam`` inside ``I``.
    """
    gen = GeneratorH.zero(phi.d) if gen is None else gen
    a, b = lam
    if buffer < phi.range:
        raise DomainError(f"buffer {buffer} smaller than the interaction range {phi.range}")
    lo, hi = a - buffer, b + buffer
    size = hi - lo + 1
    d = phi.d
    psi = perturb(phi, gen)
    if psi.is_classical:
        # the Markov property makes the perturbed state an exact product
        e_outer = local_energies(psi, (lo - outer, hi + outer), size + 2 * outer, origin=lo - outer)
        p = _classical_marginal(e_outer, size + 2 * outer, d, outer, size)
        logp = np.log(np.maximum(p, 1e-300))
        w = surface_energies(phi, (a, b), size, origin=lo)
        q = np.exp(logp + w - (logp + w).max())
        q = _classical_marginal(-np.log(np.maximum(q, 1e-300)), size, d, a - lo, b - a + 1)
        rho = np.diag(q).astype(complex)
    else:
        omega = buffered_gibbs(phi, (lo, hi), outer, gen, max_dim).data
        w_mat = surface_energy(phi, (a, b), size, origin=lo)
        pert = perturbed_state(TracedDensity.full(omega, size), -w_mat).data
        rho = ops.partial_trace(pert, range(a - lo + 1, b - lo + 2), size, d)
    n = b - a + 1
    dec = decompose(phi.spec, n, seed)
    got = restrict_density(TracedDensity.full(rho, n), dec)
    want = local_gibbs_fixed(phi, gen, dec)
    return got.trace_distance(want)
