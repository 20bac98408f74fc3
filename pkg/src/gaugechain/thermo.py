"""Finite-volume pressures, entropies and the identities that tie them together."""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from . import operators as ops
from .densities import FixedAlgebraTrace, FullTrace, TracedDensity
from .errors import DomainError, HypothesisError
from .interaction import GeneratorH, Interaction, local_hamiltonian, perturb
from .series import ThermoSeries, fit_inverse_n
from .states import (buffered_gibbs, entropy, gibbs_state, log_partition, product_density, product_phi,
                     product_phi_hat, relative_entropy)
from .symmetry import BlockDecomposition, decompose, nu_density, restrict_density
from .tags import TAGS

WEIGHTS = ("phi", "fixed", "full")


def _gen(phi: Interaction, gen: GeneratorH | None) -> GeneratorH:
    return GeneratorH.zero(phi.d) if gen is None else gen


def hamiltonian(phi: Interaction, n: int, max_dim=None) -> np.ndarray:
    return local_hamiltonian(phi, (1, n), n, max_dim=max_dim)


def log_phi_partition(phi: Interaction, gen: GeneratorH, n: int, max_dim=None) -> float:
    """``log phi(exp(-H_n))`` from the product density and the matrix exponential of ``H_n``."""
    H = hamiltonian(phi, n, max_dim)
    if phi.is_classical and ops.is_diagonal(gen.h):
        e = np.real(np.diag(H))
        rho = np.real(np.diag(product_density(gen, n)))
        shift = e.min()
        return float(np.log(np.sum(rho * np.exp(-(e - shift)))) - shift)
    shift = ops.eigvalsh(H)[0]
    e = ops.expm(-(H - shift * np.eye(H.shape[0])))
    return float(np.log(np.einsum("ij,ji->", product_density(gen, n), e).real) - shift)


def partition_identity_defect(phi: Interaction, gen: GeneratorH | None, n: int, max_dim=None) -> float:
    """``log phi(e^{-H_n}) + n log d - log Tr e^{-H_n(Phi^h)}``; zero at every n."""
    gen = _gen(phi, gen)
    lhs = log_phi_partition(phi, gen, n, max_dim)
    rhs = log_partition(hamiltonian(perturb(phi, gen), n, max_dim))
    return lhs + n * np.log(phi.d) - rhs


def pressure_series(phi: Interaction, weight: str, n_range: Iterable[int], gen: GeneratorH | None = None,
                    seed: int = 0, max_dim=None) -> ThermoSeries:
    """``(1/n) log`` of the partition function against ``phi``, ``Tr_A`` or ``Tr_F``.

    For the ``phi`` weight the defect column carries the finite-volume
    identity relating it to the full-trace pressure of ``Phi^h``.
    """
    if weight not in WEIGHTS:
        raise DomainError(f"weight must be one of {WEIGHTS}")
    gen = _gen(phi, gen)
    ns = list(n_range)
    vals, defects = [], []
    for n in ns:
        if weight == "phi":
            vals.append(log_phi_partition(phi, gen, n, max_dim) / n)
            defects.append(partition_identity_defect(phi, gen, n, max_dim))
        elif weight == "full":
            vals.append(log_partition(hamiltonian(phi, n, max_dim)) / n)
        else:
            dec = decompose(phi.spec, n, seed, max_dim)
            vals.append(log_partition(hamiltonian(phi, n, max_dim), FixedAlgebraTrace(dec)) / n)
    tag = TAGS["pressure_" + weight]
    return ThermoSeries.from_values(tag, ns, vals, defects if weight == "phi" else None)


def fixed_pressure_corridor(phi: Interaction, gen: GeneratorH, n: int, seed: int = 0, max_dim=None) -> tuple:
    """``(p-side - A-side, (1/n) log max d_i)``; the first lies in ``[0, second]`` for central ``h``."""
    if not gen.is_central(phi.spec):
        raise HypothesisError("the fixed-algebra pressure identity needs a central generator")
    dec = decompose(phi.spec, n, seed, max_dim)
    p_side = log_phi_partition(phi, gen, n, max_dim) / n
    a_side = log_partition(hamiltonian(perturb(phi, gen), n, max_dim), FixedAlgebraTrace(dec)) / n - np.log(phi.d)
    return p_side - a_side, np.log(dec.max_irrep_dim) / n


# -- entropies on the fixed-point algebra ------------------------------------------------


def entropy_split_defect(omega: TracedDensity) -> float:
    """``(1/n) S(omega_n) + (1/n) S(omega_n, nu_n) - log d`` for a fixed-algebra density."""
    dec = omega.decomposition
    nu = nu_density(dec)
    return (entropy(omega) + relative_entropy(omega, nu)) / dec.n - np.log(dec.d)


def entropy_split_closed_form(omega: TracedDensity) -> float:
    """The same defect as ``-(1/n) sum_i w_i log d_i`` with block weights ``w_i``."""
    dec = omega.decomposition
    w = [np.trace(b).real for b in omega.blocks]
    return -float(sum(wi * np.log(di) for wi, (_, di) in zip(w, dec.blocks))) / dec.n


def mean_entropy_series(family: Callable[[int], TracedDensity], n_range: Iterable[int],
                        label: str = TAGS["mean_entropy"]) -> ThermoSeries:
    ns = list(n_range)
    states = [family(n) for n in ns]
    vals = [entropy(s) / n for s, n in zip(states, ns)]
    defects = [entropy_split_defect(s) if s.is_fixed else None for s in states]
    return ThermoSeries.from_values(label, ns, vals, defects if all(x is not None for x in defects) else None)


def product_form_density(dec: BlockDecomposition, rng: np.random.Generator) -> np.ndarray:
    """Random ``D = D^0 D'`` with ``D^0`` in the fixed algebra and ``D'`` in its commutant."""
    parts = []
    weights = rng.dirichlet(np.ones(dec.num_blocks))
    for (m, di), w in zip(dec.blocks, weights):
        d0 = ops.random_density(m, rng)
        d1 = ops.random_density(di, rng)
        parts.append(w * np.kron(d0, d1))
    size = sum(p.shape[0] for p in parts)
    mid = np.zeros((size, size), dtype=complex)
    o = 0
    for p in parts:
        s = p.shape[0]
        mid[o:o + s, o:o + s] = p
        o += s
    return dec.basis @ mid @ dec.basis.conj().T


def restriction_entropy_gaps(D: np.ndarray, dec: BlockDecomposition) -> dict:
    """Entropy gaps between ``D``, its conditional expectation and its restriction.

    ``expectation_gap = S(E(D)) - S(D)`` and ``restriction_gap = S(E(D)) - S(D|_A)``; both lie in
    ``[0, log max d_i]`` for product-form ``D``.
    """
    full = TracedDensity.full(D, dec.n)
    cond = TracedDensity.full(dec.conditional_expectation(D), dec.n)
    restr = restrict_density(full, dec)
    s_d, s_e, s_r = entropy(full), entropy(cond), entropy(restr)
    return {
        "S_D": s_d,
        "S_E": s_e,
        "S_restricted": s_r,
        "expectation_gap": s_e - s_d,
        "restriction_gap": s_e - s_r,
        "restriction_shift": abs(s_r - s_d),
        "bound": float(np.log(dec.max_irrep_dim)),
    }


def restriction_gap_closed_form(D: np.ndarray, dec: BlockDecomposition) -> float:
    """``sum_i Tr(D^0_i) Tr(D'_i) log d_i``, read off the isotypic blocks of ``D``."""
    total = 0.0
    for blk, (_, di) in zip(dec.restrict(D), dec.blocks):
        total += np.trace(blk).real * np.log(di)
    return float(total)


# -- Gibbs states on the fixed algebra --------------------------------------------------------


def phi_gibbs_fixed(phi: Interaction, gen: GeneratorH, dec: BlockDecomposition, max_dim=None) -> TracedDensity:
    """``phi^G_n`` restricted to the fixed-point algebra, from the full Gibbs state of ``H_n(Phi^h)``."""
    H = hamiltonian(perturb(phi, gen), dec.n, max_dim)
    return restrict_density(gibbs_state(H, FullTrace(), dec.n, phi.d), dec)


def variational_defect(phi: Interaction, gen: GeneratorH | None, candidate: Callable[[int], TracedDensity],
                       n_range: Iterable[int], seed: int = 0, label: str = TAGS["variational_defect"],
                       max_dim=None) -> ThermoSeries:
    """``-(1/n) S(omega_n, phi^G_n)`` for a family of states on the fixed-point algebra.

    It equals ``-[(1/n) log phi(e^{-H_n}) + (1/n) S(omega_n, phi_n) + omega_n(H_n)/n]``;
    the defect column is the difference between the two evaluations.
    Candidates given on the full algebra are restricted first.
    """
    gen = _gen(phi, gen)
    if not gen.is_central(phi.spec):
        raise HypothesisError("variational defect on the fixed algebra needs a central generator")
    ns = list(n_range)
    vals, defects = [], []
    for n in ns:
        dec = decompose(phi.spec, n, seed, max_dim)
        omega = candidate(n)
        if not omega.is_fixed:
            omega = restrict_density(omega, dec)
        gibbs = phi_gibbs_fixed(phi, gen, dec, max_dim)
        direct = -relative_entropy(omega, gibbs) / n
        H = hamiltonian(phi, n, max_dim)
        split = -(log_phi_partition(phi, gen, n, max_dim) + relative_entropy(omega, product_phi(gen, dec))
                  + omega.expect(H)) / n
        vals.append(direct)
        defects.append(direct - split)
    return ThermoSeries.from_values(label, ns, vals, defects)


def duality_gaps(omega: TracedDensity, gen: GeneratorH, directions: Sequence[Interaction], max_dim=None) -> list:
    """``(1/n) log phi(e^{-H_n(Psi)}) + omega(H_n(Psi))/n + (1/n) S(omega_n, phi_n)`` per ``Psi``; all nonnegative."""
    dec = omega.decomposition
    n = dec.n
    s_m = relative_entropy(omega, product_phi(gen, dec)) / n
    out = []
    for psi in directions:
        H = hamiltonian(psi, n, max_dim)
        out.append(log_phi_partition(psi, gen, n, max_dim) / n + omega.expect(H) / n + s_m)
    return out


# -- entropy density chain -----------------------------------------------------------------------

CHAIN_TAGS = tuple(TAGS[k] for k in ("chain_rel_fixed", "chain_rel_full", "chain_proxy", "chain_entropy_full",
                                      "chain_entropy_fixed"))
CHAIN_GROUPS = ((0, 1, 2), (3, 4))


def chain_point(phi: Interaction, gen: GeneratorH, n: int, buffer: int = 2, seed: int = 0,
                max_dim=None) -> dict:
    """The five entropy-density quantities at volume ``n`` and their within-group gaps."""
    d = phi.d
    dec = decompose(phi.spec, n, seed, max_dim)
    hat_gibbs = gibbs_state(hamiltonian(perturb(phi, gen), n, max_dim), FullTrace(), n, d)
    fixed_gibbs = restrict_density(hat_gibbs, dec)
    hat_phi = product_phi_hat(gen, n)
    rel_fixed = relative_entropy(fixed_gibbs, restrict_density(hat_phi, dec)) / n
    rel_full = relative_entropy(hat_gibbs, hat_phi) / n
    proxy = buffered_gibbs(phi, (1, n), buffer, gen, max_dim)
    h_sites = [ops.embed(gen.h, [j], n, d) for j in range(1, n + 1)]
    h_avg = float(np.mean([proxy.expect(hj) for hj in h_sites]))
    proxy_val = -entropy(proxy) / n + h_avg + np.log(d)
    s_full = entropy(hat_gibbs) / n
    s_fixed = entropy(fixed_gibbs) / n
    values = (rel_fixed, rel_full, proxy_val, s_full, s_fixed)
    gaps = [max(abs(values[i] - values[j]) for i in g for j in g) for g in CHAIN_GROUPS]
    cesaro = -s_full + float(np.mean([hat_gibbs.expect(hj) for hj in h_sites])) + np.log(d)
    return {
        "values": values,
        "max_gap": max(gaps),
        "entropy_gap": gaps[1],
        "entropy_bound": np.log(dec.max_irrep_dim) / n,
        "cesaro_defect": rel_full - cesaro,
    }


def entropy_density_chain(phi: Interaction, gen: GeneratorH | None, n_range: Iterable[int], buffer: int = 2,
                          seed: int = 0, max_dim=None) -> dict:
    """Five series of the entropy-density chain plus a ``max_gap`` series.

    The gap series carries, as its defect column, the finite-volume identity
    expressing the full relative entropy through the entropy and the
    site-averaged ``h`` expectation.
    """
    gen = _gen(phi, gen)
    if not gen.is_central(phi.spec):
        raise HypothesisError("the entropy-density chain needs a central generator")
    ns = list(n_range)
    pts = [chain_point(phi, gen, n, buffer, seed, max_dim) for n in ns]
    out = {}
    for k, tag in enumerate(CHAIN_TAGS):
        out[tag] = ThermoSeries.from_values(tag, ns, [p["values"][k] for p in pts])
    out[TAGS["chain_max_gap"]] = ThermoSeries.from_values(
        TAGS["chain_max_gap"], ns, [p["max_gap"] for p in pts], [p["cesaro_defect"] for p in pts])
    out[TAGS["entropy_gap"]] = ThermoSeries.from_values(
        TAGS["entropy_gap"], ns, [p["entropy_gap"] for p in pts], [p["entropy_gap"] - p["entropy_bound"] for p in pts])
    return out


def single_site_chain_values(gen: GeneratorH) -> tuple:
    """Closed form of the chain for ``Phi = 0``: every relative entropy vanishes, entropies are single-site."""
    w = np.exp(-ops.eigvalsh(gen.h)) / gen.d
    s = float(-np.sum(w[w > 0] * np.log(w[w > 0])))
    return (0.0, 0.0, 0.0, s, s)


def fixed_vs_full_entropy(phi: Interaction, gen: GeneratorH, n_range: Iterable[int], seed: int = 0,
                          max_dim=None) -> ThermoSeries:
    """``(1/n) S`` of the full Gibbs state of ``H_n(Phi^h)`` minus that of its fixed-algebra restriction.

    Meaningful for non-central ``h`` as well; values are recorded, not gated.
    """
    ns = list(n_range)
    vals = []
    for n in ns:
        dec = decompose(phi.spec, n, seed, max_dim)
        H = hamiltonian(perturb(phi, gen), n, max_dim)
        g = gibbs_state(H, FullTrace(), n, phi.d)
        vals.append((entropy(g) - entropy(restrict_density(g, dec))) / n)
    return ThermoSeries.from_values(TAGS["fixed_vs_full_entropy"], ns, vals)


# -- pressure derivative --------------------------------------------------------------------------


def pressure_derivative(phi: Interaction, gen: GeneratorH | None, direction: Interaction, n: int,
                        step: float = 1e-4, max_dim=None) -> float:
    """Central difference at ``beta = 0`` of ``(1/n) log phi(e^{-H_n(Phi + beta Psi)})``."""
    if not 1e-6 <= step <= 1e-2:
        raise DomainError("step must lie in [1e-6, 1e-2]")
    gen = _gen(phi, gen)

    def f(beta):
        return log_phi_partition(phi.plus(direction, beta), gen, n, max_dim) / n

    return (f(step) - f(-step)) / (2 * step)


def gibbs_energy_density(phi: Interaction, gen: GeneratorH | None, n: int, direction: Interaction | None = None,
                         max_dim=None) -> float:
    """``-(1/n) phi^G_n(H_n(Psi))`` with ``phi^G_n`` the Gibbs state of ``H_n`` relative to ``phi``."""
    gen = _gen(phi, gen)
    direction = phi if direction is None else direction
    rho = product_density(gen, n)
    H = hamiltonian(phi, n, max_dim)
    shift = ops.eigvalsh(H)[0]
    e = ops.expm(-(H - shift * np.eye(H.shape[0])))
    g = rho @ e
    g = g / np.trace(g).real
    return -float(np.einsum("ij,ji->", g, hamiltonian(direction, n, max_dim)).real) / n


def inverse_n_constant(series: ThermoSeries) -> float:
    return fit_inverse_n(series.ns, series.values)
