import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from gaugechain import interaction as itx
from gaugechain import operators as ops
from gaugechain import testing as tst
from gaugechain.densities import FixedAlgebraTrace, FullTrace, TracedDensity
from gaugechain.errors import DomainError, HypothesisError, NonCommutingError
from gaugechain.interaction import GeneratorH
from gaugechain.symmetry import SymmetrySpec, decompose, restrict_density

from strategies import probability_vectors, random_density, seeds

U1 = SymmetrySpec.u1([1, -1])
H_DIAG = GeneratorH.normalize(np.diag([1.0, -1.0]))


def exhaustive_beta(p, q, eps):
    best = np.inf
    idx = np.arange(len(p))
    for r in range(len(p) + 1):
        for sub in itertools.combinations(idx, r):
            sub = list(sub)
            if p[sub].sum() >= 1 - eps - 1e-12:
                best = min(best, q[sub].sum())
    return best


def qubit_projection_beta(a, b, eps, grid=200):
    """Brute force over rank-0/1/2 projections on C^2 on a Bloch-sphere grid."""
    best = 1.0 if np.trace(a).real >= 1 - eps - 1e-12 else np.inf
    best = min(best, np.trace(b).real) if np.trace(a).real >= 1 - eps - 1e-12 else best
    for th in np.linspace(0, np.pi, grid):
        for ph in np.linspace(0, 2 * np.pi, grid, endpoint=False):
            v = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
            P = np.outer(v, v.conj())
            if np.einsum("ij,ji->", a, P).real >= 1 - eps - 1e-12:
                best = min(best, np.einsum("ij,ji->", b, P).real)
    return best


class TestCommuting:
    @given(probability_vectors(2, 12), seeds, st.floats(0.05, 0.9))
    @settings(max_examples=40)
    def test_exhaustive(self, p, seed, eps):
        q = np.random.default_rng(seed).dirichlet(np.ones(len(p)))
        res = tst.beta_from_items(p, q, eps)
        assert_allclose(res.value, exhaustive_beta(p, q, eps), atol=1e-12)
        assert res.psi_mass >= 1 - eps - 1e-12

    @given(seeds, st.floats(0.05, 0.9))
    @settings(max_examples=15)
    def test_rotated_basis(self, seed, eps):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(8))
        q = rng.dirichlet(np.ones(8))
        u, _ = np.linalg.qr(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
        a = TracedDensity.full(u @ np.diag(p) @ u.conj().T, 3)
        b = TracedDensity.full(u @ np.diag(q) @ u.conj().T, 3)
        res = tst.beta_epsilon_commuting(tst.TestInstance(a, b, eps))
        assert_allclose(res.value, exhaustive_beta(p, q, eps), atol=1e-10)

    def test_degenerate_reference(self):
        # canonical trace: beta counts the rank
        rho = TracedDensity.full(np.diag([0.5, 0.3, 0.15, 0.05]), 2)
        res = tst.beta_epsilon_commuting(tst.TestInstance(rho, FullTrace(), 0.1))
        assert res.value == 3.0

    def test_fixed_trace_weights(self):
        dec = decompose(SymmetrySpec.su2(), 3)
        rho = restrict_density(TracedDensity.full(np.eye(8), 3), dec)
        res = tst.beta_epsilon_commuting(tst.TestInstance(rho, FixedAlgebraTrace(dec), 0.4))
        # items: two of mass 1/4 in the (2, 2) block and one of mass 1/2 in (1, 4),
        # each of unit trace; reaching 0.6 needs two of them
        assert res.value == 2.0

    def test_noncommuting_raises(self):
        with pytest.raises(NonCommutingError):
            tst.joint_items(np.diag([0.7, 0.3]), 0.5 * (np.eye(2) + 0.4 * ops.PAULI_X))

    @pytest.mark.parametrize("eps", [0.0, 1.0])
    def test_eps_domain(self, eps):
        rho = TracedDensity.full(np.eye(2), 1)
        with pytest.raises(DomainError):
            tst.TestInstance(rho, rho, eps)

    @given(probability_vectors(3, 8), seeds)
    @settings(max_examples=20)
    def test_monotone_in_eps(self, p, seed):
        q = np.random.default_rng(seed).dirichlet(np.ones(len(p)))
        vals = [tst.beta_from_items(p, q, e).value for e in (0.05, 0.2, 0.5, 0.8)]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


class TestSearch:
    @given(seeds, st.floats(0.05, 0.5))
    @settings(max_examples=15)
    def test_brackets(self, seed, eps):
        a = TracedDensity.full(random_density(4, seed), 2)
        b = TracedDensity.full(random_density(4, seed + 1), 2)
        res = tst.beta_epsilon_search(tst.TestInstance(a, b, eps))
        assert not res.exact
        assert res.lower <= res.upper + 1e-12
        P = res.certificate[0]
        assert_allclose(P @ P, P, atol=1e-10)
        assert np.einsum("ij,ji->", a.data, P).real >= 1 - eps - 1e-9
        assert_allclose(np.einsum("ij,ji->", b.data, P).real, res.upper, atol=1e-10)

    @pytest.mark.parametrize("seed", range(4))
    def test_qubit_brute_force(self, seed):
        a = TracedDensity.full(random_density(2, seed), 1)
        b = TracedDensity.full(random_density(2, seed + 50), 1)
        res = tst.beta_epsilon_search(tst.TestInstance(a, b, 0.3))
        brute = qubit_projection_beta(a.data, b.data, 0.3)
        assert res.lower <= brute + 1e-9
        assert res.upper <= brute + 1e-9

    def test_commuting_is_exact(self):
        a = TracedDensity.full(np.diag([0.6, 0.2, 0.1, 0.1]), 2)
        b = TracedDensity.full(np.diag([0.1, 0.2, 0.3, 0.4]), 2)
        res = tst.beta_epsilon_search(tst.TestInstance(a, b, 0.25))
        assert res.exact and res.gap == 0.0
        assert_allclose(res.upper, tst.beta_epsilon_commuting(tst.TestInstance(a, b, 0.25)).value)


class TestStein:
    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_type_classes_match_product(self, n):
        p, q = np.array([0.7, 0.3]), np.array([0.4, 0.6])
        direct = tst.beta_from_items(tst.product_vector(p, n), tst.product_vector(q, n), 0.1).value
        assert_allclose(tst.classical_stein_beta(p, q, n, 0.1), direct, rtol=1e-9)

    def test_exponent_series_matches_oracle(self):
        phi = itx.zero(U1)
        rep = tst.exponent_series(phi, H_DIAG, 0.1, range(1, 9), "proxy_product_fixed")
        q = np.real(np.diag(H_DIAG.exp_minus())) / 2
        # Phi = 0: the proxy and the reference are both the h-product
        for n, b in zip(rep.ns, rep.betas):
            assert abs(b - tst.classical_stein_beta(q, q, n, 0.1)) <= 1e-9
        assert all(rep.exact)

    @pytest.mark.parametrize("n", [3, 6])
    def test_single_site_matches_oracle(self, n):
        a = 0.4 * ops.PAULI_Z
        rep = tst.exponent_series(itx.single_site(a, U1), H_DIAG, 0.1, [n], "gibbs_product_fixed")
        q = np.real(np.diag(H_DIAG.exp_minus())) / 2
        p = np.real(np.diag(ops.expm(-(a + H_DIAG.h))))
        assert_allclose(rep.betas[0], tst.classical_stein_beta(p / p.sum(), q, n, 0.1), rtol=1e-9)

    def test_target_single_site(self):
        rep = tst.exponent_series(itx.zero(U1), H_DIAG, 0.1, range(2, 5), "proxy_product_fixed")
        # the Gibbs state of Phi^h is the reference itself: S_M = 0
        assert_allclose(rep.target, 0.0, atol=1e-12)
        assert_allclose(rep.corridor, (-0.05, 0.05), atol=1e-12)

    def test_monotone_in_eps(self):
        phi = itx.gauge_ising()
        exps = [tst.exponent_series(phi, H_DIAG, e, [6], "gibbs_product_fixed").exponents[0]
                for e in (0.05, 0.1, 0.3)]
        assert exps[0] >= exps[1] >= exps[2]

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            tst.exponent_series(itx.zero(U1), None, 0.1, [2], "nope")

    def test_trace_variant_needs_central(self):
        with pytest.raises(HypothesisError):
            tst.exponent_series(itx.xxz_charge(), GeneratorH.normalize(ops.PAULI_X), 0.1, [2], "proxy_trace_fixed")

    def test_quantum_path(self):
        rep = tst.exponent_series(itx.xxz_charge(0.5, 0.2, 0.1), None, 0.1, [2, 3], "gibbs_product_fixed")
        assert all(np.isfinite(rep.exponents))
        assert all(lo <= up + 1e-12 for lo, up in zip(rep.lower_exponents, rep.exponents))

    def test_labels(self):
        for key in tst.VARIANTS:
            rep = tst.exponent_series(itx.zero(U1), H_DIAG, 0.2, [2], key)
            assert rep.label == tst.EXPONENT_TAGS[key]


class TestAEP:
    def test_iid_mass(self):
        # single-site Phi: proxy p and reference q are i.i.d., D_n a product of p/q
        n, delta = 8, 0.1
        a = 0.6 * ops.PAULI_Z
        res = tst.aep_projection(itx.single_site(a, U1), H_DIAG, n, delta)
        q = np.real(np.diag(H_DIAG.exp_minus())) / 2
        p = np.real(np.diag(ops.expm(-(a + H_DIAG.h))))
        p = p / p.sum()
        assert_allclose(res.target, -float(np.sum(p * np.log(p / q))), atol=1e-12)
        mass = ref = 0.0
        for k in range(n + 1):
            x = -(k * np.log(p[0] / q[0]) + (n - k) * np.log(p[1] / q[1])) / n
            if res.target - delta < x < res.target + delta:
                mass += math.comb(n, k) * p[0] ** k * p[1] ** (n - k)
                ref += math.comb(n, k) * q[0] ** k * q[1] ** (n - k)
        assert 0 < mass < 1
        assert_allclose(res.psi_mass, mass, atol=1e-12)
        assert_allclose(res.ref_mass, ref, atol=1e-12)
        assert res.bound_violation <= 1e-12

    def test_zero_interaction_full_mass(self):
        res = tst.aep_projection(itx.zero(U1), H_DIAG, 4, 0.1)
        assert_allclose(res.psi_mass, 1.0)

    def test_delta_positive(self):
        with pytest.raises(DomainError):
            tst.aep_projection(itx.zero(U1), H_DIAG, 2, 0.0)


class TestLogRatio:
    def test_bound_value(self):
        res = tst.gibbs_log_ratio_bound(itx.gauge_ising(), None, 3, 1)
        assert_allclose(res.bound, 4.0)
        assert res.violation == 0.0

    def test_zero_interaction(self):
        res = tst.gibbs_log_ratio_bound(itx.zero(U1), H_DIAG, 3, 2)
        assert abs(res.value) < 1e-10
        assert res.bound == 0.0
