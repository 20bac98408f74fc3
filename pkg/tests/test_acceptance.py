"""Acceptance criteria, one test per criterion.

Each test records a one-line verdict that the terminal summary prints
(see ``conftest.py``); run ``pytest tests/test_acceptance.py -v`` to see it.
"""
import math

import numpy as np
import pytest

from gaugechain import config, runner
from gaugechain import interaction as itx
from gaugechain import testing as tst
from gaugechain import thermo
from gaugechain.densities import TracedDensity
from gaugechain.interaction import GeneratorH
from gaugechain.states import buffered_gibbs, gibbs_state, product_phi_hat
from gaugechain.symmetry import SymmetrySpec, decompose, restrict_density

from verdicts import record

U1 = SymmetrySpec.u1([1, -1])
SU2 = SymmetrySpec.su2()
H_DIAG = GeneratorH.normalize(np.diag([1.0, -1.0]))
pytestmark = pytest.mark.acceptance


def su2_oracle(n):
    out = {}
    for k in range(n // 2 + 1):
        m = math.comb(n, k) - (math.comb(n, k - 1) if k else 0)
        out[n - 2 * k + 1] = m
    return out


def test_criterion_01_decomposition():
    bad = []
    for n in range(1, 9):
        for spec, want in ((SymmetrySpec.trivial(2), {1: 2**n}),
                           (U1, None),
                           (SU2, su2_oracle(n))):
            dec = decompose(spec, n)
            if sum(m * d for m, d in dec.blocks) != 2**n:
                bad.append((spec.kind, n, "dim"))
            if want is None:
                ok = sorted(dec.blocks) == sorted((math.comb(n, k), 1) for k in range(n + 1))
            else:
                ok = {d: m for m, d in dec.blocks} == want and len(dec.blocks) == len(want)
            if not ok:
                bad.append((spec.kind, n, dec.blocks))
    su2_3 = sorted(decompose(SU2, 3).blocks)
    ok = not bad and su2_3 == [(1, 4), (2, 2)]
    record(1, ok, f"3 backends x n=1..8 exact; SU(2) n=3 blocks {su2_3}; mismatches {bad}")
    assert ok


def test_criterion_02_partition_identity():
    worst = 0.0
    for gen in (GeneratorH.zero(2), H_DIAG):
        for n in range(1, 11):
            worst = max(worst, abs(thermo.partition_identity_defect(itx.gauge_ising(), gen, n)))
    ok = worst < 1e-9
    record(2, ok, f"max defect {worst:.2e} over h in {{0, diag}}, n <= 10 (tol 1e-9)")
    assert ok


def test_criterion_03_entropy_split_corridor():
    worst = -np.inf
    for spec in (U1, SU2):
        for n in range(1, 7):
            dec = decompose(spec, n)
            width = math.log(dec.max_irrep_dim) / n
            rng = np.random.default_rng([3, n, len(spec.kind)])
            for _ in range(20):
                rho = TracedDensity.full(thermo.ops.random_density(2**n, rng), n)
                defect = thermo.entropy_split_defect(restrict_density(rho, dec))
                worst = max(worst, abs(defect) - width)
    ok = worst <= 1e-9
    record(3, ok, f"max(|defect| - width) = {worst:.2e} over abelian and SU(2), n <= 6, 20 states each")
    assert ok


def test_criterion_04_restriction_bound():
    worst, chains = -np.inf, 0
    for n in range(1, 7):
        dec = decompose(SU2, n)
        rng = np.random.default_rng([4, n])
        for _ in range(20):
            g = thermo.restriction_entropy_gaps(thermo.product_form_density(dec, rng), dec)
            assert abs(g["bound"] - math.log(n + 1)) < 1e-12
            worst = max(worst, g["restriction_shift"] - math.log(n + 1))
            for key in ("expectation_gap", "restriction_gap"):
                if not -1e-9 <= g[key] <= g["bound"] + 1e-9:
                    chains += 1
    ok = worst <= 1e-9 and chains == 0
    record(4, ok, f"max(|S(D|A) - S(D)| - log(n+1)) = {worst:.3f}; chain violations {chains}")
    assert ok


def test_criterion_05_derivation_bound():
    phi = itx.gauge_ising(1.0, 1.0)
    zero = itx.norms(phi)[1]
    vals = [itx.cyclic_derivation_bound(phi, n) for n in (1, 2, 3)]
    ok = abs(zero - 5.0) < 1e-12 and all(v <= b for v, b in vals)
    record(5, ok, f"||Phi||_0 = {zero:g}; values {[round(v, 6) for v, _ in vals]} <= {vals[0][1]:g}")
    assert ok


def test_criterion_06_pressure_derivative():
    phi = itx.gauge_ising()
    gen = H_DIAG
    fd = thermo.pressure_derivative(phi, gen, phi, 4, step=1e-4)
    exact = thermo.gibbs_energy_density(phi, gen, 4)
    ok = abs(fd - exact) < 1e-6
    record(6, ok, f"finite difference {fd:.11f} vs energy {exact:.11f} (diff {abs(fd - exact):.1e})")
    assert ok


def test_criterion_07_entropy_chain():
    out = thermo.entropy_density_chain(itx.zero(U1), H_DIAG, range(1, 11))
    want = thermo.single_site_chain_values(H_DIAG)
    exact = max(float(np.max(np.abs(out[tag].values - w))) for tag, w in zip(thermo.CHAIN_TAGS, want))
    gaps = thermo.entropy_density_chain(itx.gauge_ising(), H_DIAG, [5, 10])[thermo.TAGS["chain_max_gap"]]
    g5, g10 = gaps.values
    ex = gaps.extrapolation
    ok = exact < 1e-9 and g10 < g5
    record(7, ok, f"Phi=0 closed-form error {exact:.1e}; gauge Ising max gap n=5 {g5:.4f} -> n=10 {g10:.4f}"
                  f" ({ex.method} estimate {ex.estimate:.4f})")
    assert ok


def test_criterion_08_variational():
    phi = itx.gauge_ising()
    gen = H_DIAG
    ns = range(2, 11)
    proxy = thermo.variational_defect(phi, gen, lambda n: buffered_gibbs(phi, (1, n), 2, gen), ns)
    gated = {
        "doubled": lambda n: buffered_gibbs(phi.scaled(2.0), (1, n), 2, gen),
        "uniform": lambda n: gibbs_state(np.zeros((2**n, 2**n)), n=n),
    }
    g = proxy.values
    decreasing = bool(np.all(np.diff(np.abs(g)) < 0))
    margin = min(float(np.min(g - thermo.variational_defect(phi, gen, fam, ns).values)) for fam in gated.values())
    # the reference product state is recorded, not gated: at n = 2 it beats the buffered proxy
    prod = thermo.variational_defect(phi, gen, lambda n: product_phi_hat(gen, n), ns).values
    behind = [n for n, a, b in zip(ns, g, prod) if b > a]
    local = thermo.variational_defect(
        phi, gen, lambda n: gibbs_state(thermo.hamiltonian(itx.perturb(phi, gen), n), n=n), ns).values
    ok = abs(g[-1]) < 0.05 and decreasing and margin > 1e-9 and float(np.max(np.abs(local))) < 1e-9
    record(8, ok, f"equilibrium defect n=2 {g[0]:.4f} -> n=10 {g[-1]:.4f}, |.| decreasing {decreasing};"
                  f" lead over 2H and uniform {margin:.4f}; product state ahead at n in {behind} (data)")
    assert ok


def test_criterion_09_stein_corridor():
    eps = 0.1
    rep = tst.exponent_series(itx.zero(U1), H_DIAG, eps, range(1, 13), "proxy_product_fixed")
    q = np.real(np.diag(H_DIAG.exp_minus())) / 2
    # Phi = 0: the equilibrium proxy and the reference are the same product state
    oracle = [tst.classical_stein_beta(q, q, n, eps) for n in rep.ns]
    match = max(abs(b - o) for b, o in zip(rep.betas, oracle))
    lo, hi = rep.corridor
    e12 = rep.exponents[-1]
    ok = lo <= e12 <= hi and match < 1e-9 and all(rep.exact)
    record(9, ok, f"exponent n=12 {e12:.5f} in [{lo:.4f}, {hi:.4f}] (S_M = {-rep.target:.2e});"
                  f" oracle mismatch {match:.1e}")
    assert ok


def test_criterion_10_log_ratio():
    res = [tst.gibbs_log_ratio_bound(itx.gauge_ising(), H_DIAG, 4, L) for L in (1, 2, 3)]
    viol = [r.violation for r in res]
    ok = all(b <= a for a, b in zip(viol, viol[1:]))
    record(10, ok, f"violations {viol} (values {[round(r.value, 3) for r in res]}, bound {res[0].bound:g});"
                   " non-increasing")
    assert ok


def test_criterion_11_determinism(tmp_path):
    cfg = config.parse("seed = 1\n")
    runner.run(cfg, tmp_path / "a")
    runner.run(config.parse("seed = 1\n"), tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in names)
    ok = same and len(names) == len(config.SUITES)
    record(11, ok, f"{len(names)} CSV files byte-identical across two default runs: {same}")
    assert ok
