"""Experiment orchestration: suites, gated checks, CSV tables and the run manifest.

Each suite emits one CSV whose header names the recorded identities.  The
``norms``, ``decomposition``, ``thermo`` and ``variational`` tables have one
row per volume.  ``testing`` is long-format with one row per computed
quantity.  Exact identities and inequalities are gated at the configured
tolerance; convergence series are recorded only.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import operators as ops
from .config import ExperimentConfig
from .densities import TracedDensity
from .errors import CapacityError, HypothesisError
from .interaction import cyclic_derivation_bound, norms
from .states import buffered_gibbs, omega_proxy, weak_gibbs_residual
from .symmetry import decompose, restrict_density
from .tags import TAGS
from . import testing as tst
from . import thermo

# dense window (in sites) beyond which the optional weak-Gibbs column is left blank
WEAK_GIBBS_SITES = 10
VARIATIONAL_BUFFER = 2


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()


@dataclass(frozen=True)
class Check:
    tag: str
    n: int
    value: float
    tol: float
    passed: bool

    def describe(self) -> str:
        state = "ok" if self.passed else "FAIL"
        return f"{state} {self.tag} n={self.n} defect={self.value:.3e} tol={self.tol:.1e}"


@dataclass
class ResultBundle:
    tables: dict
    checks: list
    manifest: dict
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


class _Gate:
    """Collects checks; ``upper`` gates ``value <= tol``, ``within`` gates ``|value| <= tol``."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.checks = []

    def upper(self, key: str, n: int, value: float, kind: str = "exact") -> float:
        tag = TAGS[key]
        tol = self.cfg.tolerance(tag, kind)
        self.checks.append(Check(tag, n, float(value), tol, bool(value <= tol)))
        return value

    def within(self, key: str, n: int, value: float, kind: str = "exact") -> float:
        tag = TAGS[key]
        tol = self.cfg.tolerance(tag, kind)
        self.checks.append(Check(tag, n, float(value), tol, bool(abs(value) <= tol)))
        return value


def _rng(cfg: ExperimentConfig, suite: int, n: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, suite, n]))


def _map(cfg: ExperimentConfig, fn, items) -> list:
    items = list(items)
    if cfg.jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, items))


def _central(cfg: ExperimentConfig) -> bool:
    return cfg.generator.is_central(cfg.spec)


# -- suites --------------------------------------------------------------------------------


def _suite_norms(cfg: ExperimentConfig):
    phi = cfg.interaction
    triple, zero = norms(phi)
    cols = ["n", TAGS["derivation_norm"], TAGS["derivation_bound"], TAGS["triple_norm"], TAGS["zero_norm"]]

    def cell(n):
        g = _Gate(cfg)
        value, bound = cyclic_derivation_bound(phi, n, cfg.max_dim)
        g.upper("derivation_norm", n, value - bound)
        return [n, value, bound, triple, zero], g.checks

    return cols, _map(cfg, cell, cfg.norm_n), []


def _suite_decomposition(cfg: ExperimentConfig):
    spec = cfg.spec
    cols = ["n", TAGS["num_blocks"], TAGS["block_dim_defect"], TAGS["log_max_irrep_dim"],
            TAGS["entropy_split_defect"], TAGS["entropy_split_excess"], TAGS["expectation_gap"],
            TAGS["restriction_gap"], TAGS["restriction_gap_defect"], TAGS["restriction_shift_excess"]]

    def cell(n):
        g = _Gate(cfg)
        dec = decompose(spec, n, cfg.seed, cfg.max_dim)
        dim_defect = abs(sum(m * di for m, di in dec.blocks) - spec.d ** n)
        g.upper("block_dim_defect", n, dim_defect)
        width = math.log(dec.max_irrep_dim) / n
        rng = _rng(cfg, 1, n)
        split_def, split_exc = 0.0, -math.inf
        e_gap, r_gap, r_def, shift_exc = 0.0, 0.0, 0.0, -math.inf
        for _ in range(cfg.samples):
            full = TracedDensity.full(ops.random_density(spec.d ** n, rng), n)
            omega = restrict_density(full, dec)
            defect = thermo.entropy_split_defect(omega)
            split_def = max(split_def, abs(defect - thermo.entropy_split_closed_form(omega)))
            split_exc = max(split_exc, abs(defect) - width)
            D = thermo.product_form_density(dec, rng)
            gaps = thermo.restriction_entropy_gaps(D, dec)
            b = gaps["bound"]
            e_gap = max(e_gap, gaps["expectation_gap"])
            r_gap = max(r_gap, gaps["restriction_gap"])
            # both gaps must lie in [0, b]; record the worst excursion
            shift_exc = max(shift_exc, gaps["restriction_shift"] - b, -gaps["expectation_gap"],
                            gaps["expectation_gap"] - b, -gaps["restriction_gap"], gaps["restriction_gap"] - b)
            r_def = max(r_def, abs(gaps["restriction_gap"] - thermo.restriction_gap_closed_form(D, dec)))
        g.within("entropy_split_defect", n, split_def)
        g.upper("entropy_split_excess", n, split_exc)
        g.within("restriction_gap_defect", n, r_def)
        g.upper("restriction_shift_excess", n, shift_exc)
        row = [n, dec.num_blocks, dim_defect, width, split_def, split_exc, e_gap, r_gap, r_def, shift_exc]
        return row, g.checks

    return cols, _map(cfg, cell, cfg.n_range), []


def _suite_thermo(cfg: ExperimentConfig):
    phi, gen = cfg.interaction, cfg.generator
    central = _central(cfg)
    cols = ["n", TAGS["partition_defect"], TAGS["pressure_phi"], TAGS["pressure_fixed"], TAGS["pressure_full"],
            TAGS["fixed_pressure_gap"], TAGS["fixed_pressure_width"], TAGS["derivative_fd"],
            TAGS["derivative_energy"], TAGS["derivative_defect"], *thermo.CHAIN_TAGS, TAGS["chain_max_gap"],
            TAGS["chain_average_defect"], TAGS["entropy_gap"], TAGS["entropy_gap_excess"],
            TAGS["fixed_vs_full_entropy"]]
    # the partition identity presumes h generates part of the gauge action
    notes = [] if central else ["h is not central: partition identity recorded ungated; fixed-algebra pressure "
                                "gap and entropy chain left blank"]

    def cell(n):
        g = _Gate(cfg)
        ns = [n]
        p_phi = thermo.pressure_series(phi, "phi", ns, gen, cfg.seed, cfg.max_dim)
        if central:
            g.within("partition_defect", n, p_phi.defects[0])
        p_fixed = thermo.pressure_series(phi, "fixed", ns, gen, cfg.seed, cfg.max_dim).values[0]
        p_full = thermo.pressure_series(phi, "full", ns, gen, cfg.seed, cfg.max_dim).values[0]
        fd = thermo.pressure_derivative(phi, gen, phi, n, max_dim=cfg.max_dim)
        en = thermo.gibbs_energy_density(phi, gen, n, max_dim=cfg.max_dim)
        g.within("derivative_defect", n, fd - en, kind="derivative")
        gap = width = None
        chain = [None] * (len(thermo.CHAIN_TAGS) + 4)
        if central:
            gap, width = thermo.fixed_pressure_corridor(phi, gen, n, cfg.seed, cfg.max_dim)
            g.upper("fixed_pressure_gap", n, max(-gap, gap - width))
            pt = thermo.chain_point(phi, gen, n, VARIATIONAL_BUFFER, cfg.seed, cfg.max_dim)
            g.within("chain_average_defect", n, pt["cesaro_defect"])
            excess = pt["entropy_gap"] - pt["entropy_bound"]
            g.upper("entropy_gap_excess", n, excess)
            chain = [*pt["values"], pt["max_gap"], pt["cesaro_defect"], pt["entropy_gap"], excess]
        fvf = thermo.fixed_vs_full_entropy(phi, gen, ns, cfg.seed, cfg.max_dim).values[0]
        row = [n, p_phi.defects[0], p_phi.values[0], p_fixed, p_full, gap, width, fd, en, fd - en, *chain, fvf]
        return row, g.checks

    return cols, _map(cfg, cell, cfg.n_range), notes


def _suite_variational(cfg: ExperimentConfig):
    phi, gen = cfg.interaction, cfg.generator
    cols = ["n", TAGS["variational_defect"], TAGS["variational_split_defect"], TAGS["variational_alt_defect"],
            TAGS["weak_gibbs_residual"]]
    if not _central(cfg):
        return cols, [], ["h is not central: variational suite skipped"]
    L = VARIATIONAL_BUFFER
    alt = phi.scaled(2.0)

    def cell(n):
        g = _Gate(cfg)
        vd = thermo.variational_defect(phi, gen, lambda m: omega_proxy(phi, gen, m, L, max_dim=cfg.max_dim), [n],
                                       cfg.seed, max_dim=cfg.max_dim)
        value, split = vd.values[0], vd.defects[0]
        # relative entropy is nonnegative, so the defect must not be positive
        g.upper("variational_defect", n, value)
        g.within("variational_split_defect", n, split)
        other = thermo.variational_defect(phi, gen, lambda m: buffered_gibbs(alt, (1, m), L, gen, cfg.max_dim),
                                          [n], cfg.seed, max_dim=cfg.max_dim).values[0]
        resid = None
        psi_classical = phi.is_classical and ops.is_diagonal(gen.h)
        if psi_classical or n + 2 * L + 2 <= WEAK_GIBBS_SITES:
            resid = weak_gibbs_residual(phi, gen, (1, n), max(L, phi.range), seed=cfg.seed, max_dim=cfg.max_dim)
        return [n, value, split, other, resid], g.checks

    return cols, _map(cfg, cell, cfg.n_range), []


TESTING_COLUMNS = ["tag", "eps", "buffer", "n", "value", "lower", "bound_lo", "bound_hi", "ok"]


def _suite_testing(cfg: ExperimentConfig):
    phi, gen = cfg.interaction, cfg.generator
    notes = []
    jobs = [(v, e) for v in cfg.variants for e in cfg.eps]

    def series(job):
        v, e = job
        try:
            rep = tst.exponent_series(phi, gen, e, cfg.n_range, v, buffer=VARIATIONAL_BUFFER, seed=cfg.seed,
                                      max_dim=cfg.max_dim)
        except HypothesisError as exc:
            return [], f"{v}: {exc}"
        rows = []
        for n, x, lo, flag in zip(rep.ns, rep.exponents, rep.lower_exponents, rep.in_corridor):
            rows.append([rep.label, e, VARIATIONAL_BUFFER, n, x, lo, rep.corridor[0], rep.corridor[1], flag])
        return rows, None

    rows = []
    for part, note in _map(cfg, series, jobs):
        rows.extend(part)
        if note:
            notes.append(note)

    def ratio(job):
        L, n = job
        g = _Gate(cfg)
        b = tst.gibbs_log_ratio_bound(phi, gen, n, L, cfg.seed, cfg.max_dim)
        g.upper("log_ratio_violation", n, b.violation)
        return [[TAGS["log_ratio"], None, L, n, b.value, None, None, b.bound, b.violation == 0.0]], g.checks

    checks = []
    n_ratio = [n for n in cfg.n_range if n <= 4] or [cfg.n_range[0]]
    for part, ch in _map(cfg, ratio, [(L, n) for L in cfg.buffers for n in n_ratio]):
        rows.extend(part)
        checks.extend(ch)
    for e in cfg.eps:
        n = n_ratio[-1]
        res = tst.aep_projection(phi, gen, n, e, VARIATIONAL_BUFFER, seed=cfg.seed, max_dim=cfg.max_dim)
        rows.append([TAGS["aep_psi_mass"], e, VARIATIONAL_BUFFER, n, res.psi_mass, None, None, None,
                     res.bound_violation == 0.0])
        rows.append([TAGS["aep_ref_mass"], e, VARIATIONAL_BUFFER, n, res.ref_mass, None, None, None, None])
    return TESTING_COLUMNS, [(r, []) for r in rows] + [([], checks)], notes


SUITE_FUNCS = {
    "norms": _suite_norms,
    "decomposition": _suite_decomposition,
    "thermo": _suite_thermo,
    "variational": _suite_variational,
    "testing": _suite_testing,
}


# -- orchestration -----------------------------------------------------------------------------


def required_sites(cfg: ExperimentConfig) -> int:
    """Widest dense window the selected suites will build."""
    n = max(cfg.n_range)
    psi_classical = cfg.interaction.is_classical and ops.is_diagonal(cfg.generator.h)
    widest = n if psi_classical else n + 2 * VARIATIONAL_BUFFER
    if "norms" in cfg.suites:
        widest = max(widest, 2 * max(cfg.norm_n) + 1 + 2 * cfg.interaction.range)
    return widest


def check_capacity(cfg: ExperimentConfig) -> None:
    """Raise ``CapacityError`` (with the largest feasible ``n``) if the run cannot fit."""
    if not cfg.suites:
        return
    d = cfg.spec.d
    sites = required_sites(cfg)
    if d ** sites > cfg.max_dim:
        slack = sites - max(cfg.n_range)
        feasible = int(math.floor(math.log(cfg.max_dim) / math.log(d) + 1e-12)) - slack
        raise CapacityError(d ** sites, cfg.max_dim, max(feasible, 0))


def run(cfg: ExperimentConfig, out: str | Path | None = None, write: bool = True) -> ResultBundle:
    """Execute the selected suites; tables and a manifest go to ``out`` (default ``cfg.out``)."""
    check_capacity(cfg)
    start = time.perf_counter()
    tables, checks, notes = {}, [], []
    for name in cfg.suites:
        cols, cells, suite_notes = SUITE_FUNCS[name](cfg)
        table = Table(name, cols)
        for row, ch in cells:
            if row:
                table.rows.append(row)
            checks.extend(ch)
        tables[name] = table
        notes.extend(f"{name}: {s}" for s in suite_notes)
    wall = time.perf_counter() - start
    manifest = _manifest(cfg, tables, checks, notes, wall)
    bundle = ResultBundle(tables, checks, manifest, notes)
    if write:
        write_bundle(bundle, Path(cfg.out if out is None else out))
    return bundle


def _versions() -> dict:
    import scipy

    from . import __version__
    from .cover import BACKEND

    return {"gaugechain": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "cover_backend": BACKEND}


def _manifest(cfg, tables, checks, notes, wall) -> dict:
    return {
        "config_sha256": cfg.digest(),
        "config": cfg.summary(),
        "versions": _versions(),
        "wall_time_s": wall,
        "tables": {name: {"file": f"{name}.csv", "rows": len(t.rows),
                          "sha256": hashlib.sha256(t.csv_text().encode()).hexdigest()}
                   for name, t in tables.items()},
        "checks": {"total": len(checks), "failed": sum(not c.passed for c in checks)},
        "failures": [{"tag": c.tag, "n": c.n, "defect": c.value, "tol": c.tol} for c in checks if not c.passed],
        "notes": notes,
        "passed": all(c.passed for c in checks),
    }


def write_bundle(bundle: ResultBundle, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, t in bundle.tables.items():
        (out / f"{name}.csv").write_text(t.csv_text(), encoding="utf-8")
    (out / "manifest.json").write_text(json.dumps(bundle.manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")


# -- diagnostics -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    topic: str
    message: str

    def __str__(self):
        return f"[{self.topic}] {self.message}"


def validate(cfg: ExperimentConfig) -> list:
    """Diagnostics on gauge invariance, normalization and centrality of ``h``, and capacity."""
    out = []
    for x, r in sorted(cfg.gauge_residuals.items()):
        if r > 1e-10:
            out.append(Diagnostic("gauge", f"term on offsets {x} is not gauge invariant (residual {r:.3e})"))
    if cfg.gauge_residuals and not any(d.topic == "gauge" for d in out):
        out.append(Diagnostic("gauge", "all terms gauge invariant"))
    gen = cfg.generator
    if abs(gen.shift) <= 1e-12:
        norm = "already normalized"
    else:
        norm = f"normalization shift c = log tau_0(exp(-h)) = {gen.shift:.12g} applied"
    central = gen.is_central(cfg.spec)
    out.append(Diagnostic("generator", f"{norm}, {'central' if central else 'not central'}"))
    if not central:
        out.append(Diagnostic("generator", "fixed-algebra chain, variational suite and trace-referenced "
                                           "exponents will be skipped"))
    try:
        check_capacity(cfg)
        out.append(Diagnostic("capacity", f"widest dense window {cfg.spec.d}^{required_sites(cfg)} "
                                          f"within cap {cfg.max_dim}"))
    except CapacityError as exc:
        out.append(Diagnostic("capacity", str(exc)))
    return out
