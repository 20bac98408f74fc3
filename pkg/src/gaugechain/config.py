"""Experiment configuration: TOML ingestion and validation.

Matrices are written as row-major nested lists whose entries are ``[re, im]``
pairs (a bare number is read as a real entry); a flat list of ``d*d`` pairs
is accepted too.  Every error names the offending field and, when it can be
located, the line.

Example::

    seed = 7
    n_range = [2, 8]
    suites = ["norms", "decomposition", "thermo", "variational", "testing"]

    [symmetry]
    backend = "abelian"
    charges = [1, -1]

    [interaction]
    preset = "gauge_ising"
    params = { mu = 1.0, J = 1.0 }

    [generator]
    h = [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]
"""
from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on the interpreter
    import tomli as tomllib

from .errors import ConfigError, GaugeChainError
from .interaction import PRESETS, GeneratorH, Interaction
from .symmetry import SymmetrySpec, gauge_residual

SUITES = ("norms", "decomposition", "thermo", "variational", "testing")
DEFAULT_MAX_DIM = 2 ** 14
DEFAULT_TOLERANCES = {"exact": 1e-9, "derivative": 1e-6}
_TOP_KEYS = {"seed", "out", "max_dim", "suites", "n_range", "eps", "buffers", "norm_n", "samples", "jobs",
             "symmetry", "interaction", "generator", "tolerances", "testing"}


@dataclass
class ExperimentConfig:
    spec: SymmetrySpec
    interaction: Interaction
    generator: GeneratorH
    raw_h: np.ndarray
    n_range: tuple
    seed: int
    eps: tuple = (0.1,)
    buffers: tuple = (1, 2, 3)
    suites: tuple = SUITES
    out: str = "results"
    max_dim: int = DEFAULT_MAX_DIM
    norm_n: tuple = (1, 2, 3)
    samples: int = 20
    jobs: int = 1
    variants: tuple = ("proxy_product_fixed",)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    overrides: dict = field(default_factory=dict)
    source: str = ""
    gauge_residuals: dict = field(default_factory=dict)

    def tolerance(self, tag: str, kind: str = "exact") -> float:
        """Per-tag override if present, else the default for ``kind``."""
        return float(self.overrides.get(tag, self.tolerances[kind]))

    def digest(self) -> str:
        return hashlib.sha256(self.source.encode()).hexdigest()

    def summary(self) -> dict:
        return {
            "symmetry": self.spec.kind,
            "interaction": self.interaction.name,
            "n_range": list(self.n_range),
            "seed": self.seed,
            "eps": list(self.eps),
            "buffers": list(self.buffers),
            "suites": list(self.suites),
            "max_dim": self.max_dim,
            "variants": list(self.variants),
        }


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=", re.M)
    m = pat.search(text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def fail(self, msg: str, name: str):
        raise ConfigError(msg, field=name, line=_line_of(self.text, name.split(".")[-1]))

    def matrix(self, value, name: str, d: int | None = None) -> np.ndarray:
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            self.fail("matrix entries must be numbers or [re, im] pairs", name)
        if arr.ndim == 2 and arr.shape[1] == 2 and d is not None and arr.shape[0] == d * d:
            arr = arr.reshape(d, d, 2)
        if arr.ndim == 3 and arr.shape[2] == 2:
            m = arr[..., 0] + 1j * arr[..., 1]
        elif arr.ndim == 2:
            m = arr.astype(complex)
        else:
            self.fail(f"cannot read a square matrix from shape {arr.shape}", name)
        if m.shape[0] != m.shape[1]:
            self.fail(f"matrix is {m.shape[0]}x{m.shape[1]}, not square", name)
        if d is not None and m.shape[0] != d:
            self.fail(f"expected a {d}x{d} matrix", name)
        return m

    def int_list(self, value, name: str) -> tuple:
        if isinstance(value, int) and not isinstance(value, bool):
            return (value,)
        if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
            self.fail("expected an integer or a list of integers", name)
        return tuple(value)


def _symmetry(r: _Reader, tbl: dict) -> SymmetrySpec:
    kind = tbl.get("backend", "abelian")
    try:
        if kind == "trivial":
            return SymmetrySpec.trivial(int(tbl.get("d", 2)))
        if kind == "abelian":
            return SymmetrySpec.u1(r.int_list(tbl.get("charges", [1, -1]), "symmetry.charges"))
        if kind == "su2":
            return SymmetrySpec.su2()
        if kind == "finite":
            els = tbl.get("elements")
            if not els:
                r.fail("finite backend needs a list of group elements", "symmetry.elements")
            return SymmetrySpec.finite([r.matrix(e, "symmetry.elements") for e in els])
        if kind == "lie":
            gens = tbl.get("generators")
            if not gens:
                r.fail("lie backend needs a list of generators", "symmetry.generators")
            return SymmetrySpec.lie([r.matrix(g, "symmetry.generators") for g in gens])
    except ConfigError:
        raise
    except (GaugeChainError, ValueError) as exc:
        r.fail(str(exc), "symmetry.backend")
    r.fail(f"unknown backend {kind!r}; choose trivial, abelian, su2, finite or lie", "symmetry.backend")


def _terms(r: _Reader, spec: SymmetrySpec, rows: list) -> dict:
    terms = {}
    for k, row in enumerate(rows):
        name = f"interaction.terms[{k}]"
        support = row.get("support")
        if not isinstance(support, list) or not support:
            r.fail("each term needs a nonempty 'support' list", "support")
        support = tuple(int(s) for s in support)
        m = r.matrix(row.get("matrix"), "matrix", spec.d ** len(support))
        if support in terms:
            r.fail(f"duplicate support {support} in {name}", "support")
        terms[support] = m
    return terms


def _interaction(r: _Reader, spec: SymmetrySpec, tbl: dict, lenient: bool = False) -> tuple:
    """The interaction and, for raw terms, each term's gauge residual."""
    preset = tbl.get("preset")
    rows = tbl.get("terms")
    if preset is not None and rows is not None:
        r.fail("give either a preset or raw terms, not both", "interaction.preset")
    if preset is not None:
        if preset not in PRESETS:
            r.fail(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", "interaction.preset")
        params = dict(tbl.get("params", {}))
        try:
            phi = PRESETS[preset](**params)
        except TypeError as exc:
            r.fail(str(exc), "interaction.params")
        if spec is None:
            return phi, {}
        if phi.spec.key() != spec.key():
            r.fail(f"preset {preset!r} uses a {phi.spec.kind} symmetry that differs from [symmetry]",
                   "interaction.preset")
        return phi, {}
    spec = SymmetrySpec.u1([1, -1]) if spec is None else spec
    terms = _terms(r, spec, rows or [])
    residuals = {x: gauge_residual(m, spec, len(x)) for x, m in terms.items()}
    try:
        phi = Interaction(spec, terms, gauge_invariant=not lenient, name=tbl.get("name", "custom"))
    except GaugeChainError as exc:
        r.fail(str(exc), "interaction.terms")
    return phi, residuals


def parse(text: str, overrides: dict | None = None, lenient: bool = False) -> ExperimentConfig:
    """Build a config from TOML text; ``overrides`` replaces top-level keys (CLI flags).

    ``lenient`` accepts gauge-violating raw terms so that they can be
    diagnosed instead of rejected.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax: {exc}", line=int(m.group(1)) if m else None) from None
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    r = _Reader(text)
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        r.fail(f"unknown key {unknown[0]!r}", unknown[0])
    if "seed" not in data:
        raise ConfigError("a seed is mandatory", field="seed")
    seed = data["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        r.fail("seed must be a nonnegative integer", "seed")

    # without a [symmetry] table a preset brings its own
    spec = _symmetry(r, data["symmetry"]) if "symmetry" in data else None
    phi, residuals = _interaction(r, spec, data.get("interaction", {"preset": "gauge_ising"}), lenient)
    spec = phi.spec
    h_raw = data.get("generator", {}).get("h")
    raw = np.zeros((spec.d, spec.d), dtype=complex) if h_raw is None else r.matrix(h_raw, "generator.h", spec.d)
    if not np.allclose(raw, raw.conj().T, atol=1e-12):
        r.fail("h must be hermitian", "generator.h")
    gen = GeneratorH.normalize(raw)

    nr = data.get("n_range", [2, 8])
    if not isinstance(nr, list) or not nr or not all(isinstance(x, int) for x in nr):
        r.fail("n_range must be a nonempty list of integers", "n_range")
    # two entries read as an inclusive range, longer lists as explicit values
    ns = tuple(range(nr[0], nr[1] + 1)) if len(nr) == 2 else tuple(nr)
    if not ns or ns[0] < 1 or any(b <= a for a, b in zip(ns, ns[1:])):
        r.fail("n_range must be positive and strictly ascending", "n_range")

    eps = data.get("eps", [0.1])
    eps = tuple(float(e) for e in (eps if isinstance(eps, list) else [eps]))
    if not eps or any(not 0.0 < e < 1.0 for e in eps):
        r.fail("every eps must lie in (0, 1)", "eps")
    buffers = r.int_list(data.get("buffers", [1, 2, 3]), "buffers")
    if any(b < 0 for b in buffers):
        r.fail("buffers must be nonnegative", "buffers")
    norm_n = r.int_list(data.get("norm_n", [1, 2, 3]), "norm_n")

    suites = data.get("suites", list(SUITES))
    if not isinstance(suites, list):
        r.fail("suites must be a list", "suites")
    bad = [s for s in suites if s not in SUITES]
    if bad:
        r.fail(f"unknown suite {bad[0]!r}; choose from {list(SUITES)}", "suites")
    suites = tuple(s for s in SUITES if s in suites)

    max_dim = data.get("max_dim", DEFAULT_MAX_DIM)
    if not isinstance(max_dim, int) or max_dim < spec.d:
        r.fail("max_dim must be an integer of at least d", "max_dim")
    samples = data.get("samples", 20)
    if not isinstance(samples, int) or samples < 1:
        r.fail("samples must be a positive integer", "samples")
    jobs = data.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        r.fail("jobs must be a positive integer", "jobs")

    from .testing import VARIANTS
    variants = tuple(data.get("testing", {}).get("variants", ["proxy_product_fixed"]))
    for v in variants:
        if v not in VARIANTS:
            r.fail(f"unknown variant {v!r}; choose from {sorted(VARIANTS)}", "variants")

    tol_tbl = dict(data.get("tolerances", {}))
    tag_over = tol_tbl.pop("overrides", {})
    tols = dict(DEFAULT_TOLERANCES)
    for k, v in tol_tbl.items():
        if k not in tols:
            r.fail(f"unknown tolerance class {k!r}", k)
        tols[k] = float(v)

    canonical = json.dumps(data, sort_keys=True, default=str)
    return ExperimentConfig(spec=spec, interaction=phi, generator=gen, raw_h=raw, n_range=ns, seed=seed, eps=eps,
                            buffers=buffers, suites=suites, out=str(data.get("out", "results")), max_dim=max_dim,
                            norm_n=norm_n, samples=samples, jobs=jobs, variants=variants, tolerances=tols,
                            overrides={k: float(v) for k, v in tag_over.items()}, source=canonical,
                            gauge_residuals=residuals)


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def load(path, overrides: dict | None = None, lenient: bool = False) -> ExperimentConfig:
    return parse(read_text(path), overrides, lenient)
