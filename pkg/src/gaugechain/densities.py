"""Reference traces and densities tagged with the trace they are taken against."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import operators as ops
from .errors import DomainError

UNIT_TRACE_TOL = 1e-12
POSITIVITY_FLOOR = -1e-12


class FullTrace:
    """The ordinary matrix trace on the full chain algebra."""

    kind = "full"

    def __repr__(self):
        return "FullTrace()"

    def __eq__(self, other):
        return isinstance(other, FullTrace)

    def __hash__(self):
        return hash("FullTrace")


@dataclass(frozen=True, eq=False)
class FixedAlgebraTrace:
    """Canonical trace of the fixed-point algebra: weight one on every minimal projection."""

    decomposition: "object"
    kind = "fixed"

    def __eq__(self, other):
        return isinstance(other, FixedAlgebraTrace) and other.decomposition is self.decomposition

    def __hash__(self):
        return id(self.decomposition)

    def identity_weight(self) -> int:
        return sum(m for m, _ in self.decomposition.blocks)


@dataclass(frozen=True, eq=False)
class StateTrace:
    """Weighting by a state, given through its density with respect to the full trace."""

    density: np.ndarray
    kind = "state"


CanonicalTrace = Union[FullTrace, FixedAlgebraTrace, StateTrace]


@dataclass(frozen=True, eq=False)
class TracedDensity:
    """A positive, unit-trace density together with its reference trace.

    For ``FullTrace`` the payload is one ``d^n x d^n`` matrix.  For
    ``FixedAlgebraTrace`` it is a tuple of ``m_i x m_i`` blocks, one per
    isotypic component of the fixed-point algebra.
    """

    data: Union[np.ndarray, tuple]
    reference: Union[FullTrace, FixedAlgebraTrace]
    n: int

    def __post_init__(self):
        if isinstance(self.reference, FullTrace):
            if not isinstance(self.data, np.ndarray):
                raise DomainError("full-trace density must be a single matrix")
        elif isinstance(self.reference, FixedAlgebraTrace):
            dec = self.reference.decomposition
            if len(self.data) != len(dec.blocks):
                raise DomainError("block count does not match the decomposition")
            for blk, (m, _) in zip(self.data, dec.blocks):
                if blk.shape != (m, m):
                    raise DomainError(f"block of shape {blk.shape} where ({m}, {m}) expected")
        else:
            raise DomainError(f"unsupported reference {self.reference!r}")
        total = sum(float(np.trace(b).real) for b in self.blocks)
        if abs(total - 1.0) > UNIT_TRACE_TOL:
            raise DomainError(f"reference trace {total!r} differs from 1")
        if self.spectrum.size and self.spectrum.min() < POSITIVITY_FLOOR:
            raise DomainError(f"density has eigenvalue {self.spectrum.min():.3e} below floor")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def full(cls, matrix, n: int, normalize: bool = True) -> "TracedDensity":
        m = ops.hermitian(matrix, tol=1e-10)
        if normalize:
            m = m / np.trace(m).real
        return cls(m, FullTrace(), n)

    @classmethod
    def fixed(cls, blocks: Sequence[np.ndarray], decomposition, normalize: bool = True) -> "TracedDensity":
        bl = tuple(ops.hermitian(b, tol=1e-10) for b in blocks)
        if normalize:
            total = sum(np.trace(b).real for b in bl)
            bl = tuple(b / total for b in bl)
        return cls(bl, FixedAlgebraTrace(decomposition), decomposition.n)

    # -- views ----------------------------------------------------------------

    @property
    def is_fixed(self) -> bool:
        return isinstance(self.reference, FixedAlgebraTrace)

    @property
    def decomposition(self):
        return self.reference.decomposition if self.is_fixed else None

    @property
    def blocks(self) -> tuple:
        return self.data if self.is_fixed else (self.data,)

    @cached_property
    def eigensystems(self) -> tuple:
        return tuple(ops.spectral(b) for b in self.blocks)

    @cached_property
    def spectrum(self) -> np.ndarray:
        parts = [w for w, _ in self.eigensystems]
        return np.concatenate(parts) if parts else np.zeros(0)

    def compatible(self, other: "TracedDensity") -> bool:
        return self.n == other.n and self.reference == other.reference

    def operator_blocks(self, a) -> tuple:
        """Express an observable in the same block layout as the density."""
        if isinstance(a, (tuple, list)):
            return tuple(a)
        if self.is_fixed:
            return tuple(self.decomposition.compress(a))
        return (a,)

    def expect(self, a) -> float:
        return float(sum(np.einsum("ij,ji->", d, x).real for d, x in zip(self.blocks, self.operator_blocks(a))))

    def to_full_matrix(self) -> np.ndarray:
        """Density w.r.t. the full trace of the gauge-invariant extension of this state."""
        if not self.is_fixed:
            return self.data
        dec = self.decomposition
        return dec.expand([b / di for b, (_, di) in zip(self.blocks, dec.blocks)])

    def trace_distance(self, other: "TracedDensity") -> float:
        """Trace norm of the difference (no factor one half)."""
        if not self.compatible(other):
            raise DomainError("densities live on different references")
        return float(sum(np.abs(ops.eigvalsh(a - b)).sum() for a, b in zip(self.blocks, other.blocks)))
