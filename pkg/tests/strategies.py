"""Hypothesis strategies shared by the property tests."""
import numpy as np
from hypothesis import strategies as st

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_density(dim, seed, rank=None):
    rng = np.random.default_rng(seed)
    r = dim if rank is None else rank
    g = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@st.composite
def probability_vectors(draw, min_size=2, max_size=8):
    k = draw(st.integers(min_size, max_size))
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
    v = np.asarray(raw)
    return v / v.sum()
