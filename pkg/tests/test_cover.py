import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from gaugechain import cover
from gaugechain.cover import group_items, min_weight_cover

BACKENDS = ["python"] + (["cython"] if cover.BACKEND == "cython" else [])


def brute_force(p, w, cnt, target, tol=1e-12):
    best = np.inf
    for k in itertools.product(*[range(c + 1) for c in cnt]):
        k = np.asarray(k)
        if k @ p >= target - tol:
            best = min(best, float(k @ w))
    return best


@st.composite
def instances(draw, max_groups=5, max_count=3, integral=False):
    m = draw(st.integers(1, max_groups))
    if integral:
        vals = st.integers(0, 6).map(float)
    else:
        vals = st.floats(0.0, 1.0, allow_nan=False).map(lambda x: round(x, 3))
    p = np.array(draw(st.lists(vals, min_size=m, max_size=m)))
    w = np.array(draw(st.lists(vals, min_size=m, max_size=m)))
    cnt = np.array(draw(st.lists(st.integers(0, max_count), min_size=m, max_size=m)))
    frac = draw(st.floats(0.0, 1.1))
    target = frac * float(p @ cnt)
    return p, w, cnt, target


@pytest.mark.parametrize("backend", BACKENDS)
class TestMinWeightCover:
    @given(inst=instances())
    @settings(max_examples=80)
    def test_matches_brute_force(self, backend, inst):
        p, w, cnt, target = inst
        value, take = min_weight_cover(p, w, cnt, target, backend=backend)
        want = brute_force(p, w, cnt, target)
        if np.isinf(want):
            assert np.isinf(value)
            return
        assert_allclose(value, want, atol=1e-9)
        assert np.all((take >= 0) & (take <= cnt))
        assert take @ p >= target - 1e-9
        assert_allclose(take @ w, value, atol=1e-9)

    @given(inst=instances(max_groups=6, max_count=4, integral=True))
    @settings(max_examples=80)
    def test_ties(self, backend, inst):
        # small integer values force many equal ratios and equal keys
        p, w, cnt, target = inst
        value, _ = min_weight_cover(p, w, cnt, target, backend=backend)
        want = brute_force(p, w, cnt, target)
        assert (np.isinf(value) and np.isinf(want)) or abs(value - want) < 1e-9

    def test_free_items_taken_whole(self, backend):
        value, take = min_weight_cover([0.5, 0.3], [0.0, 1.0], [2, 1], 0.4, backend=backend)
        assert value == 0.0
        assert list(take) == [2, 0]

    def test_infeasible(self, backend):
        value, _ = min_weight_cover([0.1], [1.0], [2], 0.5, backend=backend)
        assert np.isinf(value)

    def test_zero_target(self, backend):
        value, take = min_weight_cover([0.1], [1.0], [2], 0.0, backend=backend)
        assert value == 0.0 and take.sum() == 0

    def test_correlated_large(self, backend):
        rng = np.random.default_rng(3)
        w = rng.integers(1, 100, size=30).astype(float)
        p = w + 10.0
        cnt = rng.integers(1, 4, size=30)
        target = 0.5 * float(p @ cnt)
        value, take = min_weight_cover(p, w, cnt, target, backend=backend)
        assert take @ p >= target - 1e-9
        assert_allclose(take @ w, value)


class TestBackends:
    @given(inst=instances(max_groups=8, max_count=5))
    @settings(max_examples=60)
    def test_agree(self, inst):
        vals = [min_weight_cover(*inst, backend=b)[0] for b in BACKENDS]
        assert all(v == vals[0] or abs(v - vals[0]) < 1e-12 for v in vals)

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            min_weight_cover([1.0], [1.0], [1], 0.5, backend="fortran")

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            min_weight_cover([1.0], [-1.0], [1], 0.5)


class TestGroupItems:
    def test_merges_ties(self):
        p, w, c = group_items([0.1, 0.2, 0.1], [0.5, 0.5, 0.5])
        assert list(c) == [2, 1]
        assert_allclose(p, [0.1, 0.2])

    def test_empty(self):
        p, w, c = group_items([], [])
        assert c.size == 0

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=20))
    def test_totals_preserved(self, pairs):
        p = np.array([a for a, _ in pairs], dtype=float) / 7
        w = np.array([b for _, b in pairs], dtype=float) / 3
        gp, gw, c = group_items(p, w)
        assert c.sum() == len(pairs)
        assert_allclose(gp @ c, p.sum(), atol=1e-12)
        assert_allclose(gw @ c, w.sum(), atol=1e-12)
