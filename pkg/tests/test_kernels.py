"""Compiled and pure-numpy kernels must agree."""
import numpy as np
import pytest

from dcot import _fallback
from dcot._backend import BACKEND, compiled
from dcot.numerics import cosine_distance_matrix, euclidean_distance_matrix
from dcot.transport import gibbs_kernel

ext = compiled()
needs_ext = pytest.mark.skipif(ext is None, reason="compiled kernels not built")


def test_backend_name():
    assert BACKEND in ("cython", "python")


@needs_ext
@pytest.mark.parametrize("shape", [(1, 1, 3), (5, 7, 4), (33, 65, 16), (128, 128, 32)])
def test_blocked_distances_match_reference(shape):
    m, n, d = shape
    r = np.random.default_rng(m * n)
    A, B = r.standard_normal((m, d)), r.standard_normal((n, d))
    np.testing.assert_allclose(cosine_distance_matrix(A, B, impl="blocked"),
                               cosine_distance_matrix(A, B, impl="reference"), atol=1e-12, rtol=0)
    np.testing.assert_allclose(euclidean_distance_matrix(A, B, impl="blocked"),
                               euclidean_distance_matrix(A, B, impl="reference"), atol=1e-12, rtol=0)


@needs_ext
@pytest.mark.parametrize("M", [1, 2, 16, 128])
def test_sinkhorn_scaling_matches_reference(M):
    r = np.random.default_rng(M)
    K = gibbs_kernel(r.uniform(0, 2, (M, M)), 20.0)
    a = np.full(M, 1.0 / M)
    u1, v1, it1, c1, s1 = ext.sinkhorn_scaling(K, a, a, 100, 1e-8)
    u2, v2, it2, c2, s2 = _fallback.sinkhorn_scaling(K, a, a, 100, 1e-8)
    assert (it1, c1, s1) == (it2, c2, s2)
    np.testing.assert_allclose(u1, u2, rtol=1e-10)
    np.testing.assert_allclose(v1, v2, rtol=1e-10)


@needs_ext
def test_sinkhorn_scaling_reports_nonfinite():
    K = np.array([[1.0, 0.0], [0.0, 0.0]])
    a = np.full(2, 0.5)
    assert ext.sinkhorn_scaling(K, a, a, 10, 1e-8)[4] != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        assert _fallback.sinkhorn_scaling(K, a, a, 10, 1e-8)[4] != 0
