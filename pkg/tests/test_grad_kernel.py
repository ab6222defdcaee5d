import numpy as np
import pytest
from scipy.integrate import quad

from coercivity.errors import DomainError, SingularityError
from coercivity.grad_kernel import (
    KhatSplit,
    VhsParams,
    eval_khat,
    eval_kq,
    khat_hilbert_schmidt,
    khat_remainder_sup,
    khat_row_integrals,
    kplus_kernel,
    kq_row_moment,
    nu_hat,
    nu_q,
)
from coercivity.fitting import power_fit
from coercivity.kernels import KernelParams


def sqrt_mu(x):
    return (2 * np.pi) ** (-x.shape[-1] / 4) * np.exp(-0.25 * np.sum(x * x, axis=-1))


def test_collision_frequency_closed_forms():
    assert nu_q(np.zeros(3), VhsParams(0.0)) == pytest.approx(4 * np.pi)
    # E|X| for a standard normal in R^3 is 2 sqrt(2/pi)
    assert nu_q(np.zeros(3), VhsParams(1.0)) == pytest.approx(4 * np.pi * 2 * np.sqrt(2 / np.pi), rel=1e-10)
    # E|v - X|^2 = |v|^2 + N
    v = np.array([1.0, 2.0, 0.0])
    assert nu_q(v, VhsParams(2.0)) == pytest.approx(4 * np.pi * (5 + 3), rel=1e-10)


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("q", [0.0, 1.0, 2.0])
def test_gain_of_sqrt_mu_is_twice_frequency(N, q):
    # mu^{1/2}(v') mu^{1/2}(v'*) = mu^{1/2}(v) mu^{1/2}(v*) makes K+ mu^{1/2} = 2 nu_q mu^{1/2}
    p = VhsParams(q, N)
    v = np.array([0.7, -0.4, 0.2])[:N]
    expected = 2 * sqrt_mu(v[None])[0] * nu_q(v, p)
    assert kplus_kernel(sqrt_mu, v, p) == pytest.approx(expected, rel=1e-7)


@pytest.mark.parametrize("N", [2, 3])
def test_kernel_symmetric_on_a_few_pairs(N):
    rng = np.random.default_rng(11)
    p = VhsParams(0.5, N)
    for _ in range(10):
        v, w = rng.normal(scale=2.0, size=(2, N))
        a, b = eval_kq(v, w, p), eval_kq(w, v, p)
        assert abs(a - b) <= 1e-10 * max(1.0, a)
        assert a > 0


def test_kernel_domain_checks():
    with pytest.raises(SingularityError):
        eval_kq(np.ones(3), np.ones(3), VhsParams(0.0))
    with pytest.raises(DomainError):
        eval_kq(np.zeros(3), np.ones(3), VhsParams(-1.5))
    with pytest.raises(DomainError):
        VhsParams(-3.0, 3)
    with pytest.raises(DomainError):
        KhatSplit(eps=0.0)


def test_khat_split_partitions_kernel():
    ks = KhatSplit(0.1, gamma=0.0, alpha=0.5)
    v = np.array([1.0, 0.0, 0.0])
    # away from both cuts the kernel sits in the compact part
    k, kc, kr = eval_khat(v, np.array([1.2, 0.1, 0.0]), ks)
    assert kc == k and kr == 0.0
    # nearly tangential displacement goes to the remainder
    k, kc, kr = eval_khat(v, np.array([1.02, 0.3, 0.0]), ks)
    assert kc == 0.0 and kr == k > 0
    # beyond unit distance the truncated kernel vanishes
    assert eval_khat(v, np.array([3.0, 0.0, 0.0]), ks) == (0.0, 0.0, 0.0)
    full, c, r = khat_row_integrals(v, ks)
    assert full == pytest.approx(c + r) and r > 0 and c > 0


def test_remainder_shrinks_with_eps():
    vals = [khat_remainder_sup(KhatSplit(e, 0.0, 0.5), speeds=(0.5, 2.0)) for e in (0.2, 0.1)]
    assert vals[1] < vals[0]


def test_frequency_examples():
    assert nu_q(np.zeros(3), VhsParams(2.0)) == pytest.approx(12 * np.pi, rel=1e-10)
    assert nu_q(np.array([2.0, 0.0, 0.0]), VhsParams(2.0)) == pytest.approx(28 * np.pi, rel=1e-10)
    assert nu_q(np.array([5.0, 1.0, 0.0]), VhsParams(0.0)) == pytest.approx(4 * np.pi)


@pytest.mark.parametrize("q", [1.0, 2.0])
def test_kernel_value_on_a_line(q):
    # v, v' on one axis: v_perp = 0 and the cross-section integral is radial
    v, vp = np.array([3.0, 0.0, 0.0]), np.array([3.5, 0.0, 0.0])
    r, a = 0.5, 6.5
    cross = quad(lambda rho: (r * r + rho * rho) ** ((q - 1) / 2) * np.exp(-rho * rho / 2) * 2 * np.pi * rho,
                 0, np.inf)[0]
    expected = 8 / (r * (2 * np.pi) ** 1.5) * np.exp(-(r * r + a * a) / 8) * cross
    if q == 1.0:
        assert cross == pytest.approx(2 * np.pi)
    assert eval_kq(v, vp, VhsParams(q)) == pytest.approx(expected, rel=1e-8)


def test_row_moments_positive():
    for q in (0.0, 1.0, 2.0):
        assert kq_row_moment(np.array([1.0, 1.0, 0.0]), VhsParams(q), 0.0) > 0


def test_half_integer_moment_slope():
    speeds = np.geomspace(5, 20, 6)
    vals = [kq_row_moment(np.array([s, 0.0, 0.0]), VhsParams(0.5), 1.0) for s in speeds]
    assert power_fit(speeds, vals, shift=1.0).within(-0.5, 0.2)


@pytest.mark.slow
def test_hilbert_schmidt_finite_and_monotone_in_eps():
    a = khat_hilbert_schmidt(KhatSplit(0.1, -0.5, 0.5, theta0=np.pi / 2))
    b = khat_hilbert_schmidt(KhatSplit(0.2, -0.5, 0.5, theta0=np.pi / 2))
    assert np.isfinite(a) and 0 < b <= a


def test_truncated_multiplier():
    assert nu_hat(np.zeros(3), KernelParams(3, -0.5, 0.5)) > 0
    speeds = np.geomspace(2, 20, 6)
    p = KernelParams(3, 0.0, 0.5)
    vals = np.array([nu_hat(np.array([s, 0.0, 0.0]), p) for s in speeds])
    assert power_fit(speeds, vals, shift=1.0).within(0.5, 0.2)
    ratio = vals / (1 + speeds) ** 0.5
    assert ratio.min() > 0 and ratio.max() / ratio.min() < 3
