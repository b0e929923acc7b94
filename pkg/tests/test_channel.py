import numpy as np
import pytest
from scipy import stats

from fblopt.channel import NetworkRealization, UserLink, mean_gain, sample_realization


def make_links(caps=(1e-5, 5e-5, 1e-4, 5e-4), kappa=1.0, d=1.0, delta=3.0):
    return [UserLink(kappa=kappa, distance=d, pathloss_exp=delta, eps_max=c) for c in caps]


class TestUserLink:
    def test_validation(self):
        with pytest.raises(ValueError):
            UserLink(kappa=0.0, distance=1.0, pathloss_exp=3.0, eps_max=1e-4)
        with pytest.raises(ValueError):
            UserLink(kappa=1.0, distance=-1.0, pathloss_exp=3.0, eps_max=1e-4)
        with pytest.raises(ValueError):
            UserLink(kappa=1.0, distance=1.0, pathloss_exp=3.0, eps_max=0.5)
        with pytest.raises(ValueError):
            UserLink(kappa=1.0, distance=1.0, pathloss_exp=3.0, eps_max=0.0)


class TestMeanGain:
    def test_unit_distance(self):
        assert mean_gain(UserLink(1.0, 1.0, 3.0, 1e-4)) == 1.0

    def test_identity(self):
        assert mean_gain(UserLink(2.0, 2.0, 1.0, 1e-4)) == pytest.approx(1.0)

    def test_pathloss(self):
        assert mean_gain(UserLink(1.0, 10.0, 3.0, 1e-4)) == pytest.approx(1e-3, rel=1e-12)


class TestNetworkRealization:
    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            NetworkRealization(gamma=np.array([1.0, -1.0]), p_max=1.0, block_length=100, noise_power=1.0)
        with pytest.raises(ValueError):
            NetworkRealization(gamma=np.array([1.0]), p_max=0.0, block_length=100, noise_power=1.0)
        with pytest.raises(ValueError):
            NetworkRealization(gamma=np.array([1.0]), p_max=1.0, block_length=1, noise_power=1.0)


class TestSampleRealization:
    def test_fading_off_unit_gains(self):
        links = make_links(kappa=1.0, d=1.0, delta=2.0)
        r = sample_realization(links, 4.0, 200, 1.0, fading=False)
        assert np.array_equal(r.gamma, np.ones(4))

    def test_noise_normalization(self):
        links = make_links()
        r = sample_realization(links, 4.0, 200, 4.0, fading=False)
        assert np.allclose(r.gamma, 0.25)

    def test_seed_determinism(self):
        links = make_links()
        a = sample_realization(links, 4.0, 200, 1.0, seed=99)
        b = sample_realization(links, 4.0, 200, 1.0, seed=99)
        assert np.array_equal(a.gamma, b.gamma)
        assert a.p_max == b.p_max and a.block_length == b.block_length

    def test_different_seeds_differ(self):
        links = make_links()
        a = sample_realization(links, 4.0, 200, 1.0, seed=1)
        b = sample_realization(links, 4.0, 200, 1.0, seed=2)
        assert not np.array_equal(a.gamma, b.gamma)

    def test_fading_mean_is_one(self):
        # unit links and unit noise make gamma the fading draws themselves;
        # 100 wide realizations give 10^6 samples of theta
        links = make_links(caps=(1e-4,) * 10_000)
        rng = np.random.default_rng(7)
        draws = np.concatenate(
            [sample_realization(links, 1.0, 100, 1.0, rng=rng).gamma for _ in range(100)]
        )
        assert abs(draws.mean() - 1.0) <= 0.01

    def test_fading_distribution_ks(self):
        links = make_links(caps=(1e-4,) * 10_000)
        rng = np.random.default_rng(123)
        draws = np.concatenate(
            [sample_realization(links, 1.0, 100, 1.0, rng=rng).gamma for _ in range(10)]
        )
        stat = stats.kstest(draws, "expon").statistic
        assert stat <= 0.01

    def test_empty_links_rejected(self):
        with pytest.raises(ValueError):
            sample_realization([], 1.0, 100, 1.0)
