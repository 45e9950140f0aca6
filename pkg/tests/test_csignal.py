"""Signal models: sampler moments, score oracles, closed-form statistics."""

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from icelab.csignal import (
    DependentBgSpec,
    GaussianBg,
    GgdSpec,
    SingularPointError,
    UnsupportedSpecError,
    bg_stats_dependent,
    bg_stats_gaussian,
    dependent_bg_kappa_diag,
    dependent_bg_logpdf,
    dependent_bg_score,
    empirical_kappa_z,
    ggd_kappa_bar,
    ggd_logpdf,
    ggd_score,
    sample_dependent_bg,
    sample_ggd,
    source_stats,
)

from conftest import rand_pd


def wirtinger_fd(logpdf, s, h=1e-5):
    """Central-difference Wirtinger derivative -d log p / d s*."""
    dx = (logpdf(s + h) - logpdf(s - h)) / (2 * h)
    dy = (logpdf(s + 1j * h) - logpdf(s - 1j * h)) / (2 * h)
    return -0.5 * (dx + 1j * dy)


class TestGgdSampler:
    def test_circular_gaussian_moments(self):
        s = sample_ggd(GgdSpec(1.0, 0.0), 100_000, seed=1)
        assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0, abs=0.02)
        assert abs(np.mean(s**2)) < 0.02

    def test_circularity_coefficient_matched(self):
        s = sample_ggd(GgdSpec(1.0, 0.5), 100_000, seed=2)
        ratio = abs(np.mean(s**2)) / np.mean(np.abs(s) ** 2)
        assert ratio == pytest.approx(0.5, abs=0.02)

    def test_empirical_kappa_bar_shape2(self):
        # independent oracle: alpha^2 G(2/a)/G(1/a)^2 at alpha=2 is 4/pi
        spec = GgdSpec(2.0, 0.0)
        s = sample_ggd(spec, 100_000, seed=3)
        kb_mc = np.mean(np.abs(ggd_score(spec, s)) ** 2) * spec.variance
        assert kb_mc == pytest.approx(4.0 / np.pi, rel=0.01)

    @pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
    @pytest.mark.parametrize("circ", [0.0, 0.3, 0.8])
    def test_mc_kappa_bar_matches_closed_form(self, alpha, circ):
        spec = GgdSpec(alpha, circ)
        s = sample_ggd(spec, 100_000, seed=11)
        kb_mc = np.mean(np.abs(ggd_score(spec, s)) ** 2)
        assert kb_mc == pytest.approx(ggd_kappa_bar(spec), rel=0.02)

    def test_variance_scaling(self):
        s = sample_ggd(GgdSpec(3.0, 0.2, variance=4.0), 100_000, seed=4)
        assert np.mean(np.abs(s) ** 2) == pytest.approx(4.0, rel=0.03)

    def test_reproducible_bytes(self):
        a = sample_ggd(GgdSpec(2.0, 0.3), 1000, seed=7)
        b = sample_ggd(GgdSpec(2.0, 0.3), 1000, seed=7)
        assert a.tobytes() == b.tobytes()

    def test_degenerate_circ_rejected(self):
        with pytest.raises(UnsupportedSpecError):
            sample_ggd(GgdSpec(2.0, 1.0), 10, seed=0)

    def test_invalid_specs(self):
        with pytest.raises(UnsupportedSpecError):
            GgdSpec(-1.0, 0.0)
        with pytest.raises(UnsupportedSpecError):
            GgdSpec(1.0, 1.5)
        with pytest.raises(UnsupportedSpecError):
            GgdSpec(1.0, 0.0, variance=0.0)


class TestGgdScore:
    def test_gaussian_score_is_identity(self, rng):
        spec = GgdSpec(1.0, 0.0)
        pts = (rng.standard_normal(20) + 1j * rng.standard_normal(20)) / np.sqrt(2)
        np.testing.assert_allclose(ggd_score(spec, pts), pts, rtol=1e-12)

    def test_score_zero_at_origin_gaussian(self):
        assert ggd_score(GgdSpec(1.0, 0.0), 0.0) == 0.0

    def test_score_alpha2_matches_fd(self):
        spec = GgdSpec(2.0, 0.0)
        val = ggd_score(spec, 1.0 + 0.0j)
        ref = wirtinger_fd(lambda z: ggd_logpdf(spec, z), 1.0 + 0.0j)
        assert abs(val - ref) / abs(ref) < 1e-6

    @pytest.mark.parametrize(
        "spec",
        [GgdSpec(1.0, 0.0), GgdSpec(1.0, 0.5), GgdSpec(2.0, 0.0), GgdSpec(2.0, 0.8), GgdSpec(3.5, 0.3), GgdSpec(1.5, 0.0, variance=2.5)],
    )
    def test_score_matches_fd_at_random_points(self, spec, rng):
        pts = (rng.standard_normal(100) + 1j * rng.standard_normal(100)) / np.sqrt(2)
        pts += 0.05 * np.sign(pts.real)  # keep away from the origin
        for s in pts:
            val = ggd_score(spec, complex(s))
            ref = wirtinger_fd(lambda z: ggd_logpdf(spec, z), complex(s))
            assert abs(val - ref) <= 1e-6 * max(abs(ref), 1e-3)

    def test_singular_point_raises(self):
        with pytest.raises(SingularPointError):
            ggd_score(GgdSpec(0.7, 0.0), 0.0)

    def test_array_clamp_warns(self):
        with pytest.warns(RuntimeWarning):
            out = ggd_score(GgdSpec(0.7, 0.0), np.array([0.0 + 0.0j, 1.0 + 0.0j]))
        assert np.all(np.isfinite(out))


class TestKappaBar:
    def test_boundary_and_reference_values(self):
        assert ggd_kappa_bar(GgdSpec(1.0, 0.0)) == pytest.approx(1.0, abs=1e-14)
        assert ggd_kappa_bar(GgdSpec(2.0, 0.0)) == pytest.approx(4.0 / np.pi, rel=1e-12)
        assert ggd_kappa_bar(GgdSpec(1.0, 0.5)) == pytest.approx(4.0 / 3.0, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 2.0, 4.0])
    @pytest.mark.parametrize("circ", [0.0, 0.3, 0.8])
    def test_strictly_above_one_off_gaussian(self, alpha, circ):
        if alpha == 1.0 and circ == 0.0:
            return
        assert ggd_kappa_bar(GgdSpec(alpha, circ)) > 1.0 + 1e-9


class TestDependentBackground:
    def test_gaussian_case_cov_identity(self):
        spec = DependentBgSpec(1.0, 3)
        z = sample_dependent_bg(spec, 100_000, seed=5)
        cov = z @ z.conj().T / z.shape[1]
        np.testing.assert_allclose(cov, np.eye(3), atol=0.03)

    def test_unit_marginals_alpha2(self):
        z = sample_dependent_bg(DependentBgSpec(2.0, 3), 100_000, seed=6)
        np.testing.assert_allclose(np.mean(np.abs(z) ** 2, axis=1), 1.0, atol=0.03)

    def test_kappa_z_departs_from_inverse_cov(self):
        spec = DependentBgSpec(2.0, 3)
        z = sample_dependent_bg(spec, 100_000, seed=7)
        kz = empirical_kappa_z(spec.score, z)
        # non-Gaussian: eigenvalues well away from 1
        assert np.min(np.abs(np.linalg.eigvalsh(kz) - 1.0)) > 0.05

    def test_closed_form_kappa_diag(self):
        # independent radial-moment oracle for alpha=2, dim=3
        spec = DependentBgSpec(2.0, 3)
        lam = gamma_fn(4 / 2) / (3 * gamma_fn(3 / 2))
        ref = 4 * lam / 3 * gamma_fn(3 / 2 + 1.5) / gamma_fn(3 / 2)
        assert dependent_bg_kappa_diag(spec) == pytest.approx(ref, rel=1e-12)
        z = sample_dependent_bg(spec, 400_000, seed=8)
        kz = empirical_kappa_z(spec.score, z)
        np.testing.assert_allclose(np.diag(kz).real, ref, rtol=0.02)

    def test_score_gaussian_case_linear(self, rng):
        spec = DependentBgSpec(1.0, 3)
        z = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) / np.sqrt(2)
        np.testing.assert_allclose(dependent_bg_score(spec, z), spec.lam * z, rtol=1e-12)

    def test_score_zero_at_origin_alpha2(self):
        out = dependent_bg_score(DependentBgSpec(2.0, 3), np.zeros(3, dtype=complex))
        np.testing.assert_array_equal(out, np.zeros(3))

    @pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
    def test_score_matches_fd(self, alpha, rng):
        spec = DependentBgSpec(alpha, 3)
        z = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) / np.sqrt(2)
        psi = dependent_bg_score(spec, z)
        h = 1e-5
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            dx = (dependent_bg_logpdf(spec, z + h * e) - dependent_bg_logpdf(spec, z - h * e)) / (2 * h)
            dy = (dependent_bg_logpdf(spec, z + 1j * h * e) - dependent_bg_logpdf(spec, z - 1j * h * e)) / (2 * h)
            ref = -0.5 * (dx + 1j * dy)
            assert abs(psi[i] - ref) <= 1e-6 * max(abs(ref), 1e-3)

    def test_sampler_reproducible(self):
        a = sample_dependent_bg(DependentBgSpec(2.0, 2), 500, seed=9)
        b = sample_dependent_bg(DependentBgSpec(2.0, 2), 500, seed=9)
        assert a.tobytes() == b.tobytes()

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            DependentBgSpec(-2.0, 3)


class TestEmpiricalKappaZ:
    def test_gaussian_recovers_inverse_cov(self, rng):
        cov = rand_pd(3, rng)
        gb = GaussianBg(cov)
        z = gb.sample(1_000_000, seed=10)
        kz = empirical_kappa_z(gb.score, z)
        ref = np.linalg.inv(cov)
        assert np.linalg.norm(kz - ref) / np.linalg.norm(ref) < 0.02

    def test_single_sample_rank_one(self, rng):
        spec = DependentBgSpec(2.0, 3)
        z = sample_dependent_bg(spec, 1, seed=11)
        kz = empirical_kappa_z(spec.score, z)
        w = np.linalg.eigvalsh(kz)
        assert np.sum(w > 1e-12 * w[-1]) == 1
        assert w[0] > -1e-12


class TestStats:
    def test_source_stats_gaussian(self):
        st = source_stats(GgdSpec(1.0, 0.0))
        assert st.kappa_bar == pytest.approx(1.0)
        assert st.pseudo_moment == 0.0

    def test_source_stats_noncircular(self):
        st = source_stats(GgdSpec(1.0, 0.5))
        assert abs(st.pseudo_moment) == pytest.approx(0.5)

    def test_mc_pseudo_score(self):
        # E[(psi*)^2] = -circ * kappa_bar / variance for this family
        spec = GgdSpec(2.0, 0.4)
        st = source_stats(spec)
        s = sample_ggd(spec, 200_000, seed=12)
        psi = ggd_score(spec, s)
        mc = np.mean(psi.conj() ** 2)
        assert abs(mc - st.score_pseudo) < 0.03 * abs(st.score_pseudo)

    def test_bg_stats_gaussian_identity(self):
        st = bg_stats_gaussian(np.eye(3))
        np.testing.assert_allclose(st.kappa_z, np.eye(3))
        np.testing.assert_allclose(st.pseudo_score, 0)

    def test_bg_stats_rejects_non_pd(self):
        with pytest.raises(ValueError):
            bg_stats_gaussian(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_bg_stats_dependent_records_provenance(self):
        st = bg_stats_dependent(DependentBgSpec(2.0, 2), n_samples=50_000, seed=13)
        assert "monte-carlo" in st.provenance
        assert st.stderr > 0
        np.testing.assert_allclose(
            np.diag(st.kappa_z).real,
            dependent_bg_kappa_diag(DependentBgSpec(2.0, 2)),
            rtol=0.05,
        )
