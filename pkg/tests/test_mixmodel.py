"""Mixing algebra, random models, synthesis, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icelab.csignal import DependentBgSpec, GgdSpec
from icelab.mixmodel import (
    DegenerateBlockError,
    IceParams,
    ModelBlock,
    SingularParameterizationError,
    csv_gamma,
    dataset_from_json,
    dataset_to_json,
    ice_background_rows,
    ice_demixing,
    ice_mixing,
    make_model,
    model_from_json,
    model_to_json,
    random_model,
    synthesize,
)

from conftest import rand_cvec


def random_params(d, rng, gamma=None):
    g = rand_cvec(d - 1, rng)
    h = rand_cvec(d - 1, rng)
    if gamma is None:
        gamma = complex(rng.standard_normal() + 1j * rng.standard_normal())
    return IceParams(gamma, g, h)


class TestIceAlgebra:
    def test_identity_parameterization(self):
        p = IceParams(1.0, np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(ice_mixing(p), np.diag([1.0, -1.0, -1.0]))
        np.testing.assert_allclose(ice_demixing(p), np.diag([1.0, -1.0, -1.0]))

    def test_gamma_two_structure(self):
        p = IceParams(2.0, np.zeros(2), np.zeros(2))
        a = ice_mixing(p)
        np.testing.assert_allclose(a[:, 0], [2.0, 0.0, 0.0])
        np.testing.assert_allclose(a[1:, 1:], -0.5 * np.eye(2))

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_demixing_inverts_mixing(self, d, rng):
        for _ in range(100):
            p = random_params(d, rng)
            w = ice_demixing(p) @ ice_mixing(p)
            assert np.max(np.abs(w - np.eye(d))) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_determinant_identity(self, d, rng):
        for _ in range(50):
            p = random_params(d, rng)
            det = np.linalg.det(ice_demixing(p))
            ref = (-1) ** (d - 1) * p.gamma ** (d - 2)
            assert abs(det - ref) <= 1e-10 * max(1.0, abs(ref))

    def test_orthogonality_conditions(self, rng):
        p = random_params(4, rng)
        a_mat = ice_mixing(p)
        assert np.max(np.abs(ice_background_rows(p) @ p.a)) < 1e-12
        assert np.max(np.abs(p.w.conj() @ a_mat[:, 1:])) < 1e-12

    def test_betagamma_constraint(self, rng):
        p = random_params(5, rng)
        lhs = np.conj(p.beta) * p.gamma
        rhs = 1.0 - np.vdot(p.h, p.g)
        assert abs(lhs - rhs) < 1e-12

    def test_zero_gamma_rejected(self):
        with pytest.raises(SingularParameterizationError):
            IceParams(0.0, np.zeros(2), np.zeros(2))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=10_000))
    def test_inverse_property(self, d, seed):
        rng = np.random.default_rng(seed)
        p = random_params(d, rng)
        w = ice_demixing(p) @ ice_mixing(p)
        assert np.max(np.abs(w - np.eye(d))) < 1e-12


class TestCsvGamma:
    def test_zero_h(self, rng):
        assert csv_gamma(np.zeros(3), rand_cvec(3, rng)) == 1.0

    def test_exact_cancellation(self):
        e1 = np.zeros(3, dtype=complex)
        e1[0] = 1.0
        with pytest.raises(DegenerateBlockError):
            csv_gamma(e1, e1)

    def test_rebuild_consistency(self, rng):
        # the numerical inverse's separating row must be [1, h^H] rescaled
        h = rand_cvec(3, rng)
        g = rand_cvec(3, rng)
        gamma = csv_gamma(h, g)
        a_mat = ice_mixing(IceParams(gamma, g, h))
        w_row = np.linalg.inv(a_mat)[0, :]
        ref = np.concatenate(([1.0], h.conj()))
        assert np.max(np.abs(w_row - ref)) < 1e-10


class TestRandomModel:
    def test_cmv_shares_gamma_g_bitwise(self):
        blocks = random_model(3, 4, "cmv", GgdSpec(2.0), seed=0)
        first = blocks[0].ice
        for b in blocks[1:]:
            assert b.ice.gamma == first.gamma
            assert np.array_equal(b.ice.g, first.g)

    def test_csv_shares_demixing_row(self):
        blocks = random_model(3, 4, "csv", GgdSpec(2.0), seed=1)
        rows = [ice_demixing(b.ice)[0, :] / ice_demixing(b.ice)[0, 0] for b in blocks]
        for r in rows[1:]:
            np.testing.assert_allclose(r, rows[0], rtol=0, atol=1e-12)

    def test_gamma_scaling_fix(self):
        blocks = random_model(5, 2, "cmv", GgdSpec(2.0), seed=2)
        assert all(b.ice.gamma == 1.0 for b in blocks)
        blocks = random_model(5, 2, "csv", GgdSpec(2.0), seed=3)
        assert all(abs(b.ice.beta - 1.0) < 1e-12 for b in blocks)

    def test_first_column_ratio_distribution(self):
        # entries of g are ratios of independent CN(0,1) draws whose moduli
        # have unit median
        vals = []
        for seed in range(300):
            blocks = random_model(5, 1, "independent", GgdSpec(2.0), seed=seed)
            vals.extend(np.abs(blocks[0].ice.g))
        assert np.median(vals) == pytest.approx(1.0, abs=0.1)

    def test_explicit_covariance(self, rng):
        cov = np.diag([1.0, 2.0, 3.0]).astype(complex)
        blocks = random_model(4, 2, "independent", GgdSpec(2.0), cov, seed=4)
        for b in blocks:
            np.testing.assert_allclose(b.bg_cov, cov)

    def test_dependent_background(self):
        bg = DependentBgSpec(2.0, 3)
        blocks = random_model(4, 1, "independent", GgdSpec(3.0), bg, seed=5)
        assert blocks[0].bg_model == bg
        np.testing.assert_allclose(blocks[0].bg_cov, np.eye(3))


class TestSynthesize:
    def test_identity_params_expose_sources(self):
        p = IceParams(1.0, np.zeros(2), np.zeros(2))
        blk_model = make_model(
            [ModelBlock(p, GgdSpec(2.0), np.eye(2))], "independent", 64
        )
        ds = synthesize(blk_model, seed=6)
        np.testing.assert_allclose(ds.observations[0], ds.sources[0], atol=1e-14)
        np.testing.assert_allclose(ds.observations[1:], -ds.backgrounds[0], atol=1e-14)

    def test_demixing_recovers_sources(self):
        for sharing in ("independent", "cmv", "csv"):
            blocks = random_model(4, 3, sharing, GgdSpec(2.0), seed=7)
            model = make_model(blocks, sharing, 128)
            ds = synthesize(model, seed=8)
            for i, blk in enumerate(model.blocks):
                v = ice_demixing(blk.ice) @ ds.block(i)
                assert np.max(np.abs(v[0] - ds.sources[i])) < 1e-10
                assert np.max(np.abs(v[1:] - ds.backgrounds[i])) < 1e-10

    def test_background_covariance_consistency(self):
        blocks = random_model(4, 1, "independent", GgdSpec(2.0), seed=9)
        model = make_model(blocks, "independent", 10_000)
        ds = synthesize(model, seed=10)
        z = ice_background_rows(model.blocks[0].ice) @ ds.block(0)
        cov = z @ z.conj().T / z.shape[1]
        ref = model.blocks[0].bg_cov
        assert np.max(np.abs(cov - ref)) < 0.05 * np.max(np.abs(ref))

    def test_blockwise_covariances_differ(self, rng):
        p = IceParams(1.0, np.zeros(2), np.zeros(2))
        blocks = [
            ModelBlock(p, GgdSpec(2.0), np.eye(2)),
            ModelBlock(p, GgdSpec(2.0), 4.0 * np.eye(2)),
        ]
        ds = synthesize(make_model(blocks, "independent", 5000), seed=11)
        v0 = np.mean(np.abs(ds.backgrounds[0]) ** 2)
        v1 = np.mean(np.abs(ds.backgrounds[1]) ** 2)
        assert v1 / v0 == pytest.approx(4.0, rel=0.15)

    def test_reproducible(self):
        blocks = random_model(3, 2, "cmv", GgdSpec(2.0), seed=12)
        model = make_model(blocks, "cmv", 100)
        a = synthesize(model, seed=13)
        b = synthesize(model, seed=13)
        assert a.observations.tobytes() == b.observations.tobytes()


class TestSerialization:
    def test_model_round_trip(self):
        blocks = random_model(4, 2, "csv", GgdSpec(2.0, 0.3), seed=14)
        model = make_model(blocks, "csv", 256)
        text = model_to_json(model)
        again = model_from_json(text)
        assert model_to_json(again) == text
        assert again.sharing == "csv"

    def test_dataset_round_trip(self):
        blocks = random_model(3, 2, "cmv", GgdSpec(2.0), seed=15)
        model = make_model(blocks, "cmv", 32)
        ds = synthesize(model, seed=16)
        text = dataset_to_json(ds)
        again = dataset_from_json(text)
        np.testing.assert_allclose(again.observations, ds.observations, atol=1e-15)
        assert dataset_to_json(again) == text

    def test_dependent_bg_round_trip(self):
        blocks = random_model(3, 1, "independent", GgdSpec(3.0), DependentBgSpec(2.0, 2), seed=17)
        model = make_model(blocks, "independent", 16)
        again = model_from_json(model_to_json(model))
        assert again.blocks[0].bg_model == DependentBgSpec(2.0, 2)
