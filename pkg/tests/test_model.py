"""Model layer: sampling, population/adversary CFs, validation."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efronci import (
    DiscreteAtoms,
    EfronModel,
    GaussianMixture,
    ModelError,
    PointMass,
    SampleSet,
    SeedProvenance,
    sample,
)
from efronci.model import adversary_cf, derive_substream, population_cf

from conftest import random_model


class TestSampling:
    def test_clean_gaussian_moments(self):
        n = 100_000
        s = sample(EfronModel(theta=0.0, sigma2=1.0, eps=0.0), n, seed=7)
        assert abs(float(np.mean(s.values))) <= 4.0 / math.sqrt(n)
        assert abs(float(np.var(s.values)) - 1.0) <= 0.05

    def test_contaminated_mean_shift(self):
        # mean of (1-eps) N(0,1) + eps PointMass(5)*N(0,1) is eps*5 = 1
        model = EfronModel(theta=0.0, sigma2=1.0, eps=0.2, adversary=PointMass(5.0))
        s = sample(model, 100_000, seed=11)
        assert abs(float(np.mean(s.values)) - 1.0) <= 0.05

    def test_deterministic_given_seed(self):
        model = EfronModel(theta=1.0, sigma2=2.0, eps=0.1, adversary=PointMass(3.0))
        a = sample(model, 512, seed=42, stream=(1, 2))
        b = sample(model, 512, seed=42, stream=(1, 2))
        np.testing.assert_array_equal(a.values, b.values)
        assert a.seed_provenance == b.seed_provenance

    def test_streams_are_independent(self):
        model = EfronModel(theta=0.0, sigma2=1.0, eps=0.0)
        a = sample(model, 64, seed=42, stream=(0,))
        b = sample(model, 64, seed=42, stream=(1,))
        assert not np.array_equal(a.values, b.values)

    def test_substream_reproducible(self):
        prov = SeedProvenance(master_seed=5, stream=(2,))
        x = derive_substream(prov, 7).standard_normal(4)
        y = derive_substream(prov, 7).standard_normal(4)
        z = derive_substream(prov, 8).standard_normal(4)
        np.testing.assert_array_equal(x, y)
        assert not np.array_equal(x, z)

    def test_values_read_only(self):
        s = sample(EfronModel(0.0, 1.0, 0.0), 16, seed=0)
        with pytest.raises(ValueError):
            s.values[0] = 1.0

    def test_translate_scale_views(self):
        s = sample(EfronModel(0.0, 1.0, 0.0), 16, seed=0)
        t = s.translated(2.5)
        u = s.scaled(3.0)
        np.testing.assert_array_equal(t.values, s.values + 2.5)
        np.testing.assert_array_equal(u.values, s.values * 3.0)
        assert t.seed_provenance == s.seed_provenance
        assert u.seed_provenance == s.seed_provenance


class TestPopulationCF:
    def test_clean_standard_normal_value(self):
        model = EfronModel(theta=0.0, sigma2=1.0, eps=0.0)
        assert population_cf(model, 1.0) == pytest.approx(
            math.exp(-0.5), abs=1e-15
        )

    def test_point_mass_at_zero_is_clean(self):
        # Q = delta_0 leaves the mixture equal to N(theta, sigma2)
        model = EfronModel(theta=0.0, sigma2=1.0, eps=0.2, adversary=PointMass(0.0))
        for t in (0.3, 1.0, 2.7):
            clean = cmath.exp(-0.5 * t * t)
            assert population_cf(model, t) == pytest.approx(clean, abs=5e-16)

    def test_discrete_atoms_brute_force(self):
        theta, sigma2, eps, t = 1.0, 2.0, 0.3, 0.7
        atoms = ((-2.0, 0.5), (4.0, 0.5))
        model = EfronModel(theta, sigma2, eps, DiscreteAtoms(atoms))
        noise = cmath.exp(-0.5 * sigma2 * t * t)
        xi = sum(w * cmath.exp(1j * t * a) for a, w in atoms)
        expected = (1 - eps) * cmath.exp(1j * theta * t) * noise + eps * xi * noise
        assert population_cf(model, t) == pytest.approx(expected, abs=1e-15)

    def test_at_zero_is_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            model = random_model(rng, eps_max=0.45)
            assert population_cf(model, 0.0) == 1.0 + 0.0j

    def test_modulus_bounded_by_one(self):
        rng = np.random.default_rng(4)
        ts = np.linspace(-6.0, 6.0, 61)
        for _ in range(50):
            model = random_model(rng, eps_max=0.45)
            for t in ts:
                assert abs(population_cf(model, float(t))) <= 1.0 + 1e-12

    def test_hermitian_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            model = random_model(rng, eps_max=0.45)
            for t in (0.2, 1.1, 3.4):
                lhs = population_cf(model, -t)
                rhs = population_cf(model, t).conjugate()
                assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_normalized_residual_stays_in_unit_disk(self):
        # 2 e^{-i theta t + sigma2 t^2/2} phi(t) - 1 lies in the closed unit
        # disk for every genuine contamination (forward certificate direction).
        rng = np.random.default_rng(6)
        for _ in range(40):
            model = random_model(rng, eps_max=1.0 / 3.0)
            t_cap = math.sqrt(8.0 / model.sigma2)
            for t in np.linspace(0.05, t_cap, 25):
                phase = cmath.exp(
                    -1j * model.theta * t + 0.5 * model.sigma2 * t * t
                )
                resid = 2.0 * phase * population_cf(model, float(t)) - 1.0
                assert abs(resid) <= 1.0 + 1e-12


class TestAdversaryCF:
    def test_point_mass_at_zero(self):
        assert adversary_cf(PointMass(0.0), 1.7) == 1.0 + 0.0j

    def test_point_mass_at_pi(self):
        assert adversary_cf(DiscreteAtoms(((math.pi, 1.0),)), 1.0) == pytest.approx(
            -1.0, abs=1e-15
        )

    def test_gaussian_component(self):
        g = GaussianMixture(((0.0, 1.0, 1.0),))
        assert adversary_cf(g, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-15)

    @given(
        t=st.floats(-8.0, 8.0),
        loc=st.floats(-50.0, 50.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_point_mass_modulus_one(self, t, loc):
        assert abs(adversary_cf(PointMass(loc), t)) == pytest.approx(1.0, abs=1e-12)


class TestValidation:
    def test_eps_cap(self):
        with pytest.raises(ModelError):
            EfronModel(theta=0.0, sigma2=1.0, eps=0.5)
        with pytest.raises(ModelError):
            EfronModel(theta=0.0, sigma2=1.0, eps=-0.01)

    def test_sigma2_positive(self):
        with pytest.raises(ModelError):
            EfronModel(theta=0.0, sigma2=0.0, eps=0.0)

    def test_nonfinite_theta(self):
        with pytest.raises(ModelError):
            EfronModel(theta=math.inf, sigma2=1.0, eps=0.0)

    def test_atom_weights_must_sum_to_one(self):
        with pytest.raises(ModelError):
            DiscreteAtoms(((0.0, 0.5), (1.0, 0.6)))
        with pytest.raises(ModelError):
            DiscreteAtoms(((0.0, -0.1), (1.0, 1.1)))

    def test_mixture_weights_and_variances(self):
        with pytest.raises(ModelError):
            GaussianMixture(((0.0, -1.0, 1.0),))
        with pytest.raises(ModelError):
            GaussianMixture(((0.0, 1.0, 0.4), (1.0, 1.0, 0.7)))

    def test_sample_size_positive(self):
        with pytest.raises(ModelError):
            sample(EfronModel(0.0, 1.0, 0.0), 0, seed=1)

    def test_sample_set_requires_1d(self):
        with pytest.raises(ModelError):
            SampleSet(np.zeros((2, 2)), SeedProvenance(0, ()))
