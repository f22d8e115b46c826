"""Tests for the spectral grid, transforms, resampling and norms."""

import numpy as np
import pytest

from mtifp.spectral import (
    FieldHat,
    conj_coeffs,
    conj_field,
    from_spectral,
    make_grid,
    resample,
    sample,
    sobolev_norm,
    spectral_derivative,
    to_spectral,
)

EPS = np.finfo(float).eps


def random_field(grid, rng, decay=0.0):
    c = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    if decay:
        c *= np.exp(-decay * np.abs(grid.modes))
    return FieldHat(grid, c)


class TestGrid:
    def test_nodes_and_spacing(self):
        g = make_grid(-16.0, 16.0, 32)
        assert g.h == 1.0
        assert g.x[0] == -16.0
        assert g.x[-1] == 15.0
        assert len(g.x) == 32

    def test_wavenumbers_logical_order(self):
        g = make_grid(-16.0, 16.0, 32)
        assert g.modes[0] == -16
        assert g.modes[-1] == 15
        assert np.isclose(g.mu[g.n // 2 + 1], np.pi / 16.0)

    def test_rejects_odd_size(self):
        with pytest.raises(ValueError, match="even"):
            make_grid(0.0, 1.0, 7)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError, match="at least 4"):
            make_grid(0.0, 1.0, 2)

    def test_rejects_empty_interval(self):
        with pytest.raises(ValueError, match="b > a"):
            make_grid(1.0, 1.0, 8)


class TestTransforms:
    def test_round_trip(self):
        rng = np.random.default_rng(7)
        g = make_grid(-16.0, 16.0, 64)
        v = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        back = from_spectral(to_spectral(g, v))
        assert np.max(np.abs(back - v)) <= 100 * EPS * np.linalg.norm(v)

    def test_single_mode_coefficient(self):
        """exp(i mu_1 (x-a)) transforms to a lone unit coefficient at l=1."""
        g = make_grid(-16.0, 16.0, 32)
        v = np.exp(1j * g.mu[g.n // 2 + 1] * (g.x - g.a))
        c = to_spectral(g, v).coeffs
        expect = np.zeros(g.n, dtype=complex)
        expect[g.n // 2 + 1] = 1.0
        assert np.allclose(c, expect, atol=1e-14)

    def test_parseval(self):
        rng = np.random.default_rng(11)
        g = make_grid(0.0, 2.0, 48)
        v = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        c = to_spectral(g, v).coeffs
        assert np.isclose(np.sum(np.abs(c) ** 2), np.sum(np.abs(v) ** 2) / g.n,
                          rtol=1e-13)

    def test_real_input_conjugate_symmetry(self):
        rng = np.random.default_rng(3)
        g = make_grid(-4.0, 4.0, 32)
        c = to_spectral(g, rng.standard_normal(g.n)).coeffs
        # v~_{-l} = conj(v~_l) for real fields; Nyquist coefficient real
        for i in range(1, g.n):
            assert np.isclose(c[g.n - i], np.conj(c[i]), atol=1e-14)
        assert abs(c[0].imag) < 1e-14

    def test_wrong_length_rejected(self):
        g = make_grid(0.0, 1.0, 8)
        with pytest.raises(ValueError, match="shape"):
            to_spectral(g, np.zeros(9))


class TestConjField:
    def test_matches_nodal_conjugation(self):
        rng = np.random.default_rng(5)
        g = make_grid(-8.0, 8.0, 32)
        v = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        direct = to_spectral(g, np.conj(v)).coeffs
        mapped = conj_field(to_spectral(g, v)).coeffs
        assert np.allclose(mapped, direct, atol=1e-14)

    def test_involution(self):
        rng = np.random.default_rng(6)
        c = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        assert np.allclose(conj_coeffs(conj_coeffs(c)), c)


class TestDerivative:
    def test_single_mode_exact(self):
        g = make_grid(-16.0, 16.0, 32)
        f = FieldHat(g, np.zeros(g.n, dtype=complex))
        f.coeffs[g.n // 2 + 3] = 1.0
        df = spectral_derivative(f, 1)
        assert df.coeffs[g.n // 2 + 3] == 1j * g.mu[g.n // 2 + 3]
        assert np.count_nonzero(df.coeffs) == 1

    def test_second_derivative_of_cosine(self):
        g = make_grid(0.0, 2 * np.pi, 64)
        k = 5
        v = np.cos(k * g.x)
        d2 = from_spectral(spectral_derivative(to_spectral(g, v), 2))
        assert np.allclose(d2.real, -k * k * v, atol=1e-10)
        assert np.max(np.abs(d2.imag)) < 1e-12

    def test_commutes_with_upsampling(self):
        rng = np.random.default_rng(9)
        g = make_grid(-2.0, 2.0, 16)
        f = random_field(g, rng)
        a = resample(spectral_derivative(f, 1), 32).coeffs
        b = spectral_derivative(resample(f, 32), 1).coeffs
        assert np.array_equal(a, b)


class TestResample:
    def test_upsample_preserves_values_at_original_nodes(self):
        rng = np.random.default_rng(13)
        g = make_grid(-16.0, 16.0, 32)
        v = rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n)
        f = to_spectral(g, v)
        fine_vals = from_spectral(resample(f, 128))
        assert np.max(np.abs(fine_vals[::4] - v)) <= 100 * EPS * np.linalg.norm(v)

    def test_up_then_down_identity(self):
        rng = np.random.default_rng(17)
        g = make_grid(0.0, 1.0, 24)
        f = random_field(g, rng)
        back = resample(resample(f, 96), 24)
        assert np.allclose(back.coeffs, f.coeffs, atol=1e-15)

    def test_downsample_is_least_squares_projection(self):
        """Central truncation beats any other coefficient choice in L2."""
        rng = np.random.default_rng(19)
        n, m = 16, 8
        g = make_grid(-1.0, 1.0, n)
        f = random_field(g, rng)
        down = resample(f, m)
        # least-squares oracle: fit an m-mode interpolant to the fine nodal data
        fine = make_grid(-1.0, 1.0, 128)
        target = from_spectral(resample(f, 128))
        gm = make_grid(-1.0, 1.0, m)
        design = np.exp(1j * np.outer(fine.x - fine.a, gm.mu))
        fitted, *_ = np.linalg.lstsq(design, target, rcond=None)
        assert np.allclose(down.coeffs, fitted, atol=1e-10)

    def test_rejects_bad_targets(self):
        g = make_grid(0.0, 1.0, 8)
        f = FieldHat(g, np.zeros(8, dtype=complex))
        with pytest.raises(ValueError, match="even"):
            resample(f, 9)
        with pytest.raises(ValueError, match="at least 4"):
            resample(f, 2)


class TestSample:
    def test_matches_direct_node_evaluation(self):
        rng = np.random.default_rng(23)
        g = make_grid(-16.0, 16.0, 64)
        f = random_field(g, rng)
        vals = from_spectral(f)
        down = sample(f, 16)
        assert np.allclose(from_spectral(down), vals[::4], atol=1e-13)

    def test_high_mode_folds_onto_alias(self):
        # mode l on the fine grid lands at l mod m on the coarse one
        g = make_grid(-16.0, 16.0, 128)
        coeffs = np.zeros(128, dtype=complex)
        coeffs[64 + 40] = 1.0          # logical l = 40
        down = sample(FieldHat(g, coeffs), 32)
        expect = np.zeros(32, dtype=complex)
        expect[16 + 8] = 1.0           # 40 mod 32 = 8
        assert np.allclose(down.coeffs, expect, atol=1e-14)

    def test_band_limited_field_agrees_with_projection(self):
        rng = np.random.default_rng(29)
        g = make_grid(0.0, 1.0, 16)
        f = random_field(g, rng)
        up = resample(f, 64)
        assert np.allclose(sample(up, 16).coeffs, f.coeffs, atol=1e-14)

    def test_identity_at_same_size(self):
        g = make_grid(0.0, 1.0, 8)
        f = FieldHat(g, np.arange(8, dtype=complex))
        same = sample(f, 8)
        assert same.coeffs is not f.coeffs
        assert np.array_equal(same.coeffs, f.coeffs)

    def test_rejects_non_dividing_target(self):
        g = make_grid(0.0, 1.0, 16)
        f = FieldHat(g, np.zeros(16, dtype=complex))
        with pytest.raises(ValueError, match="divide"):
            sample(f, 12)
        with pytest.raises(ValueError, match="divide"):
            sample(f, 2)


class TestSobolevNorm:
    def test_single_mode_value(self):
        """Unit coefficient at l=1 on [-16,16]: sqrt(1 + mu^2 + mu^4)."""
        g = make_grid(-16.0, 16.0, 32)
        c = np.zeros(g.n, dtype=complex)
        c[g.n // 2 + 1] = 1.0
        mu = np.pi / 16.0
        assert np.isclose(sobolev_norm(FieldHat(g, c), 2),
                          np.sqrt(1 + mu**2 + mu**4), rtol=1e-15)

    def test_order_zero_is_coefficient_l2(self):
        rng = np.random.default_rng(23)
        g = make_grid(-16.0, 16.0, 64)
        f = random_field(g, rng)
        assert np.isclose(sobolev_norm(f, 0), np.linalg.norm(f.coeffs), rtol=1e-14)

    def test_monotone_in_order(self):
        rng = np.random.default_rng(29)
        g = make_grid(-16.0, 16.0, 64)
        f = random_field(g, rng, decay=0.1)
        n0, n1, n2 = (sobolev_norm(f, k) for k in (0, 1, 2))
        assert n0 <= n1 <= n2

    def test_unsupported_order(self):
        g = make_grid(0.0, 1.0, 8)
        f = FieldHat(g, np.zeros(8, dtype=complex))
        with pytest.raises(ValueError, match="orders"):
            sobolev_norm(f, 3)
