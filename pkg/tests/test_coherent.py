import math

import numpy as np
import pytest

from cylgauge.coherent import (
    CoherentLabel,
    coherent_eval,
    coherent_overlap,
    holomorphy_witness,
    resolution_identity_check,
)
from cylgauge.groups import (
    AlgebraVector,
    ComplexGroupElement,
    GroupKind,
    exp_map,
    haar_sample,
    identity,
)
from cylgauge.spectral import (
    CharacterSeries,
    heat_kernel,
    irrep_info,
    rho_s_inner_product,
)

U1, SU2 = GroupKind.U1, GroupKind.SU2


def random_complex_point(group, rng, x_scale=0.8, y_scale=0.4):
    dim = group.algebra_dim
    return exp_map(
        AlgebraVector(group, rng.normal(scale=x_scale, size=dim)),
        AlgebraVector(group, rng.normal(scale=y_scale, size=dim)),
    )


class TestCoherentEval:
    def test_identity_value_is_heat_trace_series(self):
        label = CoherentLabel(identity(SU2), hbar=1.0)
        value = coherent_eval(label, identity(SU2))
        series = sum((n + 1) ** 2 * math.exp(-n * (n + 2) / 8.0) for n in range(80))
        assert abs(value - series) < 1e-10

    def test_real_label_gives_real_values(self):
        rng = np.random.default_rng(1)
        g = haar_sample(SU2, rng)
        label = CoherentLabel(exp_map(group_coords(g, rng)), hbar=0.7, s=2.0)
        x = haar_sample(SU2, rng)
        assert abs(coherent_eval(label, x).imag) < 1e-10

    def test_large_s_approaches_limit_state(self):
        rng = np.random.default_rng(2)
        hbar = 0.5
        g = random_complex_point(SU2, rng)
        finite = CoherentLabel(g, hbar, s=32 * hbar)
        limit = CoherentLabel(g, hbar)
        grid = [haar_sample(SU2, rng) for _ in range(20)]
        sup_rho_gap = max(abs(heat_kernel(SU2, 32 * hbar, x) - 1.0) for x in grid)
        for x in grid:
            lhs = abs(coherent_eval(finite, x) - coherent_eval(limit, x))
            bound = 2.0 * sup_rho_gap * max(1.0, abs(coherent_eval(limit, x)))
            assert lhs <= bound

    def test_denominator_guard(self):
        label = CoherentLabel(identity(SU2), hbar=1.0, s=25.0)
        with pytest.raises(ZeroDivisionError):
            coherent_eval(label, identity(SU2), tol=10.0)

    def test_label_validation(self):
        with pytest.raises(ValueError):
            CoherentLabel(identity(SU2), hbar=-1.0)
        with pytest.raises(ValueError):
            CoherentLabel(identity(SU2), hbar=1.0, s=0.4)


def group_coords(g, rng):
    from cylgauge.groups import group_log

    return group_log(g)


class TestOverlap:
    def test_trivial_series_total_mass(self):
        rng = np.random.default_rng(3)
        for s in (math.inf, 4.0):
            label = CoherentLabel(random_complex_point(SU2, rng), 0.8, s)
            res = coherent_overlap(label, CharacterSeries.single(SU2, 0), quad_level=16)
            assert abs(res.route_analytic - 1.0) < 1e-12
            assert abs(res.route_quadrature - 1.0) < 1e-8

    def test_su2_diagonal_closed_form(self):
        w, hbar = 1.3, 1.0
        g = ComplexGroupElement(SU2, np.diag([w, 1.0 / w]))
        label = CoherentLabel(g, hbar)
        res = coherent_overlap(label, CharacterSeries.single(SU2, 1), quad_level=16)
        expected = math.exp(-hbar * irrep_info(SU2, 1).casimir / 2.0) * (w + 1.0 / w)
        assert res.difference < 1e-7
        assert abs(res.route_analytic - expected) < 1e-12

    def test_u1_closed_form(self):
        r, alpha, k, hbar = 1.4, 0.6, 2, 0.5
        g = ComplexGroupElement(U1, r * np.exp(1j * alpha))
        res = coherent_overlap(CoherentLabel(g, hbar), CharacterSeries.single(U1, k), quad_level=64)
        expected = math.exp(-(k**2) * hbar / 2.0) * r**k * np.exp(1j * k * alpha)
        assert abs(res.route_analytic - expected) < 1e-12
        assert res.difference < 1e-10

    def test_twenty_random_pairs_agree(self):
        rng = np.random.default_rng(4)
        for trial in range(20):
            group = SU2 if trial % 2 == 0 else U1
            g = random_complex_point(group, rng)
            s = math.inf if trial % 3 == 0 else 4.0
            label = CoherentLabel(g, 0.8, s)
            max_label = 3 if group is SU2 else 2
            phi_label = int(rng.integers(0, max_label + 1))
            res = coherent_overlap(
                label, CharacterSeries.single(group, phi_label),
                quad_level=16 if group is SU2 else 64,
            )
            assert res.difference < 1e-7

    def test_finite_s_overlaps_are_s_independent(self):
        rng = np.random.default_rng(5)
        g = random_complex_point(SU2, rng)
        phi = CharacterSeries(SU2, {0: 0.3, 1: 1.0, 2: -0.2})
        values = []
        for s in (1.0, 4.0, 16.0):
            res = coherent_overlap(CoherentLabel(g, 0.5, s), phi, quad_level=14)
            values.append(res.route_quadrature)
        assert abs(values[0] - values[1]) < 1e-7
        assert abs(values[1] - values[2]) < 1e-7

    def test_insufficient_level_reported(self):
        rng = np.random.default_rng(6)
        g = random_complex_point(SU2, rng, y_scale=0.9)
        with pytest.raises(ValueError, match="quadrature level"):
            coherent_overlap(CoherentLabel(g, 0.5), CharacterSeries.single(SU2, 2),
                             quad_level=3, tol=1e-10)


class TestResolutionIdentity:
    def test_trivial_block_is_unity(self):
        rep = resolution_identity_check(SU2, 0, 0.5, [2.0, 8.0], 16, 2000, seed=1)
        for row in rep.rows:
            assert row.target == 1.0
            assert row.estimate == 1.0 + 0.0j

    def test_u1_matches_closed_forms(self):
        rep = resolution_identity_check(U1, 2, 0.5, [2.0], 16, 60_000, seed=2)
        for row in rep.rows:
            assert row.z < 4.0

    def test_su2_targets_and_trend(self):
        s_values = [2.0, 8.0, 32.0]
        rep = resolution_identity_check(SU2, 2, 0.5, s_values, 16, 20_000, seed=3)
        trend = rep.notes["s_trend"]
        offs = [trend[s]["max_offdiag_target"] for s in s_values]
        gaps = [trend[s]["max_diag_gap_target"] for s in s_values]
        assert offs[0] > offs[1] > offs[2]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_reconstruction_from_sampled_gram(self):
        # isometry form: <phi, phi> in L2(rho_s) reconstructed from R_ab
        s, hbar, n_max = 2.0, 0.5, 2
        coeff = {0: 0.5 + 0.0j, 1: 1.0 + 0.0j, 2: -0.3 + 0.2j}
        rep = resolution_identity_check(SU2, n_max, hbar, [s], 32, 120_000, seed=4)
        sampled = {}
        for row in rep.rows:
            tag = row.quantity.split("]")[-2].strip("[")
            a, b = (int(part) for part in tag.split(","))
            sampled[(a, b)] = row
        total = 0.0 + 0.0j
        exact = 0.0 + 0.0j
        error_budget = 0.0
        for a in range(n_max + 1):
            for b in range(n_max + 1):
                row = sampled[(min(a, b), max(a, b))]
                est = row.estimate if a <= b else np.conj(row.estimate)
                weight = np.conj(coeff[a]) * coeff[b]
                total += weight * est
                exact += weight * rho_s_inner_product(SU2, a, b, s)
                error_budget += abs(weight) * (row.std_error + 8.0 / 32)
        assert abs(total - exact) <= 3.0 * error_budget

    def test_s_below_bound_rejected(self):
        with pytest.raises(ValueError):
            resolution_identity_check(SU2, 1, 1.0, [0.4], 16, 100, seed=0)


class TestHolomorphy:
    def test_witness_small_along_two_directions(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            g = random_complex_point(SU2, rng)
            label = CoherentLabel(g, 0.7)
            phi = CharacterSeries(SU2, {1: 1.0, 2: 0.5})
            for direction in (np.array([1.0, 0, 0]), np.array([0, 0.7, 0.7])):
                assert holomorphy_witness(label, phi, direction) < 1e-6

    def test_u1_witness(self):
        rng = np.random.default_rng(8)
        g = random_complex_point(U1, rng)
        label = CoherentLabel(g, 0.5)
        assert holomorphy_witness(label, CharacterSeries.single(U1, 2), np.array([1.0])) < 1e-6
