import math

import numpy as np
import pytest

from cylgauge.groups import (
    AlgebraVector,
    ComplexGroupElement,
    GroupKind,
    exp_map,
    haar_sample,
    identity,
)
from cylgauge.lattice import (
    ComplexLatticeConnection,
    LatticeConnection,
    LatticeGaugeMap,
    LinkConfiguration,
    connection_from_json,
    connection_to_json,
    gauge_map_between,
    closure_defect,
    gauge_transform,
    holonomy,
    holonomy_traces,
    links_of,
    pushforward_moment,
    sample_complex_connection,
    sample_connection,
    smooth_connection,
    smooth_gauge_map,
)

U1, SU2 = GroupKind.U1, GroupKind.SU2


def random_based_map(group, n, rng):
    elems = [identity(group)] + [haar_sample(group, rng) for _ in range(n - 1)]
    return LatticeGaugeMap(group, tuple(elems))


class TestSampling:
    def test_per_coordinate_variance(self):
        s, n = 1.0, 16
        rng = np.random.default_rng(0)
        draws = np.stack(
            [sample_connection(SU2, n, s, rng).values for _ in range(2000)]
        )
        var = draws.var()
        n_eff = draws.size
        # variance of the sample variance of a Gaussian: 2 sigma^4 / n
        assert abs(var - s * n) < 4.0 * s * n * math.sqrt(2.0 / n_eff)

    def test_norm_expectation_diverges_with_n(self):
        s = 0.7
        rng = np.random.default_rng(1)
        for n in (8, 32):
            norms = [sample_connection(SU2, n, s, rng).norm_sq() for _ in range(800)]
            expected = 3.0 * s * n  # dim(algebra) * s * N
            assert abs(np.mean(norms) - expected) < 4.0 * np.std(norms) / math.sqrt(len(norms))

    def test_small_s_limit(self):
        rng = np.random.default_rng(2)
        L = sample_connection(SU2, 8, 1e-12, rng)
        assert np.max(np.abs(L.values)) < 1e-4

    def test_complex_variances(self):
        s, hbar, n = 2.0, 1.0, 16
        r = 2 * s - hbar
        rng = np.random.default_rng(3)
        draws = [sample_complex_connection(SU2, n, s, hbar, rng) for _ in range(2000)]
        re = np.stack([d.real_part for d in draws])
        im = np.stack([d.imag_part for d in draws])
        assert abs(re.var() - r / 2 * n) < 4 * (r / 2 * n) * math.sqrt(2.0 / re.size)
        assert abs(im.var() - hbar / 2 * n) < 4 * (hbar / 2 * n) * math.sqrt(2.0 / im.size)

    def test_r_to_zero_limit(self):
        s = 0.5
        hbar = 2 * s - 1e-9
        rng = np.random.default_rng(4)
        d = sample_complex_connection(U1, 8, s, hbar, rng)
        assert np.max(np.abs(d.real_part)) < 1e-3

    def test_complex_holonomy_in_sl2c(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            z = sample_complex_connection(SU2, 16, 2.0, 1.0, rng)
            h = holonomy(z)
            assert isinstance(h, ComplexGroupElement)
            assert abs(h.det() - 1.0) < 1e-9 * max(1.0, float(np.max(np.abs(h.value))) ** 2)

    def test_boundary_rejected(self):
        rng = np.random.default_rng(6)
        with pytest.raises(ValueError):
            sample_complex_connection(SU2, 8, 0.5, 1.0, rng)
        with pytest.raises(ValueError):
            sample_connection(SU2, 1, 1.0, rng)


class TestHolonomy:
    def test_flat_connection(self):
        L = LatticeConnection(SU2, np.zeros((12, 3)))
        assert holonomy(L).isclose(identity(SU2), 1e-14)

    def test_constant_connection_exact(self):
        x = AlgebraVector(SU2, [0.4, -0.2, 0.9])
        L = LatticeConnection(SU2, np.tile(x.coords, (16, 1)))
        assert np.max(np.abs(holonomy(L).value - exp_map(x).value)) < 1e-13

    def test_u1_is_exponential_of_mean(self):
        rng = np.random.default_rng(7)
        L = sample_connection(U1, 32, 1.0, rng)
        expected = np.exp(1j * L.values[:, 0].mean())
        assert abs(holonomy(L).value - expected) < 1e-14

    def test_u1_rk4_close_to_product(self):
        L = smooth_connection(U1, 64, np.random.default_rng(8), amplitude=0.5)
        assert abs(holonomy(L).value - holonomy(L, "rk4").value) < 1e-10

    def test_su2_rk4_second_order_agreement(self):
        devs = []
        for n in (16, 32, 64):
            L = smooth_connection(SU2, n, np.random.default_rng(9), amplitude=1.0)
            devs.append(
                np.max(np.abs(holonomy(L).value - holonomy(L, "rk4").value))
            )
        # O(1/N^2) or better: scaled deviations must not grow
        assert devs[1] * 32**2 <= devs[0] * 16**2 * 1.1
        assert devs[2] * 64**2 <= devs[1] * 32**2 * 1.1

    def test_complex_restricted_to_real_matches(self):
        rng = np.random.default_rng(10)
        L = sample_connection(SU2, 16, 1.0, rng)
        z = ComplexLatticeConnection(SU2, L.values, np.zeros_like(L.values))
        assert np.max(np.abs(holonomy(L).value - holonomy(z).value)) < 1e-12

    def test_unknown_method(self):
        L = LatticeConnection(U1, np.zeros((4, 1)))
        with pytest.raises(ValueError):
            holonomy(L, "euler")


class TestGaugeAction:
    def test_identity_map_fixes_connection(self):
        rng = np.random.default_rng(11)
        L = sample_connection(SU2, 12, 1.0, rng)
        gm = LatticeGaugeMap(SU2, tuple(identity(SU2) for _ in range(12)))
        out = gauge_transform(L, gm, level="algebra")
        assert np.max(np.abs(out.values - L.values)) < 1e-12
        cfg = gauge_transform(L, gm, level="link")
        assert np.max(np.abs(cfg.links - links_of(L).links)) < 1e-14

    def test_link_level_exact_invariance_thousand_maps(self):
        rng = np.random.default_rng(12)
        for group in (U1, SU2):
            L = sample_connection(group, 16, 1.0, rng)
            h0 = np.asarray(holonomy(L).value)
            worst = 0.0
            for _ in range(500):
                gm = random_based_map(group, 16, rng)
                h1 = np.asarray(gauge_transform(L, gm, level="link").holonomy().value)
                worst = max(worst, float(np.max(np.abs(h1 - h0))))
            assert worst < 1e-10

    def test_algebra_level_drift_halves(self):
        ratios = []
        for seed in range(5):
            drifts = []
            for n in (16, 32):
                L = smooth_connection(SU2, n, np.random.default_rng(100 + seed))
                gm = smooth_gauge_map(SU2, n, np.random.default_rng(200 + seed))
                out = gauge_transform(L, gm, level="algebra")
                drifts.append(
                    float(np.max(np.abs(np.asarray(holonomy(out).value) - np.asarray(holonomy(L).value))))
                )
            ratios.append(drifts[1] / drifts[0])
        assert 0.3 <= float(np.mean(ratios)) <= 0.7

    def test_rotation_part_is_pointwise_isometry(self):
        rng = np.random.default_rng(13)
        L = sample_connection(SU2, 16, 1.0, rng)
        gm = random_based_map(SU2, 16, rng)
        # strip the translation term by transforming a momentum-like field
        from cylgauge.groups import embed_algebra, unembed_algebra

        for k in range(16):
            g = gm.element(k).value
            rotated = unembed_algebra(SU2, g @ embed_algebra(SU2, L.values[k]) @ g.conj().T)
            assert abs(np.linalg.norm(rotated) - np.linalg.norm(L.values[k])) < 1e-12

    def test_non_based_map_rejected(self):
        rng = np.random.default_rng(14)
        elems = tuple(haar_sample(SU2, rng) for _ in range(8))
        with pytest.raises(ValueError):
            LatticeGaugeMap(SU2, elems)

    def test_holonomy_classification_constructive(self):
        # two link configurations with equal holonomy are gauge related by
        # the telescoping recursion, exactly
        rng = np.random.default_rng(15)
        for group in (U1, SU2):
            n = 12
            cfg1 = links_of(sample_connection(group, n, 1.0, rng))
            links = [haar_sample(group, rng) for _ in range(n - 1)]
            partial = links[0]
            for u in links[1:]:
                partial = u * partial
            closing = cfg1.holonomy() * partial.inverse()
            if group is U1:
                arr = np.array([u.value for u in links] + [closing.value])
            else:
                arr = np.stack([u.value for u in links] + [closing.value])
            cfg2 = LinkConfiguration(group, arr)
            assert np.max(np.abs(np.asarray(cfg2.holonomy().value) - np.asarray(cfg1.holonomy().value))) < 1e-12
            gm = gauge_map_between(cfg1, cfg2)
            assert closure_defect(gm, cfg1, cfg2) < 1e-10
            carried = gauge_transform(cfg1, gm, level="link")
            assert np.max(np.abs(carried.links - cfg2.links)) < 1e-10

    def test_unequal_holonomy_leaves_closure_defect(self):
        rng = np.random.default_rng(16)
        a = links_of(sample_connection(SU2, 10, 1.0, rng))
        b = links_of(sample_connection(SU2, 10, 1.0, rng))
        gm = gauge_map_between(a, b)
        assert closure_defect(gm, a, b) > 1e-3


class TestPushforward:
    def test_trivial_label_is_exactly_one(self):
        est, target = pushforward_moment(SU2, 0, 1.0, 16, 2000, seed=1)
        assert target == 1.0
        assert est.mean == 1.0 + 0.0j
        assert est.std_error == 0.0

    def test_u1_unbiased_in_n(self):
        # the abelian holonomy angle is exactly Gaussian for every N
        s = 1.0
        target = math.exp(-s / 2.0)
        for n in (4, 64):
            est, tgt = pushforward_moment(U1, 1, s, n, 100_000, seed=23)
            assert tgt == pytest.approx(target)
            assert est.z_score(tgt) < 3.0

    def test_su2_within_three_sigma_plus_bias(self):
        est, target = pushforward_moment(SU2, 1, 1.0, 64, 100_000, seed=29)
        assert abs(est.mean - target) < 3.0 * est.std_error + 8.0 / 64

    def test_workers_do_not_change_values(self):
        a, _ = pushforward_moment(SU2, 1, 1.0, 16, 20_000, seed=5, n_workers=1)
        b, _ = pushforward_moment(SU2, 1, 1.0, 16, 20_000, seed=5, n_workers=4)
        assert a.mean == b.mean and a.std_error == b.std_error


class TestSerialization:
    def test_real_roundtrip(self):
        rng = np.random.default_rng(17)
        L = sample_connection(SU2, 8, 1.0, rng)
        back = connection_from_json(connection_to_json(L))
        assert isinstance(back, LatticeConnection)
        assert np.array_equal(back.values, L.values)

    def test_complex_roundtrip(self):
        rng = np.random.default_rng(18)
        z = sample_complex_connection(U1, 8, 1.0, 0.5, rng)
        back = connection_from_json(connection_to_json(z))
        assert isinstance(back, ComplexLatticeConnection)
        assert np.array_equal(back.real_part, z.real_part)
        assert np.array_equal(back.imag_part, z.imag_part)

    def test_replayed_configuration_reproduces_holonomy(self):
        rng = np.random.default_rng(19)
        L = sample_connection(SU2, 16, 1.0, rng)
        back = connection_from_json(connection_to_json(L))
        assert np.max(np.abs(holonomy(back).value - holonomy(L).value)) == 0.0

    def test_corrupt_document_rejected(self):
        with pytest.raises(ValueError):
            connection_from_json('{"group": "su2", "n_sites": 4, "values": [[0,0,0]]}')


def test_holonomy_traces_match_elementwise():
    rng = np.random.default_rng(20)
    coords = rng.normal(size=(5, 12, 3))
    traces = holonomy_traces(SU2, coords)
    for i in range(5):
        h = holonomy(LatticeConnection(SU2, coords[i]))
        assert abs(np.trace(h.value) - traces[i]) < 1e-12
