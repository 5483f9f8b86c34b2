"""Unit tests for heun_connect.connection."""

from __future__ import annotations

import math

import numpy as np
import pytest

from heun_connect.connection import (
    PAIRS,
    TRIPLES,
    canonical_pair,
    chain_check,
    chain_residual,
    connect_to_point,
    connection_matrix,
    convention_fingerprint,
    frobenius_pair,
    multi_center_atlas,
    overlap_radius,
    reconstruction_residual,
    sample_points,
    single_point_atlas,
    triple_connections,
)
from heun_connect.errors import (
    CenterOutsideDiscs,
    ConditionViolated,
    ConventionMismatch,
    DegenerateExponents,
    NoChain,
    NotConverged,
    PointOutsideDisc,
)
from heun_connect.regions import config_conditions
from heun_connect.serialization import matrix_from_dict, matrix_to_dict
from heun_connect.series import SymmetricHeunConfig

CHI = (0.3, 0.5, 0.7, 0.9)


def _rotated_cuts(cfg: SymmetricHeunConfig) -> tuple[float, ...]:
    cuts = list(cfg.default_cuts())
    cuts[0] += 0.3
    return tuple(cuts)


class TestFundamentalPairs:
    """Tests for the local bases the matrices are built from."""

    def test_canonical_pair_is_identity_at_its_point(self, feasible_config) -> None:
        pair = canonical_pair(feasible_config, 0.1 + 0.1j)

        assert np.allclose(pair.evaluate(0.1 + 0.1j), np.eye(2), atol=1e-15)
        assert pair.wronskian(0.1 + 0.1j) == pytest.approx(1)

    def test_frobenius_pair_shares_center(self, feasible_config) -> None:
        pair = frobenius_pair(feasible_config, 3)

        assert pair.center == -2j
        assert pair.radius == pytest.approx(math.sqrt(5))

    def test_fixed_truncation_reports_non_convergence(self, feasible_config) -> None:
        with pytest.raises(NotConverged):
            connect_to_point(feasible_config, 1, 0, n_terms=4)


class TestConnectToPoint:
    """Tests for C(z_k, at)."""

    def test_rows_are_values_and_derivatives(self, feasible_config) -> None:
        matrix = connect_to_point(feasible_config, 2, 0)
        table = frobenius_pair(feasible_config, 2).evaluate(0)

        assert np.allclose(matrix.entries, table, rtol=1e-15)
        assert matrix.target_index is None
        assert matrix.evaluation_point == 0

    def test_determinant_is_pair_wronskian(self, feasible_config) -> None:
        matrix = connect_to_point(feasible_config, 4, 0.1j)
        w = frobenius_pair(feasible_config, 4).wronskian(0.1j)

        assert abs(matrix.determinant - w) <= 1e-12 * abs(w)

    def test_reconstruction(self, feasible_config) -> None:
        matrix = connect_to_point(feasible_config, 3, 0)

        residual = reconstruction_residual(feasible_config, matrix)

        assert residual is not None
        assert residual < 1e-8

    def test_point_outside_disc(self, feasible_config) -> None:
        with pytest.raises(PointOutsideDisc):
            connect_to_point(feasible_config, 1, -1.2 - 0.5j)

    def test_entries_are_read_only(self, feasible_config) -> None:
        matrix = connect_to_point(feasible_config, 1, 0)

        with pytest.raises(ValueError):
            matrix.entries[0, 0] = 0


class TestConnectionMatrix:
    """Tests for C(z_k, z_l) between two Frobenius pairs."""

    def test_identity_for_same_point(self, feasible_config) -> None:
        matrix = connection_matrix(feasible_config, 2, 2, 0)

        assert np.array_equal(matrix.entries, np.eye(2))

    @pytest.mark.parametrize("k,l", PAIRS)
    def test_closed_form_agrees_with_inverse_product(self, feasible_config, k, l) -> None:
        matrix = connection_matrix(feasible_config, k, l, 0)

        assert matrix.diagnostics["dual_path_discrepancy"] < 1e-10
        assert matrix.diagnostics["wronskian_ratio_defect"] < 1e-10

    @pytest.mark.parametrize("k,l", PAIRS)
    def test_reconstruction(self, feasible_config, k, l) -> None:
        matrix = connection_matrix(feasible_config, k, l, 0)

        residual = reconstruction_residual(feasible_config, matrix, seed=3)

        assert residual is not None
        assert residual < 1e-8

    def test_inverse_identity(self, feasible_config) -> None:
        forward = connection_matrix(feasible_config, 1, 3, 0)
        backward = connection_matrix(feasible_config, 3, 1, 0)

        assert np.linalg.norm((forward @ backward).entries - np.eye(2)) < 1e-9
        assert np.allclose(forward.inverse().entries, backward.entries, rtol=1e-9, atol=1e-12)

    def test_determinant_is_wronskian_ratio(self, feasible_config) -> None:
        matrix = connection_matrix(feasible_config, 2, 4, 0)
        w2 = frobenius_pair(feasible_config, 2).wronskian(0)
        w4 = frobenius_pair(feasible_config, 4).wronskian(0)

        assert matrix.determinant == pytest.approx(w2 / w4, rel=1e-10)

    def test_outside_either_disc(self, feasible_config) -> None:
        with pytest.raises(PointOutsideDisc):
            connection_matrix(feasible_config, 1, 3, 2 + 2j)

    def test_degenerate_exponents(self) -> None:
        cfg = SymmetricHeunConfig(z=(1j, -1, -2j, 1), chi=(math.pi / 4, 0.5, 0.7, 0.9))

        with pytest.raises(DegenerateExponents):
            connection_matrix(cfg, 1, 2, 0)

    def test_serialized_matrix_round_trips(self, feasible_config) -> None:
        matrix = connection_matrix(feasible_config, 1, 4, 0)

        restored = matrix_from_dict(matrix_to_dict(matrix))

        assert np.array_equal(restored.entries, matrix.entries)
        assert restored.convention == matrix.convention
        assert (restored.source_index, restored.target_index) == (1, 4)


class TestConventions:
    """Tests for branch-cut bookkeeping."""

    def test_fingerprint_depends_on_cuts(self, feasible_config) -> None:
        default = convention_fingerprint(feasible_config, feasible_config.default_cuts())

        assert default == convention_fingerprint(feasible_config, feasible_config.default_cuts())
        assert default != convention_fingerprint(feasible_config, _rotated_cuts(feasible_config))
        assert len(default) == 16

    def test_chaining_across_conventions_is_refused(self, feasible_config) -> None:
        first = connection_matrix(feasible_config, 1, 2, 0)
        second = connection_matrix(feasible_config, 2, 3, 0, cuts=_rotated_cuts(feasible_config))

        with pytest.raises(ConventionMismatch):
            first @ second

    def test_non_strict_chain_residual_still_computed(self, feasible_config) -> None:
        rotated = _rotated_cuts(feasible_config)
        c12 = connection_matrix(feasible_config, 1, 2, 0, cuts=rotated)
        c23 = connection_matrix(feasible_config, 2, 3, 0)
        c13 = connection_matrix(feasible_config, 1, 3, 0)

        with pytest.raises(ConventionMismatch):
            chain_residual(c12, c23, c13)
        assert math.isfinite(chain_residual(c12, c23, c13, strict=False))

    def test_reconstruction_needs_matching_convention(self, feasible_config) -> None:
        matrix = connection_matrix(feasible_config, 1, 2, 0, cuts=_rotated_cuts(feasible_config))

        with pytest.raises(ConventionMismatch):
            reconstruction_residual(feasible_config, matrix)


class TestSampling:
    """Tests for the deterministic reconstruction samples."""

    def test_sample_points_are_deterministic(self) -> None:
        first = sample_points(0.5j, 0.2, seed=7)
        second = sample_points(0.5j, 0.2, seed=7)

        assert np.array_equal(first, second)
        assert len(first) == 10
        radii = np.sort(np.unique(np.round(np.abs(first - 0.5j), 12)))
        assert radii == pytest.approx([0.06, 0.12])

    def test_overlap_radius_respects_discs(self, feasible_config) -> None:
        radius = overlap_radius(feasible_config, 0, (1, 3), feasible_config.default_cuts())

        assert radius == pytest.approx(0.95 * math.sqrt(5) - 2)


class TestChains:
    """Tests for the composition identity C_kl C_lm = C_km."""

    def test_chain_at_common_point(self, feasible_config) -> None:
        assert chain_check(feasible_config, 1, 2, 3, 0, 0, 0) < 1e-8

    def test_chain_through_different_points(self, feasible_config) -> None:
        residual = chain_check(feasible_config, 2, 3, 4, 0, -0.75j, 0.1)

        assert residual < 1e-8

    def test_round_trip_chain(self, feasible_config) -> None:
        assert chain_check(feasible_config, 1, 2, 1, 0, 0, 0) < 1e-9

    def test_triple_at_circumcentre(self, feasible_config) -> None:
        matrices = triple_connections(feasible_config, (1, 2, 4))

        assert set(matrices) == {(1, 2), (2, 4), (1, 4)}
        for matrix in matrices.values():
            assert abs(matrix.evaluation_point) < 1e-14
            assert matrix.provenance == ("Z124",)

    def test_triple_with_centre_outside_discs(self, feasible_config) -> None:
        with pytest.raises(CenterOutsideDiscs):
            triple_connections(feasible_config, (1, 2, 3))


class TestSinglePointAtlas:
    """Tests for the atlas built from one canonical basis at the origin."""

    def test_full_atlas(self, feasible_config) -> None:
        atlas = single_point_atlas(feasible_config)

        assert atlas.mode == "single-point"
        assert sorted(atlas.base) == [1, 2, 3, 4]
        assert sorted(atlas.pairwise) == list(PAIRS)
        assert atlas.max_residual is not None and atlas.max_residual < 1e-8
        assert atlas.chain_residual is not None and atlas.chain_residual < 1e-8
        assert atlas.admissible_triples == TRIPLES

    def test_reverse_lookup_is_inverse(self, feasible_config) -> None:
        atlas = single_point_atlas(feasible_config)

        product = atlas.matrix(3, 1) @ atlas.matrix(1, 3)

        assert np.allclose(product.entries, np.eye(2), atol=1e-9)

    def test_condition_a_violation(self) -> None:
        cfg = SymmetricHeunConfig(z=(1j, complex(math.cos(2.0), math.sin(2.0)), -2j, 1), chi=CHI)

        with pytest.raises(ConditionViolated) as excinfo:
            single_point_atlas(cfg)
        assert excinfo.value.condition == "A"

    def test_condition_b_violation(self) -> None:
        cfg = SymmetricHeunConfig(z=(1j, -1, 2, 1), chi=CHI)

        with pytest.raises(ConditionViolated) as excinfo:
            single_point_atlas(cfg)
        assert excinfo.value.condition == "B"

    def test_disc_violation(self, witness_config) -> None:
        """A and B hold, but z4 = 1 is only 2/3 from z3 = 1/3."""
        with pytest.raises(ConditionViolated) as excinfo:
            single_point_atlas(witness_config)
        assert excinfo.value.condition == "discs"

    def test_deterministic(self, feasible_config) -> None:
        first = single_point_atlas(feasible_config, seed=5)
        second = single_point_atlas(feasible_config, seed=5)

        for pair in PAIRS:
            assert np.array_equal(first.pairwise[pair].entries, second.pairwise[pair].entries)
        assert first.residuals == second.residuals


class TestMultiCenterAtlas:
    """Tests for the atlas assembled from circumcentres of admissible triples."""

    def test_admissible_triples_and_chaining(self, feasible_config) -> None:
        atlas = multi_center_atlas(feasible_config)

        assert atlas.mode == "multi-center"
        assert atlas.admissible_triples == ((1, 2, 4), (2, 3, 4))
        assert sorted(atlas.pairwise) == list(PAIRS)
        assert atlas.pairwise[(1, 3)].provenance == ("Z124", "Z234")
        assert atlas.residuals[(1, 3)] is not None
        assert atlas.max_residual < 1e-8
        assert atlas.chain_residual < 1e-8

    def test_agrees_with_single_point_atlas(self, feasible_config) -> None:
        single = single_point_atlas(feasible_config)
        multi = multi_center_atlas(feasible_config)

        for pair in PAIRS:
            expected = single.pairwise[pair].entries
            got = multi.pairwise[pair].entries
            assert np.linalg.norm(got - expected) <= 1e-8 * max(1.0, np.linalg.norm(expected))

    def test_no_admissible_triple(self, witness_config) -> None:
        with pytest.raises(NoChain):
            multi_center_atlas(witness_config)


class TestRandomConfigurations:
    """Seeded sweep over random configurations that satisfy the single-point conditions."""

    @pytest.mark.slow
    def test_dual_path_and_reconstruction(self, draw_config) -> None:
        rng = np.random.default_rng(4242)
        checked = 0

        for _ in range(100):
            if checked == 25:
                break
            cfg = draw_config(rng, single_point=True)
            if not config_conditions(cfg).single_point:
                continue
            k, l = PAIRS[rng.integers(len(PAIRS))]
            try:
                matrix = connection_matrix(cfg, k, l, 0)
            except (PointOutsideDisc, DegenerateExponents):
                continue
            residual = reconstruction_residual(cfg, matrix, seed=checked)
            if residual is None:
                continue

            assert matrix.diagnostics["dual_path_discrepancy"] < 1e-10, cfg
            assert residual < 1e-8, cfg
            checked += 1

        assert checked == 25
