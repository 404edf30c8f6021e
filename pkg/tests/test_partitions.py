import math

import numpy as np
import pytest

from fejerlab import groups
from fejerlab.errors import ConfigurationError, PartitionError
from fejerlab.groups import GROUP_TOKENS, group_from_token, random_points
from fejerlab.kernels import family_from_token
from fejerlab.partitions import (Cell, LocalPartition, masses_converge,
                                 numerical_partition_masses, parse_partition_config,
                                 partition_from_token, partition_masses, probe_point,
                                 standard_partition, validate_partition)

ALL = [group_from_token(t) for t in GROUP_TOKENS]

# (kernel token, group, params) pairs for the mass checks.
KERNEL_CASES = [
    ("fejer", groups.torus(1), [1, 8, 64]),
    ("sqfejer", groups.torus(2), [2, 8, 32]),
    ("sqfejer", groups.torus(3), [2, 8]),
    ("poisson", groups.euclidean(1), [1.0, 0.1, 0.01]),
    ("poissond", groups.euclidean(2), [1.0, 0.1]),
    ("semicircle:0.3", groups.euclidean(1), [0.1, 0.05, 0.01]),
    ("semicircled:0.3", groups.euclidean(2), [0.1, 0.01]),
    ("axbphi", groups.axb(), [0.5, 0.25, 0.1]),
    ("heisw3", groups.heisenberg(), [0.2, 0.1, 0.05]),
]


class TestStandardPartition:
    @pytest.mark.parametrize("g, labels", [
        (groups.torus(1), ["I0", "I1"]),
        (groups.torus(2), ["I00", "I01", "I10", "I11"]),
        (groups.euclidean(1), ["J0", "J1"]),
        (groups.axb(), ["A1", "A2", "A3", "A4"]),
        (groups.heisenberg(), ["J000", "J001", "J010", "J011", "J100", "J101", "J110", "J111"]),
    ])
    def test_labels(self, g, labels):
        assert standard_partition(g).labels == labels

    def test_torus_halves(self):
        p = standard_partition(groups.torus(1))
        assert p.cell("I0").box() == [(0.0, 0.5)]
        assert p.cell("I1").box() == [(0.5, 1.0)]

    def test_axb_first_cell(self):
        assert standard_partition(groups.axb()).cell("A1").box() == [(0.0, 1.0), (-math.inf, 0.0)]

    @pytest.mark.parametrize("g, y, label", [
        (groups.torus(1), 0.3, "I0"),
        (groups.torus(1), 0.5, "I1"),
        (groups.torus(1), 0.0, "I0"),
        (groups.axb(), (1.5, -0.2), "A3"),
        (groups.axb(), (1.0, 0.0), "A1"),
        (groups.axb(), (1.0, 1e-300), "A2"),
        (groups.euclidean(2), (0, 0), "J11"),
        (groups.euclidean(1), -1e-300, "J0"),
        (groups.heisenberg(), (-1, 0, 2), "J011"),
    ])
    def test_cell_of(self, g, y, label):
        assert standard_partition(g).cell_of(y) == label

    @pytest.mark.parametrize("g, label, r, expected", [
        (groups.euclidean(1), "J0", 0.1, [-0.05]),
        (groups.torus(1), "I1", 0.1, [0.95]),
        (groups.axb(), "A4", 0.2, [1.1, 0.1]),
    ])
    def test_probe_point(self, g, label, r, expected):
        c = standard_partition(g).cell(label)
        np.testing.assert_allclose(probe_point(c, r), expected, atol=1e-15)

    def test_probe_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            probe_point(standard_partition(groups.torus(1)).cells[0], 0.0)

    def test_unknown_label(self):
        with pytest.raises(ConfigurationError):
            standard_partition(groups.torus(1)).cell("I7")


@pytest.mark.parametrize("g", ALL, ids=lambda g: g.token)
class TestPartitionProperties:
    def test_exactly_one_cell(self, g):
        p = standard_partition(g)
        pts = random_points(g, 100_000, np.random.default_rng(0))
        assert np.all(p.membership(pts).sum(axis=-1) == 1)

    def test_locality(self, g):
        p = standard_partition(g)
        for c in p.cells:
            for k in range(1, 10):
                r = 10.0 ** -k
                y = probe_point(c, r)
                assert 0 < g.gauge_radius(y) < r
                assert c.contains(y)

    def test_validate(self, g):
        validate_partition(standard_partition(g), samples=20_000)


class TestValidation:
    def test_overlap_detected(self):
        g = groups.euclidean(1)
        cells = (Cell("L", g, ("below",), (0.0,)), Cell("F", g, ("full",), (0.0,)))
        with pytest.raises(PartitionError, match="overlap"):
            validate_partition(LocalPartition(g, cells))

    def test_gap_detected(self):
        g = groups.euclidean(2)
        cells = (Cell("a", g, ("below", "full"), (0.0, 0.0)),
                 Cell("b", g, ("above", "above"), (0.0, 0.0)))
        with pytest.raises(PartitionError, match="cover"):
            validate_partition(LocalPartition(g, cells))

    def test_non_local_detected(self):
        g = groups.euclidean(1)
        cells = (Cell("L", g, ("below",), (0.5,)), Cell("R", g, ("above",), (0.5,)))
        with pytest.raises(PartitionError, match="gauge ball"):
            validate_partition(LocalPartition(g, cells))

    def test_cell_of_ambiguous(self):
        g = groups.euclidean(1)
        cells = (Cell("L", g, ("below",), (0.0,)), Cell("F", g, ("full",), (0.0,)))
        with pytest.raises(PartitionError):
            LocalPartition(g, cells).cell_of(-1.0)


class TestConfig:
    def test_parse_halves(self):
        text = """
        # two half-lines
        cell.neg.axis0 = below
        cell.pos.axis0 = above
        """
        p = parse_partition_config(groups.euclidean(1), text)
        assert p.labels == ["neg", "pos"]
        validate_partition(p)
        assert p.cell_of(0.0) == "pos"

    def test_parse_slabs(self):
        text = "cell.L.axis0 = below\ncell.R.axis0 = above\nsplit.axis0 = 0.5\n"
        p = parse_partition_config(groups.torus(2), text)
        validate_partition(p)
        assert p.cell("L").sides == ("below", "full")

    @pytest.mark.parametrize("text", [
        "cell.a.axis0 = left", "cell.a.axis3 = below", "nonsense", "foo = 1", "",
    ])
    def test_bad_config(self, text):
        with pytest.raises(ConfigurationError):
            parse_partition_config(groups.euclidean(1), text)

    def test_structural_only(self):
        # Parses fine, but fails validation (the cells overlap).
        p = parse_partition_config(groups.euclidean(1), "cell.a.axis0 = full\ncell.b.axis0 = below")
        with pytest.raises(PartitionError):
            validate_partition(p)

    @pytest.mark.parametrize("token, g", [("halves", groups.torus(2)), ("axb4", groups.torus(1)),
                                          ("heis8", groups.axb()), ("octants", groups.torus(1))])
    def test_bad_token(self, token, g):
        with pytest.raises(ConfigurationError):
            partition_from_token(token, g)


class TestMasses:
    @pytest.mark.parametrize("token, g, p, expected", [
        ("sqfejer", groups.torus(2), 8, [0.25] * 4),
        ("semicircle:0.3", groups.euclidean(1), 0.05, [0.3, 0.7]),
        ("heisw3", groups.heisenberg(), 0.1, [0.125] * 8),
        ("fejer", groups.torus(1), 7, [0.5, 0.5]),
        ("axbphi", groups.axb(), 0.5, [0.25] * 4),
        ("semicircled:0.3", groups.euclidean(2), 0.1, [0.09, 0.21, 0.21, 0.49]),
    ])
    def test_examples(self, token, g, p, expected):
        m = partition_masses(standard_partition(g), family_from_token(token, g), p)
        np.testing.assert_allclose(m.weights, expected, atol=1e-12)
        assert m.provenance == "analytic"

    @pytest.mark.parametrize("token, g, params", KERNEL_CASES)
    def test_partition_of_unity(self, token, g, params):
        k = family_from_token(token, g)
        for p in params:
            assert partition_masses(standard_partition(g), k, p).total == pytest.approx(1.0,
                                                                                        abs=1e-12)

    @pytest.mark.parametrize("token, g, params", KERNEL_CASES)
    def test_analytic_matches_numerical(self, token, g, params):
        k = family_from_token(token, g)
        part = standard_partition(g)
        p = params[-1]
        a = partition_masses(part, k, p)
        n = numerical_partition_masses(part, k, p)
        np.testing.assert_allclose(a.weights, n.weights, atol=1e-8)

    def test_mismatched_groups(self):
        with pytest.raises(ConfigurationError):
            partition_masses(standard_partition(groups.torus(1)), family_from_token("poisson"), 0.1)


class TestMassConvergence:
    def test_fejer_halves(self):
        r = masses_converge(standard_partition(groups.torus(1)), family_from_token("fejer"),
                            list(range(1, 65)))
        assert r.status == "stable"
        np.testing.assert_allclose(r.limit.weights, [0.5, 0.5], atol=1e-14)

    def test_axbphi(self):
        g = groups.axb()
        r = masses_converge(standard_partition(g), family_from_token("axbphi", g), [0.5, 0.25, 0.1])
        assert r.stable
        np.testing.assert_allclose(r.history, 0.25, atol=1e-14)

    def test_poisson(self):
        r = masses_converge(standard_partition(groups.euclidean(1)), family_from_token("poisson"),
                            [1.0, 0.1, 0.01, 1e-4])
        assert r.stable
        np.testing.assert_allclose(r.limit.weights, [0.5, 0.5], atol=1e-15)

    def test_nonconvergent_masses(self):
        # Slabs {x < 0.25} and {x >= 0.25} on the torus: the mass of the first
        # cell changes as the kernel concentrates.
        text = "cell.L.axis0 = below\ncell.R.axis0 = above\nsplit.axis0 = 0.25\n"
        p = parse_partition_config(groups.torus(1), text)
        r = masses_converge(p, family_from_token("fejer"), [1, 2, 4])
        assert r.status == "non-convergent"

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            masses_converge(standard_partition(groups.torus(1)), family_from_token("fejer"), [4])
