import io
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from evodata import dataset
from evodata.dataset import ColumnSchema, FitnessMatrix, RawTable
from evodata.exceptions import (DegenerateColumnError, DomainError,
                                SchemaError, TableParseError,
                                UnusableDataError)
from tests import fixtures


def schema(*names, label=None):
    columns = [ColumnSchema(name) for name in names]
    if label:
        columns.insert(0, ColumnSchema(label, label=True))
    return columns


class TestSchema(unittest.TestCase):

    def test_load_schema(self):
        columns = dataset.load_schema(fixtures.SUPERMARKET_SCHEMA)
        self.assertEqual(len(columns), 8)
        self.assertTrue(columns[0].label)
        self.assertEqual(columns[1].name, "distance")
        self.assertEqual(columns[1].direction, "inverse")
        self.assertEqual(
            [c.direction for c in columns[2:]], ["direct"] * 6)

    def test_load_schema_missing_file(self):
        with self.assertRaises(SchemaError) as cm:
            dataset.load_schema(fixtures.DATA / "nope.schema")
        self.assertIn("nope.schema", str(cm.exception))

    def test_parse_schema_comments_and_blanks(self):
        columns = dataset.parse_schema([
            "# header", "", "a = direct  # trailing", "b=inverse",
        ])
        self.assertEqual([(c.name, c.direction) for c in columns],
                         [("a", "direct"), ("b", "inverse")])

    def test_parse_schema_errors(self):
        with self.assertRaises(SchemaError):
            dataset.parse_schema(["a direct"])
        with self.assertRaises(SchemaError):
            dataset.parse_schema(["a = direct", "a = inverse"])
        with self.assertRaises(SchemaError):
            dataset.parse_schema(["a = sideways"])
        with self.assertRaises(SchemaError):
            dataset.parse_schema(["a = label", "b = label"])

    def test_register_fitness_function(self):
        dataset.register_fitness_function("half", lambda x: x / x.max() / 2)
        try:
            column = ColumnSchema("x", "half")
            raw = RawTable(np.array([[1.0], [2.0]]), ("x",), ("1", "2"))
            phi = dataset.normalize(raw, [column])
            assert_allclose(phi.values[:, 0], [0.25, 0.5])
        finally:
            del dataset.FITNESS_FUNCTIONS["half"]

    def test_register_label_is_reserved(self):
        with self.assertRaises(SchemaError):
            dataset.register_fitness_function("label", lambda x: x)


class TestLoadTable(unittest.TestCase):

    def setUp(self):
        self.schema = dataset.load_schema(fixtures.SUPERMARKET_SCHEMA)

    def test_supermarket(self):
        raw = dataset.load_table(fixtures.SUPERMARKET_CSV, self.schema)
        self.assertEqual(raw.n, 10)
        self.assertEqual(raw.m, 7)
        self.assertEqual(raw.rows, fixtures.STORES)
        self.assertEqual(raw.columns, fixtures.FEATURES)
        assert_array_equal(raw.values, fixtures.RAW)

    def test_empty(self):
        with self.assertRaises(TableParseError):
            dataset.load_table(io.StringIO(""), self.schema)

    def test_blank_lines_are_skipped(self):
        text = "a,b\n1,2\n\n3,4\n\n"
        raw = dataset.load_table(text, schema("a", "b"))
        assert_array_equal(raw.values, [[1, 2], [3, 4]])
        self.assertEqual(raw.rows, ("1", "2"))

    def test_non_numeric_cell_names_coordinates(self):
        text = "a,b\n1,2\n3,x\n"
        with self.assertRaises(TableParseError) as cm:
            dataset.load_table(text, schema("a", "b"))
        self.assertEqual(cm.exception.row, 3)
        self.assertEqual(cm.exception.column, "b")
        self.assertIn("row 3", str(cm.exception))

    def test_ragged_row(self):
        with self.assertRaises(TableParseError) as cm:
            dataset.load_table("a,b\n1,2\n3\n", schema("a", "b"))
        self.assertEqual(cm.exception.row, 3)

    def test_non_finite(self):
        with self.assertRaises(TableParseError):
            dataset.load_table("a,b\n1,2\n3,inf\n", schema("a", "b"))

    def test_single_row(self):
        with self.assertRaises(TableParseError):
            dataset.load_table("a,b\n1,2\n", schema("a", "b"))

    def test_header_schema_mismatch(self):
        with self.assertRaises(SchemaError):
            dataset.load_table("a,c\n1,2\n3,4\n", schema("a", "b"))
        with self.assertRaises(SchemaError):
            dataset.load_table("a\n1\n3\n", schema("a", "b"))

    def test_label_column(self):
        raw = dataset.load_table(
            "id,a,b\nx,1,2\ny,3,4\n", schema("a", "b", label="id"))
        self.assertEqual(raw.rows, ("x", "y"))
        self.assertEqual(raw.columns, ("a", "b"))


class TestNormalize(unittest.TestCase):

    def test_supermarket_matches_printed(self):
        schema = dataset.load_schema(fixtures.SUPERMARKET_SCHEMA)
        raw = dataset.load_table(fixtures.SUPERMARKET_CSV, schema)
        phi = dataset.normalize(raw, schema)
        assert_allclose(phi.values, fixtures.PHI, atol=1e-12)
        assert_allclose(phi.values, fixtures.PHI_PRINTED, atol=0.005)

    def test_direct_and_inverse(self):
        raw = RawTable(np.array([[0.0, 1.0], [5.0, 4.0], [10.0, 2.0]]),
                       ("a", "b"), ("1", "2", "3"))
        phi = dataset.normalize(
            raw, [ColumnSchema("a", "direct"), ColumnSchema("b", "inverse")])
        assert_allclose(phi.values[:, 0], [0.0, 0.5, 1.0])
        assert_allclose(phi.values[:, 1], [0.75, 0.0, 0.5])

    def test_already_normalized_is_unchanged(self):
        values = np.array([[1.0, 0.2], [0.5, 1.0], [0.25, 0.6]])
        raw = RawTable(values, ("a", "b"), ("1", "2", "3"))
        columns = [ColumnSchema("a"), ColumnSchema("b")]
        phi = dataset.normalize(raw, columns)
        assert_array_equal(phi.values, values)
        again = dataset.normalize(
            RawTable(phi.values, phi.columns, phi.rows), columns)
        assert_array_equal(again.values, phi.values)

    def test_all_zero_column(self):
        raw = RawTable(np.zeros((3, 1)), ("a",), ("1", "2", "3"))
        with self.assertRaises(DegenerateColumnError):
            dataset.normalize(raw, [ColumnSchema("a")])

    def test_negative_value(self):
        raw = RawTable(np.array([[1.0], [-1.0]]), ("a",), ("x", "y"))
        with self.assertRaises(DomainError) as cm:
            dataset.normalize(raw, [ColumnSchema("a")])
        self.assertIn("'y'", str(cm.exception))

    def test_out_of_range_fitness_function(self):
        dataset.register_fitness_function("double", lambda x: 2 * x / x.max())
        try:
            raw = RawTable(np.array([[1.0], [2.0]]), ("a",), ("x", "y"))
            with self.assertRaises(DomainError):
                dataset.normalize(raw, [ColumnSchema("a", "double")])
        finally:
            del dataset.FITNESS_FUNCTIONS["double"]


class TestSanitize(unittest.TestCase):

    def test_supermarket_is_unchanged(self):
        phi = dataset.sanitize(fixtures.supermarket())
        self.assertTrue(phi.sanitized)
        self.assertTrue(phi.report.empty)
        self.assertEqual(phi.m, 7)

    def test_drops_constant_and_merges_duplicates(self):
        values = np.array([
            [0.5, 0.1, 0.1, 0.9],
            [0.5, 0.7, 0.7, 0.2],
            [0.5, 0.3, 0.3, 0.4],
        ])
        phi = FitnessMatrix(values, ("c", "a", "a2", "b"), ("1", "2", "3"))
        with self.assertLogs("evodata.dataset", level="INFO"):
            clean = dataset.sanitize(phi)
        self.assertEqual(clean.columns, ("a", "b"))
        self.assertEqual(clean.report.dropped, ("c",))
        self.assertEqual(clean.report.merged, (("a", "a2"),))

    def test_too_few_columns(self):
        values = np.array([[0.5, 0.1], [0.5, 0.1]])
        with self.assertRaises(UnusableDataError):
            dataset.sanitize(FitnessMatrix.from_array(values))


class TestMoments(unittest.TestCase):

    def setUp(self):
        self.phi = fixtures.supermarket()

    def test_column_means(self):
        moments = dataset.compute_moments(self.phi)
        assert_allclose(moments.column_means, fixtures.MEANS, atol=1e-7)
        assert_allclose(
            moments.column_means, fixtures.MEANS_PRINTED, atol=0.0051)

    def test_dispersions(self):
        for pairing in ("full", "distinct"):
            moments = dataset.compute_moments(self.phi, pairing)
            self.assertAlmostEqual(
                moments.gene_dispersion,
                fixtures.GENE_DISPERSION[pairing], places=9)
            self.assertAlmostEqual(
                moments.organism_dispersion,
                fixtures.ORGANISM_DISPERSION[pairing], places=9)

    def test_second_moments_symmetric(self):
        moments = dataset.compute_moments(self.phi)
        assert_allclose(moments.second_moments, moments.second_moments.T)
        assert_allclose(
            np.diag(moments.second_moments),
            (self.phi.values ** 2).mean(axis=0))

    def test_harmonic_organism_fitness(self):
        moments = dataset.compute_moments(self.phi)
        assert_allclose(
            moments.harmonic_organism_fitness, self.phi.values.mean(axis=1))

    def test_dispersions_match_pairwise_sums(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            phi = fixtures.random_phi(rng, 10, 7)
            values = phi.values
            means = [values[:, j].sum() / 10 for j in range(7)]
            harmonic = [values[i].sum() / 7 for i in range(10)]
            for pairing in ("full", "distinct"):
                moments = dataset.compute_moments(phi, pairing)
                for x, got in ((means, moments.gene_dispersion),
                               (harmonic, moments.organism_dispersion)):
                    k = len(x)
                    total = 0.0
                    for a in range(k):
                        for b in range(k):
                            total += abs(x[a] - x[b])
                    pairs = k * k if pairing == "full" else k * (k - 1)
                    self.assertAlmostEqual(got, total / pairs, delta=1e-12)

    def test_constant_matrix_has_zero_dispersion(self):
        phi = FitnessMatrix.from_array(np.full((4, 3), 0.5))
        for pairing in ("full", "distinct"):
            moments = dataset.compute_moments(phi, pairing)
            self.assertEqual(moments.gene_dispersion, 0.0)
            self.assertEqual(moments.organism_dispersion, 0.0)

    def test_second_moments_range(self):
        values = np.array([
            [1.0, 0.3, 0.9],
            [0.0, 0.8, 0.1],
            [1.0, 0.5, 0.4],
            [0.0, 1.0, 0.0],
        ])
        moments = dataset.compute_moments(FitnessMatrix.from_array(values))
        # binary column: mean of squares is the mean
        self.assertAlmostEqual(
            moments.second_moments[0, 0], moments.column_means[0],
            delta=1e-15)
        self.assertTrue(np.all(moments.second_moments >= 0.0))
        self.assertTrue(np.all(moments.second_moments <= 1.0))

    def test_outputs_are_read_only(self):
        moments = dataset.compute_moments(self.phi)
        with self.assertRaises(ValueError):
            moments.column_means[0] = 1.0

    def test_mean_abs_difference(self):
        x = np.array([0.0, 1.0])
        self.assertEqual(dataset.mean_abs_difference(x, "full"), 0.5)
        self.assertEqual(dataset.mean_abs_difference(x, "distinct"), 1.0)
        with self.assertRaises(ValueError):
            dataset.mean_abs_difference(x, "some")


class TestKinship(unittest.TestCase):

    def test_supermarket_entry(self):
        phi = fixtures.supermarket()
        self.assertAlmostEqual(
            dataset.compute_kinship(phi, "l1").gene[0, 1], 0.585, places=9)
        self.assertAlmostEqual(
            dataset.compute_kinship(phi, "l2").gene[0, 1],
            0.8433699002, places=9)

    def test_shape_symmetry_and_diagonal(self):
        rng = np.random.default_rng(3)
        phi = fixtures.random_phi(rng, 6, 4)
        kinship = dataset.compute_kinship(phi)
        self.assertEqual(kinship.gene.shape, (4, 4))
        self.assertEqual(kinship.organism.shape, (6, 6))
        for matrix in (kinship.gene, kinship.organism):
            assert_allclose(matrix, matrix.T)
            assert_allclose(np.diag(matrix), 1.0)
            self.assertTrue(np.all(matrix >= 0.0))

    def test_opposite_columns_have_no_l1_kinship(self):
        values = np.array([[1.0, 0.0, 0.2], [1.0, 0.0, 0.7], [1.0, 0.0, 0.4]])
        kinship = dataset.compute_kinship(
            FitnessMatrix.from_array(values), "l1")
        self.assertEqual(kinship.gene[0, 1], 0.0)
        self.assertEqual(kinship.gene[1, 0], 0.0)

    def test_unknown_norm(self):
        with self.assertRaises(ValueError):
            dataset.compute_kinship(fixtures.supermarket(), "linf")


if __name__ == "__main__":
    unittest.main()
