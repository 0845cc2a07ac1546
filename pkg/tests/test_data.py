import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpshrink import (ConfigError, DataFormatError, RawExample, build_dataset,
                      format_example, parse_dataset, pattern_to_dense,
                      sparse_dot)


def parse_one(text):
    return parse_dataset(io.StringIO(text))


class TestParse:
    def test_basic_line(self):
        (ex,) = parse_one("+1 1:0.5 3:-2\n")
        assert ex.label == 1
        assert ex.features == ((1, 0.5), (3, -2.0))

    def test_bare_label_is_legal(self):
        (ex,) = parse_one("-1\n")
        assert ex.label == -1
        assert ex.features == ()

    def test_label_without_plus(self):
        (ex,) = parse_one("1 2:3\n")
        assert ex.label == 1

    def test_bad_value_reports_line(self):
        with pytest.raises(DataFormatError, match="line 1.*abc"):
            parse_one("1 2:abc\n")

    def test_bad_label(self):
        with pytest.raises(DataFormatError, match="label"):
            parse_one("2 1:1\n")

    def test_duplicate_index(self):
        with pytest.raises(DataFormatError, match="ascending"):
            parse_one("+1 3:1 3:2\n")

    def test_descending_index(self):
        with pytest.raises(DataFormatError, match="ascending"):
            parse_one("+1 3:1 2:2\n")

    def test_zero_index(self):
        with pytest.raises(DataFormatError, match="positive"):
            parse_one("+1 0:1\n")

    def test_nonfinite_value(self):
        with pytest.raises(DataFormatError, match="finite"):
            parse_one("+1 1:inf\n")

    def test_comments_blanks_crlf(self):
        text = "# header\n\n+1 1:1\r\n-1 2:0.25  # trailing\n"
        exs = parse_one(text)
        assert [e.label for e in exs] == [1, -1]
        assert exs[1].features == ((2, 0.25),)

    def test_error_line_number_counts_raw_lines(self):
        with pytest.raises(DataFormatError, match="line 3"):
            parse_one("# c\n+1 1:1\n+1 1:x\n")


@given(st.lists(
    st.tuples(
        st.sampled_from([-1, 1]),
        st.lists(st.tuples(st.integers(1, 50),
                           st.floats(-1e6, 1e6, allow_nan=False,
                                     allow_infinity=False)),
                 max_size=8, unique_by=lambda f: f[0])),
    max_size=10))
def test_round_trip(rows):
    examples = [RawExample(label, tuple(sorted(feats)))
                for label, feats in rows]
    text = "\n".join(format_example(e) for e in examples)
    assert parse_dataset(io.StringIO(text)) == examples


class TestBuild:
    def test_hand_example_no_extension(self):
        ds = build_dataset([RawExample(1, ((1, 1.0),)),
                            RawExample(-1, ((1, -1.0),))], rho=1.0, delta=0.0)
        assert ds.dim == 2 and ds.m == 2 and ds.d == 1
        np.testing.assert_array_equal(pattern_to_dense(ds.patterns[0], 2), [1, 1])
        np.testing.assert_array_equal(pattern_to_dense(ds.patterns[1], 2), [1, -1])
        assert ds.radius_R == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_hand_example_with_extension(self):
        ds = build_dataset([RawExample(1, ((1, 1.0),)),
                            RawExample(-1, ((1, -1.0),))], rho=1.0, delta=2.0)
        assert ds.dim == 4
        np.testing.assert_array_equal(pattern_to_dense(ds.patterns[0], 4),
                                      [1, 1, 2, 0])
        np.testing.assert_array_equal(pattern_to_dense(ds.patterns[1], 4),
                                      [1, -1, 0, -2])
        assert ds.radius_R == pytest.approx(math.sqrt(6), rel=1e-15)

    def test_all_zero_instance(self):
        ds = build_dataset([RawExample(1, ())], rho=1.0, delta=0.0)
        assert ds.dim == 1
        np.testing.assert_array_equal(pattern_to_dense(ds.patterns[0], 1), [1.0])
        assert ds.radius_R == 1.0

    def test_empty_list_rejected(self):
        with pytest.raises(ConfigError):
            build_dataset([], rho=1.0, delta=0.0)

    def test_sq_norm_cached_correctly(self):
        rng = np.random.default_rng(7)
        examples = [RawExample(int(rng.choice([-1, 1])),
                               tuple((j + 1, float(v)) for j, v in
                                     enumerate(rng.normal(size=5))))
                    for _ in range(20)]
        ds = build_dataset(examples, rho=1.3, delta=0.7)
        for p in ds.patterns:
            direct = float(np.sum(p.values ** 2))
            assert p.sq_norm == pytest.approx(direct, rel=1e-12)
            # norm consistency: u.y with u = y/||y|| equals ||y||
            u = pattern_to_dense(p, ds.dim) / math.sqrt(p.sq_norm)
            assert sparse_dot(u, p) == pytest.approx(math.sqrt(p.sq_norm),
                                                     rel=1e-9)

    def test_reflection_coordinatewise(self):
        rng = np.random.default_rng(8)
        examples = [RawExample(int(rng.choice([-1, 1])),
                               tuple((j + 1, float(v)) for j, v in
                                     enumerate(rng.normal(size=3))))
                    for _ in range(10)]
        ds = build_dataset(examples, rho=0.5, delta=1.5)
        for k, (ex, p) in enumerate(zip(examples, ds.patterns)):
            inst = np.zeros(ds.dim)
            for i, v in ex.features:
                inst[i - 1] = v
            inst[ds.d] = 0.5
            inst[ds.d + 1 + k] = 1.5
            np.testing.assert_allclose(pattern_to_dense(p, ds.dim),
                                       ex.label * inst, rtol=0, atol=0)

    def test_extension_makes_separable(self):
        # weight built from extension coordinates only strictly separates
        rng = np.random.default_rng(9)
        examples = [RawExample(int(rng.choice([-1, 1])),
                               tuple((j + 1, float(v)) for j, v in
                                     enumerate(rng.normal(size=4))))
                    for _ in range(15)]
        delta = 0.8
        ds = build_dataset(examples, rho=1.0, delta=delta)
        w = np.zeros(ds.dim)
        for k in range(ds.m):
            w[ds.d + 1 + k] = float(ds.labels[k]) * delta
        dots = [sparse_dot(w, p) for p in ds.patterns]
        assert min(dots) > 0

    def test_extension_coordinate_private(self):
        ds = build_dataset([RawExample(1, ((1, 1.0),)),
                            RawExample(1, ((1, 2.0),))], rho=1.0, delta=1.0)
        cols = [set(p.indices.tolist()) for p in ds.patterns]
        assert ds.d + 1 in cols[0] and ds.d + 2 in cols[1]
        assert ds.d + 1 not in cols[1] and ds.d + 2 not in cols[0]


class TestSparseDot:
    def test_examples(self, toy_dataset):
        w = np.array([2.0, 0.0])
        assert sparse_dot(w, toy_dataset.patterns[0]) == 2.0
        assert sparse_dot(np.zeros(2), toy_dataset.patterns[0]) == 0.0
        w = np.array([0.195, -0.005])
        assert sparse_dot(w, toy_dataset.patterns[0]) == pytest.approx(0.19,
                                                                       rel=1e-12)

    def test_out_of_range(self, toy_dataset):
        with pytest.raises(IndexError):
            sparse_dot(np.zeros(1), toy_dataset.patterns[0])
