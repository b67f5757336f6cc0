import numpy as np
import pytest

from exactsi import TrainingSet, ValidationError, load_csv, save_csv, uniform_toy


class TestTrainingSet:
    def test_basic_shape(self):
        ts = TrainingSet(points=np.array([[0.0, 1.0], [2.0, 3.0]]))
        assert ts.n == 2
        assert ts.d == 2

    def test_points_read_only(self):
        ts = TrainingSet(points=np.array([[0.0], [1.0]]))
        with pytest.raises(ValueError):
            ts.points[0, 0] = 5.0

    def test_duplicates_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            TrainingSet(points=np.array([[0.5, 0.5], [0.5, 0.5]]))

    def test_near_duplicates_within_tolerance_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            TrainingSet(points=np.array([[0.5], [0.5 + 1e-13]]))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError, match="non-finite"):
            TrainingSet(points=np.array([[0.0], [np.nan]]))

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            TrainingSet(points=np.empty((0, 2)))


class TestCsvRoundTrip:
    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(5)
        ts = TrainingSet(points=rng.standard_normal((7, 3)) * 1e3)
        path = tmp_path / "pts.csv"
        save_csv(ts, path)
        back = load_csv(path)
        assert np.array_equal(back.points, ts.points)

    def test_single_scalar(self, tmp_path):
        path = tmp_path / "one.csv"
        save_csv(TrainingSet(points=np.array([[0.3]])), path)
        assert path.read_text().strip() == "0.3"
        assert load_csv(path).points[0, 0] == 0.3

    def test_duplicate_rows_error(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("1.0,2.0\n1.0,2.0\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_csv(path)

    def test_ragged_rows_name_the_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ValidationError, match="row 2"):
            load_csv(path)

    def test_non_numeric_names_the_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0,oops\n")
        with pytest.raises(ValidationError, match="row 2"):
            load_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValidationError, match="n >= 1"):
            load_csv(path)

    def test_header_flag_skips_one_line(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("x,y\n1.0,2.0\n")
        ts = load_csv(path, header=True)
        assert ts.n == 1

    def test_unwritable_path(self, tmp_path):
        ts = TrainingSet(points=np.array([[1.0]]))
        with pytest.raises(OSError):
            save_csv(ts, tmp_path / "missing_dir" / "pts.csv")


class TestUniformToy:
    def test_range_and_shape(self):
        ts = uniform_toy(5, 2, seed=7)
        assert ts.n == 5 and ts.d == 2
        assert np.all(ts.points >= 0.0) and np.all(ts.points <= 1.0)

    def test_determinism(self):
        a = uniform_toy(6, 3, seed=42)
        b = uniform_toy(6, 3, seed=42)
        assert np.array_equal(a.points, b.points)
        c = uniform_toy(6, 3, seed=43)
        assert not np.array_equal(a.points, c.points)

    def test_single_point(self):
        ts = uniform_toy(1, 1, seed=0)
        assert ts.points.shape == (1, 1)
        assert 0.0 <= ts.points[0, 0] <= 1.0

    def test_scale_offset(self):
        ts = uniform_toy(4, 2, seed=1, scale=2.0, offset=np.array([10.0, 20.0]))
        assert np.all(ts.points[:, 0] >= 10.0) and np.all(ts.points[:, 0] <= 12.0)
        assert np.all(ts.points[:, 1] >= 20.0) and np.all(ts.points[:, 1] <= 22.0)

    def test_invalid_args(self):
        with pytest.raises(ValidationError):
            uniform_toy(0, 2, seed=1)
