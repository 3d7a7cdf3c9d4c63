import numpy as np
import pytest

from dfgof.errors import ConfigError
from dfgof.fileio import load_points, load_sample, write_table, write_text_atomic


class TestAtomicWrites:
    def test_failure_mid_write_leaves_no_file(self, tmp_path):
        target = tmp_path / "out.csv"

        def exploding_rows():
            yield (1.0, 2.0)
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            write_table(target, ["a", "b"], exploding_rows())
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []  # no temp files left behind

    def test_overwrite_is_all_or_nothing(self, tmp_path):
        target = tmp_path / "out.txt"
        write_text_atomic(target, "first\n")
        write_text_atomic(target, "second\n")
        assert target.read_text() == "second\n"

    def test_floats_round_trip_exactly(self, tmp_path):
        target = tmp_path / "out.csv"
        value = 0.1 + 0.2  # not representable prettily
        write_table(target, ["v"], [(value,)])
        reread = float(target.read_text().splitlines()[1])
        assert reread == value


class TestLoaders:
    def test_sample_with_header_and_blank_lines(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x,y\n\n1.0,2.0\n3.0,4.0\n# comment\n5.0,6.0\n")
        sample = load_sample(path)
        assert sample.n == 3 and sample.p == 1
        assert np.allclose(sample.Y, [2.0, 4.0, 6.0])

    def test_sample_without_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0,3.0\n4.0,5.0,6.0\n7.0,8.0,9.0\n9.0,1.0,2.0\n")
        sample = load_sample(path)
        assert sample.p == 2

    def test_custom_delimiter(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("1.0\t2.0\n3.0\t4.0\n5.0\t1.0\n")
        assert load_points(path, "\t").shape == (3, 2)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(ConfigError, match="fields"):
            load_sample(path)

    def test_single_column_rejected_for_samples(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0\n2.0\n")
        with pytest.raises(ConfigError, match="columns"):
            load_sample(path)

    def test_garbage_line_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0\nfoo,bar\n")
        with pytest.raises(ConfigError, match="not numeric"):
            load_sample(path)
