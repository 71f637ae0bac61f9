import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lge.io import (
    MatrixFormatError, atomic_write_text, cell_rng, config_from_mapping, config_to_kv, load_config,
    parse_kv, read_matrix, read_table, write_matrix, write_table,
)
from lge.solver import SolverConfig

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite))
def test_matrix_csv_roundtrip_bitwise(tmp_path_factory, M):
    path = tmp_path_factory.mktemp("m") / "M.csv"
    write_matrix(path, M)
    back = read_matrix(path)
    assert back.shape == M.shape
    assert back.tobytes() == M.tobytes()  # repr keeps the sign of -0.0


@pytest.mark.parametrize("text, needle", [
    ("1,2\n3,x\n", "row 2, column 2"),
    ("1,2\n3\n", "row 2 has 1 columns"),
    ("1,nan\n", "non-finite"),
    ("", "empty"),
])
def test_malformed_csv_is_diagnosed(tmp_path, text, needle):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(MatrixFormatError, match=needle):
        read_matrix(path)


def test_table_roundtrip(tmp_path):
    write_table(tmp_path / "t.csv", ("a", "b"), [(0.1, 2), (1 / 3, 5)])
    header, rows = read_table(tmp_path / "t.csv")
    assert header == ["a", "b"]
    assert rows == [[0.1, 2.0], [1 / 3, 5.0]]


def test_parse_kv():
    assert parse_kv("a = 1\n# note\n\nb=x=y  # tail\n") == {"a": "1", "b": "x=y"}
    with pytest.raises(ValueError, match="line 1"):
        parse_kv("no equals sign")


def test_config_from_mapping_and_roundtrip(tmp_path):
    cfg, extra = config_from_mapping({"gamma": "2.5", "step1_max_iter": "40", "colour": "red"})
    assert cfg.gamma == 2.5 and cfg.step1_max_iter == 40
    assert extra == {"colour": "red"}
    path = tmp_path / "cfg.txt"
    path.write_text(config_to_kv(SolverConfig(beta=0.3, r1=7.0)))
    back, extra = load_config(path)
    assert back == SolverConfig(beta=0.3, r1=7.0) and not extra


def test_cell_rng_streams():
    a = cell_rng(0, 1, 2).random(4)
    assert np.array_equal(a, cell_rng(0, 1, 2).random(4))
    for other in ((1, 1, 2), (0, 2, 2), (0, 1, 3), (0, 1)):
        assert not np.array_equal(a, cell_rng(*other).random(4))


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write_text(tmp_path / "sub" / "f.txt", "hello")
    atomic_write_text(tmp_path / "sub" / "f.txt", "again")
    assert (tmp_path / "sub" / "f.txt").read_text() == "again"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["f.txt"]
