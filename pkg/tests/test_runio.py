import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from betaproc import __version__
from betaproc.errors import DomainError, ParseError
from betaproc.runio import RunManifest, comment_line, read_table, write_table
from betaproc.svg import Figure


def test_comment_line():
    assert comment_line(7, alpha=0.3) == f"betaproc {__version__} seed=7 alpha=0.3"


@given(st.lists(st.tuples(st.integers(-10**6, 10**6), st.floats(allow_nan=False, allow_infinity=False)),
                min_size=1, max_size=30))
def test_table_roundtrip_is_exact(rows):
    import tempfile, os
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "t.csv")
        write_table(path, ["i", "v"], rows, "c")
        header, data = read_table(path)
    assert header == ["i", "v"]
    assert np.array_equal(data, np.array(rows, dtype=float))


def test_table_comment_and_header(tmp_path):
    write_table(tmp_path / "t.csv", ["a"], [[1]], "hello")
    assert (tmp_path / "t.csv").read_text() == "# hello\na\n1\n"


def test_headerless_table(tmp_path):
    (tmp_path / "t.csv").write_text("1,2\n3,4\n")
    header, data = read_table(tmp_path / "t.csv")
    assert header is None and data.shape == (2, 2)


@pytest.mark.parametrize("text, row, col", [("a,b\n1,2\n3,x\n", 3, 2), ("# c\n1,2\n3,inf\n", 3, 2),
                                             ("1,2\n1,2,3\n", 2, None)])
def test_parse_errors_locate_cell(tmp_path, text, row, col):
    (tmp_path / "t.csv").write_text(text)
    with pytest.raises(ParseError) as info:
        read_table(tmp_path / "t.csv")
    assert info.value.row == row and info.value.col == col


def test_empty_table(tmp_path):
    (tmp_path / "t.csv").write_text("# only a comment\nx,y\n")
    with pytest.raises(ParseError):
        read_table(tmp_path / "t.csv")


def test_manifest_roundtrip_and_compare(tmp_path):
    (tmp_path / "o.txt").write_text("data")
    man = RunManifest("curves", {"gamma": 3.0}, 1)
    man.record_outputs(tmp_path, ["o.txt"])
    man.write(tmp_path)
    back = RunManifest.read(tmp_path / "manifest.json")
    assert back == man and back.compare(tmp_path) == []
    (tmp_path / "o.txt").write_text("changed")
    assert back.compare(tmp_path) == ["o.txt"]


def test_manifest_malformed(tmp_path):
    (tmp_path / "m.json").write_text("{\n  broken")
    with pytest.raises(ParseError) as info:
        RunManifest.read(tmp_path / "m.json")
    assert info.value.row == 2
    (tmp_path / "n.json").write_text('{"x": 1}')
    with pytest.raises(ParseError):
        RunManifest.read(tmp_path / "n.json")


def test_svg_deterministic_and_log_safe(tmp_path):
    def make():
        f = Figure("t & <x>", "n", "y", xlog=True, ylog=True)
        f.points([1, 10, 100], [1e-320, 0.0, 5.0], "pts")
        f.line([1, 1000], [2, 3], "ln", dashed=True)
        return f.render()

    a, b = make(), make()
    assert a == b and a.startswith("<svg") and a.rstrip().endswith("</svg>")
    assert "t &amp; &lt;x&gt;" in a and 'stroke-dasharray' in a
    assert a.count("<circle") == 1


def test_svg_empty_and_shape_mismatch():
    assert "<svg" in Figure().render()
    with pytest.raises(DomainError):
        Figure().line([1, 2], [1])
