import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randsum import io
from randsum.dist import geometric, pmf_new
from randsum.errors import FileNotFound, ParseError


@given(st.lists(st.floats(1e-300, 1.0), min_size=1, max_size=20))
def test_pmf_round_trip_is_exact(weights):
    p = pmf_new(0, weights)
    q = io.pmf_loads(io.pmf_dumps(p))
    assert q.offset == p.offset
    assert np.array_equal(q.probs, p.probs)


def test_dumps_is_stable():
    text = io.pmf_dumps(geometric(0.5, 60))
    assert io.pmf_dumps(io.pmf_loads(text)) == text


def test_small_sum_shortfall_becomes_deficit():
    p = io.pmf_loads('{"offset": 2, "probs": [0.5, 0.4999999999]}')
    assert p.offset == 2
    assert p.mass_deficit == pytest.approx(1e-10, rel=1e-6)


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[1, 2]",
        '{"probs": [1]}',
        '{"offset": -1, "probs": [1]}',
        '{"offset": 1.5, "probs": [1]}',
        '{"offset": 0, "probs": []}',
        '{"offset": 0, "probs": ["a"]}',
        '{"offset": 0, "probs": [1.5, -0.5]}',
        '{"offset": 0, "probs": [0.5, 0.4]}',
        '{"offset": 0, "probs": [0.6, 0.6]}',
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        io.pmf_loads(text)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFound):
        io.load_pmf(tmp_path / "missing.json")


def test_infinity_is_a_string():
    assert io.c_value(math.inf) == "inf"
    assert io.c_value(0.5) == 0.5
    with pytest.raises(ValueError):
        io.dumps(math.nan)


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")

    with pytest.raises(TypeError):
        io.atomic_write(target, 12345)  # not text
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


def test_trace_csv():
    text = io.trace_csv(np.array([[1, 2], [1, 0]]))
    assert text == "path,step,value\n0,0,1\n0,1,2\n1,0,1\n1,1,0\n"
