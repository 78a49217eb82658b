import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _model as M
from _fixtures import tetrahedron_example
from blowup.complex import ComplexError, IndexComplex, MarkedComplex, make_complete
from blowup.io import (ParseError, from_json, from_text, gamma_from_json_obj, gamma_to_json_obj, load, save,
                       to_json, to_text)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_text_and_json_round_trip(seed):
    rng = np.random.default_rng(seed)
    idx, ground = M.random_frame(rng)
    G = M.random_complex(rng, idx, ground)
    assert from_text(to_text(G)) == G
    assert from_json(to_json(G)) == G
    assert to_text(from_text(to_text(G))) == to_text(G)


def test_marked_round_trip_keeps_marks():
    _, GM = tetrahedron_example()
    for text in (to_text(GM), to_json(GM)):
        back = from_text(text) if not text.startswith("{") else from_json(text)
        assert isinstance(back, MarkedComplex)
        assert back == GM


def test_undefined_and_empty_parts_survive():
    idx = IndexComplex.partite(3, 2)
    K = make_complete(idx, [2, 2, 2])
    parts = {c: a for c, a in K.parts.items() if idx.subset(c) != (1, 2)}
    parts[idx.copy((0, 1))] = np.zeros((2, 2), dtype=bool)
    G = K.replace(parts)
    back = from_text(to_text(G))
    assert not back.defined(idx.copy((1, 2)))
    assert back.defined(idx.copy((0, 1))) and back.count(idx.copy((0, 1))) == 0


def test_comment_lines_are_skipped():
    G = make_complete(IndexComplex.partite(2, 2), [1, 2])
    assert from_text("# produced by a test\n" + to_text(G)) == G


def test_file_helpers(tmp_path):
    _, GM = tetrahedron_example()
    for name in ("g.txt", "g.json"):
        save(GM, str(tmp_path / name))
        assert load(str(tmp_path / name)) == GM


def _lines(G):
    return to_text(G).splitlines()


def test_parse_error_reports_line_of_bad_tuple():
    G = make_complete(IndexComplex.partite(2, 2), [2, 2])
    lines = _lines(G)
    n = next(i for i, ln in enumerate(lines) if ln.startswith("part 3"))
    lines[n + 1] = "0 7"
    with pytest.raises(ParseError) as err:
        from_text("\n".join(lines))
    assert err.value.line == n + 2
    assert f"line {n + 2}" in str(err.value)


def test_parse_error_on_header_and_integers():
    with pytest.raises(ParseError) as err:
        from_text("not a complex\n")
    assert err.value.line == 1
    G = make_complete(IndexComplex.partite(2, 2), [2, 2])
    lines = _lines(G)
    lines[1] = "r two"
    with pytest.raises(ParseError) as err:
        from_text("\n".join(lines))
    assert err.value.line == 2


def test_parse_error_on_truncated_input():
    text = to_text(make_complete(IndexComplex.partite(2, 2), [2, 2]))
    with pytest.raises(ParseError):
        from_text(text.replace("end\n", ""))


def test_inconsistent_copy_table_is_a_parse_error():
    G = make_complete(IndexComplex.partite(2, 2), [2, 2])
    lines = _lines(G)
    n = next(i for i, ln in enumerate(lines) if ln.startswith("copy 3"))
    lines[n] = "copy 3 0,1 -:2 0:1 1:1 0,1:3"
    with pytest.raises(ParseError) as err:
        from_text("\n".join(lines))
    assert "copy table" in str(err.value)


def test_json_rejects_unknown_format():
    G = make_complete(IndexComplex.partite(2, 2), [2, 2])
    data = json.loads(to_json(G))
    data["format"] = "other"
    with pytest.raises(ComplexError):
        from_json(json.dumps(data))


def test_restriction_round_trip():
    gamma = {((0, 1),): np.array([True, False, True]), ((1, 0), (2, 2)): np.eye(3, dtype=bool)}
    back = gamma_from_json_obj(json.loads(json.dumps(gamma_to_json_obj(gamma))))
    assert set(back) == set(gamma)
    for key in gamma:
        assert np.array_equal(back[key], gamma[key])
    with pytest.raises(ComplexError):
        gamma_from_json_obj([{"simplex": [[0, 1]]}])
