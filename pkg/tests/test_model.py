import json

import numpy as np
import pytest

from ssadmit.errors import ModelError
from ssadmit.model import Model, load_model, model_to_dict, save_model, validate


def test_example1_loads(ex1):
    assert ex1.kind == "continuous" and ex1.n == 2 and ex1.N == 2 and ex1.r == 1


def test_example2_leontief_conversion(ex2):
    assert ex2.kind == "discrete"
    assert np.allclose(ex2.A[0], [[1.1, 0.1], [-0.3, 0.9]])
    assert np.allclose(ex2.A[1], [[1.0, 0.1], [-0.4, 0.5]])


def test_round_trip(ex1, ex2):
    for m in (ex1, ex2):
        back = load_model(save_model(m))
        assert back.kind == m.kind and back.r0 == m.r0
        for a, b in zip((m.E, *m.A, *m.C, m.transition), (back.E, *back.A, *back.C, back.transition)):
            assert np.array_equal(a, b)


def test_r0_is_one_based_in_files(ex1):
    d = model_to_dict(ex1)
    d["r0"] = 2
    m = load_model(json.dumps(d))
    assert m.r0 == 1
    assert model_to_dict(m)["r0"] == 2
    d["r0"] = 0
    with pytest.raises(ModelError):
        load_model(json.dumps(d))


@pytest.mark.parametrize("patch", [
    {"E": [[1, 0], [0, 0], [0, 0]]},
    {"kind": "hybrid"},
    {"G": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]},
    {"C": [[[0, 0], [0, 0]]]},
    {"transition": [[-1, 1]]},
    {"A": [[[1, 2, 3], [4, 5, 6]], [[1, 0], [0, 1]]]},
])
def test_malformed_inputs(ex1, patch):
    d = model_to_dict(ex1)
    d.update(patch)
    with pytest.raises(ModelError):
        load_model(json.dumps(d))


def test_invalid_json():
    with pytest.raises(ModelError):
        load_model("{not json")


def test_validate_examples(ex1):
    rep = validate(ex1)
    assert rep.assumption1 == [True, True] and rep.regular == [True, True] and rep.ok
    assert validate(ex1).to_dict() == rep.to_dict()


def test_validate_assumption1_failure():
    m = Model("continuous", np.diag([1.0, 0.0]), (np.eye(2),), (np.array([[0.0, 0.0], [1.0, 0.0]]),),
              np.zeros((1, 1)))
    assert validate(m).assumption1 == [False]
    zero_c = Model("continuous", np.diag([1.0, 0.0]), (np.eye(2),), (np.zeros((2, 2)),), np.zeros((1, 1)))
    assert validate(zero_c).assumption1 == [True]


def test_validate_generator_rows():
    bad = Model("continuous", np.eye(1), (np.eye(1),) * 2, (np.zeros((1, 1)),) * 2,
                np.array([[-1.0, 0.5], [1.0, -1.0]]))
    rep = validate(bad)
    assert not rep.transition_ok and not rep.ok
    bad_d = Model("discrete", np.eye(1), (np.eye(1),) * 2, (np.zeros((1, 1)),) * 2,
                  np.array([[0.5, 0.6], [0.5, 0.5]]))
    assert not validate(bad_d).transition_ok
