import numpy as np
import pytest

from conftest import random_model, scalar_model
from ssadmit import linalg
from ssadmit.errors import ModelError
from ssadmit.lift import lift, lift_continuous, lift_discrete, moment_rate
from ssadmit.model import Model


def test_example1_lift(ex1):
    ls = lift_continuous(ex1)
    assert ls.dim == 6
    assert np.array_equal(ls.Escript, np.diag([1.0, 0, 0, 1, 0, 0]))
    assert linalg.rank(ls.Escript) == 2


def test_example2_lift(ex2):
    ls = lift_discrete(ex2)
    assert ls.dim == 6 and linalg.rank(ls.Escript) == 2


def test_scalar_lifts():
    ls = lift(scalar_model("continuous", -0.7, 0.3))
    assert ls.Escript[0, 0] == 1.0 and ls.Ascript[0, 0] == pytest.approx(2 * -0.7 + 0.09)
    ls = lift(scalar_model("discrete", 0.6, 0.5))
    assert ls.Ascript[0, 0] == pytest.approx(0.36 + 0.25)


def test_kind_mismatch(ex1, ex2):
    with pytest.raises(ModelError):
        lift_continuous(ex2)
    with pytest.raises(ModelError):
        lift_discrete(ex1)


def test_decoupled_chain_gives_block_diagonal_lift():
    rng = np.random.default_rng(30)
    m = random_model(rng, "discrete", n=2, N=2, r=1)
    m = Model("discrete", m.E, m.A, m.C, np.eye(2))
    As = lift_discrete(m).Ascript
    assert not As[:3, 3:].any() and not As[3:, :3].any()


def _stack_svec(mats):
    return np.concatenate([linalg.svec(x) for x in mats])


@pytest.mark.parametrize("coupling", ["adjoint", "as-paper"])
def test_moment_equation_consistency(coupling):
    rng = np.random.default_rng(31)
    for _ in range(50):
        m = random_model(rng, "continuous")
        ls = lift_continuous(m, coupling)
        X = []
        for _ in range(m.N):
            x = rng.standard_normal((m.n, m.n))
            X.append(x + x.T)
        rate = moment_rate(m, X, coupling)
        H = linalg.dup_matrix(m.n, m.N)
        lhs = ls.Ascript @ _stack_svec(X)
        rhs = H.T @ np.concatenate([linalg.vec_row(y) for y in rate])
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(rhs))


def test_couplings_differ_for_asymmetric_generator(ex1):
    a = lift_continuous(ex1, "adjoint").Ascript
    b = lift_continuous(ex1, "as-paper").Ascript
    assert not np.allclose(a, b)


def test_lift_dimension_and_rank():
    rng = np.random.default_rng(32)
    for _ in range(30):
        kind = ["continuous", "discrete"][int(rng.integers(2))]
        m = random_model(rng, kind)
        ls = lift(m)
        assert ls.dim == m.n * (m.n + 1) // 2 * m.N
        r = m.r
        assert linalg.rank(ls.Escript) == m.N * r * (r + 1) // 2


def test_lifted_E_symmetric_only_for_symmetric_E(ex1, ex2):
    assert np.allclose(lift(ex1).Escript, lift(ex1).Escript.T)
    Es = lift(ex2).Escript
    assert not np.allclose(Es, Es.T)
    assert np.allclose(Es[0, :3], [0.04, 0.12, 0.09])


def test_bare_continuous_lift_is_not_regular_for_singular_E(ex1):
    ls = lift_continuous(ex1)
    assert not linalg.pencil_regular(ls.Escript, ls.Ascript)
    closed = lift_continuous(ex1, closure=True)
    assert linalg.pencil_regular(closed.Escript, closed.Ascript)
    assert np.array_equal(closed.Escript, ls.Escript)
    eigs = np.sort(linalg.pencil_finite_eigs_by_fit(closed.Escript, closed.Ascript).real)
    assert eigs == pytest.approx([-2.8448, -1.0176], abs=1e-4)


def test_closure_is_noop_for_full_rank_E():
    rng = np.random.default_rng(33)
    m = random_model(rng, "continuous", n=3, N=2, r=3)
    assert np.allclose(lift_continuous(m).Ascript, lift_continuous(m, closure=True).Ascript)


def test_lift_round_trips_as_model(ex2):
    lm = lift(ex2).as_model()
    assert lm.N == 1 and lm.n == 6 and lm.kind == "discrete"
    assert not lm.C[0].any()
