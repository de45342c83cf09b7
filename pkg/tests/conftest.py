import numpy as np
import pytest

from stagecause.model import StagedTree, VariableMeta, binary_variables


@pytest.fixture
def three_binary():
    return binary_variables(3)


@pytest.fixture
def pair_123_132(three_binary):
    """Two stagings of the same three binary variables, orders (X1,X2,X3)
    and (X1,X3,X2).

    t: root; X2's two contexts share one stage; X3's contexts (0,0) and
       (0,1) share a stage while (1,0) and (1,1) are separate.
    s: root; X3's two contexts are separate; X2's contexts pair up as
       {(0,0),(1,1)} and {(0,1),(1,0)}.
    """
    vs = three_binary
    t = StagedTree(
        vs,
        (0, 1, 2),
        (np.array([0]), np.array([0, 0]), np.array([0, 0, 1, 2])),
    )
    s = StagedTree(
        (vs[0], vs[2], vs[1]),
        (0, 2, 1),
        (np.array([0]), np.array([0, 1]), np.array([0, 1, 1, 0])),
    )
    return t, s


@pytest.fixture
def tree_t_params(pair_123_132):
    t, _ = pair_123_132
    params = (
        np.array([[0.5, 0.5]]),
        np.array([[0.3, 0.7]]),
        np.array([[0.2, 0.8], [0.6, 0.4], [0.9, 0.1]]),
    )
    return t.with_params(params, interior=True)


@pytest.fixture
def ternary_cause_tree():
    """Bivariate tree over (X2, X1) where X2 is ternary and its two upper
    levels share the X1 distribution; the reverse order needs the
    saturated model."""
    x1 = VariableMeta("X1", ("0", "1"))
    x2 = VariableMeta("X2", ("0", "1", "2"))
    return StagedTree(
        (x2, x1),
        (1, 0),
        (np.array([0]), np.array([0, 1, 1])),
        (np.array([[0.5, 0.3, 0.2]]), np.array([[0.2, 0.8], [0.7, 0.3]])),
        interior=True,
    )
