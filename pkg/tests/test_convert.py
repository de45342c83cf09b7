import numpy as np
import pytest

from stagecause.convert import (
    consensus_pdag,
    dag_to_staged_tree,
    staged_tree_to_minimal_dag,
)
from stagecause.model import Dag, StagedTree, independent_staging, uniform_variables
from stagecause.probability import joint_table
from stagecause.randgen import enumerate_dags


def test_empty_dag_embeds_as_independence():
    g = Dag(3, frozenset())
    tree = dag_to_staged_tree(g, (0, 1, 2), 2)
    assert [tree.n_stages(i) for i in range(3)] == [1, 1, 1]


def test_complete_dag_embeds_saturated():
    g = Dag(3, frozenset({(0, 1), (0, 2), (1, 2)}))
    tree = dag_to_staged_tree(g, (0, 1, 2), 2)
    assert [tree.n_stages(i) for i in range(3)] == [1, 2, 4]


def test_chain_groups_by_middle_variable():
    g = Dag(3, frozenset({(0, 1), (1, 2)}))
    tree = dag_to_staged_tree(g, (0, 1, 2), 2)
    assert tree.staging[2].tolist() == [0, 1, 0, 1]
    # conditional independence of the implied model: X3 given X2 does not
    # depend on X1
    rng = np.random.default_rng(0)
    params = tuple(
        rng.dirichlet(np.ones(2), size=tree.n_stages(i)) for i in range(3)
    )
    pt = tree.with_params(params)
    table = joint_table(pt)
    for x2 in (0, 1):
        cond = table[:, x2, :] / table[:, x2, :].sum(axis=1, keepdims=True)
        assert np.allclose(cond[0], cond[1])


def test_parental_stage_counts():
    g = Dag(4, frozenset({(0, 2), (1, 2), (2, 3)}))
    tree = dag_to_staged_tree(g, (0, 1, 2, 3), levels=(2, 3, 2, 2))
    assert tree.n_stages(2) == 2 * 3
    assert tree.n_stages(3) == 2


def test_non_topological_order_rejected():
    g = Dag(2, frozenset({(0, 1)}))
    with pytest.raises(ValueError, match="topological"):
        dag_to_staged_tree(g, (1, 0), 2)


def test_minimal_dag_of_independence_is_empty():
    vs = uniform_variables(3, 2)
    tree = StagedTree(vs, (0, 1, 2), independent_staging((2, 2, 2)))
    assert staged_tree_to_minimal_dag(tree).edges == frozenset()


def test_minimal_dag_of_fixture_tree(pair_123_132):
    t, _ = pair_123_132
    dag = staged_tree_to_minimal_dag(t)
    assert dag.edges == frozenset({(0, 2), (1, 2)})


def test_round_trip_all_three_node_dags():
    for edges in enumerate_dags(3):
        g = Dag(3, edges)
        order = g.topological_order()
        tree = dag_to_staged_tree(g, order, 2)
        assert staged_tree_to_minimal_dag(tree).edges == g.edges


def test_round_trip_random_orders_and_levels():
    rng = np.random.default_rng(1)
    dags = enumerate_dags(3)
    for _ in range(30):
        g = Dag(3, dags[int(rng.integers(len(dags)))])
        # random topological order
        orders = [o for o in __import__("itertools").permutations(range(3))
                  if g.is_topological(o)]
        order = orders[int(rng.integers(len(orders)))]
        levels = [int(rng.integers(2, 4)) for _ in range(3)]
        tree = dag_to_staged_tree(g, order, levels)
        assert staged_tree_to_minimal_dag(tree).edges == g.edges


def test_consensus_single_dag_identity():
    g = Dag(3, frozenset({(0, 1), (2, 1)}))
    pd = consensus_pdag([g])
    assert pd.directed == g.edges
    assert pd.undirected == frozenset()


def test_consensus_opposed_edges_become_undirected():
    a = Dag(2, frozenset({(0, 1)}))
    b = Dag(2, frozenset({(1, 0)}))
    pd = consensus_pdag([a, b])
    assert pd.directed == frozenset()
    assert pd.undirected == frozenset({(0, 1)})


def test_consensus_missing_edge_drops_pair():
    a = Dag(2, frozenset({(0, 1)}))
    b = Dag(2, frozenset())
    pd = consensus_pdag([a, b])
    assert pd.directed == frozenset()
    assert pd.undirected == frozenset()


def test_consensus_of_copies_is_same_dag():
    g = Dag(4, frozenset({(0, 1), (1, 3), (2, 3)}))
    pd = consensus_pdag([g] * 5)
    assert pd.directed == g.edges
    assert pd.undirected == frozenset()


def test_consensus_requires_nonempty():
    with pytest.raises(ValueError):
        consensus_pdag([])
