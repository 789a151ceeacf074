import numpy as np
import pytest

from grf import (
    ConfigError,
    FeatureSchema,
    FernModel,
    GenerationStrategy,
    InformationSystem,
    NullModel,
    Pivot,
    SharpenerConfig,
    ThresholdRule,
    TreeModel,
    predict_sharpener,
    train_fern,
    train_null,
    train_tree,
    train_trunk,
)
from grf.sharpener import TreeLeaf
from helpers import blobs, continuous, mixed_random

OPT_ALL = GenerationStrategy("optimised", m_try=0)
RANDOM = GenerationStrategy("random", m_try=0)


def xor_data():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 3, dtype=float)
    y = (X[:, 0] != X[:, 1]).astype(int)
    return InformationSystem(continuous(2), X, y, ("even", "odd"))


def test_pure_bag_gives_single_leaf(tiny):
    t = train_tree(tiny, [0, 1, 1, 0], SharpenerConfig(strategy=OPT_ALL), np.random.default_rng(0))
    assert len(t.nodes) == 1
    np.testing.assert_array_equal(t.nodes[0].dist, [1.0, 0.0])


def test_tiny_tree_is_one_split(tiny):
    t = train_tree(tiny, range(4), SharpenerConfig(strategy=OPT_ALL), np.random.default_rng(0))
    assert t.depth == 1
    assert t.nodes[0].pivot == Pivot(0, ThresholdRule(2.5))
    np.testing.assert_array_equal(t.predict_proba(tiny.X), [[1, 0], [1, 0], [0, 1], [0, 1]])


def test_depth_cap_on_xor():
    with pytest.raises(ConfigError):
        SharpenerConfig(max_depth=0)
    d = xor_data()
    t = train_tree(d, range(12), SharpenerConfig(strategy=OPT_ALL, max_depth=1), np.random.default_rng(0))
    assert t.depth == 1
    for leaf in (n for n in t.nodes if isinstance(n, TreeLeaf)):
        np.testing.assert_array_equal(leaf.dist, [0.5, 0.5])
    full = train_tree(d, range(12), SharpenerConfig(strategy=OPT_ALL), np.random.default_rng(0))
    assert np.array_equal(np.argmax(full.predict_proba(d.X), axis=1), d.y)


def test_min_node_size_stops_growth():
    d = blobs(4, n=60)
    t = train_tree(d, range(60), SharpenerConfig(min_node_size=30), np.random.default_rng(0))

    def reach(i):
        n = t.nodes[i]
        return n.support if isinstance(n, TreeLeaf) else reach(n.left) + reach(n.right)

    splits = [i for i, n in enumerate(t.nodes) if not isinstance(n, TreeLeaf)]
    assert splits
    assert all(reach(i) >= 30 for i in splits)


@pytest.mark.parametrize("seed", range(5))
def test_tree_routing_partitions_the_bag(seed):
    rng = np.random.default_rng(seed)
    d = mixed_random(rng, 40, 4, n_classes=3)
    bag = rng.integers(0, 40, 40)
    t = train_tree(d, bag, SharpenerConfig(strategy=GenerationStrategy(m_try=2)), rng)
    leaves = t.leaf_ids(d.X[bag])
    support = {i: n.support for i, n in enumerate(t.nodes) if isinstance(n, TreeLeaf)}
    assert sorted(support.values()) == sorted(np.bincount(leaves)[list(support)].tolist())
    assert sum(support.values()) == bag.size


def test_fern_leaf_index_and_smoothing():
    X = np.array([[1.0, 0.0, 1.0]])
    f = FernModel((Pivot(0, ThresholdRule(0.5)), Pivot(1, ThresholdRule(0.5)), Pivot(2, ThresholdRule(0.5))), np.zeros((8, 2)))
    assert f.leaf_ids(X)[0] == 0b101

    d = InformationSystem(continuous(2), [[0, 0], [1, 0], [0, 0]], [0, 1, 0], ("a", "b"))
    fern = FernModel.build(d, range(3), [Pivot(0, ThresholdRule(0.5)), Pivot(1, ThresholdRule(0.5))], eps=1.0)
    # leaf 0: two class-a objects; leaf 1: one class-b; leaves 2, 3 empty
    np.testing.assert_allclose(fern.leaves, [[0.75, 0.25], [1 / 3, 2 / 3], [0.5, 0.5], [0.5, 0.5]])
    assert np.array_equal(predict_sharpener(fern, d, 1), fern.leaves[1])


def test_fern_truncates_when_no_pivot_exists():
    d = InformationSystem(continuous(1), [[1.0]] * 4, [0, 1, 0, 1], ("a", "b"))
    fern = train_fern(d, range(4), SharpenerConfig("fern", RANDOM, fern_depth=3), np.random.default_rng(0))
    assert fern.depth == 0 and fern.leaves.shape == (1, 2)
    np.testing.assert_allclose(fern.predict_proba(d.X), [[0.5, 0.5]] * 4)


@pytest.mark.parametrize("seed", range(5))
def test_fern_order_independence(seed):
    rng = np.random.default_rng(seed)
    d = mixed_random(rng, 50, 5)
    fern = train_fern(d, range(50), SharpenerConfig("fern", RANDOM, fern_depth=6), rng)
    order = rng.permutation(fern.depth)
    np.testing.assert_array_equal(fern.leaf_ids(d.X), fern.leaf_ids(d.X, order=order))


def test_fern_depth_bounds():
    with pytest.raises(ConfigError):
        SharpenerConfig("fern", fern_depth=0)
    with pytest.raises(ConfigError):
        SharpenerConfig("fern", fern_depth=25)


def test_trunk_on_separable_line():
    X = np.array([[1.0], [2.0], [3.0], [6.0], [7.0], [8.0]])
    d = InformationSystem(continuous(1), X, [0, 0, 0, 1, 1, 1], ("A", "B"))
    t = train_trunk(d, range(6), SharpenerConfig("trunk", OPT_ALL), np.random.default_rng(0))
    assert len(t.segments) == 1
    assert (t.leaf_ids(d.X) < 2).all()  # fallback never consulted
    assert np.argmax(t.predict_proba(d.X), axis=1).tolist() == d.y.tolist()


def test_trunk_stops_when_segment_decides_nothing():
    # both classes share identical rows, so every segment is ambiguous
    X = np.array([[0.0], [1.0], [0.0], [1.0]])
    d = InformationSystem(continuous(1), X, [0, 0, 1, 1], ("A", "B"))
    t = train_trunk(d, range(4), SharpenerConfig("trunk", OPT_ALL), np.random.default_rng(0))
    for seg in t.segments:
        assert (seg.verdicts(d.X) != 2).any()
    np.testing.assert_allclose(t.fallback, [0.5, 0.5])


def test_trunk_rejects_multiclass_and_bad_config():
    d = InformationSystem(continuous(1), [[0.0], [1.0], [2.0]], [0, 1, 2], ("a", "b", "c"))
    with pytest.raises(ConfigError, match="binary"):
        train_trunk(d, range(3), SharpenerConfig("trunk"), np.random.default_rng(0))
    with pytest.raises(ConfigError):
        SharpenerConfig("trunk", max_segments=0)


@pytest.mark.parametrize("seed", range(5))
def test_trunk_first_answer_wins(seed):
    d = blobs(seed, n=80, shift=1.0)
    t = train_trunk(d, range(80), SharpenerConfig("trunk", GenerationStrategy(m_try=0)), np.random.default_rng(seed))
    ids = t.leaf_ids(d.X)
    P = t.predict_proba(d.X)
    for i in range(80):
        s, v = divmod(int(ids[i]), 2)
        if s < len(t.segments):
            np.testing.assert_array_equal(P[i], t.dists[s][v])
            np.testing.assert_array_equal(t.truncated(s + 1).predict_proba(d.X[i : i + 1])[0], P[i])
        else:
            np.testing.assert_array_equal(P[i], t.fallback)


def test_null_model():
    d = InformationSystem(continuous(1), [[0.0], [0.0], [1.0], [1.0]], [0, 0, 1, 1], ("a", "b"))
    m = train_null(d, range(4), SharpenerConfig("null", OPT_ALL), np.random.default_rng(0))
    np.testing.assert_allclose(m.dist_l, [0.75, 0.25])
    np.testing.assert_allclose(m.dist_r, [0.25, 0.75])
    const = InformationSystem(continuous(1), [[0.0]] * 3, [0, 0, 1], ("a", "b"))
    deg = train_null(const, range(3), SharpenerConfig("null", OPT_ALL), np.random.default_rng(0))
    assert deg.pivot is None
    np.testing.assert_array_equal(deg.dist_l, deg.dist_r)
    np.testing.assert_allclose(deg.dist_l, [0.6, 0.4])


@pytest.mark.parametrize("eps", [0.0, 1.0])
def test_depth_one_identity(eps):
    d = blobs(2, n=50)
    cfg = dict(strategy=OPT_ALL, smoothing=eps)
    rng = np.random.default_rng
    tree = train_tree(d, range(50), SharpenerConfig("tree", max_depth=1, **cfg), rng(0))
    fern = train_fern(d, range(50), SharpenerConfig("fern", fern_depth=1, **cfg), rng(0))
    null = train_null(d, range(50), SharpenerConfig("null", **cfg), rng(0))
    assert tree.nodes[0].pivot == fern.pivots[0] == null.pivot
    a, b, c = tree.predict_proba(d.X), fern.predict_proba(d.X), null.predict_proba(d.X)
    assert np.array_equal(a, b) and np.array_equal(b, c)


@pytest.mark.parametrize("kind", ["tree", "fern", "trunk", "null"])
@pytest.mark.parametrize("pivot", ["optimised", "random", "heuristic"])
def test_models_are_total(kind, pivot):
    rng = np.random.default_rng(7)
    d = mixed_random(rng, 40, 4)
    strat = GenerationStrategy(pivot, k=3, m_try=2)
    model = {"tree": train_tree, "fern": train_fern, "trunk": train_trunk, "null": train_null}[kind](
        d, rng.integers(0, 40, 40), SharpenerConfig(kind, strat, fern_depth=4), rng
    )
    other = mixed_random(np.random.default_rng(99), 200, 4)
    X = np.column_stack([
        other.X[:, j] % len(f.categories) if f.is_categorical else other.X[:, j] * 3
        for j, f in enumerate(d.schema)
    ])
    P = model.predict_proba(X)
    assert P.shape == (200, 2)
    assert np.all(P >= 0) and np.allclose(P.sum(axis=1), 1, atol=1e-9)


def test_stump_helper_matches_trained_tree():
    d = blobs(1, n=30)
    t = train_tree(d, range(30), SharpenerConfig(strategy=OPT_ALL, max_depth=1), np.random.default_rng(0))
    s = TreeModel.stump(d, range(30), t.nodes[0].pivot)
    assert np.array_equal(t.predict_proba(d.X), s.predict_proba(d.X))
    n = NullModel.build(d, range(30), t.nodes[0].pivot, eps=0.0)
    assert np.array_equal(n.predict_proba(d.X), s.predict_proba(d.X))
