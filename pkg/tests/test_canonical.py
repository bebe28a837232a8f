import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockurn.canonical import (
    InitialCompositionError,
    NegativeEntryError,
    ReplacementSpec,
    UnbalancedRowsError,
    block_order,
    canon_matrix_original,
    classify_colors,
    increasing_order,
    increasing_order_violations,
)
from conftest import COUNTEREXAMPLE, NONLEADING, REPEATED_HALF, ZERO_CHAIN
from helpers import block_triangular, random_blocks, scramble, spec


def nx_partition(R):
    """Strongly connected components; singletons without a self-loop are lone."""
    g = nx.DiGraph()
    g.add_nodes_from(range(R.shape[0]))
    g.add_edges_from((int(i), int(j)) for i, j in np.argwhere(R != 0))
    classes, lone = [], []
    for comp in nx.strongly_connected_components(g):
        comp = tuple(sorted(comp))
        if len(comp) == 1 and not g.has_edge(comp[0], comp[0]):
            lone.append(comp[0])
        else:
            classes.append(comp)
    return sorted(classes), sorted(lone)


# --- validation -------------------------------------------------------------


def test_row_sum_is_divided_out():
    s = ReplacementSpec.from_arrays([[2, 0], [1, 1]])
    assert s.row_sum == 2
    np.testing.assert_allclose(s.matrix, [[1, 0], [0.5, 0.5]])
    np.testing.assert_allclose(s.initial, [0.5, 0.5])
    assert not s.matrix.flags.writeable


@pytest.mark.parametrize(
    "matrix, initial, err",
    [
        ([[1, -0.1], [0, 1]], None, NegativeEntryError),
        ([[1, 0], [0, 0.5]], None, UnbalancedRowsError),
        ([[0, 0], [0, 0]], None, UnbalancedRowsError),
        ([[1, 0], [0, 1]], [0.5, 0.6], InitialCompositionError),
        ([[1, 0], [0, 1]], [1.0, 0.0], InitialCompositionError),
        ([[1, 0], [0, 1]], [1.0], InitialCompositionError),
    ],
)
def test_validation_errors(matrix, initial, err):
    with pytest.raises(err):
        ReplacementSpec.from_arrays(matrix, initial)


# --- classes and block order -------------------------------------------------


def test_classify_examples():
    assert classify_colors(spec(ZERO_CHAIN)).classes == ((2,),)
    assert classify_colors(spec(ZERO_CHAIN)).lone == (0, 1)
    cc = classify_colors(spec([[0, 1], [1, 0]]))
    assert cc.classes == ((0, 1),) and cc.lone == ()


def test_classify_against_networkx(rng):
    for _ in range(200):
        R = block_triangular(rng, random_blocks(rng))
        R, _ = scramble(rng, R)
        cc = classify_colors(spec(R))
        classes, lone = nx_partition(R)
        assert sorted(cc.classes) == classes
        assert sorted(cc.lone) == lone


def test_canonical_input_keeps_identity():
    for M in (COUNTEREXAMPLE, ZERO_CHAIN, REPEATED_HALF, NONLEADING):
        c = block_order(spec(M))
        assert c.permutation.tolist() == [0, 1, 2]
        assert c.block_sizes == (1, 1, 1)


def test_counterexample_characters():
    c = block_order(spec(COUNTEREXAMPLE))
    assert c.characters == pytest.approx((0.5, 0.5, 1.0))
    assert c.diag_kind == ("irreducible",) * 3


def test_zero_chain_kinds():
    c = block_order(spec(ZERO_CHAIN))
    assert c.diag_kind == ("zero", "zero", "irreducible")
    assert c.eigenpairs[0] is None


def test_scrambled_swap_recovered():
    R = [[0, 0, 1], [0.5, 0.5, 0], [1, 0, 0]]
    c = block_order(spec(R))
    assert c.block_sizes == (1, 2)
    assert sorted(c.block_colors(1).tolist()) == [0, 2]
    assert c.characters == pytest.approx((0.5, 1.0))


def test_vector_permutation_round_trip(rng):
    R, _ = scramble(rng, block_triangular(rng, random_blocks(rng)))
    c = block_order(spec(R))
    v = rng.random(R.shape[0])
    np.testing.assert_array_equal(c.unpermute_vector(c.permute_vector(v)), v)
    np.testing.assert_array_equal(canon_matrix_original(c), spec(R).matrix)


def _power_traces(M, p=6):
    out, P = [], np.eye(M.shape[0])
    for _ in range(p):
        P = P @ M
        out.append(np.trace(P))
    return np.array(out)


def test_round_trip_property_suite(rng):
    for _ in range(500):
        blocks = random_blocks(rng, max_blocks=5, max_size=3)
        R0 = block_triangular(rng, blocks)
        R, _ = scramble(rng, R0)
        c = block_order(spec(R))
        M = c.matrix
        # upper triangular block structure
        bop = c.block_of_position()
        assert not np.any(M[bop[:, None] > bop[None, :]])
        # block multiset recovered: class sizes agree with the construction
        want = sorted(size for size, kind, _ in blocks)
        assert sorted(c.block_sizes) == want
        # similarity preserves spectrum (checked through traces of powers)
        np.testing.assert_allclose(_power_traces(M), _power_traces(R0), atol=1e-9)
        # each diagonal block is irreducible or scalar zero
        for k in range(c.n_blocks):
            Q = c.block(k, k)
            if c.diag_kind[k] == "zero":
                assert Q.shape == (1, 1) and Q[0, 0] == 0
            else:
                reach = np.linalg.matrix_power(np.eye(len(Q)) + (Q != 0), len(Q)) > 0
                assert reach.all()


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_block_order_is_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    R, _ = scramble(rng, block_triangular(rng, random_blocks(rng)))
    R2, _ = scramble(rng, R)
    a, b = block_order(spec(R)), block_order(spec(R2))
    assert sorted(a.characters) == pytest.approx(sorted(b.characters))
    assert sorted(a.block_sizes) == sorted(b.block_sizes)


# --- increasing order and clusters -------------------------------------------


def test_counterexample_clusters():
    cf = increasing_order(block_order(spec(COUNTEREXAMPLE)))
    assert cf.leading_indices == (0, 1, 2)
    assert cf.leading_characters == pytest.approx((0.5, 0.5, 1.0))
    assert cf.orders == (0, 1, 0)
    assert not cf.assumption_a.holds
    assert cf.assumption_a.violations == (1,)


def test_repeated_half_satisfies_a():
    cf = increasing_order(block_order(spec(REPEATED_HALF)))
    assert cf.orders == (0, 1, 0)
    assert cf.assumption_a.holds


def test_nonleading_cluster():
    cf = increasing_order(block_order(spec(NONLEADING)))
    assert cf.leading_indices == (0, 2)
    assert list(cf.cluster_blocks(0)) == [0, 1]
    assert cf.cluster_of_block().tolist() == [0, 0, 1]


def test_zero_chain_layers():
    cf = increasing_order(block_order(spec(ZERO_CHAIN)))
    assert cf.base.block_sizes == (1, 1, 1)
    assert cf.leading_characters == pytest.approx((0, 0, 1))
    assert cf.orders == (0, 1, 0)


def test_parallel_zero_colors_coalesce():
    # colors 0 and 1 are both lone with no edge between them
    R = [[0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5]]
    cf = increasing_order(block_order(spec(R)))
    assert cf.base.block_sizes[0] == 2
    assert cf.base.diag_kind[0] == "zero"


def test_increasing_order_property_suite(rng):
    for _ in range(200):
        R, _ = scramble(rng, block_triangular(rng, random_blocks(rng)))
        cf = increasing_order(block_order(spec(R)))
        assert increasing_order_violations(cf) == []
        lam = cf.leading_characters
        assert all(b >= a - 1e-9 for a, b in zip(lam, lam[1:]))
        assert lam[-1] == pytest.approx(1.0, abs=1e-9)
        assert sorted(cf.base.permutation.tolist()) == list(range(R.shape[0]))
