"""Random instance generators shared by the test modules."""
import numpy as np

from blockurn.canonical import ReplacementSpec


def random_irreducible(rng, n, density=0.4, scale=None):
    """Nonnegative irreducible n x n matrix: a random Hamiltonian cycle plus extra entries."""
    Q = np.where(rng.random((n, n)) < density, rng.random((n, n)), 0.0)
    cyc = rng.permutation(n)
    for a, b in zip(cyc, np.roll(cyc, -1)):
        if n == 1:
            Q[a, a] = max(Q[a, a], rng.uniform(0.1, 1.0))
        else:
            Q[a, b] = rng.uniform(0.1, 1.0)
    if scale is not None:
        Q *= scale
    return Q


def balanced_irreducible(rng, n, density=0.4):
    Q = random_irreducible(rng, n, density)
    return Q / Q.sum(axis=1, keepdims=True)


def block_triangular(rng, blocks, coupling=0.5):
    """Balanced block upper triangular matrix.

    ``blocks`` lists ``(size, kind, level)`` per diagonal block, where kind is
    "zero" (size must be 1), "irr" (random irreducible) or "flat" (constant row
    sums ``level``, hence PF eigenvalue exactly ``level``). The last block is
    made balanced. Each row of a non-last block leaks into at least one later
    block so its character stays below one.
    """
    sizes = [b[0] for b in blocks]
    off = np.concatenate([[0], np.cumsum(sizes)])
    D = int(off[-1])
    R = np.zeros((D, D))
    K = len(blocks)
    for k, (size, kind, level) in enumerate(blocks):
        s = slice(off[k], off[k + 1])
        if k == K - 1:
            R[s, s] = balanced_irreducible(rng, size)
            break
        later = np.arange(off[k + 1], D)
        for i in range(off[k], off[k + 1]):
            mask = rng.random(len(later)) < coupling
            mask[rng.integers(len(later))] = True
            R[i, later[mask]] = rng.random(mask.sum()) + 0.05
        leak = R[s, off[k + 1]:].sum(axis=1, keepdims=True)
        if kind == "zero":
            assert size == 1
            R[s, off[k + 1]:] /= leak
        elif kind == "flat":
            Q = random_irreducible(rng, size)
            Q = Q / Q.sum(axis=1, keepdims=True) * level
            R[s, s] = Q
            R[s, off[k + 1]:] *= (1 - level) / leak
        else:
            Q = random_irreducible(rng, size)
            total = rng.uniform(0.2, 0.9)
            Q = Q / Q.sum(axis=1, keepdims=True) * total * rng.uniform(0.5, 1.0, (size, 1))
            R[s, s] = Q
            R[s, off[k + 1]:] *= (1 - Q.sum(axis=1, keepdims=True)) / leak
    return R


def random_blocks(rng, max_blocks=5, max_size=3, levels=(0.25, 0.5, 0.75)):
    K = int(rng.integers(1, max_blocks + 1))
    blocks = []
    for _ in range(K - 1):
        u = rng.random()
        if u < 0.25:
            blocks.append((1, "zero", 0.0))
        elif u < 0.6:
            blocks.append((int(rng.integers(1, max_size + 1)), "flat", float(rng.choice(levels))))
        else:
            blocks.append((int(rng.integers(1, max_size + 1)), "irr", 0.0))
    blocks.append((int(rng.integers(1, max_size + 1)), "irr", 0.0))
    return blocks


def scramble(rng, R):
    """Relabel colors at random; the result S has S[a, b] == R[perm[a], perm[b]]."""
    perm = rng.permutation(R.shape[0])
    return R[np.ix_(perm, perm)], perm


def spec(R, initial=None):
    return ReplacementSpec.from_arrays(R, initial)
