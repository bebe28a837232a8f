"""Block upper triangular canonical forms of balanced replacement matrices.

Two reductions are provided. ``block_order`` permutes colors so that every
diagonal block is irreducible or the 1x1 zero; ``increasing_order`` then
regroups blocks into clusters headed by running maxima of the block
characters, coalescing initial zero colors into layered zero blocks.

Zero tests on matrix entries are exact (``== 0``). The matrix is user data, so
structural zeros must be encoded as exact zeros. Characters are computed in
floating point and compared with ``CHAR_TOL``.

All indices are 0-based.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import PFEigenpair, as_matrix, pf_eigenpair

CHAR_TOL = 1e-9
ROW_SUM_TOL = 1e-9
INITIAL_SUM_TOL = 1e-12


class SpecError(ValueError):
    """Invalid replacement specification."""


class NegativeEntryError(SpecError):
    pass


class UnbalancedRowsError(SpecError):
    pass


class InitialCompositionError(SpecError):
    pass


@dataclass(frozen=True)
class ReplacementSpec:
    """Validated replacement matrix (rows summing to one) and initial composition.

    ``row_sum`` records the common row sum of the matrix as given, before it
    was divided out.
    """

    matrix: np.ndarray
    initial: np.ndarray
    row_sum: float = 1.0

    @property
    def n_colors(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_arrays(cls, matrix, initial=None) -> "ReplacementSpec":
        try:
            R = as_matrix(matrix)
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
        D = R.shape[0]
        if D == 0:
            raise SpecError("empty matrix")
        if np.any(R < 0):
            i, j = np.argwhere(R < 0)[0]
            raise NegativeEntryError(f"negative entry r[{i},{j}] = {R[i, j]}")
        sums = R.sum(axis=1)
        common = float(sums.mean())
        if common <= 0:
            raise UnbalancedRowsError("row sums must be positive")
        spread = float(np.max(np.abs(sums - common)))
        if spread > ROW_SUM_TOL * max(1.0, common):
            raise UnbalancedRowsError(
                f"rows are not balanced: row sums range over [{sums.min()}, {sums.max()}]"
            )
        R = R / common

        if initial is None:
            c0 = np.full(D, 1.0 / D)
        else:
            c0 = np.array(initial, dtype=float).ravel()
            if c0.shape != (D,):
                raise InitialCompositionError(f"initial composition must have {D} entries")
            if not np.all(np.isfinite(c0)) or np.any(c0 <= 0):
                raise InitialCompositionError("initial composition must be strictly positive")
            if abs(c0.sum() - 1.0) > INITIAL_SUM_TOL:
                raise InitialCompositionError(
                    f"initial composition must sum to 1 (got {c0.sum()!r})"
                )
        R.setflags(write=False)
        c0.setflags(write=False)
        return cls(matrix=R, initial=c0, row_sum=common)


@dataclass(frozen=True)
class ColorClasses:
    classes: tuple[tuple[int, ...], ...]
    lone: tuple[int, ...]

    @property
    def partition(self) -> list[tuple[int, ...]]:
        parts = list(self.classes) + [(c,) for c in self.lone]
        return sorted(parts, key=min)


@dataclass(frozen=True)
class CanonicalForm:
    """Permuted matrix with block structure.

    ``permutation[p]`` is the original color at canonical position ``p``.
    ``eigenpairs[k]`` is ``None`` for zero blocks.
    """

    permutation: np.ndarray
    block_sizes: tuple[int, ...]
    diag_kind: tuple[str, ...]
    characters: tuple[float, ...]
    matrix: np.ndarray
    eigenpairs: tuple[PFEigenpair | None, ...] = field(repr=False)

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.block_sizes)])

    def span(self, k: int) -> slice:
        off = self.offsets
        return slice(int(off[k]), int(off[k + 1]))

    def block(self, k: int, l: int) -> np.ndarray:
        return self.matrix[self.span(k), self.span(l)]

    def block_colors(self, k: int) -> np.ndarray:
        return self.permutation[self.span(k)]

    def block_of_position(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_blocks), self.block_sizes)

    def coupled(self, m: int, k: int) -> bool:
        return bool(np.any(self.block(m, k) != 0))

    def permute_vector(self, v) -> np.ndarray:
        """Original color order -> canonical order."""
        return np.asarray(v)[..., self.permutation]

    def unpermute_vector(self, v) -> np.ndarray:
        """Canonical order -> original color order."""
        v = np.asarray(v)
        out = np.empty_like(v)
        out[..., self.permutation] = v
        return out


@dataclass(frozen=True)
class AssumptionA:
    holds: bool
    violations: tuple[int, ...] = ()


@dataclass(frozen=True)
class ClusterForm:
    """Increasing-order form with its cluster structure.

    ``leading_indices[j]`` is the block heading cluster ``j``; the cluster runs
    up to (not including) the next leading index.
    """

    base: CanonicalForm
    leading_indices: tuple[int, ...]
    leading_characters: tuple[float, ...]
    orders: tuple[int, ...]
    assumption_a: AssumptionA = AssumptionA(True)

    @property
    def n_clusters(self) -> int:
        return len(self.leading_indices)

    def cluster_blocks(self, j: int) -> range:
        stop = (
            self.leading_indices[j + 1] if j + 1 < self.n_clusters else self.base.n_blocks
        )
        return range(self.leading_indices[j], stop)

    def cluster_of_block(self) -> np.ndarray:
        out = np.empty(self.base.n_blocks, dtype=int)
        for j in range(self.n_clusters):
            out[list(self.cluster_blocks(j))] = j
        return out


def _support_closure(R: np.ndarray) -> np.ndarray:
    # reach[i, j]: some path of length >= 1 from i to j (Warshall).
    reach = R != 0
    for k in range(reach.shape[0]):
        reach |= reach[:, k : k + 1] & reach[k : k + 1, :]
    return reach


def classify_colors(spec: ReplacementSpec) -> ColorClasses:
    """Communicating classes of the support digraph, plus lone colors."""
    reach = _support_closure(spec.matrix)
    D = spec.n_colors
    seen: set[int] = set()
    classes = []
    lone = []
    for i in range(D):
        if i in seen:
            continue
        if not reach[i, i]:
            lone.append(i)
            seen.add(i)
            continue
        cls = tuple(j for j in range(D) if reach[i, j] and reach[j, i])
        seen.update(cls)
        classes.append(cls)
    return ColorClasses(classes=tuple(classes), lone=tuple(lone))


def _character(Q: np.ndarray) -> tuple[str, float, PFEigenpair | None]:
    if Q.shape == (1, 1) and Q[0, 0] == 0:
        return "zero", 0.0, None
    if not np.any(Q != 0):
        return "zero", 0.0, None
    eig = pf_eigenpair(Q)
    return "irreducible", eig.value, eig


def _assemble(
    R: np.ndarray, blocks: list[tuple[int, ...]], eigs: dict | None = None
) -> CanonicalForm:
    perm = np.array([c for b in blocks for c in b], dtype=int)
    M = R[np.ix_(perm, perm)]
    kinds, chars, pairs = [], [], []
    off = 0
    for b in blocks:
        key = tuple(b)
        if eigs is not None and key in eigs:
            kind, mu, eig = eigs[key]
        else:
            kind, mu, eig = _character(M[off : off + len(b), off : off + len(b)])
        kinds.append(kind)
        chars.append(mu)
        pairs.append(eig)
        off += len(b)
    M.setflags(write=False)
    perm.setflags(write=False)
    return CanonicalForm(
        permutation=perm,
        block_sizes=tuple(len(b) for b in blocks),
        diag_kind=tuple(kinds),
        characters=tuple(chars),
        matrix=M,
        eigenpairs=tuple(pairs),
    )


def block_order(spec: ReplacementSpec) -> CanonicalForm:
    """Topologically sort color classes into block upper triangular form.

    Ties are broken by the smallest original color in each class, so an input
    that is already canonical comes back with the identity permutation.
    """
    R = spec.matrix
    parts = classify_colors(spec).partition
    owner = np.empty(spec.n_colors, dtype=int)
    for idx, part in enumerate(parts):
        owner[list(part)] = idx
    succ: list[set[int]] = [set() for _ in parts]
    indeg = [0] * len(parts)
    for i, j in np.argwhere(R != 0):
        a, b = owner[i], owner[j]
        if a != b and b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    heap = [(min(parts[k]), k) for k in range(len(parts)) if indeg[k] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, k = heapq.heappop(heap)
        order.append(k)
        for b in succ[k]:
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, (min(parts[b]), b))
    if len(order) != len(parts):
        raise RuntimeError("cycle among distinct classes; class decomposition is inconsistent")
    return _assemble(R, [tuple(sorted(parts[k])) for k in order])


def _block_graph(canon: CanonicalForm) -> list[set[int]]:
    preds: list[set[int]] = [set() for _ in range(canon.n_blocks)]
    for k in range(canon.n_blocks):
        for m in range(k):
            if canon.coupled(m, k):
                preds[k].add(m)
    return preds


def _ancestor_max(canon: CanonicalForm, preds: list[set[int]]) -> list[float]:
    # Blocks are already topologically sorted, so one forward pass suffices.
    alpha = list(canon.characters)
    for k in range(canon.n_blocks):
        for m in preds[k]:
            alpha[k] = max(alpha[k], alpha[m])
    return alpha


def _level_groups(values: list[float], tol: float) -> tuple[list[int], list[float]]:
    """Assign each value to a tolerance-merged level; return (level index, level value)."""
    order = sorted(range(len(values)), key=lambda k: values[k])
    levels: list[float] = []
    label = [0] * len(values)
    for k in order:
        if not levels or values[k] - levels[-1] > tol:
            levels.append(values[k])
        label[k] = len(levels) - 1
    return label, levels


def _is_leader_by_character(mu: float, level: float, tol: float) -> bool:
    return mu >= level - tol


def increasing_order(canon: CanonicalForm, tol: float = CHAR_TOL) -> ClusterForm:
    """Rearrange a canonical form into increasing order and find its clusters.

    Step one sorts blocks by the largest character among their ancestors and,
    within one such level, keeps each non-leading block inside a cluster that
    feeds it. Step two layers the initial zero colors so that each layer is fed
    column-wise by the one before it.
    """
    preds = _block_graph(canon)
    reach_alpha = _ancestor_max(canon, preds)
    level_of, level_values = _level_groups(reach_alpha, tol)
    key = [int(np.min(canon.block_colors(k))) for k in range(canon.n_blocks)]

    placed: set[int] = set()
    order: list[int] = []
    for lv, lv_value in enumerate(level_values):
        members = [k for k in range(canon.n_blocks) if level_of[k] == lv]
        leaders = {k for k in members if _is_leader_by_character(canon.characters[k], lv_value, tol)}
        current: set[int] = set()
        remaining = set(members)
        while remaining:
            ready = [k for k in remaining if preds[k] <= placed]
            grow = [k for k in ready if k not in leaders and preds[k] & current]
            if grow:
                k = min(grow, key=key.__getitem__)
            else:
                heads = [k for k in ready if k in leaders]
                if not heads:
                    raise RuntimeError("no admissible block; cluster construction is inconsistent")
                k = min(heads, key=key.__getitem__)
                current = set()
            current.add(k)
            placed.add(k)
            remaining.discard(k)
            order.append(k)

    blocks = [tuple(int(c) for c in canon.block_colors(k)) for k in order]
    eigs = {
        blocks[i]: (canon.diag_kind[k], canon.characters[k], canon.eigenpairs[k])
        for i, k in enumerate(order)
    }

    # Step two: the leading run of zero-character blocks (all lone colors).
    n_zero = 0
    while n_zero < len(order) and level_of[order[n_zero]] == 0 and level_values[0] <= tol:
        n_zero += 1
    if n_zero:
        zero_colors = [b[0] for b in blocks[:n_zero]]
        layers = _zero_layers(canon_matrix_original(canon), zero_colors)
        blocks = [tuple(layer) for layer in layers] + blocks[n_zero:]
        for layer in layers:
            eigs[tuple(layer)] = ("zero", 0.0, None)

    spec_R = canon_matrix_original(canon)
    base = _assemble(spec_R, blocks, eigs)
    cf = _clusters(base, tol)
    return replace(cf, assumption_a=check_assumption_a(cf, tol))


def canon_matrix_original(canon: CanonicalForm) -> np.ndarray:
    """Recover the matrix in original color order."""
    D = canon.matrix.shape[0]
    R = np.empty((D, D))
    R[np.ix_(canon.permutation, canon.permutation)] = canon.matrix
    return R


def _zero_layers(R: np.ndarray, colors: list[int]) -> list[list[int]]:
    # Longest-path layering: a color joins the first layer after all its feeders.
    remaining = set(colors)
    placed: set[int] = set()
    layers = []
    while remaining:
        layer = sorted(
            c for c in remaining if all(R[i, c] == 0 for i in remaining)
        )
        if not layer:
            raise RuntimeError("cycle among lone colors")
        layers.append(layer)
        placed.update(layer)
        remaining.difference_update(layer)
    return layers


def _clusters(base: CanonicalForm, tol: float) -> ClusterForm:
    mu = base.characters
    leading = []
    running = -np.inf
    for k, m in enumerate(mu):
        if m >= running - tol:
            leading.append(k)
            running = max(running, m)
    lam = tuple(mu[i] for i in leading)
    kappa = tuple(
        sum(1 for k in range(i) if abs(mu[k] - mu[i]) <= tol) for i in leading
    )
    return ClusterForm(
        base=base,
        leading_indices=tuple(leading),
        leading_characters=lam,
        orders=kappa,
    )


def check_assumption_a(cf: ClusterForm, tol: float = CHAR_TOL) -> AssumptionA:
    """Coupling from the previous cluster into each repeated positive leader."""
    bad = []
    for j in range(1, cf.n_clusters):
        if cf.leading_characters[j] > tol and cf.orders[j] > 0:
            head = cf.leading_indices[j]
            if not any(cf.base.coupled(m, head) for m in cf.cluster_blocks(j - 1)):
                bad.append(j)
    return AssumptionA(holds=not bad, violations=tuple(bad))


def increasing_order_violations(cf: ClusterForm, tol: float = CHAR_TOL) -> list[str]:
    """List every failed structural condition of the increasing order (empty if none)."""
    base = cf.base
    out = []
    leading = set(cf.leading_indices)
    mu = base.characters
    for k in range(base.n_blocks):
        for l in range(k):
            if np.any(base.block(k, l) != 0):
                out.append(f"block ({k},{l}) below the diagonal is nonzero")
    for j in range(cf.n_clusters):
        lam = cf.leading_characters[j]
        for k in cf.cluster_blocks(j):
            if k in leading:
                continue
            if not mu[k] < lam - tol:
                out.append(f"non-leading block {k} has character {mu[k]} >= {lam}")
            if base.diag_kind[k] == "zero" and base.block_sizes[k] != 1:
                out.append(f"non-leading zero block {k} is not scalar")
            if not any(base.coupled(m, k) for m in range(cf.leading_indices[j], k)):
                out.append(f"non-leading block {k} receives nothing from its cluster")
        if j >= 1 and lam <= tol and cf.orders[j] > 0:
            cols = base.block(cf.leading_indices[j] - 1, cf.leading_indices[j])
            if np.any(np.all(cols == 0, axis=0)):
                out.append(f"zero leader {j} has a column not fed by the previous cluster")
    for k in range(base.n_blocks):
        if base.diag_kind[k] == "zero" and np.any(base.block(k, k) != 0):
            out.append(f"zero block {k} has nonzero diagonal entries")
    if cf.leading_indices[-1] != base.n_blocks - 1:
        out.append("last block does not lead the last cluster")
    return out
