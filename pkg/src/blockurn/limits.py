"""Limit identification for increasing-order replacement matrices.

For block k in cluster j the scaled count C_N^(k) / (N^lam_j log^kappa_j N)
converges. The limit is a deterministic vector when lam_j = 0 and
V_j * pi^(i_j) W_k with a scalar random V_j when 0 < lam_j < 1. The last
block, scaled by N alone, tends to its stationary vector.

Repeated positive leading characters are linked by V_j = w_j V_{j-1}.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .canonical import CHAR_TOL, ClusterForm, ReplacementSpec
from .numerics import resolvent


@dataclass(frozen=True)
class Deterministic:
    vector: np.ndarray


@dataclass(frozen=True)
class RandomDirection:
    cluster: int
    direction: np.ndarray


@dataclass(frozen=True)
class Stationary:
    vector: np.ndarray


Descriptor = Deterministic | RandomDirection | Stationary


@dataclass(frozen=True)
class VLink:
    cluster: int
    previous: int
    w: float


@dataclass(frozen=True)
class LimitProfile:
    w_matrices: tuple[np.ndarray, ...]
    w_constants: tuple[float | None, ...]
    descriptors: tuple[Descriptor | None, ...]
    v_links: tuple[VLink, ...]
    scales: tuple[tuple[float, int], ...]
    cluster_form: ClusterForm = field(repr=False)
    partial: bool = False
    warnings: tuple[str, ...] = field(default=())


def w_matrices(cf: ClusterForm, tol: float = CHAR_TOL) -> list[np.ndarray]:
    """W_k: identity on leading blocks, resolvent recursion on the rest."""
    base = cf.base
    leading = set(cf.leading_indices)
    cluster_of = cf.cluster_of_block()
    W: list[np.ndarray] = []
    for k in range(base.n_blocks):
        if k in leading:
            W.append(np.eye(base.block_sizes[k]))
            continue
        j = cluster_of[k]
        lam = cf.leading_characters[j]
        head = cf.leading_indices[j]
        acc = np.zeros((base.block_sizes[head], base.block_sizes[k]))
        for m in range(head, k):
            acc += W[m] @ base.block(m, k)
        W.append(acc @ resolvent(lam, base.block(k, k)))
    return W


def w_constants(cf: ClusterForm, W: list[np.ndarray], tol: float = CHAR_TOL) -> list[float | None]:
    """w_j for every cluster; ``None`` where assumption (A) fails at j."""
    base = cf.base
    out: list[float | None] = []
    for j in range(cf.n_clusters):
        lam, kappa = cf.leading_characters[j], cf.orders[j]
        if lam <= tol or kappa == 0:
            out.append(1.0)
            continue
        prev_head = cf.leading_indices[j - 1]
        head = cf.leading_indices[j]
        pi_prev = base.eigenpairs[prev_head].left
        zeta = base.eigenpairs[head].right
        acc = np.zeros(base.block_sizes[head])
        for m in cf.cluster_blocks(j - 1):
            acc += pi_prev @ W[m] @ base.block(m, head)
        w = float(acc @ zeta) / kappa
        out.append(w if w > 0 else None)
    return out


def _affected_clusters(cf: ClusterForm, tol: float) -> set[int]:
    hit: set[int] = set()
    for j in cf.assumption_a.violations:
        lam = cf.leading_characters[j]
        hit.update(
            jj for jj in range(j, cf.n_clusters) if abs(cf.leading_characters[jj] - lam) <= tol
        )
    return hit


def limit_profile(cf: ClusterForm, spec: ReplacementSpec, tol: float = CHAR_TOL) -> LimitProfile:
    base = cf.base
    W = w_matrices(cf, tol)
    w = w_constants(cf, W, tol)
    cluster_of = cf.cluster_of_block()
    affected = _affected_clusters(cf, tol)
    warnings = [
        f"assumption (A) fails at cluster {j + 1}; no limit identified for cluster(s) "
        + ", ".join(str(jj + 1) for jj in sorted(affected))
        for j in cf.assumption_a.violations
    ]

    c0 = base.permute_vector(spec.initial)
    descriptors: list[Descriptor | None] = []
    scales = []
    zero_limit = None
    for k in range(base.n_blocks):
        j = int(cluster_of[k])
        lam, kappa = cf.leading_characters[j], cf.orders[j]
        scales.append((lam, kappa))
        if j in affected:
            descriptors.append(None)
            continue
        if lam <= tol:
            # Zero clusters are single blocks at the front, k == j.
            if k == 0:
                zero_limit = c0[base.span(0)].copy()
            else:
                zero_limit = zero_limit @ base.block(k - 1, k) / kappa
            descriptors.append(Deterministic(zero_limit))
        elif lam < 1.0 - tol:
            head = cf.leading_indices[j]
            direction = base.eigenpairs[head].left @ W[k]
            descriptors.append(RandomDirection(j, direction))
        else:
            descriptors.append(Stationary(base.eigenpairs[k].left.copy()))

    links = tuple(
        VLink(cluster=j, previous=j - 1, w=w[j])
        for j in range(cf.n_clusters)
        if cf.orders[j] > 0 and cf.leading_characters[j] > tol and j not in affected and w[j] is not None
    )
    return LimitProfile(
        w_matrices=tuple(W),
        w_constants=tuple(w),
        descriptors=tuple(descriptors),
        v_links=links,
        scales=tuple(scales),
        cluster_form=cf,
        partial=bool(affected),
        warnings=tuple(warnings),
    )
