"""Growth rate pairs (alpha, beta) of block color counts.

Block k grows like N**alpha * log(N)**beta. Pairs are computed block by block
from the characters and the zero pattern of the off-diagonal blocks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canonical import CHAR_TOL, CanonicalForm, ClusterForm, _assemble, canon_matrix_original


@dataclass(frozen=True)
class RatePair:
    """``alpha is None`` stands for minus infinity (empty predecessor set)."""

    alpha: float | None
    beta: int = 0

    def __post_init__(self):
        if self.alpha is None and self.beta != 0:
            raise ValueError("the minus-infinity pair must have beta = 0")

    def exceeds(self, other: "RatePair", tol: float = CHAR_TOL) -> bool:
        """Strict lexicographic comparison, alphas equal within ``tol``."""
        if other.alpha is None:
            return self.alpha is not None
        if self.alpha is None:
            return False
        if abs(self.alpha - other.alpha) <= tol:
            return self.beta > other.beta
        return self.alpha > other.alpha

    def as_tuple(self) -> tuple[float, int]:
        if self.alpha is None:
            raise ValueError("minus-infinity pair has no numeric form")
        return (self.alpha, self.beta)


MINUS_INFINITY = RatePair(None, 0)


@dataclass(frozen=True)
class RatePlan:
    pairs: tuple[RatePair, ...]
    source_form: CanonicalForm

    def color_pairs(self) -> list[tuple[float, int]]:
        """Rate pair of every color, in original color order."""
        D = self.source_form.matrix.shape[0]
        out: list = [None] * D
        for k, pair in enumerate(self.pairs):
            for c in self.source_form.block_colors(k):
                out[int(c)] = pair.as_tuple()
        return out


def split_zero_blocks(form: CanonicalForm) -> CanonicalForm:
    """Break multi-color zero diagonal blocks into single colors."""
    if all(not (kind == "zero" and size > 1) for kind, size in zip(form.diag_kind, form.block_sizes)):
        return form
    blocks = []
    eigs = {}
    for k in range(form.n_blocks):
        colors = tuple(int(c) for c in form.block_colors(k))
        if form.diag_kind[k] == "zero" and len(colors) > 1:
            for c in colors:
                blocks.append((c,))
                eigs[(c,)] = ("zero", 0.0, None)
        else:
            blocks.append(colors)
            eigs[colors] = (form.diag_kind[k], form.characters[k], form.eigenpairs[k])
    return _assemble(canon_matrix_original(form), blocks, eigs)


def rate_pairs(canon: CanonicalForm, tol: float = CHAR_TOL) -> RatePlan:
    """Inductive rate pairs for a block upper triangular form.

    Zero diagonal blocks wider than one color are split into single colors
    first; the returned plan refers to the split form.
    """
    form = split_zero_blocks(canon)
    for k in range(form.n_blocks):
        for l in range(k):
            if np.any(form.block(k, l) != 0):
                raise ValueError(f"not block upper triangular: block ({k},{l}) is nonzero")
    pairs: list[RatePair] = []
    for k in range(form.n_blocks):
        mu = form.characters[k]
        best = MINUS_INFINITY
        for m in range(k):
            if form.coupled(m, k) and pairs[m].exceeds(best, tol):
                best = pairs[m]
        if best.alpha is None or mu > best.alpha + tol:
            pairs.append(RatePair(mu, 0))
        elif abs(mu - best.alpha) <= tol:
            pairs.append(RatePair(best.alpha, best.beta + 1))
        else:
            pairs.append(RatePair(best.alpha, best.beta))
    return RatePlan(pairs=tuple(pairs), source_form=form)


@dataclass(frozen=True)
class CrossCheck:
    match: bool
    mismatches: tuple[str, ...] = ()


def cross_check_cluster_rates(plan: RatePlan, cf: ClusterForm, tol: float = CHAR_TOL) -> CrossCheck:
    """Compare per-color rate pairs with (leading character, order) of each cluster."""
    by_color = plan.color_pairs()
    cluster_of = cf.cluster_of_block()
    bad = []
    for k in range(cf.base.n_blocks):
        j = cluster_of[k]
        lam, kappa = cf.leading_characters[j], cf.orders[j]
        for c in cf.base.block_colors(k):
            alpha, beta = by_color[int(c)]
            if abs(alpha - lam) > tol or beta != kappa:
                bad.append(
                    f"color {int(c) + 1} (block {k + 1}, cluster {j + 1}): rate ({alpha:.6g},{beta}) "
                    f"vs cluster ({lam:.6g},{kappa})"
                )
    return CrossCheck(match=not bad, mismatches=tuple(bad))


def near_ties(characters, tol: float = CHAR_TOL, band: float = 1e-6) -> list[tuple[int, int, float]]:
    """Pairs of characters that differ by more than ``tol`` but at most ``band``."""
    out = []
    for a in range(len(characters)):
        for b in range(a + 1, len(characters)):
            d = abs(characters[a] - characters[b])
            if tol < d <= band:
                out.append((a, b, d))
    return out
