"""Analysis pipeline and its JSON report.

Reports use 1-based labels for colors, blocks and clusters, and natural logs.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .canonical import ReplacementSpec, block_order, increasing_order
from .limits import Deterministic, LimitProfile, RandomDirection, Stationary, limit_profile
from .rates import RatePlan, cross_check_cluster_rates, near_ties, rate_pairs

HEADER = {"log": "natural", "indexing": "1-based colors, blocks and clusters"}


@dataclass
class Analysis:
    spec: ReplacementSpec
    plan: RatePlan
    profile: LimitProfile

    @property
    def canonical(self):
        return self.plan.source_form

    @property
    def clusters(self):
        return self.profile.cluster_form


def analyze(spec: ReplacementSpec) -> Analysis:
    canon = block_order(spec)
    cf = increasing_order(canon)
    return Analysis(spec=spec, plan=rate_pairs(canon), profile=limit_profile(cf, spec))


def _colors(arr) -> list[int]:
    return [int(c) + 1 for c in arr]


def _floats(arr) -> list[float]:
    return [float(x) for x in np.ravel(arr)]


@dataclass
class AnalysisReport:
    header: dict
    input: dict
    canonical: dict
    increasing_order: dict
    assumption_a: dict
    rates: list[dict]
    limit_profile: dict
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        return cls(**d)


def build_report(a: Analysis) -> AnalysisReport:
    canon, cf, prof = a.canonical, a.clusters, a.profile
    warnings = list(prof.warnings)
    for b1, b2, d in near_ties(canon.characters):
        warnings.append(
            f"near-tie: characters of blocks {b1 + 1} and {b2 + 1} differ by {d:.3e}; "
            "treated as distinct"
        )
    check = cross_check_cluster_rates(a.plan, cf)
    if cf.assumption_a.holds and not check.match:
        warnings.extend(f"rate cross-check mismatch: {m}" for m in check.mismatches)

    canonical = {
        "permutation": _colors(canon.permutation),
        "blocks": [
            {
                "block": k + 1,
                "colors": _colors(canon.block_colors(k)),
                "kind": canon.diag_kind[k],
                "character": float(canon.characters[k]),
                "rate": {"alpha": float(p.alpha), "beta": int(p.beta)},
            }
            for k, p in enumerate(a.plan.pairs)
        ],
    }
    base = cf.base
    cluster_of = cf.cluster_of_block()
    incr = {
        "permutation": _colors(base.permutation),
        "blocks": [
            {
                "block": k + 1,
                "colors": _colors(base.block_colors(k)),
                "kind": base.diag_kind[k],
                "character": float(base.characters[k]),
                "cluster": int(cluster_of[k]) + 1,
            }
            for k in range(base.n_blocks)
        ],
        "clusters": [
            {
                "cluster": j + 1,
                "leading_block": cf.leading_indices[j] + 1,
                "leading_character": float(cf.leading_characters[j]),
                "order": int(cf.orders[j]),
                "blocks": [k + 1 for k in cf.cluster_blocks(j)],
            }
            for j in range(cf.n_clusters)
        ],
    }
    assumption = {
        "holds": cf.assumption_a.holds,
        "violations": [j + 1 for j in cf.assumption_a.violations],
    }
    rates = [
        {"color": c + 1, "alpha": float(al), "beta": int(be)}
        for c, (al, be) in enumerate(a.plan.color_pairs())
    ]
    limit_blocks = []
    for k, desc in enumerate(prof.descriptors):
        lam, kappa = prof.scales[k]
        entry = {
            "block": k + 1,
            "colors": _colors(base.block_colors(k)),
            "scale": {"power": float(lam), "log_power": int(kappa)},
        }
        if desc is None:
            entry["kind"] = "unidentified"
        elif isinstance(desc, Deterministic):
            entry.update(kind="deterministic", vector=_floats(desc.vector))
        elif isinstance(desc, RandomDirection):
            entry.update(kind="random_direction", cluster=desc.cluster + 1, vector=_floats(desc.direction))
        elif isinstance(desc, Stationary):
            entry.update(kind="stationary", vector=_floats(desc.vector))
        limit_blocks.append(entry)
    limits = {
        "partial": prof.partial,
        "w_constants": [None if w is None else float(w) for w in prof.w_constants],
        "v_links": [
            {"cluster": l.cluster + 1, "previous": l.previous + 1, "w": float(l.w)} for l in prof.v_links
        ],
        "blocks": limit_blocks,
    }
    return AnalysisReport(
        header=dict(HEADER),
        input={
            "matrix": [_floats(row) for row in a.spec.matrix],
            "initial": _floats(a.spec.initial),
            "row_sum": float(a.spec.row_sum),
        },
        canonical=canonical,
        increasing_order=incr,
        assumption_a=assumption,
        rates=rates,
        limit_profile=limits,
        warnings=warnings,
    )
