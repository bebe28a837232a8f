"""Urn simulation, exact expectations, and convergence checks.

Each replication draws uniforms from its own PCG64 stream keyed by
``(seed, replication_id)`` through ``SeedSequence(seed, spawn_key=(rep,))``, so
results do not depend on how replications are scheduled across threads.
The inner loop is a numba kernel that releases the GIL.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .canonical import CHAR_TOL, ReplacementSpec
from .limits import Deterministic, LimitProfile, RandomDirection, Stationary
from .rates import RatePlan

RESYNC_EVERY = 1 << 16


def default_schedule(n_max: int, lo: int = 10, hi: int = 23) -> list[int]:
    """Powers of two 2**lo..2**hi that fit in ``n_max``, plus ``n_max`` itself."""
    ns = [1 << k for k in range(lo, hi + 1) if (1 << k) <= n_max]
    if n_max >= 1 and (not ns or ns[-1] != n_max):
        ns.append(n_max)
    return ns


def pow2_schedule(lo: int, hi: int) -> list[int]:
    return [1 << k for k in range(lo, hi + 1)]


def rng_for(seed: int, replication_id: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replication_id,)))
    )


@numba.njit(cache=True, nogil=True)
def _select(counts, total, u):
    target = u * total
    acc = 0.0
    last = 0
    for i in range(counts.shape[0]):
        c = counts[i]
        if c > 0.0:
            last = i
        acc += c
        if target < acc:
            return i
    return last


@numba.njit(cache=True, nogil=True)
def _advance(R, rowsum, counts, uniforms, total):
    D = counts.shape[0]
    for t in range(uniforms.shape[0]):
        i = _select(counts, total, uniforms[t])
        for j in range(D):
            counts[j] += R[i, j]
        total += rowsum[i]
    return total


@numba.njit(cache=True, nogil=True)
def _expect(R, e, n_from, n_to):
    D = e.shape[0]
    add = np.empty(D)
    for n in range(n_from + 1, n_to + 1):
        for j in range(D):
            add[j] = 0.0
        for i in range(D):
            ei = e[i]
            if ei != 0.0:
                for j in range(D):
                    add[j] += ei * R[i, j]
        inv = 1.0 / n
        for j in range(D):
            e[j] += add[j] * inv


@dataclass(frozen=True)
class UrnState:
    counts: np.ndarray
    step: int = 0

    @classmethod
    def initial(cls, spec: ReplacementSpec) -> "UrnState":
        return cls(np.array(spec.initial, dtype=float), 0)


def step(state: UrnState, spec: ReplacementSpec, rng: np.random.Generator) -> UrnState:
    """One draw: pick color i with probability counts_i / total, add row i."""
    u = rng.random()
    i = _select(state.counts, float(state.counts.sum()), u)
    return UrnState(state.counts + spec.matrix[i], state.step + 1)


@dataclass(frozen=True)
class SimulationTrace:
    seed: int
    replication_id: int
    ns: np.ndarray
    counts: np.ndarray  # (len(ns), D), original color order

    @property
    def final(self) -> np.ndarray:
        return self.counts[-1]


def simulate(
    spec: ReplacementSpec,
    n_max: int,
    checkpoints=None,
    seed: int = 0,
    replication_id: int = 0,
) -> SimulationTrace:
    """Run ``n_max`` draws and record counts at N=0 and at each checkpoint."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    sched = default_schedule(n_max) if checkpoints is None else sorted(set(int(n) for n in checkpoints))
    if sched and (sched[0] < 1 or sched[-1] > n_max):
        raise ValueError(f"checkpoints must lie in [1, {n_max}]")
    rng = rng_for(seed, replication_id)
    R = np.ascontiguousarray(spec.matrix, dtype=float)
    rowsum = R.sum(axis=1)
    counts = np.array(spec.initial, dtype=float)
    ns = [0]
    rows = [counts.copy()]
    n = 0
    for target in sched:
        while n < target:
            seg = min(target - n, RESYNC_EVERY - (n % RESYNC_EVERY))
            total = math.fsum(counts)
            _advance(R, rowsum, counts, rng.random(seg), total)
            n += seg
        ns.append(n)
        rows.append(counts.copy())
    return SimulationTrace(
        seed=seed,
        replication_id=replication_id,
        ns=np.array(ns, dtype=np.int64),
        counts=np.array(rows),
    )


def run_replications(
    spec: ReplacementSpec,
    n_max: int,
    checkpoints=None,
    seed: int = 0,
    reps: int = 1,
    threads: int | None = None,
) -> list[SimulationTrace]:
    """Independent replications 0..reps-1, returned in replication order."""
    threads = threads or os.cpu_count() or 1
    job = lambda r: simulate(spec, n_max, checkpoints, seed, r)  # noqa: E731
    if threads == 1 or reps <= 1:
        return [job(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, range(reps)))


@dataclass(frozen=True)
class Aggregate:
    ns: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    reps: int


def aggregate(traces: list[SimulationTrace]) -> Aggregate:
    """Mean and standard error per checkpoint, reduced in replication order."""
    traces = sorted(traces, key=lambda t: t.replication_id)
    stack = np.stack([t.counts for t in traces])
    n = stack.shape[0]
    mean = stack.sum(axis=0) / n
    if n > 1:
        se = np.sqrt(((stack - mean) ** 2).sum(axis=0) / (n - 1) / n)
    else:
        se = np.full_like(mean, np.nan)
    return Aggregate(ns=traces[0].ns.copy(), mean=mean, stderr=se, reps=n)


@dataclass(frozen=True)
class ExpectationPath:
    ns: np.ndarray
    values: np.ndarray  # (len(ns), D), original color order


def expectation_path(spec: ReplacementSpec, ns) -> ExpectationPath:
    """Exact E[C_N] at each requested N by iterating E_N = E_{N-1}(I + R/N)."""
    ns = sorted(set(int(n) for n in ns))
    if ns and ns[0] < 0:
        raise ValueError("N must be nonnegative")
    R = np.ascontiguousarray(spec.matrix, dtype=float)
    e = np.array(spec.initial, dtype=float)
    cur = 0
    out = []
    for n in ns:
        _expect(R, e, cur, n)
        cur = n
        out.append(e.copy())
    return ExpectationPath(ns=np.array(ns, dtype=np.int64), values=np.array(out).reshape(len(ns), -1))


def expectation(spec: ReplacementSpec, N: int) -> np.ndarray:
    return expectation_path(spec, [N]).values[0]


def _log_pow(N: np.ndarray, beta: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(beta > 0, np.log(np.maximum(N, 1)) ** beta, 1.0)


@dataclass(frozen=True)
class ScaledCounts:
    ns: np.ndarray
    values: np.ndarray  # (len(ns), D), original color order; NaN at N = 0
    flagged: np.ndarray  # bool per checkpoint: log scaling skipped or undefined


def scaled_counts(trace: SimulationTrace, plan: RatePlan) -> ScaledCounts:
    """C_N / (N^alpha log^beta N) per color, natural log."""
    pairs = plan.color_pairs()
    alpha = np.array([p[0] for p in pairs])
    beta = np.array([p[1] for p in pairs])
    ns = trace.ns.astype(float)
    vals = np.full(trace.counts.shape, np.nan)
    flagged = np.zeros(len(ns), dtype=bool)
    for r, N in enumerate(ns):
        if N == 0:
            flagged[r] = True
            continue
        denom = N**alpha
        if N > 1:
            denom = denom * np.where(beta > 0, math.log(N) ** beta, 1.0)
        elif np.any(beta > 0):
            flagged[r] = True
        vals[r] = trace.counts[r] / denom
    return ScaledCounts(ns=trace.ns.copy(), values=vals, flagged=flagged)


@dataclass(frozen=True)
class Tolerances:
    direction: float = 0.05
    exponent: float = 0.02
    ratio: float = 0.15


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool | None  # None when skipped
    note: str = ""


@dataclass
class ConvergenceReport:
    checks: list[Check] = field(default_factory=list)
    direction_errors: dict[int, list[float]] = field(default_factory=dict)
    exponent_fits: list[dict] = field(default_factory=list)
    v_hat: dict[int, list[float]] = field(default_factory=dict)
    ratio_checks: list[dict] = field(default_factory=list)
    scaled_final: list[list[float]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.passed is not None)

    def add(self, name, value, tol, ok, note=""):
        value = float(value)
        self.checks.append(Check(name, value, float(tol), bool(ok), note))

    def skip(self, name, note):
        self.checks.append(Check(name, float("nan"), float("nan"), None, note))

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "value": None if math.isnan(c.value) else c.value,
                    "tolerance": None if math.isnan(c.tolerance) else c.tolerance,
                    "status": "skipped" if c.passed is None else ("pass" if c.passed else "fail"),
                    "note": c.note,
                }
                for c in self.checks
            ],
            # serialized labels are 1-based
            "direction_errors": {str(k + 1): v for k, v in self.direction_errors.items()},
            "exponent_fits": [{**f, "block": f["block"] + 1} for f in self.exponent_fits],
            "v_hat": {str(k + 1): v for k, v in self.v_hat.items()},
            "ratio_checks": [{**r, "cluster": r["cluster"] + 1} for r in self.ratio_checks],
            "warnings": self.warnings,
        }


def angle(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.acos(min(1.0, max(-1.0, c)))


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def fit_rate(ns, block_totals, alpha: float, beta: int) -> tuple[float, float]:
    """Estimate (alpha, beta) from exact block totals over a range of N.

    The power is the log-log slope after dividing out log^beta N; the log power
    is the slope of log(E / N^alpha) against log log N.
    """
    ns = np.asarray(ns, dtype=float)
    y = np.asarray(block_totals, dtype=float)
    logn = np.log(ns)
    alpha_hat = loglog_slope(ns, y / logn**beta)
    beta_hat = float(np.polyfit(np.log(logn), np.log(y / ns**alpha), 1)[0])
    return alpha_hat, beta_hat


def _top_decade(ns: np.ndarray) -> np.ndarray:
    ns = ns[ns > 1]
    top = ns[-1]
    sel = ns[ns >= top / 10]
    if len(sel) < 2:
        sel = ns[-2:]
    return sel


def verify(
    profile: LimitProfile,
    plan: RatePlan,
    traces: list[SimulationTrace],
    expectations: ExpectationPath,
    tolerances: Tolerances = Tolerances(),
    tol: float = CHAR_TOL,
) -> ConvergenceReport:
    """Compare simulated paths and exact expectations with the predicted limits."""
    cf = profile.cluster_form
    base = cf.base
    rep = ConvergenceReport(warnings=list(profile.warnings))
    perm = base.permutation
    traces = sorted(traces, key=lambda t: t.replication_id)

    # (b) exponents from the exact oracle, per block of the rate plan
    rform = plan.source_form
    ens = expectations.ns
    sel = _top_decade(ens)
    rows = np.searchsorted(ens, sel)
    for k, pair in enumerate(plan.pairs):
        alpha, beta = pair.as_tuple()
        totals = expectations.values[rows][:, rform.block_colors(k)].sum(axis=1)
        a_hat, b_hat = fit_rate(sel, totals, alpha, beta)
        rep.exponent_fits.append(
            {"block": k, "alpha": alpha, "alpha_hat": a_hat, "beta": beta, "beta_hat": b_hat}
        )
        rep.add(f"alpha[{k + 1}]", abs(a_hat - alpha), tolerances.exponent, abs(a_hat - alpha) <= tolerances.exponent)
        rep.add(f"beta[{k + 1}]", abs(b_hat - beta), 0.5, abs(b_hat - beta) < 0.5)

    if not traces:
        return rep
    finals = np.stack([t.final for t in traces])[:, perm]  # canonical order
    N_fin = float(traces[0].ns[-1])
    rep.scaled_final = [list(map(float, t.final)) for t in traces]
    cluster_of = cf.cluster_of_block()

    # (a) and (d): directions, stationary vector, killed blocks, deterministic limits
    top_row = np.searchsorted(ens, ens[-1])
    E_top = expectations.values[top_row][perm]
    N_top = float(ens[-1])
    for k, desc in enumerate(profile.descriptors):
        sp = base.span(k)
        if desc is None:
            rep.skip(f"limit[{k + 1}]", f"cluster {cluster_of[k] + 1} affected by assumption (A) violation")
            continue
        if isinstance(desc, RandomDirection):
            per_ckpt = []
            for r in range(1, len(traces[0].ns)):
                errs = [angle(t.counts[r][perm][sp], desc.direction) for t in traces]
                per_ckpt.append(float(np.median(errs)))
            rep.direction_errors[k] = per_ckpt
            if base.block_sizes[k] > 1:
                rep.add(f"direction[{k + 1}]", per_ckpt[-1], tolerances.direction, per_ckpt[-1] <= tolerances.direction)
        elif isinstance(desc, Stationary):
            err = np.median(np.max(np.abs(finals[:, sp] / (N_fin + 1) - desc.vector), axis=1))
            rep.add(f"stationary[{k + 1}]", err, tolerances.direction, err <= tolerances.direction)
        elif isinstance(desc, Deterministic):
            _, kappa = profile.scales[k]
            scale = math.log(N_top) ** kappa if kappa else 1.0
            ref = desc.vector
            err = float(np.max(np.abs(E_top[sp] / scale - ref)) / np.max(np.abs(ref)))
            rep.add(f"deterministic[{k + 1}]", err, tolerances.ratio, err <= tolerances.ratio)
        if not isinstance(desc, Stationary):
            killed = np.median(np.max(finals[:, sp] / (N_fin + 1), axis=1))
            rep.add(f"killed[{k + 1}]", killed, tolerances.direction, killed <= tolerances.direction)

    # (c) V-hat per cluster and the w_j links
    for j in range(cf.n_clusters):
        lam, kappa = cf.leading_characters[j], cf.orders[j]
        if not (tol < lam < 1 - tol):
            continue
        head = cf.leading_indices[j]
        if profile.descriptors[head] is None:
            continue
        zeta = base.eigenpairs[head].right
        scale = N_fin**lam * (math.log(N_fin) ** kappa if kappa else 1.0)
        rep.v_hat[j] = [float(v) for v in finals[:, base.span(head)] @ zeta / scale]
    for link in profile.v_links:
        j, p = link.cluster, link.previous
        if j not in rep.v_hat or p not in rep.v_hat:
            continue
        ratios = np.array(rep.v_hat[j]) / np.array(rep.v_hat[p])
        med = float(np.median(ratios))
        oracle = _oracle_ratio(cf, E_top, N_top, j, p)
        rep.ratio_checks.append(
            {"cluster": j, "w": link.w, "median_path_ratio": med, "oracle_ratio": oracle}
        )
        rel = abs(med / link.w - 1)
        rep.add(f"w_path[{j + 1}]", rel, tolerances.ratio, rel <= tolerances.ratio)
        rel = abs(oracle / link.w - 1)
        rep.add(f"w_oracle[{j + 1}]", rel, tolerances.ratio, rel <= tolerances.ratio)
    for j in cf.assumption_a.violations:
        rep.skip(f"w[{j + 1}]", "assumption (A) violated; w_j undefined")
    return rep


def _oracle_ratio(cf, E_canon: np.ndarray, N: float, j: int, p: int) -> float:
    base = cf.base
    stats = []
    for c in (j, p):
        head = cf.leading_indices[c]
        lam, kappa = cf.leading_characters[c], cf.orders[c]
        scale = N**lam * (math.log(N) ** kappa if kappa else 1.0)
        stats.append(float(E_canon[base.span(head)] @ base.eigenpairs[head].right) / scale)
    return stats[0] / stats[1]


def oracle_w_ratio(profile: LimitProfile, expectations: ExpectationPath, j: int) -> float:
    """Exact-expectation version of V_j / V_{j-1} at the last expectation checkpoint."""
    cf = profile.cluster_form
    E = expectations.values[-1][cf.base.permutation]
    return _oracle_ratio(cf, E, float(expectations.ns[-1]), j, j - 1)


def write_traces_csv(traces: list[SimulationTrace], path) -> None:
    """CSV with replication_id, N, then one column per original color (1-based names)."""
    D = traces[0].counts.shape[1] if traces else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replication_id", "N"] + [f"color_{c + 1}" for c in range(D)])
        for t in traces:
            for n, row in zip(t.ns, t.counts):
                w.writerow([t.replication_id, int(n)] + [repr(float(x)) for x in row])


def write_aggregate_csv(agg: Aggregate, path) -> None:
    D = agg.mean.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["N", "reps"]
            + [f"mean_color_{c + 1}" for c in range(D)]
            + [f"se_color_{c + 1}" for c in range(D)]
        )
        for i, n in enumerate(agg.ns):
            w.writerow(
                [int(n), agg.reps]
                + [repr(float(x)) for x in agg.mean[i]]
                + [repr(float(x)) for x in agg.stderr[i]]
            )


def read_traces_csv(path) -> list[SimulationTrace]:
    by_rep: dict[int, list] = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        for row in r:
            by_rep.setdefault(int(row[0]), []).append((int(row[1]), [float(x) for x in row[2:]]))
    out = []
    for rid in sorted(by_rep):
        rows = by_rep[rid]
        out.append(
            SimulationTrace(
                seed=-1,
                replication_id=rid,
                ns=np.array([n for n, _ in rows], dtype=np.int64),
                counts=np.array([c for _, c in rows]),
            )
        )
    return out
