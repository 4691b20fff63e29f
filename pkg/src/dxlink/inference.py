"""Two-level noisy-OR network with exact and variational posterior inference.

Positive findings make the evidence likelihood non-factorized. Each positive
finding's log-likelihood term ln(1 - e^(-x)) is either kept exact (and
expanded by inclusion-exclusion across the "exact set") or replaced by its
conjugate upper envelope xi*x - f*(xi), which factorizes over disorders. The
resulting quantity upper-bounds the true log evidence for every choice of xi;
coordinate descent tightens it. With every positive finding in the exact set
the computation is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NetworkBuildError, NumericalError, RefusalError
from .kb import Concomitance, KnowledgeBase
from .kernels import signed_subset_eval

PRIOR_FLOOR = 1e-6
XI_FLOOR = 1e-4
XI_CEIL = 50.0
MAX_EXACT_SET = 12
MAX_EXACT_DISORDERS = 20
SIGN_TOL = 1e-9


@dataclass(frozen=True)
class Demographics:
    age: int | None = None
    sex: str | None = None
    nationality: str | None = None

    def to_dict(self) -> dict:
        return {"age": self.age, "sex": self.sex, "nationality": self.nationality}


@dataclass(frozen=True)
class Evidence:
    positive: frozenset[int]
    negative: frozenset[int]
    demographics: Demographics = Demographics()

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise ValueError(f"findings asserted and negated at once: {sorted(overlap)}")


class NoisyOrNetwork:
    """Immutable two-level network: disorder priors, finding leaks, link thetas."""

    def __init__(self, disorder_ids, priors, theta, theta0, categories=None):
        self.disorder_ids = list(disorder_ids)
        self.index = {d: i for i, d in enumerate(self.disorder_ids)}
        self.priors = np.asarray(priors, dtype=np.float64)
        self.theta = {f: dict(ps) for f, ps in theta.items()}   # finding -> disorder -> theta
        self.theta0 = dict(theta0)                              # finding -> leak exponent
        self.finding_ids = sorted(self.theta0)
        self.parents = {f: sorted(ps) for f, ps in self.theta.items()}
        self.children: dict[int, list[int]] = {d: [] for d in self.disorder_ids}
        for f, ps in self.theta.items():
            for d in ps:
                self.children[d].append(f)
        for d in self.children:
            self.children[d].sort()

    @property
    def n_disorders(self) -> int:
        return len(self.disorder_ids)

    def check_evidence(self, ev: Evidence) -> None:
        unknown = (ev.positive | ev.negative) - set(self.theta0)
        if unknown:
            raise ValueError(f"unknown finding ids in evidence: {sorted(unknown)}")


def build_network(kb: KnowledgeBase, leak_default: float = 0.001,
                  prior_cap: float = 0.05,
                  leaks: dict[int, float] | None = None) -> NoisyOrNetwork:
    """Transform a compiled KB into exponent-form noisy-OR parameters.

    Priors come from annual incidence via p = 1 - exp(-rate), clamped to
    [1e-6, prior_cap]. Thetas are -ln(1 - w); weights must stay below 1.
    """
    if not kb.is_compiled:
        raise NetworkBuildError("knowledge base has uncompiled links")
    if not 0.0 <= leak_default < 1.0:
        raise NetworkBuildError(f"leak must lie in [0, 1), got {leak_default}")
    leaks = leaks or {}

    disorder_ids = sorted(kb.disorders)
    priors = np.array([
        min(max(1.0 - math.exp(-kb.disorders[d].incidence), PRIOR_FLOOR), prior_cap)
        for d in disorder_ids
    ])

    theta: dict[int, dict[int, float]] = {f: {} for f in kb.findings}
    theta0: dict[int, float] = {}
    for fid in kb.findings:
        leak = leaks.get(fid, leak_default)
        if not 0.0 <= leak < 1.0:
            raise NetworkBuildError(f"leak for finding {fid} must lie in [0, 1), got {leak}")
        theta0[fid] = -math.log1p(-leak)
    for link in kb.links:
        if link.weight >= 1.0:
            raise NetworkBuildError(
                f"link {link.key} has weight {link.weight} >= 1; theta undefined"
            )
        theta[link.finding_id][link.disorder_id] = -math.log1p(-link.weight)

    return NoisyOrNetwork(disorder_ids, priors, theta, theta0)


def exact_posterior(net: NoisyOrNetwork, ev: Evidence) -> tuple[dict[int, float], float]:
    """Posterior marginals by full 2^N enumeration (refused above N=20)."""
    net.check_evidence(ev)
    n = net.n_disorders
    if n > MAX_EXACT_DISORDERS:
        raise RefusalError(f"exact enumeration refused for N={n} > {MAX_EXACT_DISORDERS}")

    n_states = 1 << n
    states = ((np.arange(n_states, dtype=np.int64)[:, None]
               >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(np.float64)
    log_joint = states @ np.log(net.priors) + (1.0 - states) @ np.log1p(-net.priors)

    for fid in sorted(ev.positive | ev.negative):
        theta_vec = np.zeros(n)
        for d, t in net.theta.get(fid, {}).items():
            theta_vec[net.index[d]] = t
        x = net.theta0[fid] + states @ theta_vec
        if fid in ev.positive:
            with np.errstate(divide="ignore"):
                log_joint += np.log(-np.expm1(-x))
        else:
            log_joint -= x

    peak = log_joint.max()
    if not np.isfinite(peak):
        raise NumericalError("evidence has probability zero under the network")
    log_evidence = peak + float(np.log(np.exp(log_joint - peak).sum()))
    post = np.exp(log_joint - log_evidence)
    marginals = {
        d: float(post[states[:, j] == 1.0].sum()) for d, j in net.index.items()
    }
    return marginals, log_evidence


def f_star(xi: float) -> float:
    """Conjugate of ln(1 - e^(-x)): (xi+1)ln(xi+1) - xi*ln(xi), for xi > 0."""
    if xi <= 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    return (xi + 1.0) * math.log(xi + 1.0) - xi * math.log(xi)


def x_star(xi: float) -> float:
    """Point where the envelope xi*x - f*(xi) touches ln(1 - e^(-x))."""
    if xi <= 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    return math.log((xi + 1.0) / xi)


@dataclass(frozen=True)
class VariationalState:
    """Per-request variational parameters and the bound they achieve."""

    xi: dict[int, float]
    exact_set: frozenset[int]
    bound: float
    iterations: int
    trace: tuple[float, ...] = ()


class _RequestContext:
    """Dense per-request arrays over the disorders touched by the evidence."""

    def __init__(self, net: NoisyOrNetwork, ev: Evidence, exact_set: frozenset[int]):
        net.check_evidence(ev)
        exact_set = frozenset(exact_set)
        if not exact_set <= ev.positive:
            raise ValueError("exact set must be a subset of the positive findings")
        if len(exact_set) > MAX_EXACT_SET:
            raise RefusalError(
                f"exact set of size {len(exact_set)} exceeds {MAX_EXACT_SET}; "
                "term count would explode"
            )
        self.net = net
        self.ev = ev
        self.exact = sorted(exact_set)
        self.transformed = sorted(ev.positive - exact_set)

        active: set[int] = set()
        for fid in ev.positive | ev.negative:
            active.update(net.theta.get(fid, {}))
        self.active_ids = sorted(active)
        pos = {d: i for i, d in enumerate(self.active_ids)}
        n_active = len(self.active_ids)

        p = np.array([net.priors[net.index[d]] for d in self.active_ids])
        self.log_p = np.log(p) if n_active else np.zeros(0)
        self.log_1mp = np.log1p(-p) if n_active else np.zeros(0)

        def theta_row(fid):
            row = np.zeros(n_active)
            for d, t in net.theta.get(fid, {}).items():
                row[pos[d]] = t
            return row

        self.theta_e = (np.vstack([theta_row(f) for f in self.exact])
                        if self.exact else np.zeros((0, n_active)))
        self.theta0_e = np.array([net.theta0[f] for f in self.exact])
        self.theta_t = (np.vstack([theta_row(f) for f in self.transformed])
                        if self.transformed else np.zeros((0, n_active)))
        self.theta0_t = np.array([net.theta0[f] for f in self.transformed])

        self.neg_vec = np.zeros(n_active)
        self.neg0 = 0.0
        for fid in sorted(ev.negative):
            self.neg_vec += theta_row(fid)
            self.neg0 += net.theta0[fid]

    def base_for(self, xi: np.ndarray) -> np.ndarray:
        if len(self.transformed) == 0:
            return -self.neg_vec
        return xi @ self.theta_t - self.neg_vec

    def envelope_const(self, xi: np.ndarray) -> float:
        return float(sum(
            x * t0 - f_star(x) for x, t0 in zip(xi, self.theta0_t)
        )) - self.neg0

    def bound(self, xi: np.ndarray) -> float:
        log_norm, _ = signed_subset_eval(
            self.theta0_e, self.theta_e, self.base_for(xi),
            self.log_p, self.log_1mp, False, SIGN_TOL,
        )
        return self.envelope_const(xi) + log_norm

    def marginals(self, xi: np.ndarray) -> dict[int, float]:
        _, marg = signed_subset_eval(
            self.theta0_e, self.theta_e, self.base_for(xi),
            self.log_p, self.log_1mp, True, SIGN_TOL,
        )
        out = {d: float(marg[j]) for j, d in enumerate(self.active_ids)}
        for d in self.net.disorder_ids:
            if d not in out:
                out[d] = float(self.net.priors[self.net.index[d]])
        return out


def transformed_bound(net: NoisyOrNetwork, ev: Evidence,
                      state: VariationalState) -> float:
    """Log-scale upper bound on P(evidence) for the state's xi and exact set."""
    missing = ev.positive - (state.exact_set | set(state.xi))
    if missing:
        raise ValueError(f"state does not cover positive findings {sorted(missing)}")
    ctx = _RequestContext(net, ev, state.exact_set)
    xi = np.array([state.xi[f] for f in ctx.transformed])
    return ctx.bound(xi)


def optimize_xi(net: NoisyOrNetwork, ev: Evidence, exact_set: frozenset[int] = frozenset(),
                rel_tol: float = 1e-8, max_sweeps: int = 200) -> VariationalState:
    """Coordinate descent on the bound, one bounded 1-D minimization per xi.

    Updates are only accepted when they improve the bound, so the per-sweep
    trace is non-increasing and the result never exceeds the xi=1 start.
    """
    ctx = _RequestContext(net, ev, frozenset(exact_set))
    n_t = len(ctx.transformed)
    if n_t == 0:
        bound = ctx.bound(np.zeros(0))
        return VariationalState({}, frozenset(exact_set), bound, 0, (bound,))

    xi = np.ones(n_t)
    current = ctx.bound(xi)
    if not np.isfinite(current):
        raise NumericalError("initial bound is non-finite")
    trace = [current]

    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        previous = current
        for i in range(n_t):
            base_wo = ctx.base_for(xi) - xi[i] * ctx.theta_t[i]
            rest = ctx.envelope_const(xi) - (
                xi[i] * ctx.theta0_t[i] - f_star(xi[i])
            )

            def coord_bound(x, _i=i, _base=base_wo, _rest=rest):
                log_norm, _ = signed_subset_eval(
                    ctx.theta0_e, ctx.theta_e, _base + x * ctx.theta_t[_i],
                    ctx.log_p, ctx.log_1mp, False, SIGN_TOL,
                )
                return _rest + (x * ctx.theta0_t[_i] - f_star(x)) + log_norm

            try:
                result = minimize_scalar(
                    coord_bound, bounds=(XI_FLOOR, XI_CEIL), method="bounded",
                    options={"xatol": 1e-7, "maxiter": 100},
                )
            except NumericalError as exc:
                raise NumericalError(
                    f"non-finite bound while optimizing finding {ctx.transformed[i]}: {exc}"
                ) from exc
            candidate = float(result.x)
            value = float(result.fun)
            if np.isfinite(value) and value < current:
                xi[i] = candidate
                current = value
        trace.append(current)
        if abs(previous - current) <= rel_tol * max(1.0, abs(previous)):
            break

    state = VariationalState(
        {f: float(x) for f, x in zip(ctx.transformed, xi)},
        frozenset(exact_set), current, sweep, tuple(trace),
    )
    return state


def select_exact_set(net: NoisyOrNetwork, ev: Evidence, k: int) -> frozenset[int]:
    """Greedily promote the positive finding whose exact treatment most lowers
    the optimized bound, k times (or until every positive finding is exact)."""
    if k > MAX_EXACT_SET:
        raise RefusalError(f"exact-set budget {k} exceeds {MAX_EXACT_SET}")
    chosen: set[int] = set()
    for _ in range(min(k, len(ev.positive))):
        best_finding = None
        best_bound = math.inf
        for candidate in sorted(ev.positive - chosen):
            state = optimize_xi(net, ev, frozenset(chosen | {candidate}))
            if state.bound < best_bound:
                best_bound = state.bound
                best_finding = candidate
        chosen.add(best_finding)
    return frozenset(chosen)


def variational_posteriors(net: NoisyOrNetwork, ev: Evidence, k: int | None = None,
                           rel_tol: float = 1e-8,
                           max_sweeps: int = 200) -> tuple[dict[int, float], VariationalState]:
    """Marginals under the transformed + exact-set factorization.

    ``k`` defaults to min(|positives|, 8). With k = |positives| the result is
    exact. Disorders untouched by the evidence keep their priors.
    """
    net.check_evidence(ev)
    if k is None:
        k = min(len(ev.positive), 8)
    exact_set = select_exact_set(net, ev, k)
    state = optimize_xi(net, ev, exact_set, rel_tol=rel_tol, max_sweeps=max_sweeps)
    ctx = _RequestContext(net, ev, exact_set)
    xi = np.array([state.xi[f] for f in ctx.transformed])
    marginals = ctx.marginals(xi)
    return marginals, state


@dataclass(frozen=True)
class SuggestedTest:
    finding_id: int
    name: str
    weight: float


@dataclass(frozen=True)
class DifferentialEntry:
    disorder_id: int
    name: str
    category: str
    posterior: float
    processes: tuple[int, ...]
    suggested_tests: tuple[SuggestedTest, ...]


@dataclass(frozen=True)
class Differential:
    entries: tuple[DifferentialEntry, ...]

    def to_dict(self) -> dict:
        return {
            "differential": [
                {
                    "disorder_id": e.disorder_id,
                    "name": e.name,
                    "category": e.category,
                    "posterior": e.posterior,
                    "processes": list(e.processes),
                    "suggested_tests": [
                        {"finding_id": t.finding_id, "name": t.name, "weight": t.weight}
                        for t in e.suggested_tests
                    ],
                }
                for e in self.entries
            ]
        }


def rank_differential(marginals: dict[int, float], kb: KnowledgeBase,
                      ev: Evidence, top_n: int = 20) -> Differential:
    """Top disorders by marginal; ties go to the smaller id.

    Suggested confirmatory tests are the disorder's both-assert-and-negate
    links not already observed, highest weight first.
    """
    ranked = sorted(marginals.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    observed = ev.positive | ev.negative
    entries = []
    for did, posterior in ranked:
        disorder = kb.disorders[did]
        tests = [
            SuggestedTest(l.finding_id, kb.findings[l.finding_id].name,
                          l.weight if l.weight is not None else 0.0)
            for l in kb.links_by_disorder.get(did, [])
            if l.concomitance is Concomitance.BothAssertNegate
            and l.finding_id not in observed
        ]
        tests.sort(key=lambda t: (-t.weight, t.finding_id))
        entries.append(DifferentialEntry(
            disorder_id=did,
            name=disorder.name,
            category=disorder.category.value,
            posterior=float(posterior),
            processes=disorder.processes,
            suggested_tests=tuple(tests),
        ))
    return Differential(tuple(entries))
