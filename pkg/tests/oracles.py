"""Independent reference implementations used only to check the real code.

Everything here is deliberately written the slow, obvious way (plain Python,
no shared helpers with the package) so the tests compare two genuinely
different routes to the same answer.
"""

from __future__ import annotations

import itertools
import math


def dfs_reachability(node_ids, edges):
    """All (descendant, ancestor) pairs by per-node DFS over child->parent edges."""
    parents = {n: set() for n in node_ids}
    for child, parent in edges:
        parents[child].add(parent)
    pairs = set()
    for start in node_ids:
        stack = list(parents[start])
        seen = set()
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            pairs.add((start, node))
            stack.extend(parents[node])
    return pairs


def joint_enumeration(priors, links, leaks, positive, negative):
    """Exact noisy-OR marginals by brute force over every disease state.

    priors: list of p_j. links: dict (finding, j) -> weight. leaks: dict
    finding -> leak. Returns (marginals list, log evidence).
    """
    n = len(priors)
    findings = sorted(set(positive) | set(negative))
    evidence_prob = 0.0
    marg_num = [0.0] * n
    for state in itertools.product((0, 1), repeat=n):
        prob = 1.0
        for j, d in enumerate(state):
            prob *= priors[j] if d else (1.0 - priors[j])
        for f in findings:
            p_absent = 1.0 - leaks.get(f, 0.0)
            for j, d in enumerate(state):
                if d and (f, j) in links:
                    p_absent *= 1.0 - links[(f, j)]
            prob *= (1.0 - p_absent) if f in positive else p_absent
        evidence_prob += prob
        for j, d in enumerate(state):
            if d:
                marg_num[j] += prob
    if evidence_prob <= 0.0:
        raise ZeroDivisionError("evidence has probability zero")
    return [m / evidence_prob for m in marg_num], math.log(evidence_prob)


def negative_only_closed_form(priors, links, leaks, negative):
    """Per-disorder posterior when only negative findings are observed.

    Negatives never couple disorders: each disorder's odds shrink by
    exp(-sum of its thetas over the negated findings).
    """
    out = []
    for j, p in enumerate(priors):
        shrink = 1.0
        for f in negative:
            if (f, j) in links:
                shrink *= 1.0 - links[(f, j)]
        out.append(p * shrink / (p * shrink + (1.0 - p)))
    return out
