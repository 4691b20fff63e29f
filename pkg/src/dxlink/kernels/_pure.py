"""Pure-Python (numpy) implementations of the hot kernels.

Always importable; selected when the compiled core is absent or when
``DXLINK_PURE`` is set. See ``kernels.__init__`` for the contract.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalError

# Inclusion-exclusion cancellation amplifies per-term rounding by mass/total;
# past this ratio the evaluation is redone in extended precision.
_RETRY_RATIO = 1e4


def closure_reach(n, indptr, parents, topo):
    """Transitive closure via per-node ancestor bitsets (Python big ints)."""
    indptr = np.asarray(indptr, dtype=np.int64)
    parents = np.asarray(parents, dtype=np.int64)
    topo = np.asarray(topo, dtype=np.int64)

    anc_bits = [0] * n
    for v in topo.tolist():
        bits = 0
        for p in parents[indptr[v]:indptr[v + 1]].tolist():
            bits |= anc_bits[p] | (1 << p)
        anc_bits[v] = bits

    desc: list[int] = []
    anc: list[int] = []
    for v in range(n):
        bits = anc_bits[v]
        while bits:
            low = bits & -bits
            anc.append(low.bit_length() - 1)
            desc.append(v)
            bits ^= low
    return np.asarray(desc, dtype=np.int64), np.asarray(anc, dtype=np.int64)


def _evaluate(theta0_e, theta_e, base, log_p, log_1mp, want_marginals, dtype):
    n_exact = theta0_e.shape[0]
    n_dis = base.shape[0]
    n_sub = 1 << n_exact

    theta0_e = theta0_e.astype(dtype)
    theta_e = theta_e.astype(dtype)
    base = base.astype(dtype)
    log_p = log_p.astype(dtype)
    log_1mp = log_1mp.astype(dtype)

    if n_exact == 0:
        member = np.zeros((1, 0), dtype=dtype)
    else:
        member = (
            (np.arange(n_sub, dtype=np.uint32)[:, None]
             >> np.arange(n_exact, dtype=np.uint32)[None, :]) & 1
        ).astype(dtype)

    sign = 1.0 - 2.0 * (member.sum(axis=1).astype(np.int64) & 1)
    const = -(member @ theta0_e)

    if n_dis:
        shifted = log_p[None, :] + (base[None, :] - member @ theta_e)
        log_factor = np.logaddexp(log_1mp[None, :], shifted)
        term_log = const + log_factor.sum(axis=1)
    else:
        log_factor = shifted = np.zeros((n_sub, 0), dtype=dtype)
        term_log = const

    if not np.all(np.isfinite(term_log)):
        raise NumericalError("non-finite term in signed subset sum")

    peak = term_log.max()
    weights = np.exp(term_log - peak)
    pos = weights[sign > 0].sum()
    neg = weights[sign < 0].sum()

    marg_num = None
    if want_marginals and n_dis:
        q = np.exp(shifted - log_factor)
        marg_num = ((sign * weights)[:, None] * q).sum(axis=0)
    elif want_marginals:
        marg_num = np.zeros(0, dtype=dtype)
    return float(peak), pos, neg, marg_num


def signed_subset_eval(theta0_e, theta_e, base, log_p, log_1mp,
                       want_marginals=False, tol=1e-9):
    """Signed log-sum-exp over the 2^|E| inclusion-exclusion terms."""
    theta0_e = np.asarray(theta0_e, dtype=np.float64)
    theta_e = np.atleast_2d(np.asarray(theta_e, dtype=np.float64))
    base = np.asarray(base, dtype=np.float64)
    log_p = np.asarray(log_p, dtype=np.float64)
    log_1mp = np.asarray(log_1mp, dtype=np.float64)

    peak, pos, neg, marg_num = _evaluate(
        theta0_e, theta_e, base, log_p, log_1mp, want_marginals, np.float64)
    total = pos - neg
    mass = pos + neg
    if theta0_e.shape[0] and mass > 0.0 and abs(total) < mass / _RETRY_RATIO:
        peak, pos, neg, marg_num = _evaluate(
            theta0_e, theta_e, base, log_p, log_1mp, want_marginals, np.longdouble)
        total = pos - neg
        mass = pos + neg

    if total <= 0.0:
        if mass > 0.0 and total < -tol * mass:
            raise NumericalError(
                f"inclusion-exclusion normalizer is negative ({float(total):.3e} "
                f"relative to mass {float(mass):.3e})"
            )
        total = np.finfo(np.float64).tiny
    log_norm = peak + float(np.log(total))

    marginals = None
    if want_marginals:
        marginals = np.clip((marg_num / total).astype(np.float64), 0.0, 1.0)
    return log_norm, marginals
