"""Hot numerical kernels with a compiled core and a pure-Python fallback.

Two implementations of the same contract live side by side:

* ``_core`` -- Cython extension, built by ``setup.py`` when a compiler and
  Cython are available.
* ``_pure`` -- numpy implementation, always importable.

The compiled core is preferred at import time; set ``DXLINK_PURE=1`` to force
the fallback (used by the benchmark and the backend-parity tests).

Contract:

``closure_reach(n, indptr, parents, topo)``
    Reflexive-free transitive closure over node indices ``0..n-1``. Parent
    lists are CSR-encoded; ``topo`` orders nodes parents-first. Returns two
    int64 arrays (descendant, ancestor) of equal length.

``signed_subset_eval(theta0_e, theta_e, base, log_p, log_1mp, want_marginals,
                     tol)``
    Inclusion-exclusion sum over all subsets S of the exact findings:
    ``sum_S (-1)^|S| exp(-sum_{i in S} theta0_e[i])
    * prod_j ((1-p_j) + p_j exp(base_j - sum_{i in S} theta_e[i, j]))``
    evaluated in log space with sign tracking. Returns ``(log_norm,
    marginals)`` where ``marginals`` (or None) are the per-disorder posterior
    ratios of the signed sums, clamped to [0, 1]. Raises ``NumericalError``
    when cancellation drives the normalizer more negative than ``tol``
    relative to total mass.
"""

import os

if os.environ.get("DXLINK_PURE"):
    from . import _pure as _backend

    backend_name = "pure"
else:
    try:
        from . import _core as _backend  # type: ignore[attr-defined]

        backend_name = "cython"
    except ImportError:
        from . import _pure as _backend

        backend_name = "pure"

closure_reach = _backend.closure_reach
signed_subset_eval = _backend.signed_subset_eval

__all__ = ["closure_reach", "signed_subset_eval", "backend_name"]
