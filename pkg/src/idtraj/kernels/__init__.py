"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``IDTRAJ_DISABLE_NUMBA=1``
to force the numpy path (also used automatically when numba is missing).
Both backends expose the same functions with the same signatures:

``lasso_cd_gram(G, c, beta, penalty, tol, max_sweeps)``
    Cyclic coordinate descent on ``0.5 b'Gb - c'b + sum(penalty * |b|)``.
``energy_terms(obs, ens)``
    The ``(ED, EI)`` components of the energy score.
``variogram_sum(obs, ens)``
    Order-1 variogram score of a single ensemble.
"""

import os

from . import _numpy

BACKEND = "numpy"

_disabled = os.environ.get("IDTRAJ_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

if not _disabled:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _numpy
else:
    _impl = _numpy

lasso_cd_gram = _impl.lasso_cd_gram
energy_terms = _impl.energy_terms
variogram_sum = _impl.variogram_sum

__all__ = ["BACKEND", "lasso_cd_gram", "energy_terms", "variogram_sum"]
