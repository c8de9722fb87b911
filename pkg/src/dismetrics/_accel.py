"""Numba switch.

Set ``DISMETRICS_DISABLE_NUMBA=1`` to run every kernel on the pure-numpy path.
``DISMETRICS_THREADS`` caps the numba worker pool.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("DISMETRICS_DISABLE_NUMBA", "").strip().lower() not in _FALSY

# the TBB layer warns on the older system TBB; OpenMP is always present
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

HAVE_NUMBA = numba is not None and not NUMBA_DISABLED


def njit(f=None, **kwargs):
    """``numba.njit`` with caching, or an identity decorator when numba is off."""
    if f is None:
        return lambda g: njit(g, **kwargs)
    if not HAVE_NUMBA:
        return f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return numba.njit(**kwargs)(f)


prange = numba.prange if HAVE_NUMBA else range


def configure_threads():
    """Apply ``DISMETRICS_THREADS`` to the numba pool; returns the count in use."""
    raw = os.environ.get("DISMETRICS_THREADS")
    if not HAVE_NUMBA:
        return 1
    limit = numba.config.NUMBA_NUM_THREADS
    if raw:
        try:
            limit = max(1, min(int(raw), limit))
        except ValueError:
            pass
        numba.set_num_threads(limit)
    return numba.get_num_threads()


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
