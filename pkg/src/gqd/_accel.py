"""Optional numba acceleration.

Kernels are written once in plain numpy-compatible Python and compiled with
``numba.njit`` when numba is importable and ``GQD_DISABLE_NUMBA`` is unset
(or "0").  ``GQD_THREADS`` caps the numba thread pool.
"""
import logging
import os

logger = logging.getLogger(__name__)

_disabled = os.environ.get("GQD_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("disabled by GQD_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
    _threads = os.environ.get("GQD_THREADS")
    if _threads:
        try:
            numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            logger.warning("ignoring malformed GQD_THREADS=%r", _threads)
except ImportError as exc:
    numba = None
    HAVE_NUMBA = False
    logger.debug("numba unavailable (%s); using numpy kernels", exc)


def njit(func=None, **kwargs):
    """``numba.njit(cache=True, ...)`` or the identity when numba is off."""
    def wrap(f):
        if not HAVE_NUMBA:
            return f
        opts = {"cache": True}
        opts.update(kwargs)
        return numba.njit(**opts)(f)

    return wrap if func is None else wrap(func)
