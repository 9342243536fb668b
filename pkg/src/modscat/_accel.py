"""Backend switch for the hot kernels.

Set ``MODSCAT_NUMBA=0`` in the environment to force the pure-numpy path.
``MODSCAT_THREADS`` caps the FFT worker threads (default 1); the kernels are serial.
"""
import os


def _env_flag(name, default=True):
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


def _have_numba():
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


HAVE_NUMBA = _have_numba()
USE_NUMBA = HAVE_NUMBA and _env_flag("MODSCAT_NUMBA", True)


def thread_cap():
    raw = os.environ.get("MODSCAT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f
    return wrap


if HAVE_NUMBA:
    from numba import njit
else:
    njit = _noop_jit
