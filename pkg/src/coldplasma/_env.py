"""Runtime switches read from the environment."""
import os

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("MTP_NUMBA", "1") != "0"

try:
    THREADS = max(1, int(os.environ.get("MTP_THREADS", "1")))
except ValueError:
    THREADS = 1

PARALLEL = THREADS > 1
