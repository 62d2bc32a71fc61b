import functools

import pytest

from kgrec import _pykernels

try:
    from kgrec import _kernels
except ImportError:  # extension not built
    _kernels = None


BACKENDS = [pytest.param(_pykernels, id="python")]
if _kernels is not None:
    BACKENDS.append(pytest.param(_kernels, id="cython"))


def recursive_levenshtein(a: str, b: str) -> int:
    """Edit distance straight from the recursive case definition (memoized on suffix offsets)."""

    @functools.lru_cache(maxsize=None)
    def lev(i: int, j: int) -> int:
        if j == len(b):
            return len(a) - i
        if i == len(a):
            return len(b) - j
        if a[i] == b[j]:
            return lev(i + 1, j + 1)
        return 1 + min(lev(i + 1, j), lev(i, j + 1), lev(i + 1, j + 1))

    return lev(0, 0)


def angle_vectors():
    """Six text-only movies on the unit circle; cosine between them is cos(angle difference).

    Angles (deg): m1 0, m2 10, m3 20, m4 90, m5 95, m6 180.
    Top-2 of m1 is [m2, m3]; top-2 of m4 is [m5, m3].
    """
    import math

    from kgrec.recommender import MovieFeatureVectors
    from kgrec.tfidf import SparseVector

    angles = {"m1": 0, "m2": 10, "m3": 20, "m4": 90, "m5": 95, "m6": 180}
    out = {}
    for mid, deg in angles.items():
        rad = math.radians(deg)
        out[mid] = MovieFeatureVectors(mid, SparseVector.from_dict({0: math.cos(rad), 1: math.sin(rad)}))
    return out


# one line per acceptance criterion, echoed after the run whatever the capture mode
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
