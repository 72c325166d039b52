import sys
from functools import lru_cache
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from dsscatter.dirac_solver import DiracProblem, solve_cgo  # noqa: E402
from dsscatter.geometry import ConvexCurve  # noqa: E402

# fixed points per wavelength for the disk studies: |k| = 8, 16, 32 on n = 512, 1024, 2048 with L = 2
PPW_GRIDS = {8.0: 512, 16.0: 1024, 32.0: 2048}
PPW_L = 2.0


@lru_cache(maxsize=None)
def disk_solution(k: float, n: int = 0, L: float = PPW_L, theta: float = 0.0):
    """Cached unit-disk solve shared by several test modules."""
    import numpy as np

    n = n or PPW_GRIDS[k]
    problem = DiracProblem(ConvexCurve.disk(), k * np.exp(1j * theta), 1, n, L)
    return problem, solve_cgo(problem, tol=1e-12)
