"""Named tolerance constants.

Every limit statement in the library is replaced by a finite-horizon
statistic, so each operation needs a declared cut-off.  The defaults below
are used everywhere unless a caller overrides them per call.
"""

from dataclasses import asdict, dataclass

DENSITY_TOL = 1e-2
A2_TOL = 1e-2
A3_TOL = 1e-2
O_TOL = 1e-2
LEVEL_TOL = 1e-6
BIG_C_CAP = 1e6


@dataclass(frozen=True)
class Tolerances:
    density_tol: float = DENSITY_TOL
    a2_tol: float = A2_TOL
    a3_tol: float = A3_TOL
    o_tol: float = O_TOL
    level_tol: float = LEVEL_TOL
    big_c_cap: float = BIG_C_CAP

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
