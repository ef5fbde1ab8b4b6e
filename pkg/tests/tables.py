"""Decay tables shared by the acceptance and decay tests (computed once)."""
import math
from functools import lru_cache

from deltadisp.config import INERT, InteractionConfig, WeightSpec
from deltadisp.decay import NormSide, gaussian_input, run_decay

W = WeightSpec("SINGULAR-SUM")
UNWEIGHTED = (NormSide(), NormSide())
WEIGHTED = (NormSide(W, -1.0), NormSide(W, 1.0))


@lru_cache(maxsize=None)
def table(alpha: float, p: float, q: float, weighted: bool, projection: str, case: str = "GENERIC"):
    left, right = WEIGHTED if weighted else UNWEIGHTED
    return run_decay(InteractionConfig.single(alpha), gaussian_input(), p, q, left, right,
                     projection=projection, case=case)


def free_sup():
    return table(INERT, 1.0, math.inf, False, "FULL")
