"""Built-in three-state Frank/Gaussian simulation scenarios."""

from __future__ import annotations

import numpy as np

from .copulas import CopulaSpec, Family
from .margins import MarginalSpec
from .model import CopulaHmm, StateSpec

SCENARIO_THETAS = {
    1: (30.0, 30.0, 30.0),
    2: (5.0, 30.0, 30.0),
    3: (5.0, 5.0, 30.0),
    4: (5.0, 5.0, 5.0),
}
SCENARIO_GAMMA = np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])
SCENARIO_PI = np.array([0.0, 1.0, 0.0])
SCENARIO_SD = 0.5


def scenario_mean(k: int, h: int) -> float:
    """Mean of margin ``h`` in state ``k`` (both 1-indexed): ``k + 3 * [h == 2]``."""
    return k + 3.0 * (h == 2)


def scenario_model(index: int, copula_family=Family.FRANK) -> CopulaHmm:
    """Scenario ``index`` in 1..4; ``copula_family`` other than Frank gives a misspecified variant."""
    if index not in SCENARIO_THETAS:
        raise ValueError(f"scenario must be one of {sorted(SCENARIO_THETAS)}")
    fam = Family.parse(copula_family)
    states = []
    for k, theta in enumerate(SCENARIO_THETAS[index], start=1):
        margins = [MarginalSpec.gaussian(scenario_mean(k, h), SCENARIO_SD) for h in (1, 2)]
        cop = CopulaSpec(Family.FRANK, theta) if fam is Family.FRANK else CopulaSpec(fam)
        states.append(StateSpec(margins, cop))
    return CopulaHmm(SCENARIO_PI, SCENARIO_GAMMA, states)
