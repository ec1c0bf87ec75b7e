import os

import numpy as np
from hypothesis import HealthCheck, settings

from hbpl.objectives import ObjectiveFunction

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def quad1d(mu):
    """``F(x) = mu x^2 / 2`` on the real line."""
    return ObjectiveFunction(
        name="quadratic-1d",
        dim=1,
        value=lambda x: 0.5 * mu * np.sum(np.asarray(x, dtype=float) ** 2, axis=-1),
        grad=lambda x: mu * np.asarray(x, dtype=float),
        f_star=0.0,
        lipschitz_L=mu,
        pl_mu=mu,
        is_convex=True,
        project=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )


# criterion number -> "PASS"/"FAIL" line, filled by the acceptance suite
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
