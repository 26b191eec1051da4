"""Shared fixtures; the expensive searches run once per session."""

import pytest
from hypothesis import HealthCheck, settings

from lyaprec.meanfield import mf_beta_level
from lyaprec.phase import locate_critical_point, trace_phase_curve

settings.register_profile(
    "stable",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("stable")


@pytest.fixture(scope="session")
def crit():
    return locate_critical_point()


@pytest.fixture(scope="session")
def mf_crit():
    # the flat-profile level curve diverges at a -> 0+, so keep the search
    # and its stencil away from the boundary
    return locate_critical_point(
        beta_level=mf_beta_level,
        d_map=lambda a, rho, beta: a,
        a_domain=lambda rho: (0.02, 0.98),
        fd_step=0.005,
    )


@pytest.fixture(scope="session")
def mini_curve():
    return trace_phase_curve([0.04, 0.07, 0.1])
