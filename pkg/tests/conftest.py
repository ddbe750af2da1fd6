import numpy as np
import pytest

import pulsesync as ps

# the two-oscillator reference setup used across the suite:
# symmetric unit coupling, rate 2, pulse period 1.01, width 0.1
XI = 1.01
W = 0.1
OMEGA = 2.0


@pytest.fixture(scope="session")
def ref_pulse():
    return ps.gaussian_comb(XI, W)


@pytest.fixture(scope="session")
def ref_params(ref_pulse):
    return ps.TheoryParams(pulse=ref_pulse, omega=OMEGA, jtilde=1.0, delta_t=0.01)


@pytest.fixture(scope="session")
def two_osc_spec(ref_pulse):
    from pulsesync import dde, network

    return dde.SystemSpec(
        pulse=ref_pulse,
        coupling=network.make_all_to_all(2, 1.0),
        omega=OMEGA,
        delta_t=0.01,
    )


@pytest.fixture(scope="session")
def fig_two_run(two_osc_spec, ref_params):
    """Reference decay run: phases start at xi/2 +- 0.05, lag 0.01."""
    from pulsesync import dde, lintheory

    pin = lintheory.period_integrals(ref_params)
    theta0 = np.array([XI / 2 + 0.05, XI / 2 - 0.05])
    traj = dde.integrate_rk4(two_osc_spec, theta0, t_end=8.2 * pin.psi)
    return traj
