import math

import pytest

from aerocap.dynamics import BankSchedule, DynamicsMode, SimState, StopConditions, propagate
from aerocap.env_models import EARTH, VehicleModel, earth_exponential
from aerocap.guidance import GuidanceConfig, Predictor


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile the jitted integrator paths once, before any timed test."""
    atm = earth_exponential()
    veh = VehicleModel()
    entry = SimState(t=0.0, v=8000.0, gamma=math.radians(-2.0), chi=0.5 * math.pi,
                     r=EARTH.radius + 80.0e3, theta=0.0, delta=0.0)
    propagate(entry, BankSchedule.constant(0.5), StopConditions(t_max=2.0),
              EARTH, atm, veh, mode=DynamicsMode.full(), dt=0.05)
    propagate(entry, BankSchedule.constant(0.5), StopConditions(t_max=2.0),
              EARTH, atm, veh, mode=DynamicsMode.simplified(), dt=0.05)
    cfg = GuidanceConfig(target_apoapsis=EARTH.radius + 200.0e3,
                         prediction_t_max=2.0)
    Predictor(EARTH, atm, veh, cfg).predict_constant(entry, 0.5, 1.0, 1.0)
    from aerocap import _kernel
    _kernel.actuator_step(0.1, 0.0, 0.5, math.radians(15.0),
                          math.radians(5.0), math.radians(0.1), 0.05)
    env = _kernel.make_envpack(EARTH, atm, veh)
    _kernel.rk4_step_const((8000.0, -0.03, 1.5, EARTH.radius + 80.0e3, 0.0, 0.0),
                           0.05, 0.5, env)
