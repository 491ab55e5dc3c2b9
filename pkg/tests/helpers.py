"""Small builders shared by the controller-level tests."""

from pintsdc.controller import Controller, ControllerConfig, LevelSpec
from pintsdc.hierarchy import LevelParams
from pintsdc.problems import Dahlquist, Heat1DForced
from pintsdc.sweeper import SweeperConfig


def dahlquist_specs(nodes, dt, restol, lam=-1.0, qd="LU"):
    return [LevelSpec(lambda: Dahlquist(lam=lam), SweeperConfig(num_nodes=m, qdelta_implicit=qd),
                      LevelParams(dt=dt, restol=restol)) for m in nodes]


def heat_specs(nvars, nodes, dt, restol, freq=4, nu=0.1):
    return [LevelSpec(lambda n=n: Heat1DForced(nvars=n, freq=freq, nu=nu),
                      SweeperConfig(num_nodes=m), LevelParams(dt=dt, restol=restol))
            for n, m in zip(nvars, nodes)]


def run(specs, t_end, t0=0.0, **cfg):
    ctrl = Controller(specs, ControllerConfig(**cfg))
    prob = ctrl.problem_template
    u, stats = ctrl.run(prob.u_init(t0), t0, t_end)
    return u, stats, ctrl
