from .allen_cahn import EXACT_CAPS, INEXACT_CAPS, AllenCahn2D, Splitting
from .base import Problem
from .dahlquist import Dahlquist, dahlquist
from .gray_scott import GrayScott1D
from .heat import Heat1DForced, Heat2DForced

PROBLEMS = {
    "dahlquist": Dahlquist,
    "heat1d_forced": Heat1DForced,
    "heat2d_forced": Heat2DForced,
    "allen_cahn2d": AllenCahn2D,
    "gray_scott1d": GrayScott1D,
}


def make_problem(name: str, **params) -> Problem:
    try:
        cls = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem class {name!r}, choose from {sorted(PROBLEMS)}") from None
    return cls(**params)


def heat1d_forced(nu=0.1, freq=8, nvars=511, **kw):
    return Heat1DForced(nu=nu, freq=freq, nvars=nvars, **kw)


def heat2d_forced(nvars=129, **kw):
    return Heat2DForced(nvars=nvars, **kw)


def allen_cahn2d(eps=0.04, nvars=128, splitting="fully-implicit", caps=None, **kw):
    return AllenCahn2D(nvars=nvars, eps=eps, splitting=splitting, caps=caps, **kw)


def gray_scott1d(A=0.09, B=0.086, D=0.01, nvars=513, caps=None, **kw):
    return GrayScott1D(nvars=nvars, A=A, B=B, D=D, caps=caps, **kw)


__all__ = [
    "AllenCahn2D", "Dahlquist", "GrayScott1D", "Heat1DForced", "Heat2DForced", "Problem",
    "Splitting", "EXACT_CAPS", "INEXACT_CAPS", "PROBLEMS", "make_problem",
    "dahlquist", "heat1d_forced", "heat2d_forced", "allen_cahn2d", "gray_scott1d",
]
