"""Deterministic equivalents and random-matrix checks for Gram matrices with a variance profile."""

import json

import numpy as np

from . import _gramspec
from ._gramspec import InvalidArgument, NumericalFailure, __version__

__all__ = [
    "InvalidArgument",
    "NumericalFailure",
    "__version__",
    "validate",
    "solve",
    "solve_gram",
    "density",
    "analyze_zero",
    "stability",
    "rotation_inversion",
    "sample",
    "spectrum",
    "run_cli",
]


def _profile(s):
    return np.ascontiguousarray(np.asarray(s, dtype=float))


def validate(s, max_l=8):
    return json.loads(_gramspec.validate(_profile(s), max_l))


def solve(s, z, tol=1e-10):
    """M = (M1, M2) at z with Im z > 0, and its residual."""
    return _gramspec.solve(_profile(s), complex(z), tol)


def solve_gram(s, zeta):
    return _gramspec.solve_gram(_profile(s), complex(zeta))


def density(s, grid, threads=1):
    out = json.loads(_gramspec.density(_profile(s), list(map(float, grid)), threads))
    out["omega"] = np.asarray(out["omega"])
    out["density"] = np.asarray(out["density"])
    return out


def analyze_zero(s):
    return json.loads(_gramspec.analyze_zero(_profile(s)))


def stability(s, z):
    return json.loads(_gramspec.stability(_profile(s), complex(z)))


def rotation_inversion(u1, u2, a):
    return json.loads(
        _gramspec.rotation_inversion(
            np.asarray(u1, dtype=complex), np.asarray(u2, dtype=complex), np.asarray(a, dtype=float)
        )
    )


def sample(s, distribution="gaussian-real", seed=0, trial=0):
    return _gramspec.sample(_profile(s), distribution, seed, trial)


def spectrum(x):
    return _gramspec.spectrum(np.asarray(x, dtype=complex))


def run_cli(args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _gramspec.run_cli([str(a) for a in args])
