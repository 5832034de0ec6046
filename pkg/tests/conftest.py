import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oseenwake.asymptotics import (DecayExponents, PerturbationModel, PolarGrid,  # noqa: E402
                                   picard_solve, transformed_coefficients)
from oseenwake.fields import BodySpec, Scene, SourceBump, SourceTerm, manufactured_traces  # noqa: E402


def bump_scene(center=(0.5, 0.3), radius=1.0, amplitude=(1.0, 0.5)):
    return Scene(SourceTerm((SourceBump(tuple(center), radius, tuple(amplitude)),)))


@pytest.fixture(scope="session")
def single_bump_scene():
    """The single-bump, no-body scene of the asymptote comparison."""
    return bump_scene()


@pytest.fixture(scope="session")
def picard_source():
    """Forcing for the fixed-point runs; it sits outside the unit disk cut out by the grid."""
    return SourceTerm((SourceBump((1.8, 0.0), 0.6, (1.0, 0.5)),))


@pytest.fixture(scope="session")
def default_grid():
    return PolarGrid()


@pytest.fixture(scope="session")
def picard_runs(picard_source, default_grid):
    """Picard runs keyed by the exponents (A, B), computed once per session."""
    cache = {}

    def run(A=0.0, B=0.0, nu=0.05, epsilon=0.25):
        key = (A, B, nu, epsilon)
        if key not in cache:
            co = transformed_coefficients(DecayExponents(A, B), PerturbationModel(nu, epsilon), picard_source)
            cache[key] = picard_solve(co, default_grid)
        return cache[key]

    return run


@pytest.fixture(scope="session")
def manufactured_scene():
    body = manufactured_traces((0.0, 0.0), (1.0, 0.3), BodySpec(1.0))
    return Scene(body=body)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
