import numpy as np
import pytest

from randers import (ConformalMetric, ConstantField, ConstantForm, Domain,
                     EuclideanMetric, ExactForm, MediumModel, PotentialBump,
                     RadialProfile, RandersSpec, SolverOptions,
                     zermelo_construct)


@pytest.fixture(scope="session")
def dom():
    return Domain(radius=1.0)


@pytest.fixture(scope="session")
def euclid_spec(dom):
    return RandersSpec(dom, EuclideanMetric())


@pytest.fixture(scope="session")
def wind_medium(dom):
    return MediumModel(dom, speed=ConstantField(1.0), wind=ConstantForm([0.5, 0.0]))


@pytest.fixture(scope="session")
def wind_spec(wind_medium):
    return zermelo_construct(wind_medium)


@pytest.fixture(scope="session")
def smooth_profile():
    return RadialProfile("2 - r^2")


@pytest.fixture(scope="session")
def smooth_alpha(smooth_profile):
    return ConformalMetric(smooth_profile)


@pytest.fixture(scope="session")
def smooth_spec(dom, smooth_alpha):
    return RandersSpec(dom, smooth_alpha)


@pytest.fixture(scope="session")
def bump():
    return PotentialBump(0.3, 1.0)


@pytest.fixture(scope="session")
def smooth_bump_spec(dom, smooth_alpha, bump):
    return RandersSpec(dom, smooth_alpha, ExactForm(bump))


@pytest.fixture(scope="session")
def kink_profile():
    return RadialProfile("2 - r")


@pytest.fixture(scope="session")
def opts():
    return SolverOptions()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
