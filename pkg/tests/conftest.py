import pytest

from mcvd.channel import PASSIVE, ChannelParams
from mcvd.stats import LinkConfig

# Reference configurations used throughout the suite: the absorbing geometry
# keeps Ts well past the response peak; the passive one honors the far-field
# validity bound r/(r+d) < 0.15.


@pytest.fixture(scope="session")
def absorbing():
    return ChannelParams(d=3.2e-6, r=4.5e-6, D=79.4e-12)


@pytest.fixture(scope="session")
def passive():
    return ChannelParams(d=10e-6, r=1.5e-6, D=79.4e-12, kind=PASSIVE)


@pytest.fixture(scope="session")
def passive_link(passive):
    from mcvd.channel import peak_time

    t_s = peak_time(passive) / 6.0
    return LinkConfig(Q=10_000, Ts=1.0, L=3, N=int(1.0 // t_s), t_s=t_s)


def make_absorbing_link(Q=1000, Ts=0.2, L=3):
    return LinkConfig(Q=Q, Ts=Ts, L=L)
