import numpy as np
import pytest
from hypothesis import strategies as st

from sgfnoma import SystemParams


def db(x):
    return 10.0 ** (x / 10.0)


@st.composite
def system_params(draw, max_users=8):
    p0 = db(draw(st.floats(-10, 50)))
    ps = db(draw(st.floats(-10, 50)))
    r0 = draw(st.floats(0.05, 3.0))
    rs = draw(st.floats(0.0, 3.0))
    m = draw(st.integers(1, max_users))
    return SystemParams(p0, ps, r0, rs, m)


@st.composite
def realizations(draw, m_users):
    g2 = draw(st.floats(0.0, 20.0))
    h2 = sorted(draw(st.lists(st.floats(0.0, 20.0), min_size=m_users, max_size=m_users)))
    return g2, np.array(h2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
