import pytest

from flowmap.maps import uv_example_map
from flowmap.tmr import tmr_flow_map


@pytest.fixture(scope="session")
def tmr():
    return tmr_flow_map()


@pytest.fixture(scope="session")
def uv():
    return uv_example_map()


# Expected coefficients of the wire component, name -> exponent map, counted
# by hand from the lane structure: a lane goes wrong when exactly one of its
# error-correcting voter and transversal wire fails (p = gw + gv - 2 gw gv),
# and the block fails when a majority of the three lanes is wrong
# (3 p^2 - 2 p^3).  Expanding gives these thirteen integer terms.
WIRE_MAP_TERMS = {
    (("v", 1), ("w", 1)): 6,
    (("v", 2),): 3,
    (("w", 2),): 3,
    (("v", 3),): -2,
    (("v", 2), ("w", 1)): -18,
    (("v", 3), ("w", 1)): 12,
    (("v", 1), ("w", 2)): -18,
    (("v", 2), ("w", 2)): 36,
    (("v", 3), ("w", 2)): -24,
    (("w", 3),): -2,
    (("v", 1), ("w", 3)): 12,
    (("v", 2), ("w", 3)): -24,
    (("v", 3), ("w", 3)): 16,
}

# Voter component: substitute the transversal unit's rate by the voter rate
# and the per-lane EC unit's rate by 3 q^2 (1-q) + q^3, then expand.
VOTER_MAP_TERMS = {
    (("v", 2),): 3,
    (("v", 3),): 16,
    (("v", 4),): -39,
    (("v", 5),): -126,
    (("v", 6),): 474,
    (("v", 7),): -288,
    (("v", 8),): -936,
    (("v", 9),): 2080,
    (("v", 10),): -1824,
    (("v", 11),): 768,
    (("v", 12),): -128,
}
