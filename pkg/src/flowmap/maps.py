"""Built-in flow maps used throughout the tests and the CLI."""

from __future__ import annotations

from functools import lru_cache

from .poly import FlowMap, Polynomial


@lru_cache(maxsize=1)
def uv_example_map() -> FlowMap:
    """Hypothetical pair of gates u and v.

    The fault-tolerant u holds two u gates and two v gates and survives any
    single internal failure; the fault-tolerant v holds three of each.  The
    components are the complements of the zero- and one-failure probabilities.
    """
    u = Polynomial.variable("u", ("u", "v"))
    v = Polynomial.variable("v", ("u", "v"))
    gu = 1 - (1 - u) ** 2 * (1 - v) ** 2 - 2 * u * (1 - u) * (1 - v) ** 2 - 2 * v * (1 - v) * (1 - u) ** 2
    gv = 1 - (1 - u) ** 3 * (1 - v) ** 3 - 3 * u * (1 - u) ** 2 * (1 - v) ** 3 - 3 * v * (1 - v) ** 2 * (1 - u) ** 3
    return FlowMap(("u", "v"), {"u": gu, "v": gv})


def one_parameter_map(coefficient, exponent: int = 2, name: str = "g") -> FlowMap:
    """gamma -> C * gamma^t with a single location; its nonzero fixed point is
    (1/C)^(1/(t-1))."""
    return FlowMap.one_parameter(coefficient, exponent, name)
