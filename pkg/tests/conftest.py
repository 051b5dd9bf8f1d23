"""Shared test helpers: seeded expression generators and finite differences."""

import random
from fractions import Fraction

import pytest

from subcurv import calculus as ca


def random_polynomial(rng: random.Random, nvars: int, max_terms: int = 5,
                      max_degree: int = 3) -> ca.Expr:
    terms = []
    for _ in range(rng.randint(1, max_terms)):
        coeff = ca.const(Fraction(rng.randint(-8, 8), rng.randint(1, 4)))
        factors = [coeff]
        for v in range(nvars):
            deg = rng.randint(0, max_degree)
            if deg:
                factors.append(ca.pow_(ca.var(v), deg))
        terms.append(ca.mul(*factors))
    return ca.add(*terms)


def random_rational_power_expr(rng: random.Random, nvars: int) -> ca.Expr:
    """Polynomial plus a fractional power of a strictly positive base."""
    base = ca.add(ca.ONE, ca.pow_(random_polynomial(rng, nvars, 3, 2), 2))
    exp = Fraction(rng.choice([1, -1, 3, -3]), rng.choice([2, 4]))
    return ca.add(random_polynomial(rng, nvars, 3, 2), ca.pow_(base, exp))


def central_difference(fn, point, i: int, h: float = 1e-5) -> float:
    up = list(point)
    dn = list(point)
    up[i] += h
    dn[i] -= h
    return (fn(up) - fn(dn)) / (2 * h)


def assert_close(actual, expected, rel=1e-9, abs_tol=0.0, msg=""):
    scale = max(abs(expected), 1.0)
    err = abs(actual - expected)
    assert err <= max(rel * scale, abs_tol), (
        f"{msg} expected {expected!r}, got {actual!r} (err {err:.3e})"
    )


@pytest.fixture
def rng():
    return random.Random(20240817)
