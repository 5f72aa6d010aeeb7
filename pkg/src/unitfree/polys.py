"""Seeded random test functions for identity checks."""

from __future__ import annotations

import itertools

import numpy as np

from . import expr as E
from .expr import Chart, Expr


def monomials(coords, degree: int) -> list:
    """All monomials of total degree ``<= degree`` as tuples of coordinate names."""
    return [m for d in range(degree + 1) for m in itertools.combinations_with_replacement(coords, d)]


def random_polynomial(chart: Chart | tuple, degree: int, rng: np.random.Generator,
                      scale: float = 1.0, digits: int = 3) -> Expr:
    """Dense polynomial with coefficients uniform in ``[-scale, scale]``.

    Coefficients are rounded to ``digits`` decimals so printed forms stay
    short; ``rng`` is consumed deterministically.
    """
    coords = chart.coords if isinstance(chart, Chart) else tuple(chart)
    out = E.ZERO
    for mono in monomials(coords, degree):
        c = round(float(rng.uniform(-scale, scale)), digits)
        if c == 0.0:
            continue
        term = E.Constant(c)
        for v in mono:
            term = term * E.Var(v)
        out = out + term
    return out


def random_positive(chart: Chart | tuple, rng: np.random.Generator, digits: int = 3) -> Expr:
    """``c + (affine)^2`` with ``c`` in ``[0.5, 1.5]``: positive everywhere."""
    coords = chart.coords if isinstance(chart, Chart) else tuple(chart)
    lin = random_polynomial(coords, 1, rng, 1.0, digits)
    c = round(float(rng.uniform(0.5, 1.5)), digits)
    return E.Constant(c) + E.ipow(lin, 2)
