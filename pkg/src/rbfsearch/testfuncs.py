"""Standard global-optimization test functions with verified optima.

The suite follows the classic Dixon & Szego (1978) set (Branin,
Goldstein-Price, Hartman, Shekel) plus the usual smooth additions (sphere,
Rosenbrock, Ackley).  Every instance carries its global minimum value and a
minimizer; the values were verified by dense multistart local search and
are re-checked by the test suite.  All functions are minimized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BoxDomain


class UnknownFunctionError(KeyError):
    """Raised when a test-function name is not in the registry."""


@dataclass(frozen=True)
class TestFunction:
    """A benchmark instance: callable, box, and certified optimum."""

    __test__ = False  # keep pytest from collecting this despite the name

    name: str
    domain: BoxDomain
    optimum: float
    minimizer: tuple
    provenance: str
    func: Callable

    @property
    def n(self) -> int:
        return self.domain.n

    def __call__(self, x) -> float:
        return float(self.func(np.asarray(x, dtype=float)))


def _branin(x):
    x1, x2 = x
    b = 5.1 / (4.0 * np.pi ** 2)
    c = 5.0 / np.pi
    t = 1.0 / (8.0 * np.pi)
    return (x2 - b * x1 ** 2 + c * x1 - 6.0) ** 2 \
        + 10.0 * (1.0 - t) * np.cos(x1) + 10.0


def _goldstein_price(x):
    x1, x2 = x
    t1 = 1 + (x1 + x2 + 1) ** 2 * (
        19 - 14 * x1 + 3 * x1 ** 2 - 14 * x2 + 6 * x1 * x2 + 3 * x2 ** 2)
    t2 = 30 + (2 * x1 - 3 * x2) ** 2 * (
        18 - 32 * x1 + 12 * x1 ** 2 + 48 * x2 - 36 * x1 * x2 + 27 * x2 ** 2)
    return t1 * t2


_H3_A = np.array([[3.0, 10.0, 30.0],
                  [0.1, 10.0, 35.0],
                  [3.0, 10.0, 30.0],
                  [0.1, 10.0, 35.0]])
_H3_P = 1e-4 * np.array([[3689.0, 1170.0, 2673.0],
                         [4699.0, 4387.0, 7470.0],
                         [1091.0, 8732.0, 5547.0],
                         [381.0, 5743.0, 8828.0]])
_H6_A = np.array([[10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
                  [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
                  [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
                  [17.0, 8.0, 0.05, 10.0, 0.1, 14.0]])
_H6_P = 1e-4 * np.array([[1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
                         [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
                         [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
                         [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0]])
_H_C = np.array([1.0, 1.2, 3.0, 3.2])


def _hartman(a, p):
    def f(x):
        return -np.sum(_H_C * np.exp(-np.sum(a * (x - p) ** 2, axis=1)))
    return f


_SHEKEL_A = np.array([[4.0, 4.0, 4.0, 4.0],
                      [1.0, 1.0, 1.0, 1.0],
                      [8.0, 8.0, 8.0, 8.0],
                      [6.0, 6.0, 6.0, 6.0],
                      [3.0, 7.0, 3.0, 7.0],
                      [2.0, 9.0, 2.0, 9.0],
                      [5.0, 5.0, 3.0, 3.0],
                      [8.0, 1.0, 8.0, 1.0],
                      [6.0, 2.0, 6.0, 2.0],
                      [7.0, 3.6, 7.0, 3.6]])
_SHEKEL_B = np.array([1.0, 2.0, 2.0, 4.0, 4.0, 6.0, 3.0, 7.0, 5.0, 5.0]) / 10.0


def _shekel(m):
    a, b = _SHEKEL_A[:m], _SHEKEL_B[:m]

    def f(x):
        return -np.sum(1.0 / (np.sum((a - x) ** 2, axis=1) + b))
    return f


def _sphere(x):
    return np.sum(x * x)


def _rosenbrock(x):
    return np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2)


def _ackley(x):
    n = x.size
    return (-20.0 * np.exp(-0.2 * np.sqrt(np.sum(x * x) / n))
            - np.exp(np.sum(np.cos(2.0 * np.pi * x)) / n) + 20.0 + np.e)


_DIXON_SZEGO = "Dixon & Szego (1978) test set"
_STANDARD = "standard global-optimization test function"

_REGISTRY: dict[str, TestFunction] = {}


def _register(name, func, lower, upper, optimum, minimizer, provenance):
    _REGISTRY[name] = TestFunction(
        name=name,
        domain=BoxDomain(lower, upper),
        optimum=float(optimum),
        minimizer=tuple(float(v) for v in minimizer),
        provenance=provenance,
        func=func,
    )


_register("branin", _branin, [-5.0, 0.0], [10.0, 15.0],
          0.39788735772973816, (-np.pi, 12.275), _DIXON_SZEGO)
_register("goldstein_price", _goldstein_price, [-2.0, -2.0], [2.0, 2.0],
          3.0, (0.0, -1.0), _DIXON_SZEGO)
_register("hartman3", _hartman(_H3_A, _H3_P), [0.0] * 3, [1.0] * 3,
          -3.862779787332663,
          (0.114588876304702, 0.555648893937346, 0.852546984495481),
          _DIXON_SZEGO)
_register("hartman6", _hartman(_H6_A, _H6_P), [0.0] * 6, [1.0] * 6,
          -3.3223680114155143,
          (0.20168951162129, 0.150010692825556, 0.476873976781879,
           0.275332426853859, 0.311651614373882, 0.657300532184523),
          _DIXON_SZEGO)
_register("shekel5", _shekel(5), [0.0] * 4, [10.0] * 4,
          -10.153199679058227,
          (4.000037152423134, 4.000133275950214, 4.000037153005503,
           4.000133277104997), _DIXON_SZEGO)
_register("shekel7", _shekel(7), [0.0] * 4, [10.0] * 4,
          -10.40294056681866,
          (4.000572914216917, 4.000689366207665, 3.999489705088686,
           3.999606160075352), _DIXON_SZEGO)
_register("shekel10", _shekel(10), [0.0] * 4, [10.0] * 4,
          -10.536409816692043,
          (4.000746530722679, 4.000592932678109, 3.999663394631792,
           3.999509802720532), _DIXON_SZEGO)
_register("sphere2", _sphere, [-5.12] * 2, [5.12] * 2, 0.0, (0.0,) * 2, _STANDARD)
_register("sphere5", _sphere, [-5.12] * 5, [5.12] * 5, 0.0, (0.0,) * 5, _STANDARD)
_register("rosenbrock2", _rosenbrock, [-2.048] * 2, [2.048] * 2,
          0.0, (1.0,) * 2, _STANDARD)
_register("rosenbrock5", _rosenbrock, [-2.048] * 5, [2.048] * 5,
          0.0, (1.0,) * 5, _STANDARD)
_register("ackley3", _ackley, [-15.0] * 3, [20.0] * 3, 0.0, (0.0,) * 3, _STANDARD)


def get_function(name: str) -> TestFunction:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownFunctionError(
            f"unknown test function {name!r}; available: {sorted(_REGISTRY)}")


def list_functions() -> list[str]:
    return sorted(_REGISTRY)


def default_suite() -> list[TestFunction]:
    """The benchmark suite used by the bench harness and acceptance runs.

    Ten instances spanning 2 to 6 dimensions.  rosenbrock5 and ackley3 stay
    in the registry for ad-hoc runs but are not part of the default suite;
    within the 60(n+1) budget used for suite comparisons neither is solved
    to 1% from any start, so they add cost without discriminating between
    configurations.
    """
    names = ("branin", "goldstein_price", "hartman3", "hartman6",
             "shekel5", "shekel7", "shekel10",
             "sphere2", "sphere5", "rosenbrock2")
    return [_REGISTRY[n] for n in names]
