"""Checks of the benchmark function registry against published values."""

import numpy as np
import pytest

from rbfsearch.testfuncs import (
    TestFunction,
    UnknownFunctionError,
    default_suite,
    get_function,
    list_functions,
)

# global minima as tabulated in the global-optimization literature
# (Dixon & Szego 1978 and the standard extensions), 4-5 decimals
LITERATURE_OPTIMA = {
    "branin": 0.397887,
    "goldstein_price": 3.0,
    "hartman3": -3.86278,
    "hartman6": -3.32237,
    "shekel5": -10.1532,
    "shekel7": -10.4029,
    "shekel10": -10.5364,
    "sphere2": 0.0,
    "sphere5": 0.0,
    "rosenbrock2": 0.0,
    "rosenbrock5": 0.0,
    "ackley3": 0.0,
}


class TestRegistry:
    def test_known_names(self):
        assert set(list_functions()) == set(LITERATURE_OPTIMA)
        assert list_functions() == sorted(list_functions())

    def test_unknown_name_raises(self):
        with pytest.raises(UnknownFunctionError):
            get_function("rastrigin17")

    def test_instances_are_frozen_dataclasses(self):
        f = get_function("branin")
        assert isinstance(f, TestFunction)
        with pytest.raises(Exception):
            f.optimum = 0.0


class TestCertifiedOptima:
    @pytest.mark.parametrize("name", sorted(LITERATURE_OPTIMA))
    def test_value_at_minimizer_equals_stored_optimum(self, name):
        f = get_function(name)
        assert f(np.array(f.minimizer)) == pytest.approx(f.optimum, abs=1e-9)

    @pytest.mark.parametrize("name", sorted(LITERATURE_OPTIMA))
    def test_optimum_matches_literature(self, name):
        assert get_function(name).optimum == pytest.approx(
            LITERATURE_OPTIMA[name], abs=5e-5)

    @pytest.mark.parametrize("name", sorted(LITERATURE_OPTIMA))
    def test_minimizer_inside_domain(self, name):
        f = get_function(name)
        assert f.domain.contains(f.minimizer)

    @pytest.mark.parametrize("name", sorted(LITERATURE_OPTIMA))
    def test_local_optimality_of_minimizer(self, name):
        # no nearby point may beat the certified optimum
        f = get_function(name)
        rng = np.random.default_rng(hash(name) % (2 ** 32))
        x0 = np.array(f.minimizer)
        for _ in range(200):
            step = rng.normal(0, 1e-3, size=f.n)
            probe = np.clip(x0 + step, f.domain.lower, f.domain.upper)
            assert f(probe) >= f.optimum - 1e-12


class TestSpotValues:
    def test_branin_second_minimizer(self):
        f = get_function("branin")
        assert f([np.pi, 2.275]) == pytest.approx(0.397887, abs=1e-4)
        assert f([9.42478, 2.475]) == pytest.approx(0.397887, abs=1e-4)

    def test_goldstein_price_at_origin(self):
        assert get_function("goldstein_price")([0.0, 0.0]) == pytest.approx(600.0)

    def test_sphere_is_a_squared_norm(self):
        assert get_function("sphere2")([1.0, 2.0]) == 5.0
        assert get_function("sphere5")([1.0, 1.0, 1.0, 1.0, 1.0]) == 5.0

    def test_rosenbrock_at_origin(self):
        assert get_function("rosenbrock2")([0.0, 0.0]) == 1.0
        assert get_function("rosenbrock5")([0.0] * 5) == 4.0

    def test_ackley_off_center(self):
        # -20 exp(-0.2) - e + 20 + e at the all-ones point
        expect = 20.0 * (1.0 - np.exp(-0.2))
        assert get_function("ackley3")([1.0, 1.0, 1.0]) == pytest.approx(expect)

    def test_shekel_is_negative_everywhere_near_wells(self):
        f = get_function("shekel5")
        assert f([4.0, 4.0, 4.0, 4.0]) < -10.0
        assert f([0.0, 0.0, 0.0, 0.0]) > f.optimum


class TestDomains:
    def test_dimensions(self):
        for name, n in (("branin", 2), ("hartman3", 3), ("hartman6", 6),
                        ("shekel7", 4), ("sphere5", 5), ("ackley3", 3)):
            assert get_function(name).n == n

    def test_classic_boxes(self):
        b = get_function("branin").domain
        np.testing.assert_array_equal(b.lower, [-5.0, 0.0])
        np.testing.assert_array_equal(b.upper, [10.0, 15.0])
        gp = get_function("goldstein_price").domain
        np.testing.assert_array_equal(gp.lower, [-2.0, -2.0])
        sh = get_function("shekel10").domain
        np.testing.assert_array_equal(sh.upper, [10.0] * 4)


def test_default_suite_is_drawn_from_the_registry():
    suite = default_suite()
    assert len(suite) >= 10
    names = [f.name for f in suite]
    assert len(set(names)) == len(names)
    for f in suite:
        assert get_function(f.name) is f
