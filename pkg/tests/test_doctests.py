import doctest
import importlib

import pytest

MODULES = ["macrodim.shells", "macrodim.content", "macrodim.dimension", "macrodim.exceedance",
           "macrodim.spectrum", "macrodim.estimators", "macrodim.moments", "macrodim.simulators.heat",
           "macrodim.simulators.linear_she"]


@pytest.mark.parametrize("name", MODULES)
def test_docstring_examples(name):
    res = doctest.testmod(importlib.import_module(name), optionflags=doctest.ELLIPSIS)
    assert res.failed == 0
