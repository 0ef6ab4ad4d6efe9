"""Budgeted testing of black-box systems against STL specifications.

Given an STL task specification, a parameterized environment domain, and an
expensive black-box system, this package adaptively chooses a budget of test
inputs to build an accurate surrogate model of specification robustness
across the domain, and benchmarks that strategy against random and uniform
designs.
"""

from .stl import Trace, bool_sat, parse_formula, pretty_print
from .agm import agm_rob

__all__ = ["Trace", "bool_sat", "parse_formula", "pretty_print", "agm_rob"]

__version__ = "0.1.0"
