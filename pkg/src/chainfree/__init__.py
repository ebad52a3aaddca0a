"""Decision procedure for weakly chaining string constraints."""
from .formula import Problem, evaluate, parse
from .fragment import FragmentClass, classify
from .oracle import bounded_sat
from .solver import RunResult, solve_problem

__all__ = ["FragmentClass", "Problem", "RunResult", "bounded_sat", "classify", "evaluate",
           "parse", "solve_problem"]
__version__ = "0.1.0"
