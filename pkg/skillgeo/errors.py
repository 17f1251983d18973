"""
Skillgeo Errors - Named failure modes shared by every module

Input problems derive from ValueError, numerical problems from RuntimeError,
so callers catching the builtins keep working. Each class carries the exit
code the CLI uses when the error escapes a command.
"""

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAPS = 3
EXIT_SOLVER = 4
EXIT_FIXTURE = 5


class SkillgeoError(Exception):
    """Base mixin for all skillgeo errors."""

    exit_code = EXIT_INPUT


# Input errors


class MalformedSpec(SkillgeoError, ValueError):
    """A JSON document is missing a field or has the wrong shape."""


class StochasticityViolation(SkillgeoError, ValueError):
    """A probability vector or transition row does not sum to 1."""


class DimensionMismatch(SkillgeoError, ValueError):
    """Two objects that must share a dimension do not."""


class DegenerateComplement(SkillgeoError, ValueError):
    """p(S|Z!=z) has a negative entry, so the SkillSet is inconsistent."""


class DegenerateWeight(SkillgeoError, ValueError):
    """An expression divides by 1 - p(z) with p(z) = 1."""


class Infeasible(SkillgeoError, ValueError):
    """A point is not representable as a mixture of the given vertices."""


class AllDiscovered(SkillgeoError, ValueError):
    """Every polytope vertex is already a learned skill; MAC is undefined."""


class NotMislSolution(SkillgeoError, ValueError):
    """A SkillSet does not attain the MISL radius of its polytope."""


class TooFewSamples(SkillgeoError, ValueError):
    """A kNN estimator needs more than k samples in every subset."""


# Resource caps


class TooLarge(SkillgeoError, ValueError):
    """An enumeration would exceed its configured cap."""

    exit_code = EXIT_CAPS


# Solver errors


class NonConvergent(SkillgeoError, RuntimeError):
    """An iterative solver hit its iteration cap before its tolerance."""

    exit_code = EXIT_SOLVER


class SolverError(SkillgeoError, RuntimeError):
    """The LP backend reported a failure status."""

    exit_code = EXIT_SOLVER


# Fixtures


class FixtureError(SkillgeoError, RuntimeError):
    """An embedded appendix fixture failed its own inequality check."""

    exit_code = EXIT_FIXTURE
