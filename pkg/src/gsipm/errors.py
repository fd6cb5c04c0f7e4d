"""Error taxonomy shared across the package.

Every failure the library can signal deliberately derives from GsipmError,
so callers (and the CLI exit-code mapping) can tell data problems from
numerical ones without string matching.
"""

from __future__ import annotations


class GsipmError(Exception):
    """Base class for all errors raised by this package."""


# -- graph / measure validation -------------------------------------------

class DisconnectedGraph(GsipmError):
    pass


class NonPositiveWeight(GsipmError):
    pass


class DuplicateEdge(GsipmError):
    pass


class SelfLoop(GsipmError):
    pass


class InvalidRoot(GsipmError):
    pass


class InvalidSupportNode(GsipmError):
    pass


class InvalidMeasure(GsipmError):
    """Masses negative, duplicated nodes, or mass sum outside the accepted window."""


class NotATree(GsipmError):
    pass


class EmptyInput(GsipmError):
    pass


# -- numerics ---------------------------------------------------------------

class NegativeArgument(GsipmError):
    pass


class NonPositiveArgument(GsipmError):
    pass


class Overflow(GsipmError):
    """An evaluation left double range (e.g. exp argument above 700).

    The univariate minimizer catches this and treats the probe as +inf;
    it only escapes to the caller for direct evaluations.
    """


class NoFiniteBracket(GsipmError):
    """Every bracketing probe of the objective overflowed."""


class NonConvergence(GsipmError):
    """The minimizer stopped on its evaluation cap without meeting tolerance."""


class MismatchedIndex(GsipmError):
    """Profile and flow were built from different rooted indexes."""


# -- oracles / batch --------------------------------------------------------

class Infeasible(GsipmError):
    """Transport marginals do not balance."""


class EmptySample(GsipmError):
    pass


class AllZeroSample(GsipmError):
    pass
