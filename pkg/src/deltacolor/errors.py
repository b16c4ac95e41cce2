"""Exception types shared across the package."""


class DeltaColorError(Exception):
    """Base class for all package-specific errors."""


class IllegalSpec(DeltaColorError):
    """Generator or config parameters violate a structural precondition."""


class GenerationFailed(DeltaColorError):
    """A randomized generator exhausted its retry budget."""


class GraphFormatError(DeltaColorError):
    """A graph or coloring file does not match the expected format."""


class BudgetExceeded(DeltaColorError):
    """A message plan needs more bits on some edge than one round allows."""


class InvariantViolated(DeltaColorError):
    """An internal structural invariant failed at runtime."""


class DecompositionFailed(DeltaColorError):
    """No valid almost-clique decomposition was found within the retry cap."""


class MatchingTooSmall(DeltaColorError):
    """A boundary matching came out below its guaranteed size."""


class LevelOrderViolated(DeltaColorError):
    """Deficiency levels are not processed in increasing order."""


class NotD1LC(DeltaColorError):
    """A list-coloring instance misses the degree-plus-one list margin."""


class NotGraytone(DeltaColorError):
    """A node set cannot be ordered as slack carriers plus their neighbors."""


class RelayUnavailable(DeltaColorError):
    """No common neighbor is available to relay between paired nodes."""


class DegreeBoundViolated(DeltaColorError):
    """A derived graph exceeds its required degree cap."""


class IterationCapExceeded(DeltaColorError):
    """An iterative solver hit its round cap before converging."""


class SlackFailed(DeltaColorError):
    """Slack generation left required nodes without unit slack."""


class NoCandidate(DeltaColorError):
    """No eligible node remains for a forced selection."""


class PairFormationFailed(DeltaColorError):
    """Could not form a same-color pair with the required properties."""
