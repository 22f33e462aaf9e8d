"""Exception types raised by the replanning engine."""


class SesError(Exception):
    """Base class for all engine errors."""


class DeadlockError(SesError):
    """Execution reached unsatisfied vertices with nothing satisfiable."""

    def __init__(self, message="deadlock", *, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class CyclicGraphError(SesError):
    """No topological order exists."""

    def __init__(self, message="cyclic graph"):
        super().__init__(message)


class NotSwitchableError(SesError):
    def __init__(self, edge):
        super().__init__(f"not switchable: {edge}")
        self.edge = edge


class InvalidStateError(SesError):
    def __init__(self, detail):
        super().__init__(f"invalid state: {detail}")


class NoSolutionError(SesError):
    def __init__(self, message="no solution found"):
        super().__init__(message)


class SearchTimeout(SesError):
    """The search exceeded its deadline. ``stats`` holds the partial counters."""

    def __init__(self, stats=None):
        super().__init__("timeout")
        self.stats = stats


class TooManySwitchableError(SesError):
    def __init__(self, count, cap):
        super().__init__(f"too many switchable edges: {count} > cap {cap}")
        self.count = count
        self.cap = cap


class UnsolvableError(SesError):
    def __init__(self, attempts):
        super().__init__(f"unsolvable after max attempts ({attempts})")
        self.attempts = attempts
