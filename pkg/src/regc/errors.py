"""Exception types raised by the simulator and the trace checker."""


class RegcError(Exception):
    pass


class UsageError(RegcError):
    """A program used the runtime API incorrectly (bad join, reentrant lock, ...)."""


class OutOfBoundsError(UsageError):
    pass


class OutOfSpaceError(RegcError):
    pass


class DeadlockError(RegcError):
    """No processor can make progress but some have not terminated."""


class TraceIntegrityError(RegcError):
    pass
