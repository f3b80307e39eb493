"""Exception hierarchy shared by all modules."""


class SynthError(Exception):
    """Base class for all errors raised by ltlsynth."""


class ModelError(SynthError):
    pass


class UnknownStateError(ModelError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UndefinedTransitionError(ModelError):
    pass


class ModelMismatchError(ModelError):
    """Environment modes disagree on states, labels or initial state."""


class BeliefUpdateError(ModelError):
    pass


class PropositionCollisionError(ModelError):
    pass


class PropositionMismatchError(ModelError):
    pass


class ProjectError(ModelError):
    """Malformed or inconsistent project file."""


class LtlSyntaxError(SynthError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownAtomError(SynthError):
    pass


class UnsupportedFragmentError(SynthError):
    pass


class DraError(SynthError):
    pass


class DraSyntaxError(DraError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NondeterminismError(DraError):
    pass


class IncompletenessError(DraError):
    pass


class NonConvergenceError(SynthError):
    """Value iteration hit its sweep cap; ``values`` holds the last iterate."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values


class PolicyInconsistencyError(SynthError):
    pass


class SizeLimitError(SynthError):
    pass


class PolicyGapError(SynthError):
    pass


class PolicyMismatchError(SynthError):
    pass
