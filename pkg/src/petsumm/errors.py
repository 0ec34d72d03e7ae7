"""Exception types shared across the package."""


class PetsummError(Exception):
    """Base class for package errors."""


class CorpusValidationError(PetsummError, ValueError):
    """Raised in strict mode when corpus records fail validation."""

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(str(i) for i in self.issues[:5])
        more = f" (+{len(self.issues) - 5} more)" if len(self.issues) > 5 else ""
        super().__init__(f"{len(self.issues)} invalid record(s): {lines}{more}")


class SplitSizeError(PetsummError, ValueError):
    pass


class PatternConfigError(PetsummError, ValueError):
    pass


class MissingTokenError(PetsummError, KeyError):
    pass


class TokenBudgetError(PetsummError, ValueError):
    pass


class TokenCollisionError(PetsummError, ValueError):
    pass


class ConfigError(PetsummError, ValueError):
    pass


class TrainingDivergedError(PetsummError):
    """Loss became non-finite; ``checkpoint`` points at the last good state."""

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class UndefinedScoreError(PetsummError, ValueError):
    pass


class UndefinedCorrelationError(PetsummError, ValueError):
    pass


class MetricUnavailableError(PetsummError):
    pass


class DegenerateKappaError(PetsummError, ValueError):
    pass


class PoolShortageError(PetsummError, ValueError):
    """Not enough eligible cases to assemble a review session."""

    def __init__(self, deficits):
        self.deficits = dict(deficits)
        detail = ", ".join(f"{k}: need {need}, have {have}"
                           for k, (need, have) in self.deficits.items())
        super().__init__(f"insufficient case pool ({detail})")


class SessionStateError(PetsummError, ValueError):
    pass
