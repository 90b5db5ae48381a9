"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model or experiment configuration.

    ``problems`` carries every violated constraint, not just the first,
    so config files can be fixed in one pass.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NotStartedError(RuntimeError):
    """Prediction requested before the estimator has absorbed any
    informative pair (all x seen so far were zero)."""


class PathTooShortError(RuntimeError):
    """Fewer than two usable regression pairs: no prediction can be scored."""


class DegeneratePathError(RuntimeError):
    """A path whose Fisher information is exactly zero."""


class ReconstructionError(RuntimeError):
    """Martingale/remainder split failed to reproduce the regressor path,
    usually because the filter does not match the trajectory."""


class ResamplePathError(RuntimeError):
    """Brownian path with a numerically degenerate time integral; the
    caller should draw a replacement path from a tagged substream."""
