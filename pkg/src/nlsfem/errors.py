"""Exception types raised by the solver."""


class NlsError(Exception):
    pass


class SingularMatrix(NlsError):
    pass


class NonFiniteWeight(NlsError):
    pass


class MissingDerivative(NlsError):
    pass


class UnknownCase(NlsError, KeyError):
    pass


class StepError(NlsError):
    """A time step failed; carries the step index and time."""

    def __init__(self, n, t, cause):
        self.n = n
        self.t = t
        self.cause = cause
        super().__init__(f"step n={n} (t={t:.6g}) failed: {cause}")
