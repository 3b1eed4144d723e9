"""Exception hierarchy.

Every error carries a short machine-readable ``category`` used by the CLI
when reporting failures.
"""


class MidasSvarError(Exception):
    category = "error"


# numerics
class NotPositiveDefinite(MidasSvarError):
    category = "not-positive-definite"


class NotSymmetric(MidasSvarError):
    category = "not-symmetric"


class SvdFailure(MidasSvarError):
    category = "svd-failure"


# layout / restrictions
class SchemeMismatch(MidasSvarError):
    category = "scheme-mismatch"


class UnsupportedScheme(MidasSvarError):
    category = "unsupported-scheme"


class UnsupportedLayout(MidasSvarError):
    category = "unsupported-layout"


class InfeasibleRestrictions(MidasSvarError):
    category = "infeasible-restrictions"


# estimation
class RankDeficientRegressors(MidasSvarError):
    category = "rank-deficient-regressors"


class InsufficientSample(MidasSvarError):
    category = "insufficient-sample"


class SingularA(MidasSvarError):
    category = "singular-a"


class SingularB(MidasSvarError):
    category = "singular-b"


class NonConvergence(MidasSvarError):
    category = "non-convergence"


class NestingViolation(MidasSvarError):
    category = "nesting-violation"


class IdentificationFailure(MidasSvarError):
    category = "identification-failure"


class TooManyFailures(MidasSvarError):
    category = "too-many-failures"


# monte carlo
class UnknownDgp(MidasSvarError):
    category = "unknown-dgp"


class ExplosiveDgp(MidasSvarError):
    category = "explosive-dgp"


class TestSpecMismatch(MidasSvarError):
    category = "test-spec-mismatch"

    __test__ = False  # not a pytest class


# io
class ParseError(MidasSvarError):
    category = "parse-error"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class PeriodGap(MidasSvarError):
    category = "period-gap"


class FrequencyMismatch(MidasSvarError):
    category = "frequency-mismatch"


class ConfigError(MidasSvarError):
    category = "config-error"
