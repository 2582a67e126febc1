"""Exception hierarchy.

Every error carries a ``payload`` dict so the CLI can serialize the failure
next to the run manifest (exit status 3).
"""


class AbcError(Exception):
    """Base class for all library errors."""

    def __init__(self, message="", **payload):
        super().__init__(message)
        self.payload = payload

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self)}
        for key, value in self.payload.items():
            out[key] = _jsonable(value)
        return out


def _jsonable(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


# exact_linalg
class NotAnosov(AbcError):
    pass


class NotUnimodular(AbcError):
    pass


class FieldMismatch(AbcError):
    pass


class ParabolicTrace(AbcError):
    pass


class NoSolution(AbcError):
    pass


class RationalInput(AbcError):
    pass


class PeriodNotFound(AbcError):
    pass


class DiscriminantTooLarge(AbcError):
    pass


# affine_actions
class Inconsistent(NoSolution):
    pass


class IrrationalCoefficients(AbcError):
    pass


# torus_maps
class InversionDivergence(AbcError):
    pass


class NotHomotopicToIdentity(AbcError):
    pass


class NonCommuting(AbcError):
    pass


class NonIntegerPeriodicity(AbcError):
    pass


class NonConstantDefect(AbcError):
    pass


class LipschitzBoundViolated(AbcError):
    pass


# conjugacy
class NotContracting(AbcError):
    pass


class ConeCriterionFailed(AbcError):
    pass


class DegenerateData(AbcError):
    pass


class NonInjectiveSample(AbcError):
    pass


# hyperbolic
class NewtonDivergence(AbcError):
    pass


class EmptyResult(AbcError):
    pass


class Inconclusive(AbcError):
    pass


class LostTransversality(AbcError):
    pass


class NoValidN(AbcError):
    pass


class ManifoldTrackingLoss(AbcError):
    pass


class PreconditionFailed(AbcError):
    pass


# leaf_flow
class NotMonotone(AbcError):
    pass


class SmallDivisorOverflow(AbcError):
    pass


class FixedPointPresent(AbcError):
    pass


class EmbeddingMismatch(AbcError):
    pass


# ergodic
class OverflowGuard(AbcError):
    pass


# cli
class MissingManifest(AbcError):
    pass


class ConfigError(AbcError):
    pass
