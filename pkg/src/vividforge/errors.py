"""Exception types shared across the package.

Every contract violation raises a dedicated class so pipelines can decide
per-error whether to skip a sample, skip an entity, or abort the run.
"""


class VividForgeError(Exception):
    """Base class for all package errors."""


# -- raster / sequence contracts -----------------------------------------

class LengthMismatchError(VividForgeError):
    """Paired sequences have different frame counts."""


class ResolutionMismatchError(VividForgeError):
    """Rasters that must share (W, H) do not."""


class ShapeMismatchError(VividForgeError):
    """Array shapes incompatible for the requested operation."""


class EmptyMaskError(VividForgeError):
    """A mask with no set pixels where at least one is required."""


# -- manifest / schema ----------------------------------------------------

class SchemaViolationError(VividForgeError):
    """A record or manifest does not satisfy the on-disk schema."""


class DuplicateIdError(SchemaViolationError):
    """Two records in one manifest share an id."""


# -- geometry -------------------------------------------------------------

class NoFeasiblePlacementError(VividForgeError):
    """No placement satisfied the paste constraints after all attempts."""


# -- backend gateway ------------------------------------------------------

class GatewayError(VividForgeError):
    """Base class for perception-backend failures."""


class BackendTimeoutError(GatewayError):
    """Backend did not answer within its configured timeout."""


class ProtocolError(GatewayError):
    """Malformed or out-of-contract wire traffic."""


class ValidationFailureError(GatewayError):
    """Backend response decoded but failed semantic validation."""


class BackendFailure(GatewayError):
    """Backend answered with an explicit error envelope."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


# -- caption parsing ------------------------------------------------------

class EmptyTagError(VividForgeError):
    """Caption prompt rendering requires a non-empty tag."""


class CaptionParseError(VividForgeError):
    """Base class for caption triplet parsing failures."""


class WrongAnswerCountError(CaptionParseError):
    """Captioner output did not split into exactly three answers."""

    def __init__(self, count: int):
        super().__init__(f"expected 3 answers, got {count}")
        self.count = count


class MissingPrefixError(CaptionParseError):
    """An answer does not start with the required prefix."""

    def __init__(self, index: int):
        super().__init__(f"answer {index} does not start with the required prefix")
        self.index = index


class MissingTagError(CaptionParseError):
    """An answer does not contain the entity tag."""

    def __init__(self, index: int):
        super().__init__(f"answer {index} does not contain the tag")
        self.index = index


# -- propagation ----------------------------------------------------------

class DonorTooShortError(VividForgeError):
    """Donor mask sequence shorter than the target length."""


class EmptyDonorPoolError(VividForgeError):
    """Deletion synthesis requires at least one donor mask sequence."""


# -- kive / sampler / metrics ----------------------------------------------

class NonPositiveAttemptsError(VividForgeError):
    """Editing-cost queries need at least one attempt."""


class EmptyPoolError(VividForgeError):
    """A batch draw hit a (modality, task) pool with no records."""

    def __init__(self, modality: str, task: str):
        super().__init__(f"no records for modality={modality} task={task}")
        self.modality = modality
        self.task = task


class TooFewFramesError(VividForgeError):
    """Metric needs at least two frames."""


class NoBackgroundPixelsError(VividForgeError):
    """Background preservation needs at least one non-edit pixel."""


# -- qc service -----------------------------------------------------------

class UnknownSampleError(VividForgeError):
    """Verdict references a sample id not in the manifest."""


class ConflictError(VividForgeError):
    """A (sample, reviewer) pair already has a verdict."""


class MpPresenceViolationError(VividForgeError):
    """MP verdict present/absent in contradiction with the frame count."""
