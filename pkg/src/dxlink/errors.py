"""Exception hierarchy shared across the package."""


class DxLinkError(Exception):
    """Base class for all dxlink errors."""


class SnapshotFormatError(DxLinkError):
    """A snapshot/KB/vector input file violates its expected format."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class CycleError(DxLinkError):
    """The IS-A graph contains a cycle."""

    def __init__(self, concept_id):
        self.concept_id = concept_id
        super().__init__(f"IS-A graph contains a cycle through concept {concept_id}")


class UnclassifiedConceptError(DxLinkError):
    """No configured root class is reachable from the concept."""

    def __init__(self, concept_id):
        self.concept_id = concept_id
        super().__init__(f"concept {concept_id} reaches no configured root class")


class AmbiguousRootError(DxLinkError):
    """More than one configured root class is reachable from the concept."""

    def __init__(self, concept_id, root_ids):
        self.concept_id = concept_id
        self.root_ids = tuple(sorted(root_ids))
        super().__init__(
            f"concept {concept_id} reaches multiple root classes: {self.root_ids}"
        )


class KbValidationError(DxLinkError):
    """The knowledge base violates a structural constraint."""


class LexiconConflictError(DxLinkError):
    """One phrase maps to two different finding ids."""

    def __init__(self, phrase, first_id, second_id):
        self.phrase = phrase
        self.ids = (first_id, second_id)
        super().__init__(
            f"phrase {phrase!r} maps to findings {first_id} and {second_id}"
        )


class CaseFormatError(DxLinkError):
    """A case payload (XML, JSON or text) cannot be turned into Evidence."""


class TierAssignmentError(DxLinkError):
    """Vector tiers cannot be assigned (e.g. every distance is missing)."""


class CompileError(DxLinkError):
    """A link cannot be compiled into a weight."""


class NetworkBuildError(DxLinkError):
    """The noisy-OR network cannot be built from the compiled KB."""


class RefusalError(DxLinkError):
    """An operation was refused because its cost would explode."""


class NumericalError(DxLinkError):
    """Inference produced a non-finite or sign-violating quantity."""


class ConfigError(DxLinkError):
    """The application config file is missing entries or inconsistent."""
