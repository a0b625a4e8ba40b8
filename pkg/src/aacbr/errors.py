"""Exception hierarchy. The CLI maps each category to a message prefix."""


class AacbrError(Exception):
    category = "error"


class UnknownArgumentError(AacbrError, KeyError):
    category = "malformed query"

    def __str__(self):
        return Exception.__str__(self)


class VocabularyError(AacbrError, ValueError):
    category = "vocabulary mismatch"


class ArityError(AacbrError, ValueError):
    category = "arity mismatch"


class EmptyNodeError(AacbrError, ValueError):
    category = "empty node"


class SchemaError(AacbrError, ValueError):
    category = "schema error"


class DegenerateFoldError(AacbrError, ValueError):
    category = "degenerate fold"


class ExplanationError(AacbrError, RuntimeError):
    category = "inconsistent explanation input"
