"""Exception hierarchy shared across the package.

ValidationError covers malformed or contract-violating inputs (bad layouts,
non-PSD effects, unnormalised states); ModelError covers violations detected
while running an otherwise well-formed model (measuring a qubit twice, index
decoded out of range). The CLI maps ValidationError to exit code 2,
ModelError to 3, and I/O problems to 4.
"""


class AmbqcError(Exception):
    """Base class for all package errors."""


class ValidationError(AmbqcError):
    """Input violates a structural or numerical contract."""


class ModelError(AmbqcError):
    """A well-formed model misbehaved at run time."""


class IncompleteModelError(ModelError):
    """Some history re-measures a qubit or never measures one.

    ``witness`` holds the offending outcome history as a tuple of
    (qubit, povm_index, outcome) steps, when known.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class InvalidQubitIndexError(ModelError):
    """Control circuit asked to measure a qubit outside 1..q."""


class InvalidPovmIndexError(ModelError):
    """Control circuit selected a measurement index outside the table."""


class ZeroProbabilityError(ModelError):
    """Conditioning on an outcome whose probability is numerically zero."""
