"""Exception hierarchy.

Every error raised by the library derives from :class:`HCVError`.  The
command-line front end maps :class:`DomainError` to exit code 2 and
:class:`FormatError` to exit code 3.
"""


class HCVError(Exception):
    """Base class for all library errors."""


class DomainError(HCVError, ValueError):
    """Input is well-formed but violates a mathematical precondition."""


class FormatError(HCVError, ValueError):
    """Input file or array has the wrong shape, header or content."""


class DuplicatePoints(DomainError):
    pass


class DegenerateConfiguration(DomainError):
    pass


class DimensionUnsupported(DomainError):
    pass


class DisconnectedGraph(DomainError):
    def __init__(self, components, message=None):
        self.components = [list(c) for c in components]
        if message is None:
            sizes = ", ".join(str(len(c)) for c in self.components)
            message = (
                f"adjacency graph has {len(self.components)} connected "
                f"components (sizes {sizes}); first members: "
                + ", ".join(str(c[0]) for c in self.components)
            )
        super().__init__(message)


class ConstantRow(DomainError):
    pass


class NonFiniteInput(DomainError):
    pass


class DimensionMismatch(DomainError):
    pass


class IdMismatch(DomainError):
    pass


class KOutOfRange(DomainError):
    pass


class EmptyTree(DomainError):
    pass


class NoPositiveEigenvalue(DomainError):
    pass


class LengthMismatch(DomainError):
    pass
