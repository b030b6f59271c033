class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class TripLogError(DomainError):
    """A GPS record is malformed or breaks a trip-log invariant."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)
