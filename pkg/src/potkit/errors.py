"""Exception types shared across the toolkit."""


class PotkitError(Exception):
    """Base class for all potkit errors."""


class DomainTooSmall(PotkitError):
    """Grid spacing too coarse: no node falls strictly inside the domain."""


class ZeroDistance(PotkitError):
    """Two point charges (or a charge and an evaluation point) coincide."""


class GridMismatch(PotkitError):
    """Two fields that must share a grid live on different grids."""


class Stalled(PotkitError):
    """Backtracking line search underflowed before reaching the descent target."""
