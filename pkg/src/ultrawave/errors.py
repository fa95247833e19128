from __future__ import annotations


class UltrawaveError(ValueError):
    """Base error for ultrawave."""


class TreeSpecError(UltrawaveError):
    """Tree-spec loading/parsing error."""


class AddressError(UltrawaveError):
    """Address text that cannot be parsed, or that names no vertex of the tree."""


class KernelError(UltrawaveError):
    """Invalid radial kernel (negative, missing or unknown coefficients)."""


class DimensionError(UltrawaveError):
    """Function or coefficient data that does not match the tree."""


class SizeGuardError(UltrawaveError):
    """A dense/slow verification path was called above its size limit."""
