"""ultrawave: ultrametric wavelets, radial pseudodifferential operators and the
ultrametric change of variable on finite trees."""

__version__ = "0.1.0"
