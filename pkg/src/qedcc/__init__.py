"""Relativistic coupled-cluster toolkit with QED interaction channels."""

from qedcc.errors import QedccError

__version__ = "0.1.0"
__all__ = ["QedccError", "__version__"]
