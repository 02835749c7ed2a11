"""Exact simulation of domain-wall parity gadgets on small qubit chains."""

__version__ = "0.1.0"

from .gadgets import Driver, GadgetConfig, NoiseDraw, build_gadget  # noqa: E402
from .encoding import EncodingBundle, build_encoding  # noqa: E402
from .pauli import OperatorSum, PauliString, X, Y, Z, pauli  # noqa: E402

__all__ = [
    "Driver",
    "EncodingBundle",
    "GadgetConfig",
    "NoiseDraw",
    "OperatorSum",
    "PauliString",
    "X",
    "Y",
    "Z",
    "__version__",
    "build_encoding",
    "build_gadget",
    "pauli",
]
