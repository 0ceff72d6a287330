"""Non-binary LDPC coded large-scale MIMO link-level simulator."""

from nbmimo.galois import FieldTable, build_field

__all__ = ["FieldTable", "build_field"]
__version__ = "0.1.0"
