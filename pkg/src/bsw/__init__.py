"""bsw: exact desk-scale computation with towers over free groups.

Word arithmetic, graphs of groups and Bass-Serre presentations, tower
construction with validity checking, floor doubles and twin towers, closures
and their integer-lattice extension criterion, completions with explicit
embeddings, and test-sequence generation and verification.
"""

from bsw._kernels import IMPLEMENTATION as kernel_implementation

__version__ = "0.1.0"

__all__ = ["kernel_implementation", "__version__"]
