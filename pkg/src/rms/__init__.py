"""Reversible multiparty sessions with named checkpoints.

Parsing, projection, subtyping, type checking, operational semantics and
bounded verification for a calculus in which choices can be checkpointed
and whole sessions roll back to a checkpoint.
"""

from importlib import resources

__version__ = "0.1.0"


def data_path(name: str) -> str:
    """Path of a bundled example file such as ``traveller.rms``."""
    return str(resources.files(__name__) / "data" / name)
