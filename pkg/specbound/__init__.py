"""Certified upper bounds on the spectral norm of symmetric tensors."""

__version__ = "0.1.0"


def version_string() -> str:
    """Return a git-describe style version tag used in reports."""
    return f"v{__version__}"
