"""Face de-identification toolkit: alignment, de-identification methods,
ensembles, and privacy / utility / quality evaluation on numpy images."""

__version__ = "0.1.0"

from .errors import DeidError  # noqa: E402
from .methods import BaseDeidentifier, get_deidentifier  # noqa: E402

__all__ = ["BaseDeidentifier", "DeidError", "__version__", "get_deidentifier"]
