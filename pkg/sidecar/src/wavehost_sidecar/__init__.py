"""Serves serialized audio models behind the ADLP stdio protocol, generates
the serialized fixture models, and runs the contributor validation checks."""

from .models import make_fixtures
from .server import HostedModel, serve
from .validate import validate

__version__ = "0.1.0"

__all__ = ["HostedModel", "make_fixtures", "serve", "validate", "__version__"]
