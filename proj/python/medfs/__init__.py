"""Maximum entropy discrimination with feature selection."""

from ._medfs import *  # noqa: F401,F403
from ._medfs import __doc__  # noqa: F401

__version__ = "0.1.0"
