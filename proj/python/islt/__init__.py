"""Python bindings for the islt core library."""

from ._islt import *  # noqa: F401,F403
from ._islt import __version__  # noqa: F401
