"""Reference implementation of the measurement-tool wire protocol."""

from .schemas import (
    ERROR_RESPONSE_SCHEMA,
    EXISTS_RESPONSE_SCHEMA,
    FIND_RESPONSE_SCHEMA,
    REQUEST_SCHEMA,
    RESPONSE_SCHEMAS,
    SEGMENT_RESPONSE_SCHEMA,
)
from .server import ServerThread, make_server
from .store import Detection, FixtureFormatError, FixtureStore, Mask

__version__ = "0.1.0"

__all__ = [
    "Detection",
    "ERROR_RESPONSE_SCHEMA",
    "EXISTS_RESPONSE_SCHEMA",
    "FIND_RESPONSE_SCHEMA",
    "FixtureFormatError",
    "FixtureStore",
    "Mask",
    "REQUEST_SCHEMA",
    "RESPONSE_SCHEMAS",
    "SEGMENT_RESPONSE_SCHEMA",
    "ServerThread",
    "make_server",
]
