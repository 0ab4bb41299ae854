"""servegen: reference model server for the generation wire protocol."""

__version__ = "0.1.0"

from .backends import EchoLinesBackend, HFBackend, load_backend
from .config import ServerConfig
from .server import make_server, serve

__all__ = [
    "__version__",
    "ServerConfig",
    "EchoLinesBackend",
    "HFBackend",
    "load_backend",
    "make_server",
    "serve",
]
