"""Expose a video-recognition model behind the /predict auditing protocol.

The bridge decodes VTR1 video payloads, applies deterministic preprocessing
(uniform frame sampling and spatial resizing), invokes a user-supplied
model callable, and answers in the exact response schema the auditing
client expects: full posterior, top-K list, or bare label.
"""

from .config import BridgeConfig, load_config
from .server import BridgeServer, serve
from .vtr import VtrFormatError, decode_vtr

__version__ = "0.1.0"
