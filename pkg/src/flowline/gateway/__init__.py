from .app import create_app
from .live import LiveEngine, replay_commands

__all__ = ["create_app", "LiveEngine", "replay_commands"]
