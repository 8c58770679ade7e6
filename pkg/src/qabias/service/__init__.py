"""Annotation-time gate service: scores new items context-free and flags bias."""

from qabias.service.state import GateSettings, GateState  # noqa: F401
from qabias.service.app import create_app  # noqa: F401
