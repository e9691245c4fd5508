"""Entanglement flow in interacting qubit networks: measures, rate equations, verification."""
from __future__ import annotations

__version__ = "0.1.0"
