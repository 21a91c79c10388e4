"""Mesoscopic traffic simulation with schedule-driven signal control."""

__version__ = "0.1.0"
