"""Interactive-teaching hub for object detection models."""

__version__ = "0.1.0"
