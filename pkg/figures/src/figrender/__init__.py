"""Figure rendering for the optimizer benchmark CSV artifacts."""

from .render import KINDS, FigureSpec, SchemaError, render

__all__ = ["KINDS", "FigureSpec", "SchemaError", "render"]
