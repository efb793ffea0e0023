"""Figure rendering for fcalab CSV outputs."""

from .figures import KINDS, FigureSpec, SchemaError, render, render_all

__version__ = "0.1.0"
