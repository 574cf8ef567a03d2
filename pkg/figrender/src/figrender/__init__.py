"""Offline figure rendering for sweep result CSVs."""

from .render import KINDS, RenderError, RenderJob, build_figure, render

__all__ = ["KINDS", "RenderError", "RenderJob", "build_figure", "render"]
__version__ = "0.1.0"
