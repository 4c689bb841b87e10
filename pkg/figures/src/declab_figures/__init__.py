"""Figure rendering for declab experiment outputs."""

from .render import FigureInputError, FigureSpec, render, sweep_statistics

__all__ = ["FigureInputError", "FigureSpec", "render", "sweep_statistics"]
