"""choicedyn-plots: figure rendering for choicedyn trajectory CSVs."""

from .render import LAYOUTS, PanelSpec, RenderResult, SchemaError, read_table, render

__version__ = "0.1.0"
