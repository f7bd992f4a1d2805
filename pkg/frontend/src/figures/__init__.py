"""Panel rendering for dualshadows experiment CSVs."""
from .panels import PanelSpec, render

__all__ = ["PanelSpec", "render"]
