"""Figure generation for mtdswarm sweep outputs."""

from .figures import (PlotError, load_metrics_csv, plot_bars_and_cumcost,
                      plot_learning_curves, smooth)

__all__ = [
    "PlotError",
    "load_metrics_csv",
    "plot_bars_and_cumcost",
    "plot_learning_curves",
    "smooth",
]
