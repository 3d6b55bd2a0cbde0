"""Figures from stancesim CSV exports: Pareto frontiers and opinion scatter.

This package reads only the exported CSV files (aggregate.csv, per-run
preference/group exports); it has no dependency on the simulator itself.
"""

from .opinions import opinion_scatter
from .pareto import pareto_plot

__all__ = ["pareto_plot", "opinion_scatter"]
