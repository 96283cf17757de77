"""Desk-scale data-parallel ML pipeline engine."""

__version__ = "0.1.0"

# Importing the stage-bearing modules here keeps the stage registry total for
# every entry point (CLI, RPC server, library use); stages register on import.
from . import dataframe, engine, graph, pipeline  # noqa: F401
from . import images, learners, network_stage  # noqa: F401
from . import interchange, model_repo  # noqa: F401
