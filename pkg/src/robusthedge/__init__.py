"""robusthedge - model-free super-replication under proportional transaction costs on finite path grids."""

__version__ = "0.1.0"
