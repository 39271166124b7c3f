"""Utility modules for robusthedge: market model, LP core, hedging programs and analysis."""
