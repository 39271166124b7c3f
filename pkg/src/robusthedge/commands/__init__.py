"""CLI commands for robusthedge."""
