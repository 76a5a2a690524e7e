"""roadaudit: offline road-safety analytics over detector and GPS logs."""

__version__ = "0.1.0"
