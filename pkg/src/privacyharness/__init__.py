"""Self-hostable privacy-behavior test harness for browser agents."""

__version__ = "0.1.0"
