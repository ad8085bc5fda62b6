"""Pattern-vector analysis of Go game records: strength and style inference."""

__version__ = "0.1.0"
