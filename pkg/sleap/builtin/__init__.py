"""Built-in benchmark model files."""
