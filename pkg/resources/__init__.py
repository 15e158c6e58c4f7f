"""MCP resources: built-in model texts."""
