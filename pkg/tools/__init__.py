"""MCP tools exposing the sleap simulators."""
