"""Simulation and method-comparison tools."""
