"""Configuration, sweeps, persistence and the command-line interface."""
