"""Experiment harness: run matrices, trace files, criteria, figures and the CLI."""
