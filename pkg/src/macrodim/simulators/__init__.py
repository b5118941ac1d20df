"""Simulators for the processes and SPDEs."""
