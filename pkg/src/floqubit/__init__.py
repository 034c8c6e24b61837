"""Floquet analysis of continuously driven qubits: two-tone gates, longitudinal readout, initialization."""
__version__ = "0.1.0"
