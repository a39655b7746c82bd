"""Coherent ergotropy of a single NV spin: thermodynamic quantities, the
ancilla energy-measurement protocol, NV pulse simulation and readout."""

__version__ = "0.1.0"
