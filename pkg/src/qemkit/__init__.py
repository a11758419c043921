"""Quantum-circuit emulation and hybrid algorithm toolkit."""
__version__ = "0.1.0"
