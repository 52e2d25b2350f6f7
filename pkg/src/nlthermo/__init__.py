"""Thermodynamics of non-local materials: evolve model problems and check their power balances."""
