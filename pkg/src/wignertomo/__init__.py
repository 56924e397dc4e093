"""Wigner (DROPS) process tomography of spin propagators."""
