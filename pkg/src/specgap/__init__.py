"""Spectral approximation and gap certification for periodic self-adjoint band operators."""
