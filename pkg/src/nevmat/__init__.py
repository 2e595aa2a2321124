"""Monodromy matrices, growth certificates and Jacobi dictionaries for Hamburger Hamiltonians."""
