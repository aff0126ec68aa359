"""Controllability Gramian, regularized control synthesis and ε-sweeps."""
