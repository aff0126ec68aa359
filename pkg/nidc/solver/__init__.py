"""Mild solutions: trajectories, the mild map and Picard iteration."""
