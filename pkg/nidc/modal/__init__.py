"""Sine-mode Galerkin reduction of the wave equation with memory."""

from .basis import ModeBasis, build_mode_basis, project_field, reconstruct_field

__all__ = ["ModeBasis", "build_mode_basis", "project_field", "reconstruct_field"]
