"""Discrete-time quantum walk on a one-dimensional lattice: evolution, spectral
tools, Littlewood-Paley multipliers and numerical dispersive/Strichartz checks."""

from __future__ import annotations

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    NormSpec,
    SpaceTimeField,
    SpinorField,
    WalkParams,
    field_norm,
    make_state,
    mixed_norm,
    read_field,
    write_field,
)
from .spectral import dispersion, dispersion_derivatives, spectral_decompose, spectral_evolve  # noqa: E402
from .walk import evolve, step  # noqa: E402

__all__ = [
    "NormSpec",
    "SpaceTimeField",
    "SpinorField",
    "WalkParams",
    "dispersion",
    "dispersion_derivatives",
    "evolve",
    "field_norm",
    "make_state",
    "mixed_norm",
    "read_field",
    "spectral_decompose",
    "spectral_evolve",
    "step",
    "write_field",
]
