"""Constant-stiffness impedance baseline used for head-to-head comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IcGains:
    """Diagonal task-space gains: linear triplet then angular triplet."""

    k_lin: float = 100.0
    k_ang: float = 5.0
    d_lin: float = 20.0
    d_ang: float = 1.25

    def __post_init__(self):
        for name in ("k_lin", "k_ang", "d_lin", "d_ang"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"IC gain {name} must be positive")

    def stiffness(self) -> np.ndarray:
        return np.array([self.k_lin] * 3 + [self.k_ang] * 3)

    def damping(self) -> np.ndarray:
        return np.array([self.d_lin] * 3 + [self.d_ang] * 3)


def ic_wrench(x_tilde: np.ndarray, x_dot: np.ndarray, gains: IcGains) -> np.ndarray:
    """Linear spring-damper wrench K x_tilde - D x_dot (unbounded in error)."""
    return gains.stiffness() * x_tilde - gains.damping() * x_dot
