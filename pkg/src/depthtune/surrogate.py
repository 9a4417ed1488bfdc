"""Analytic stand-ins for the target-network environment.

They return ``loss(L)`` instantly, so the controller loop can be checked
against a brute-force argmin over the integer layer range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Evaluation, check_layer_count
from .seeding import derive_seed

FAMILIES = ("monotone_decreasing", "unimodal", "noisy_unimodal")


@dataclass(frozen=True)
class SurrogateEnv:
    """``c/L``, ``(L - L*)**2 + b``, or the latter plus seeded noise in [-eta, eta]."""

    family: str = "monotone_decreasing"
    c: float = 1.0
    l_star: int = 7
    b: float = 0.1
    eta: float = 0.0
    layer_max: int = 15
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown surrogate family {self.family!r}")
        if self.layer_max < 1:
            raise ValueError("layer_max must be positive")
        if self.family == "monotone_decreasing" and self.c <= 0:
            raise ValueError("c must be positive")
        if self.family != "monotone_decreasing":
            if self.b <= 0:
                raise ValueError("b must be positive so losses stay positive")
            if self.eta < 0:
                raise ValueError("eta must be non-negative")
            if self.family == "noisy_unimodal" and self.eta >= 0.5:
                # keeps the integer argmin unique: neighbours differ by >= 1
                raise ValueError("eta must be below 0.5")

    def loss(self, layer, nonce=0):
        check_layer_count(layer, self.layer_max)
        if self.family == "monotone_decreasing":
            return self.c / layer
        value = (layer - self.l_star) ** 2 + self.b
        if self.family == "noisy_unimodal" and self.eta > 0:
            rng = np.random.default_rng(derive_seed(self.seed, "noise", layer, nonce))
            value += rng.uniform(-self.eta, self.eta)
            value = max(value, 1e-6)
        return float(value)

    def evaluate(self, layer, nonce=0):
        return Evaluation(self.loss(layer, nonce), False)

    def argmin(self):
        """Brute-force noise-free argmin over 1..layer_max (smallest on ties)."""
        clean = SurrogateEnv(self.family if self.family != "noisy_unimodal" else "unimodal",
                             self.c, self.l_star, self.b, 0.0, self.layer_max, self.seed)
        return min(range(1, self.layer_max + 1), key=lambda L: (clean.loss(L), L))
