"""Interior-point options.

Every algorithmic constant lives here with its pinned default. Options can
be loaded from a JSON object (``--options-file``); unknown keys are an
error so typos never silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from graphipm.errors import ParseError
from graphipm.io import load_json


@dataclass(frozen=True)
class IpmOptions:
    tol: float = 1e-8
    max_iter: int = 500

    # barrier parameter
    mu_init: float = 0.1
    kappa_mu: float = 0.2
    theta_mu: float = 1.5
    kappa_eps: float = 10.0
    tau_min: float = 0.99

    # filter line search
    gamma_theta: float = 1e-5
    gamma_phi: float = 1e-5
    eta_phi: float = 1e-4
    s_theta: float = 1.1
    s_phi: float = 2.3
    delta: float = 1.0
    alpha_min_frac: float = 0.05
    theta_max_fact: float = 1e4
    theta_min_fact: float = 1e-4

    # optimality error scaling
    s_max: float = 100.0

    # starting point and multiplier safeguard
    bound_push: float = 1e-2
    bound_frac: float = 1e-2
    kappa_sigma: float = 1e10

    # inertia-free regularization
    curvature_kappa: float = 1e-12
    max_regularizations: int = 20
    delta_w_first: float = 1e-4
    delta_w_growth: float = 10.0
    delta_c_base: float = 1e-8
    delta_c_exponent: float = 0.25

    # iterative linear solves: tol = min(iterative_tol, iterative_mu_factor * mu)
    iterative_tol: float = 1e-8
    iterative_mu_factor: float = 0.1

    # restoration phase
    restoration: bool = True
    restoration_rho: float = 1000.0
    restoration_max_iter: int = 300

    # gradient-based NLP scaling
    scaling: bool = True
    scaling_gmax: float = 100.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be >= 0, got {self.max_iter}")
        if self.mu_init <= 0:
            raise ValueError(f"mu_init must be positive, got {self.mu_init}")
        if not 0 < self.kappa_mu < 1:
            raise ValueError(f"kappa_mu must be in (0, 1), got {self.kappa_mu}")
        if not 1 < self.theta_mu < 2:
            raise ValueError(f"theta_mu must be in (1, 2), got {self.theta_mu}")
        if not 0 < self.tau_min < 1:
            raise ValueError(f"tau_min must be in (0, 1), got {self.tau_min}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "IpmOptions":
        """Build options from a JSON object, rejecting unknown keys."""
        if not isinstance(data, Mapping):
            raise ParseError("Options must be a JSON object")
        known = {f.name: f for f in fields(cls)}
        values: dict[str, Any] = {}
        for key, value in data.items():
            if key not in known:
                raise ParseError(f"Unknown option: {key}. Available: {', '.join(sorted(known))}", field=key)
            default = getattr(cls, key)
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ParseError(f"Expected a boolean, got {value!r}", field=key)
            elif isinstance(default, int):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ParseError(f"Expected an integer, got {value!r}", field=key)
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParseError(f"Expected a number, got {value!r}", field=key)
            values[key] = float(value) if isinstance(default, float) else value
        try:
            return cls(**values)
        except ValueError as e:
            raise ParseError(str(e)) from e

    @classmethod
    def from_file(cls, path: Path) -> "IpmOptions":
        return cls.from_mapping(load_json(path))

    def updated(self, **changes: Any) -> "IpmOptions":
        return replace(self, **changes)
