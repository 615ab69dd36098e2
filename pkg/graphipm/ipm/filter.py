"""Line-search filter of (constraint violation, barrier objective) pairs."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Filter:
    gamma_theta: float = 1e-5
    gamma_phi: float = 1e-5
    theta_max: float = float("inf")
    entries: list[tuple[float, float]] = field(default_factory=list)

    def dominated(self, theta: float, phi: float) -> bool:
        """True when some entry blocks the pair, margins included."""
        if theta >= self.theta_max:
            return True
        for theta_f, phi_f in self.entries:
            if theta > (1.0 - self.gamma_theta) * theta_f and phi > phi_f - self.gamma_phi * theta_f:
                return True
        return False

    def acceptable(self, theta: float, phi: float) -> bool:
        return not self.dominated(theta, phi)

    def add(self, theta: float, phi: float) -> None:
        """Insert a pair and drop the entries it dominates."""
        if any(tf <= theta and pf <= phi for tf, pf in self.entries):
            return
        self.entries = [(tf, pf) for tf, pf in self.entries if not (theta <= tf and phi <= pf)]
        self.entries.append((theta, phi))

    def reset(self) -> None:
        self.entries.clear()

    def __len__(self) -> int:
        return len(self.entries)


def switching_condition(alpha: float, grad_phi_dx: float, theta: float,
                        delta: float, s_theta: float, s_phi: float) -> bool:
    return grad_phi_dx < 0 and alpha * (-grad_phi_dx) ** s_phi > delta * theta ** s_theta


def filter_accept(flt: Filter, theta: float, phi: float, theta_trial: float, phi_trial: float,
                  alpha: float, grad_phi_dx: float, theta_min: float, eta_phi: float = 1e-4,
                  delta: float = 1.0, s_theta: float = 1.1, s_phi: float = 2.3) -> tuple[bool, bool]:
    """Decide a trial point.

    Returns ``(accepted, armijo_step)``; the filter must be augmented with
    the current pair when a step is accepted without the Armijo condition.
    """
    if flt.dominated(theta_trial, phi_trial):
        return False, False
    if theta <= theta_min and switching_condition(alpha, grad_phi_dx, theta, delta, s_theta, s_phi):
        return phi_trial <= phi + eta_phi * alpha * grad_phi_dx, True
    ok = theta_trial <= (1.0 - flt.gamma_theta) * theta or phi_trial <= phi - flt.gamma_phi * theta
    return ok, False


def alpha_min(grad_phi_dx: float, theta: float, theta_min: float, gamma_theta: float,
              gamma_phi: float, delta: float, s_theta: float, s_phi: float, frac: float) -> float:
    """Smallest step before the line search gives up and calls restoration."""
    if grad_phi_dx < 0:
        candidates = [gamma_theta, gamma_phi * theta / (-grad_phi_dx)]
        if theta <= theta_min:
            candidates.append(delta * theta ** s_theta / (-grad_phi_dx) ** s_phi)
        return frac * min(candidates)
    return frac * gamma_theta
