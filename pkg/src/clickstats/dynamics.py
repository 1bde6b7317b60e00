"""Closed-form witness for a decaying single excitation.

A single emitter releases its excitation into a bath while a bank of
N on-off diodes watches the output mode during a window [t, t + dt].
Damping at rate gamma transforms the mode operator into a mixture of
the signal and fresh bath noise, so the detected intensity inherits
the factor

    b(t, dt) = exp(-2*gamma*t) * (1 - exp(-2*gamma*dt)),

the fraction of the excitation's energy that falls inside the window.

For a single excitation the second-order normally ordered moment of
the window response vanishes: the state carries at most one quantum,
and any normally ordered product of two annihilation operators kills
it.  The 2x2 moment-matrix minor therefore reduces to

    minor = -<first moment>^2 / scaling
          = -prefactor / (2 * gamma * N^2 * (N - 1)) * b(t, dt),

with `prefactor` absorbing the coupling strength and local field
intensity.  The minor is strictly negative exactly when b > 0, i.e.
whenever any part of the decay overlaps the measurement window, so
the click witness flags the state at every finite time.

Only this closed form is implemented; general time-ordered response
functionals are out of scope.  Time units are arbitrary because every
expression depends on the products gamma*t and gamma*dt alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateBank

__all__ = ["DecayModel", "b_function", "decay_minor"]


@dataclass(frozen=True)
class DecayModel:
    """Parameters of the decaying-excitation example.

    gamma: decay rate of the emitter (inverse time), > 0.
    prefactor: coupling times local field intensity, > 0.
    N: number of diodes in the bank, >= 2; fewer diodes leave no
       second-order minor to evaluate.
    """

    gamma: float
    prefactor: float
    N: int

    def __post_init__(self) -> None:
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValueError("decay rate must be finite and > 0")
        if not (self.prefactor > 0.0 and math.isfinite(self.prefactor)):
            raise ValueError("prefactor must be finite and > 0")
        if self.N < 2:
            raise DegenerateBank(
                f"need at least 2 diodes for a second-order minor, got {self.N}"
            )


def b_function(model: DecayModel, t: float, dt: float) -> float:
    """Energy fraction of the decay landing in the window [t, t + dt].

    Evaluates exp(-2*gamma*t) * (1 - exp(-2*gamma*dt)).  `dt` may be
    math.inf, which selects the analytic limit exp(-2*gamma*t); `t`
    may be math.inf as well and yields 0.  Result lies in [0, 1].
    """
    if t < 0.0 or dt < 0.0:
        raise ValueError("window parameters t and dt must be >= 0")
    g2 = 2.0 * model.gamma
    early = 0.0 if math.isinf(t) else math.exp(-g2 * t)
    if math.isinf(dt):
        captured = 1.0
    else:
        # -expm1 keeps precision for small gamma*dt where exp() would
        # cancel against 1.
        captured = -math.expm1(-g2 * dt)
    return early * captured


def decay_minor(model: DecayModel, t: float, dt: float) -> float:
    """Second-order minor of the windowed click-moment matrix.

    Returns -prefactor / (2*gamma*N^2*(N-1)) * b_function(t, dt);
    strictly negative whenever the window captures any of the decay
    (b > 0), zero only for an empty window.
    """
    n = model.N
    scale = model.prefactor / (2.0 * model.gamma * n * n * (n - 1))
    return -scale * b_function(model, t, dt)
