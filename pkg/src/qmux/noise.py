"""Age/fidelity algebra and the Pauli-twirled decoherence model.

Every link in the chain carries an integer age m that maps to a fidelity
through f(m) = (1 + 3 exp(-m / m_star)) / 4, where m_star is the memory
cutoff in time steps.  The functions here are the numeric foundation for
swapping, distillation and the closed-form benchmarks; they are all pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Bell weights are indexed (phi+, phi-, psi+, psi-) everywhere.
BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")

# Nudge applied before taking ceilings so that values which are exact
# integers up to float noise do not round up spuriously.
_CEIL_EPS = 1e-9


def _ceil(x: float) -> int:
    return math.ceil(x - _CEIL_EPS)


def fidelity_of_age(m: int, m_star: int) -> float:
    """Fidelity of a link of age m under cutoff m_star."""
    if m_star < 1:
        raise ValueError(f"m_star must be >= 1, got {m_star}")
    if m < 0:
        raise ValueError(f"age must be >= 0, got {m}")
    return 0.25 * (1.0 + 3.0 * math.exp(-m / m_star))


def age_of_fidelity(fidelity: float, m_star: int) -> int:
    """Smallest integer age whose fidelity does not exceed ``fidelity``.

    Accepts any fidelity in (0.25, 1]; values at or below 1/4 are outside
    the range of the noise model and raise.
    """
    if m_star < 1:
        raise ValueError(f"m_star must be >= 1, got {m_star}")
    if fidelity <= 0.25 or fidelity > 1.0:
        raise ValueError(f"fidelity must lie in (0.25, 1], got {fidelity}")
    if fidelity == 1.0:
        return 0
    return max(0, _ceil(-m_star * math.log((4.0 * fidelity - 1.0) / 3.0)))


def swap_age(m1: int, m2: int) -> int:
    """Age of the link produced by a successful entanglement swap."""
    if m1 < 0 or m2 < 0:
        raise ValueError("ages must be non-negative")
    return m1 + m2


def entanglement_loss_age(m_star: int) -> int:
    """Age at which the state stops being entangled (fidelity <= 1/2)."""
    if m_star < 1:
        raise ValueError(f"m_star must be >= 1, got {m_star}")
    return _ceil(m_star * math.log(3.0))


@dataclass(frozen=True)
class PauliChannelParams:
    """Single-qubit Pauli channel with dephasing scale m2_star and
    depolarising scale m1_star (both in time steps)."""

    m1_star: int
    m2_star: int
    p_i: float
    p_x: float
    p_y: float
    p_z: float

    def probs(self) -> tuple[float, float, float, float]:
        return (self.p_i, self.p_x, self.p_y, self.p_z)


def pauli_channel_probs(m1_star: int, m2_star: int) -> PauliChannelParams:
    """Pauli error probabilities for one application of the channel.

    Not every scale pair is a physical channel: the dephasing weight must
    cover the depolarising one (roughly m2_star <= 2 m1_star), otherwise p_z
    would be negative.
    """
    if m1_star < 1 or m2_star < 1:
        raise ValueError("m1_star and m2_star must be >= 1")
    ex1 = math.exp(-1.0 / m1_star)
    ex2 = math.exp(-1.0 / m2_star)
    p_x = (1.0 - ex1) / 4.0
    p_y = p_x
    p_i = (1.0 + ex2) / 2.0 - p_x
    p_z = (1.0 - ex2) / 2.0 - p_x
    if p_z < 0.0 or p_i < 0.0:
        raise ValueError(
            f"(m1_star={m1_star}, m2_star={m2_star}) gives a negative Pauli weight"
        )
    return PauliChannelParams(m1_star, m2_star, p_i, p_x, p_y, p_z)


@dataclass(frozen=True)
class BellDiagonalState:
    """Weights on the four Bell states, in the fixed order
    (phi+, phi-, psi+, psi-)."""

    phi_plus: float
    phi_minus: float
    psi_plus: float
    psi_minus: float

    def __post_init__(self):
        w = self.weights()
        if min(w) < -1e-12:
            raise ValueError(f"Bell weights must be non-negative, got {w}")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"Bell weights must sum to 1, got {sum(w)}")

    def weights(self) -> tuple[float, float, float, float]:
        return (self.phi_plus, self.phi_minus, self.psi_plus, self.psi_minus)

    @property
    def fidelity(self) -> float:
        """Overlap with phi+, the target Bell state."""
        return self.phi_plus


def decohere_bell_state(m: int, params: PauliChannelParams) -> BellDiagonalState:
    """State of a phi+ pair after m applications of the two-sided channel."""
    if m < 0:
        raise ValueError(f"age must be >= 0, got {m}")
    e1 = math.exp(-2.0 * m / params.m1_star)
    e2 = math.exp(-2.0 * m / params.m2_star)
    return BellDiagonalState(
        0.25 * (1.0 + e1 + 2.0 * e2),
        0.25 * (1.0 + e1 - 2.0 * e2),
        0.25 * (1.0 - e1),
        0.25 * (1.0 - e1),
    )


def twirl_isotropic(state: BellDiagonalState) -> BellDiagonalState:
    """Isotropic twirl: keep the phi+ weight, spread the rest evenly."""
    f = state.phi_plus
    rest = (1.0 - f) / 3.0
    return BellDiagonalState(f, rest, rest, rest)
