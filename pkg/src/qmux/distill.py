"""BBPSSW two-to-one distillation arithmetic and multi-round schedules.

The success probability and output fidelity follow the standard BBPSSW
expressions for isotropic inputs.  The banded schedule distills equal-age
pairs tournament style; the pumping schedule repeatedly distills one
surviving link with fresh links of the base fidelity and admits an exact
closed form via the 2x2 transfer matrix of its Moebius recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .noise import age_of_fidelity, fidelity_of_age


def _check_fidelity(f: float, name: str = "fidelity") -> None:
    if not 0.25 <= f <= 1.0:
        raise ValueError(f"{name} must lie in [0.25, 1], got {f}")


def distill_success_prob(f1: float, f2: float) -> float:
    """Probability that BBPSSW succeeds on isotropic inputs f1, f2."""
    _check_fidelity(f1, "f1")
    _check_fidelity(f2, "f2")
    # grouped so the expression is exactly symmetric in floating point
    return (8.0 / 9.0) * (f1 * f2) - (2.0 / 9.0) * (f1 + f2) + 5.0 / 9.0


def distill_fidelity(f1: float, f2: float) -> float:
    """Output fidelity of a successful BBPSSW round on isotropic inputs."""
    _check_fidelity(f1, "f1")
    _check_fidelity(f2, "f2")
    return (1.0 - (f1 + f2) + 10.0 * (f1 * f2)) / (
        5.0 - 2.0 * (f1 + f2) + 8.0 * (f1 * f2)
    )


def distill_age(m1: int, m2: int, m_star: int) -> int:
    """Age of the surviving link after distilling links of ages m1, m2.

    Computed by composing the fidelity update with the age inversion, which
    keeps a single ceiling convention; the direct logarithmic form is kept
    as a cross-check in the test suite.
    """
    f1 = fidelity_of_age(m1, m_star)
    f2 = fidelity_of_age(m2, m_star)
    out = distill_fidelity(f1, f2)
    if out <= 0.25:
        raise ValueError(
            f"distilled fidelity {out} at or below 1/4; input fidelities too low"
        )
    return age_of_fidelity(out, m_star)


def is_distill_useful(f1: float, f2: float) -> bool:
    """True when the distilled fidelity strictly beats both inputs."""
    _check_fidelity(f1, "f1")
    _check_fidelity(f2, "f2")
    return distill_fidelity(f1, f2) > max(f1, f2)


@dataclass(frozen=True)
class DistillOutcome:
    """Everything one BBPSSW attempt on two aged links would produce."""

    success_prob: float
    output_fidelity: float
    output_age: int
    useful: bool


def distill_outcome(m1: int, m2: int, m_star: int) -> DistillOutcome:
    """Bundle success probability, output fidelity/age and usefulness for
    distilling links of ages m1 and m2."""
    f1 = fidelity_of_age(m1, m_star)
    f2 = fidelity_of_age(m2, m_star)
    return DistillOutcome(
        distill_success_prob(f1, f2),
        distill_fidelity(f1, f2),
        distill_age(m1, m2, m_star),
        is_distill_useful(f1, f2),
    )


def banded_schedule(f0: float, n_ch: int) -> list[tuple[float, float]]:
    """Per-round (fidelity, cumulative success probability) of the banded
    schedule on n_ch equal-fidelity links.

    Round r performs n_ch / 2**r pairwise distillations of identical links;
    the cumulative probability multiplies the success probability of every
    attempt made so far.  n_ch must be a power of two.
    """
    if n_ch < 1 or n_ch & (n_ch - 1):
        raise ValueError(f"n_ch must be a power of two, got {n_ch}")
    if not 0.5 < f0 <= 1.0:
        raise ValueError(f"banded schedule needs an entangled input, got f0={f0}")
    rounds = []
    f = f0
    cumulative = 1.0
    pairs = n_ch // 2
    while pairs >= 1:
        p = distill_success_prob(f, f)
        f = distill_fidelity(f, f)
        cumulative *= p**pairs
        rounds.append((f, cumulative))
        pairs //= 2
    return rounds


def pumping_recurrence(f0: float, r: int) -> float:
    """Fidelity after r pumping rounds, by iterating f_r = F(f_{r-1}, f0)."""
    if not 0.25 <= f0 <= 1.0:
        raise ValueError(f"f0 must lie in [0.25, 1], got {f0}")
    f = f0
    for _ in range(r):
        f = distill_fidelity(f, f0)
    return f


def _discriminant(f0: float) -> float:
    # 7 - 26 f0 + 28 f0^2 has minimum 37/28 > 0, so the root is always real.
    return math.sqrt(7.0 - 26.0 * f0 + 28.0 * f0 * f0)


def pumping_closed_form(f0: float, r: int) -> float:
    """Exact fidelity after r pumping rounds from the transfer-matrix form."""
    if not 0.25 <= f0 <= 1.0:
        raise ValueError(f"f0 must lie in [0.25, 1], got {f0}")
    s = _discriminant(f0)
    lam_minus = (2.0 + 4.0 * f0 - s) ** r
    lam_plus = (2.0 + 4.0 * f0 + s) ** r
    num = -(1.0 - 4.0 * f0 + 6.0 * f0 * f0) * (lam_minus - lam_plus) + f0 * s * (
        lam_minus + lam_plus
    )
    den = -(3.0 - 8.0 * f0 + 8.0 * f0 * f0) * (lam_minus - lam_plus) + s * (
        lam_minus + lam_plus
    )
    return num / den


def pumping_limit(f0: float) -> float:
    """Fixed point the pumping sequence converges to (strictly < 1 for f0 < 1)."""
    if not 0.25 <= f0 <= 1.0:
        raise ValueError(f"f0 must lie in [0.25, 1], got {f0}")
    den = -2.0 + 8.0 * f0
    if den == 0.0:
        raise ValueError("pumping limit undefined at f0 = 0.25")
    return (-3.0 + 6.0 * f0 + _discriminant(f0)) / den


@dataclass(frozen=True)
class PumpingSolution:
    """Spectral data of the pumping transfer matrix A = [[a1, a2], [a3, a4]].

    The per-round fidelities come from v_r = A^r (f0, 1); the eigenvector
    slopes omega_plus/omega_minus are the fixed points of the recurrence and
    omega_plus is the r -> infinity limit.
    """

    f0: float
    a1: float
    a2: float
    a3: float
    a4: float
    lam_plus: float
    lam_minus: float
    omega_plus: float
    omega_minus: float
    c1: float
    c2: float
    fidelities: tuple[float, ...] = field(default=())

    def matrix(self):
        return ((self.a1, self.a2), (self.a3, self.a4))


def pumping_solution(f0: float, rounds: int) -> PumpingSolution:
    """Assemble the full spectral solution plus the first ``rounds`` fidelities."""
    if not 0.25 < f0 <= 1.0:
        raise ValueError(f"f0 must lie in (0.25, 1], got {f0}")
    a1, a2, a3, a4 = 10.0 * f0 - 1.0, 1.0 - f0, 8.0 * f0 - 2.0, 5.0 - 2.0 * f0
    s = _discriminant(f0)
    lam_plus = 2.0 + 4.0 * f0 + s
    lam_minus = 2.0 + 4.0 * f0 - s
    den = -2.0 + 8.0 * f0
    omega_plus = (-3.0 + 6.0 * f0 + s) / den
    omega_minus = (-3.0 + 6.0 * f0 - s) / den
    # Decompose (f0, 1) over the eigenvectors (omega, 1).
    c1 = (f0 - omega_minus) / (omega_plus - omega_minus)
    c2 = 1.0 - c1
    fids = []
    for r in range(rounds + 1):
        num = c1 * lam_plus**r * omega_plus + c2 * lam_minus**r * omega_minus
        den_r = c1 * lam_plus**r + c2 * lam_minus**r
        fids.append(num / den_r)
    return PumpingSolution(
        f0, a1, a2, a3, a4, lam_plus, lam_minus, omega_plus, omega_minus,
        c1, c2, tuple(fids),
    )
