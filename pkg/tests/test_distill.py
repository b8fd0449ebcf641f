import math

import pytest

from qmux.distill import (
    banded_schedule,
    distill_age,
    distill_fidelity,
    distill_outcome,
    distill_success_prob,
    is_distill_useful,
    pumping_closed_form,
    pumping_limit,
    pumping_recurrence,
    pumping_solution,
)
from qmux.noise import age_of_fidelity, fidelity_of_age

FIDELITY_GRID = [0.25 + 0.75 * k / 24 for k in range(25)]


def bbpssw_table(weights1, weights2):
    """Independent oracle for one BBPSSW round on two Bell-diagonal states.

    The protocol keeps a (phi, phi) or (psi, psi) coincidence and maps the
    surviving pair per the transformation table; rows index the first link,
    columns the second.  Returns (success probability, unnormalised kept
    weights)."""
    # table[i][j] = output Bell index, or None when the round fails
    table = [
        [0, 1, None, None],
        [1, 0, None, None],
        [None, None, 2, 3],
        [None, None, 3, 2],
    ]
    kept = [0.0, 0.0, 0.0, 0.0]
    for i in range(4):
        for j in range(4):
            out = table[i][j]
            if out is not None:
                kept[out] += weights1[i] * weights2[j]
    return sum(kept), kept


def isotropic(f):
    rest = (1 - f) / 3
    return (f, rest, rest, rest)


class TestSuccessProb:
    def test_perfect_pairs_always_succeed(self):
        assert distill_success_prob(1.0, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_floor_value(self):
        # 8/9 * 1/16 - 2/9 + 5/9 = 1/2 exactly
        assert distill_success_prob(0.25, 0.25) == pytest.approx(0.5, abs=1e-15)

    def test_symmetric(self):
        for f1 in (0.3, 0.6, 0.95):
            for f2 in (0.4, 0.8):
                assert distill_success_prob(f1, f2) == distill_success_prob(f2, f1)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            distill_success_prob(0.2, 0.9)
        with pytest.raises(ValueError):
            distill_success_prob(0.9, 1.01)


class TestOutputFidelity:
    def test_perfect_pairs(self):
        assert distill_fidelity(1.0, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_frozen_value(self):
        assert distill_fidelity(0.7, 0.7) == pytest.approx(4.5 / 6.12, abs=1e-12)

    def test_one_perfect_input_simplifies(self):
        # F(f, 1) = 3f / (1 + 2f)
        for f in (0.3, 0.5, 0.8, 1.0):
            assert distill_fidelity(f, 1.0) == pytest.approx(
                3 * f / (1 + 2 * f), abs=1e-12
            )

    def test_fixed_points(self):
        assert distill_fidelity(0.25, 0.25) == pytest.approx(0.25, abs=1e-15)
        assert distill_fidelity(0.5, 0.5) == pytest.approx(0.5, abs=1e-15)


class TestBBPSSWTableOracle:
    def test_reproduces_closed_forms_on_grid(self):
        # Transformation-table simulation plus twirl against the closed
        # forms, full 25x25 isotropic grid at 1e-12.
        for f1 in FIDELITY_GRID:
            for f2 in FIDELITY_GRID:
                p, kept = bbpssw_table(isotropic(f1), isotropic(f2))
                assert p == pytest.approx(distill_success_prob(f1, f2), abs=1e-12)
                assert kept[0] / p == pytest.approx(distill_fidelity(f1, f2), abs=1e-12)


class TestDistillAge:
    def test_fresh_pairs(self):
        assert distill_age(0, 0, 24) == 0

    def test_symmetric(self):
        for m1, m2 in [(2, 9), (0, 5), (11, 3)]:
            assert distill_age(m1, m2, 24) == distill_age(m2, m1, 24)

    @pytest.mark.parametrize("m_star", [5, 8, 24])
    def test_matches_fidelity_composition(self, m_star):
        for m1 in range(0, 2 * m_star + 1, 3):
            for m2 in range(0, 2 * m_star + 1, 4):
                f_out = distill_fidelity(
                    fidelity_of_age(m1, m_star), fidelity_of_age(m2, m_star)
                )
                expected = 0 if f_out == 1.0 else age_of_fidelity(f_out, m_star)
                assert distill_age(m1, m2, m_star) == expected

    @pytest.mark.parametrize("m_star", [5, 8, 24])
    def test_matches_logarithmic_form(self, m_star):
        # ceil(m* log((15 - 6 s + 24 q)/(32 q - 2 s - 1))), s = f1+f2, q = f1 f2
        for m1 in range(0, 2 * m_star + 1, 3):
            for m2 in range(0, 2 * m_star + 1, 4):
                f1 = fidelity_of_age(m1, m_star)
                f2 = fidelity_of_age(m2, m_star)
                s, q = f1 + f2, f1 * f2
                arg = (15 - 6 * s + 24 * q) / (32 * q - 2 * s - 1)
                expected = max(0, math.ceil(m_star * math.log(arg) - 1e-9))
                assert distill_age(m1, m2, m_star) == expected

    def test_never_ages_equal_inputs(self):
        # The fidelity always improves, but the ceiling can absorb the gain
        # for young links; the age never increases and drops once the gain
        # crosses an integer step.
        for m in range(1, 21):
            assert distill_age(m, m, 24) <= m
        for m in range(4, 21):
            assert distill_age(m, m, 24) < m


class TestDistillOutcome:
    def test_bundles_all_four_quantities(self):
        out = distill_outcome(4, 4, 24)
        f = fidelity_of_age(4, 24)
        assert out.success_prob == distill_success_prob(f, f)
        assert out.output_fidelity == distill_fidelity(f, f)
        assert out.output_age == distill_age(4, 4, 24)
        assert out.useful is is_distill_useful(f, f)

    def test_useful_iff_fidelity_beats_both(self):
        fresh = distill_outcome(0, 9, 24)  # one perfect input
        assert not fresh.useful
        equal = distill_outcome(9, 9, 24)
        assert equal.useful
        assert equal.output_fidelity > fidelity_of_age(9, 24)


class TestUsefulness:
    def test_perfect_input_never_useful(self):
        for f in (0.3, 0.7, 1.0):
            assert not is_distill_useful(1.0, f)
            assert not is_distill_useful(f, 1.0)

    def test_equal_entangled_inputs_useful(self):
        for f in (0.55, 0.7, 0.9, 0.99):
            assert is_distill_useful(f, f)

    def test_boundary_cases(self):
        assert not is_distill_useful(0.5, 0.5)
        # a weak partner drags a strong link down
        assert not is_distill_useful(0.55, 0.95)


class TestBandedSchedule:
    def test_perfect_input_stays_perfect(self):
        for fidelity, prob in banded_schedule(1.0, 16):
            assert fidelity == pytest.approx(1.0, abs=1e-15)
            assert prob == pytest.approx(1.0, abs=1e-15)

    def test_round_count_and_composition(self):
        rounds = banded_schedule(0.7, 4)
        assert len(rounds) == 2
        f1 = distill_fidelity(0.7, 0.7)
        assert rounds[0][0] == pytest.approx(f1, abs=1e-12)
        assert rounds[1][0] == pytest.approx(distill_fidelity(f1, f1), abs=1e-12)
        # round 1 runs two attempts, round 2 one more
        p1 = distill_success_prob(0.7, 0.7)
        assert rounds[0][1] == pytest.approx(p1**2, abs=1e-12)
        assert rounds[1][1] == pytest.approx(
            p1**2 * distill_success_prob(f1, f1), abs=1e-12
        )

    def test_final_fidelity_increases_with_channels(self):
        finals = [banded_schedule(0.7, n)[-1][0] for n in (2, 4, 8, 16, 32)]
        assert all(a < b for a, b in zip(finals, finals[1:]))
        # unlike pumping, banding approaches unit fidelity given enough links
        assert banded_schedule(0.7, 2**20)[-1][0] > 0.999

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            banded_schedule(0.7, 3)
        with pytest.raises(ValueError):
            banded_schedule(0.5, 4)


class TestPumping:
    def test_zero_rounds_is_identity(self):
        assert pumping_recurrence(0.8, 0) == 0.8

    def test_first_round_matches_banded(self):
        for f0 in (0.6, 0.75, 0.9):
            assert pumping_recurrence(f0, 1) == pytest.approx(
                distill_fidelity(f0, f0), abs=1e-15
            )
            assert pumping_closed_form(f0, 1) == pytest.approx(
                distill_fidelity(f0, f0), abs=1e-12
            )

    def test_closed_form_matches_recurrence(self):
        for k in range(55, 100):
            f0 = k / 100
            for r in (0, 1, 2, 5, 17, 50):
                assert pumping_closed_form(f0, r) == pytest.approx(
                    pumping_recurrence(f0, r), abs=1e-10
                )

    def test_closed_form_perfect_input(self):
        for r in (0, 1, 10, 50):
            assert pumping_closed_form(1.0, r) == pytest.approx(1.0, abs=1e-12)

    def test_monotone_non_decreasing(self):
        for f0 in (0.55, 0.7, 0.9):
            values = [pumping_recurrence(f0, r) for r in range(30)]
            assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))


class TestPumpingLimit:
    def test_exact_endpoints(self):
        assert pumping_limit(0.5) == 0.5
        assert pumping_limit(1.0) == 1.0

    def test_frozen_value(self):
        assert pumping_limit(0.8) == pytest.approx((1.8 + math.sqrt(4.12)) / 4.4,
                                                   abs=1e-12)
        assert pumping_limit(0.8) == pytest.approx(0.8704, abs=5e-5)

    def test_is_the_recurrence_limit(self):
        for f0 in (0.55, 0.8, 0.95):
            assert pumping_recurrence(f0, 200) == pytest.approx(
                pumping_limit(f0), abs=1e-6
            )

    def test_strictly_below_one(self):
        for k in range(26, 100):
            assert pumping_limit(k / 100) < 1.0

    def test_domain_error_at_quarter(self):
        with pytest.raises(ValueError):
            pumping_limit(0.25)


class TestPumpingSolution:
    def test_eigenpairs(self):
        for f0 in (0.6, 0.8, 0.97):
            sol = pumping_solution(f0, 5)
            (a1, a2), (a3, a4) = sol.matrix()
            for lam, omega in (
                (sol.lam_plus, sol.omega_plus),
                (sol.lam_minus, sol.omega_minus),
            ):
                # A (omega, 1) = lam (omega, 1)
                assert a1 * omega + a2 == pytest.approx(lam * omega, abs=1e-12)
                assert a3 * omega + a4 == pytest.approx(lam, abs=1e-12)

    def test_fidelities_match_recurrence(self):
        sol = pumping_solution(0.77, 20)
        for r, value in enumerate(sol.fidelities):
            assert value == pytest.approx(pumping_recurrence(0.77, r), abs=1e-10)

    def test_limit_is_omega_plus(self):
        sol = pumping_solution(0.8, 0)
        assert sol.omega_plus == pytest.approx(pumping_limit(0.8), abs=1e-15)
