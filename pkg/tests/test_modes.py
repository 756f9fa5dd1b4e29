import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given

from trapwave.modes import (
    ComplexAmplitude,
    DegenerateExcitationWarning,
    InconsistentRootError,
    SolverError,
    bracketed_root,
    c0_equivalent_form,
    c0_fixed,
    c0_moving,
    initial_amplitude,
    mode_profile,
    solve_frequency,
    wrap_phase,
)
from trapwave.params import LocalizationError, ParamSet, cutoff_frequency, frequency_residual
from trapwave.pulse import PulseSpec

from conftest import EXAMPLE_A, EXAMPLE_B, admissible_params, relerr, squared_root, well_conditioned


def test_example_a_frequency():
    m = solve_frequency(EXAMPLE_A)
    assert m.omega0**2 == pytest.approx(2 * (math.sqrt(2) - 1), rel=1e-12)
    assert m.omega0 == pytest.approx(0.9101797, abs=5e-8)
    assert m.S == pytest.approx(math.sqrt(2) - 1, rel=1e-12)
    assert m.B == 0.0


def test_example_a_c0():
    # the quoted example value 0.3218114 is a typo; both closed forms give 0.32179713
    m = solve_frequency(EXAMPLE_A)
    assert m.c0 == pytest.approx(0.32179713, abs=1e-8)


def test_example_b_frequency():
    m = solve_frequency(EXAMPLE_B)
    assert m.omega0**2 == pytest.approx(math.sqrt(7) - 2, rel=1e-12)
    assert m.omega0 == pytest.approx(0.8035865, abs=5e-8)
    tv = 1 - 0.25
    assert m.B == pytest.approx(0.5 * m.omega0 / tv, rel=1e-14)


@given(admissible_params())
def test_residual_at_root(p):
    m = solve_frequency(p)
    scale = max(abs(p.K), p.M * m.omega0**2, 2 * math.sqrt(p.k * p.T))
    assert abs(frequency_residual(p, m.omega0)) <= 1e-12 * scale


@given(admissible_params())
def test_root_matches_squared_equation(p):
    assert relerr(solve_frequency(p).omega0 ** 2, squared_root(p)) < 1e-10


@given(admissible_params())
def test_c0_is_residue_of_response(p):
    # |C| = c0 |Fp| comes from the pole of 1/g, so c0 = 2 / |g'(omega0)|
    m = solve_frequency(p)
    gap = min(m.omega0, cutoff_frequency(p) - m.omega0)
    h = 1e-4 * gap
    dg = (frequency_residual(p, m.omega0 + h) - frequency_residual(p, m.omega0 - h)) / (2 * h)
    assert m.c0 == pytest.approx(2 / abs(dg), rel=1e-5)


@given(admissible_params(moving=False))
def test_c0_forms_agree_fixed(p):
    m = solve_frequency(p)
    assume(well_conditioned(p, m))
    assert relerr(c0_equivalent_form(p, m.omega0), c0_fixed(p, m.omega0)) < 1e-12
    assert relerr(c0_moving(p, m.omega0), c0_fixed(p, m.omega0)) < 1e-12


def test_nearly_isolated_oscillator():
    p = ParamSet(K=4.0, M=1.0, T=1e-4, rho=1e-6, k=1e-4)
    m = solve_frequency(p)
    assert m.omega0 == pytest.approx(2.0, rel=1e-4)
    assert c0_equivalent_form(p, m.omega0) == pytest.approx(1 / (p.M * m.omega0), rel=1e-3)
    assert relerr(c0_equivalent_form(p, m.omega0), m.c0) < 1e-10


def test_equivalent_form_rejects_non_root():
    p = ParamSet(K=5.0, M=1.0, T=0.5, rho=0.1, k=1.0)
    with pytest.raises(InconsistentRootError):
        c0_equivalent_form(p.replace(K=20.0, T=0.01), 0.1)


def test_equivalent_form_needs_fixed():
    with pytest.raises(ValueError):
        c0_equivalent_form(EXAMPLE_B, 0.8)


def test_localization_propagates():
    with pytest.raises(LocalizationError):
        solve_frequency(EXAMPLE_A.replace(K=10.0))


def test_bracketed_root():
    assert bracketed_root(lambda x: 2.0 - x * x, 0.0, 3.0) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert bracketed_root(lambda x: math.cos(x), 0.0, 3.0) == pytest.approx(math.pi / 2, rel=1e-15)
    with pytest.raises(SolverError) as info:
        bracketed_root(lambda x: x * x + 1.0, -1.0, 1.0)
    assert info.value.bracket == (-1.0, 1.0)


def test_bracketed_root_reports_non_convergence():
    with pytest.raises(SolverError):
        bracketed_root(lambda x: x**3 - 0.3, 0.0, 1.0, maxiter=2)


def test_profile_shape():
    m = solve_frequency(EXAMPLE_B)
    x = np.linspace(-10, 10, 2001)
    u = mode_profile(m, ComplexAmplitude(2.0, 0.3), x, 1.7, "comoving")
    ref = 2.0 * np.exp(-m.S * np.abs(x)) * np.cos(m.omega0 * 1.7 - m.B * x - 0.3)
    assert np.max(np.abs(u - ref)) < 1e-15
    lab = mode_profile(m, ComplexAmplitude(2.0, 0.3), x + 0.5 * 1.7, 1.7, "lab")
    assert np.max(np.abs(lab - u)) < 1e-12


def test_profile_at_inclusion_is_inclusion_motion():
    m = solve_frequency(EXAMPLE_A)
    t = np.linspace(0, 10, 11)
    U = [mode_profile(m, ComplexAmplitude(1.5, -1.0), 0.0, s) for s in t]
    assert np.allclose(U, 1.5 * np.cos(m.omega0 * t + 1.0), atol=1e-15)


def test_wrap_phase():
    assert wrap_phase(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_phase(-math.pi) == pytest.approx(math.pi)
    assert ComplexAmplitude(1.0, 7.0).phase == pytest.approx(7.0 - 2 * math.pi)
    with pytest.raises(ValueError):
        ComplexAmplitude(-1.0)


def test_initial_amplitude_half_sine():
    m = solve_frequency(EXAMPLE_A)
    pulse = PulseSpec.half_sine(m.omega0)
    amp = initial_amplitude(m, pulse)
    # resonant half-sine: Fp = -i pi / (2 omega0), so |C| = c0 pi / (2 omega0) and arg C = -pi
    assert amp.modulus == pytest.approx(m.c0 * math.pi / (2 * m.omega0), rel=1e-12)
    assert abs(wrap_phase(amp.phase - math.pi)) < 1e-10


def test_degenerate_excitation_warns():
    m = solve_frequency(EXAMPLE_A)
    # two full carrier periods at twice the mode frequency: Fp(omega0) vanishes
    w = m.omega0 / 2
    pulse = PulseSpec("half-sine", 1.0, 2 * m.omega0, 2 * math.pi / w)
    with pytest.warns(DegenerateExcitationWarning):
        amp = initial_amplitude(m, pulse)
    assert amp.modulus < 1e-10


def test_no_warning_for_ordinary_pulse():
    m = solve_frequency(EXAMPLE_B)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        initial_amplitude(m, PulseSpec("raised-cosine", 1.0, m.omega0, 20.0))
