import numpy as np
import pytest

from multisym.bundle import FieldSpec, SectionPatch, random_patch
from multisym.integrate import exact_solution
from multisym.lagrangian import PhasePoint, legendre, nonlinear_wave, particle
from multisym.bundle import jet_of_section
from multisym.multihamiltonian import euler_lagrange_residual
from multisym.noether import (SymmetryGenerator, bridges_momentum_defect, divergence_residual,
                              equivariance_check, lift_generator, momentum_map,
                              noether_current, parse_generator, particle_noether)

SPEC = FieldSpec(1, 1)
WAVE = exact_solution("kg_plane_wave", {"A": 1.0, "k": 1.0, "m": 1.0})
KG = nonlinear_wave(1, 1, "klein_gordon(1)")


def test_lift_of_fiber_shift_and_translation():
    z = PhasePoint.make(SPEC, [0, 0], [0.4], [[1.0, -2.0]])
    lift = lift_generator(SPEC, SymmetryGenerator.fiber_shift(SPEC), z)
    assert np.all(lift.base == 0) and lift.fiber.tolist() == [1.0]
    assert np.all(lift.p == 0)
    lift = lift_generator(SPEC, SymmetryGenerator.translation(SPEC, 0), z)
    assert lift.base.tolist() == [1.0, 0.0] and np.all(lift.p == 0)


def test_rotation_lift():
    spec = FieldSpec(1, 2)
    p = np.array([[1.0, 2.0], [3.0, 4.0]])
    z = PhasePoint.make(spec, [0, 0], [0.5, -0.2], p)
    xi = SymmetryGenerator.fiber_rotation(spec)
    lift = lift_generator(spec, xi, z)
    np.testing.assert_allclose(lift.fiber, [0.2, 0.5])
    # xi_{p_A} = -p_B dxi^B/dy^A with dxi/dy = [[0, -1], [1, 0]]
    np.testing.assert_allclose(lift.p, [-p[1], p[0]])


def test_fiber_jacobian_matches_differences(rng):
    spec = FieldSpec(0, 2)
    xi = SymmetryGenerator(spec, np.zeros(1), lambda y: np.array([y[0] * y[1], np.sin(y[0])]))
    y = rng.normal(size=2)
    np.testing.assert_allclose(xi.jacobian(y), [[y[1], y[0]], [np.cos(y[0]), 0]], atol=1e-6)


def test_momentum_map_examples(rng):
    L = nonlinear_wave(1, 1)
    z = PhasePoint.make(SPEC, [0, 0], [0.3], [[1.2, -0.7]])
    np.testing.assert_allclose(momentum_map(L, SymmetryGenerator.fiber_shift(SPEC), z),
                               [1.2, -0.7])
    assert np.all(momentum_map(L, SymmetryGenerator.zero(SPEC), z) == 0)
    Lp = particle()
    zp = PhasePoint.make(Lp.spec, [0], [1.0], [[2.0]])
    xi = SymmetryGenerator.mechanics(Lp.spec, 1.0, [0.5])
    assert momentum_map(Lp, xi, zp)[0] == pytest.approx(2.0 * 0.5 - 2.5)


def test_time_translation_current_closed_form(rng):
    xi = SymmetryGenerator.translation(SPEC, 0)
    for x in rng.uniform(-3, 3, (5, 2)):
        J = noether_current(KG, xi, WAVE, x)
        v = WAVE.first(x)[0]
        V = KG.potential.value(WAVE.value(x))
        assert J[0] == pytest.approx(-(0.5 * v[0] ** 2 + 0.5 * v[1] ** 2 - V))
        assert J[1] == pytest.approx(v[0] * v[1])


def test_fiber_shift_current_is_momentum(rng):
    L = nonlinear_wave(1, 1)
    patch = random_patch(SPEC, rng)
    x = np.array([0.2, -0.3])
    J = noether_current(L, SymmetryGenerator.fiber_shift(SPEC), patch, x)
    np.testing.assert_allclose(J, legendre(L, jet_of_section(SPEC, patch, x)).p[0])
    assert np.all(noether_current(L, SymmetryGenerator.zero(SPEC), patch, x) == 0)


@pytest.mark.parametrize("name", ["time", "space", "space[1]"])
def test_divergence_free_on_plane_wave(name, rng):
    xi = parse_generator(SPEC, name)
    field = divergence_residual(KG, xi, WAVE, rng.uniform(-5, 5, (10, 2)))
    assert field.max_div <= 1e-8
    assert divergence_residual(KG, xi, WAVE, [[0.3, 0.1]], order=2).max_div <= 1e-6


def test_divergence_on_non_solution_matches_euler_lagrange(rng):
    patch = random_patch(SPEC, rng)
    xs = rng.uniform(-1, 1, (5, 2))
    for name, pot in (("time", "sine_gordon"), ("space", "sine_gordon"), ("shift", "zero")):
        L = nonlinear_wave(1, 1, pot)
        xi = parse_generator(SPEC, name)
        field = divergence_residual(L, xi, patch, xs)
        for x, d in zip(xs, field.div):
            E = euler_lagrange_residual(L, patch, x)
            v = patch.first(x)
            expected = float(E @ (v @ xi.base - xi.fiber_value(patch.value(x))))
            assert d == pytest.approx(expected, abs=1e-8)
        assert field.max_div > 1e-3


def test_critical_constant_divergence_zero():
    patch = SectionPatch(SPEC, lambda x: np.array([0.0]), lambda x: np.zeros((1, 2)),
                         lambda x: np.zeros((1, 2, 2)))
    field = divergence_residual(KG, SymmetryGenerator.translation(SPEC, 0), patch, [[0.5, 0.5]])
    assert field.max_div == 0


def test_equivariance(rng):
    zs = [PhasePoint.make(SPEC, [0, 0], rng.normal(size=1), rng.normal(size=(1, 2)))
          for _ in range(10)]
    free = nonlinear_wave(1, 1)
    rep = equivariance_check(free, SymmetryGenerator.fiber_shift(SPEC), zs)
    assert rep.passed and rep.max == 0
    rep = equivariance_check(KG, SymmetryGenerator.fiber_shift(SPEC), zs)
    assert not rep.passed
    np.testing.assert_allclose(np.abs(rep.values), [abs(z.y[0]) for z in zs])
    spec2 = FieldSpec(1, 2)
    L2 = nonlinear_wave(1, 2, "radial(-1, 0.7)")
    zs2 = [PhasePoint.make(spec2, [0, 0], rng.normal(size=2), rng.normal(size=(2, 2)))
           for _ in range(10)]
    assert equivariance_check(L2, SymmetryGenerator.fiber_rotation(spec2), zs2, tol=1e-10).passed


def test_particle_current_on_exact_flow():
    L = particle(1, "harmonic(1)")
    t = np.linspace(0, 10, 101)
    # q(0) = 1, p(0) = 2 under q'' = -q
    q = np.cos(t) + 2 * np.sin(t)
    p = -np.sin(t) + 2 * np.cos(t)
    res = particle_noether(L, t, q, p, f=1.0)
    assert res.J[0] == pytest.approx(-2.5)
    assert res.drift <= 1e-10
    free = particle(1, "zero")
    res = particle_noether(free, t, 3.0 * t, np.full_like(t, 3.0), f=0.0, xi=[1.0])
    assert np.all(res.J == 3.0)


def test_bridges_momentum_relation(rng):
    spec = FieldSpec(1, 2)
    for xi in (SymmetryGenerator.fiber_rotation(spec), SymmetryGenerator.fiber_shift(spec)):
        z = PhasePoint.make(spec, [0, 0], rng.normal(size=2), rng.normal(size=(2, 2)))
        assert bridges_momentum_defect(spec, xi, z) <= 1e-12


def test_parse_generator_errors():
    with pytest.raises(ValueError):
        parse_generator(SPEC, "boost")
