import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multisym import dual
from multisym.bundle import FieldSpec, JetPoint
from multisym.errors import ConvergenceError, SingularJacobianError, UnknownModelError
from multisym.lagrangian import (CallableLagrangian, PhasePoint, QuadraticLagrangian,
                                 elliptic_pattern, hamiltonian, hamiltonian_hessian,
                                 hamiltonian_partials, invert_legendre, legendre,
                                 make_lagrangian, nonlinear_wave, partials_fd_error,
                                 particle, regularity_check)

coord = st.floats(-2, 2, allow_nan=False)


def wave_jet(phi, v0, v1):
    return JetPoint.make(FieldSpec(1, 1), [0.0, 0.0], [phi], [[v0, v1]])


def test_legendre_free_wave():
    L = nonlinear_wave(1, 1)
    z = legendre(L, wave_jet(0.0, 2.0, 1.0))
    np.testing.assert_allclose(z.p, [[2.0, -1.0]])
    assert z.p_affine == pytest.approx(-1.5)
    # central differences of L as the oracle
    h = 1e-6
    jet = wave_jet(0.0, 2.0, 1.0)
    for mu in range(2):
        e = np.zeros((1, 2))
        e[0, mu] = h
        fd = (L.value(jet.x, jet.y, jet.v + e) - L.value(jet.x, jet.y, jet.v - e)) / (2 * h)
        assert z.p[0, mu] == pytest.approx(fd, rel=1e-8)


def test_legendre_zero_velocity():
    L = nonlinear_wave(1, 1)
    z = legendre(L, wave_jet(0.3, 0.0, 0.0))
    assert np.all(z.p == 0) and z.p_affine == 0.0
    Lk = nonlinear_wave(1, 1, "klein_gordon(1)")
    z = legendre(Lk, wave_jet(0.3, 0.0, 0.0))
    assert z.p_affine == pytest.approx(Lk.value(z.x, z.y, np.zeros((1, 2))))


def test_particle_legendre_and_hamiltonian():
    L = particle(1, "harmonic(1)")
    z = legendre(L, JetPoint.make(L.spec, [0.0], [1.0], [[2.0]]))
    assert z.p[0, 0] == 2.0
    assert z.p_affine == pytest.approx(-2.5)
    assert hamiltonian(L, PhasePoint.make(L.spec, [0.0], [1.0], [[2.0]])) == pytest.approx(2.5)


def test_regularity():
    wave = nonlinear_wave(1, 1)
    jets = [wave_jet(0.1 * i, i, -i) for i in range(5)]
    rep = regularity_check(wave, jets)
    assert rep.passed and rep.worst == pytest.approx(1.0)
    half = QuadraticLagrangian(FieldSpec(1, 1), [1.0, 0.0], "zero")
    rep = regularity_check(half, jets)
    assert not rep.passed and np.isinf(rep.worst)
    osc = particle()
    assert regularity_check(osc, [JetPoint.make(osc.spec, [0], [1], [[2]])]).passed


def test_invert_legendre_examples():
    L = nonlinear_wave(1, 1)
    g = invert_legendre(L, PhasePoint.make(L.spec, [0, 0], [0], [[2.0, -1.0]]))
    np.testing.assert_allclose(g.v, [[2.0, 1.0]])
    g = invert_legendre(L, PhasePoint.make(L.spec, [0, 0], [0], [[0.0, 0.0]]))
    assert np.all(g.v == 0)


def test_invert_legendre_errors():
    half = QuadraticLagrangian(FieldSpec(1, 1), [1.0, 0.0], "zero")
    with pytest.raises(SingularJacobianError):
        invert_legendre(half, PhasePoint.make(half.spec, [0, 0], [0], [[1.0, 1.0]]))
    # p = v^3 has no finite-step Newton convergence from v = 0 with 1 iteration
    cubic = CallableLagrangian(FieldSpec(0, 1),
                               lambda x, y, v: 0.25 * v[0, 0] ** 4 + 0.5 * v[0, 0] ** 2)
    with pytest.raises(ConvergenceError):
        invert_legendre(cubic, PhasePoint.make(cubic.spec, [0], [0], [[50.0]]), max_iter=1)


@settings(max_examples=100)
@given(st.lists(coord, min_size=5, max_size=5))
def test_round_trip(vals):
    L = nonlinear_wave(1, 1, "sine_gordon")
    jet = JetPoint.make(L.spec, vals[:2], [vals[2]], [vals[3:]])
    back = invert_legendre(L, legendre(L, jet))
    np.testing.assert_allclose(back.v, jet.v, atol=1e-9)


def test_hamiltonian_closed_forms():
    L = nonlinear_wave(1, 1)
    z = PhasePoint.make(L.spec, [0, 0], [0.0], [[2.0, -1.0]])
    assert hamiltonian(L, z) == pytest.approx(1.5)
    Lk = nonlinear_wave(1, 1, "klein_gordon(1)")
    z0 = PhasePoint.make(Lk.spec, [0, 0], [0.7], [[0.0, 0.0]])
    assert hamiltonian(Lk, z0) == pytest.approx(-Lk.potential.value([0.7]))


@settings(max_examples=100)
@given(st.lists(coord, min_size=3, max_size=3))
def test_partials_closed_form_and_e101(vals):
    phi, p0, p1 = vals
    L = nonlinear_wave(1, 1, "duffing(-1, 0.5)")
    z = PhasePoint.make(L.spec, [0, 0], [phi], [[p0, p1]])
    gy, gp = hamiltonian_partials(L, z)
    np.testing.assert_allclose(gp, [[p0, -p1]], atol=1e-12)
    assert gy[0] == pytest.approx(-(-phi + 0.5 * phi ** 3), abs=1e-12)
    cy, cp = hamiltonian_partials(L, z, closed_form=True)
    np.testing.assert_allclose(cy, gy, atol=1e-12)
    g = invert_legendre(L, z)
    np.testing.assert_allclose(gp, g.v, atol=1e-8)


def test_partials_vanish_without_potential(rng):
    L = nonlinear_wave(2, 2)
    for _ in range(10):
        z = PhasePoint.make(L.spec, rng.normal(size=3), rng.normal(size=2), rng.normal(size=(2, 3)))
        assert np.all(hamiltonian_partials(L, z)[0] == 0)


def test_partials_match_differences_of_H(rng):
    L = elliptic_pattern(1, "sine_gordon")
    for _ in range(10):
        z = PhasePoint.make(L.spec, rng.normal(size=2), rng.normal(size=1), rng.normal(size=(1, 2)))
        gy, gp = hamiltonian_partials(L, z)
        h = 1e-6
        Hp = hamiltonian(L, PhasePoint.make(L.spec, z.x, z.y + h, z.p))
        Hm = hamiltonian(L, PhasePoint.make(L.spec, z.x, z.y - h, z.p))
        assert gy[0] == pytest.approx((Hp - Hm) / (2 * h), rel=1e-6, abs=1e-8)


def _nonquadratic():
    def fn(x, y, v):
        return (0.5 * (v[0, 0] ** 2 - v[0, 1] ** 2) + 0.1 * v[0, 0] ** 4
                + dual.cos(y[0]) * (1 + 0.2 * v[0, 1] ** 2) + 0.1 * x[1] * v[0, 0])
    return CallableLagrangian(FieldSpec(1, 1), fn, explicit_x=True)


def test_callable_dual_derivatives_match_differences(rng):
    L = _nonquadratic()
    for _ in range(10):
        jet = JetPoint.make(L.spec, rng.normal(size=2), rng.normal(size=1),
                            rng.uniform(-0.5, 0.5, (1, 2)))
        assert partials_fd_error(L, jet) < 1e-6


def test_callable_fd_mode_agrees_with_dual(rng):
    Ld = _nonquadratic()
    Lf = CallableLagrangian(Ld.spec, Ld.fn, explicit_x=True, derivatives="fd")
    x, y, v = rng.normal(size=2), rng.normal(size=1), rng.uniform(-0.5, 0.5, (1, 2))
    np.testing.assert_allclose(Lf.dL_dv(x, y, v), Ld.dL_dv(x, y, v), rtol=1e-6)
    np.testing.assert_allclose(Lf.d2L_dvdv(x, y, v), Ld.d2L_dvdv(x, y, v), rtol=1e-4, atol=1e-6)
    np.testing.assert_allclose(Lf.d2L_dvdx(x, y, v), Ld.d2L_dvdx(x, y, v), atol=1e-4)


def test_nonquadratic_hamiltonian_hessian_matches_differences(rng):
    L = _nonquadratic()
    z = legendre(L, JetPoint.make(L.spec, [0.2, 0.1], [0.4], [[0.3, -0.2]]))
    H = hamiltonian_hessian(L, z)
    h = 1e-6
    Z0 = np.r_[z.y, z.p[:, 0], z.p[:, 1]]
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        cols = []
        for s in (1, -1):
            Z = Z0 + s * e
            gy, gp = hamiltonian_partials(L, PhasePoint.make(L.spec, z.x, Z[:1], Z[1:][None, :]))
            cols.append(np.r_[gy, gp[:, 0], gp[:, 1]])
        np.testing.assert_allclose(H[:, i], (cols[0] - cols[1]) / (2 * h), atol=1e-6)


def test_make_lagrangian():
    assert make_lagrangian("nonlinear_wave", n=2, N=2, potential="radial(-1, 1)").spec.state_dim == 8
    assert make_lagrangian("particle").spec.n_space == 0
    with pytest.raises(UnknownModelError):
        make_lagrangian("maxwell")
    with pytest.raises(ValueError):
        make_lagrangian("particle", n=1)


def test_unknown_potential():
    with pytest.raises(UnknownModelError):
        nonlinear_wave(1, 1, "phi_fourth(1)")


def test_newton_inverse_agrees_with_closed_form(rng):
    closed = nonlinear_wave(1, 1, "sine_gordon")
    generic = CallableLagrangian(closed.spec, lambda x, y, v: 0.5 * (v[0, 0] ** 2 - v[0, 1] ** 2)
                                 + dual.cos(y[0]) - 1.0)
    for _ in range(20):
        z = PhasePoint.make(closed.spec, rng.normal(size=2), rng.normal(size=1),
                            rng.normal(size=(1, 2)))
        np.testing.assert_allclose(invert_legendre(generic, z).v, invert_legendre(closed, z).v,
                                   atol=1e-12)
        assert hamiltonian(generic, z) == pytest.approx(hamiltonian(closed, z), abs=1e-12)
        for a, b in zip(hamiltonian_partials(generic, z), hamiltonian_partials(closed, z)):
            np.testing.assert_allclose(a, b, atol=1e-12)
