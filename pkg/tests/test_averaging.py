import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocyclebench.averaging import (
    AffineAction,
    abs_pairing_average,
    almost_fixed_points,
    almost_sublinear_test,
    cesaro_sums,
    displacement,
    displacement_vectors,
    eta_sequence,
    fixpoint_csv,
    flat_average,
    mazur_convexify,
    met_csv,
    met_run,
    minimize_simplex_quadratic,
    precompactness_proxy,
    proper_normalized_average,
    right_pairing_average,
    rigidity_counterexample,
    square_pairing_average,
    sublinear_growth_scan,
    weak_pairing_average,
)
from cocyclebench.cocycles import Coboundary, flat, z_generated_cocycle, zd_cocycle
from cocyclebench.errors import PropernessError, WitnessNotFoundError
from cocyclebench.folner import ball_measures, controlled_constant, point_mass, uniform_measure
from cocyclebench.groups import FreeAbelian
from cocyclebench.hilbert import GOLDEN_ANGLE, RegularRep, RotationRep, SparseVector, TrivialRep, coords, delta


def harmonic(n):
    return sum(Fraction(1, k) for k in range(1, n + 1))


@pytest.fixture(scope="module")
def Zbig():
    return FreeAbelian(1, radius_cap=2010)


@pytest.fixture(scope="module")
def zreg(Zbig):
    return z_generated_cocycle(RegularRep(Zbig), delta(Zbig.el(0)))


@pytest.fixture(scope="module")
def zrot(Zbig):
    return z_generated_cocycle(RotationRep(Zbig, [GOLDEN_ANGLE]), coords(1.0, 0.0))


def test_flat_average_examples(Zbig, zreg):
    assert flat_average(zreg, point_mass(Zbig.identity)).is_zero()
    mu = uniform_measure(Zbig.ball(100))
    avg = flat_average(zreg, mu)
    assert avg.inner(delta(Zbig.el(0))) == pytest.approx(float(harmonic(100) / 201), abs=1e-12)
    assert avg.inner(delta(Zbig.el(0))) == pytest.approx(0.02581, abs=1e-5)


def _rotate(t, v):
    c, s = math.cos(t), math.sin(t)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def test_rotation_flat_average_matches_cesaro_path(Zbig, zrot):
    N = 50
    th = GOLDEN_ANGLE
    xi = (1.0, 0.0)
    acc = [0.0, 0.0]
    for k in range(1, N + 1):
        A = [math.fsum(_rotate(j * th, xi)[i] for j in range(k)) / k for i in range(2)]
        back = _rotate(-k * th, A)
        acc[0] += A[0] - back[0]
        acc[1] += A[1] - back[1]
    avg = flat_average(zrot, uniform_measure(Zbig.ball(N)))
    assert [avg[0], avg[1]] == pytest.approx([a / (2 * N + 1) for a in acc], abs=1e-12)


def test_pairing_averages_vanish_off_the_cocycle_span(Zbig, zreg):
    mu = uniform_measure(Zbig.ball(20))
    far = delta(Zbig.el(500))
    assert weak_pairing_average(zreg, mu, far) == 0
    assert abs_pairing_average(zreg, mu, far) == 0


@pytest.mark.parametrize("N", [10, 100, 400])
def test_weak_and_abs_averages_match_harmonic_numbers(Zbig, zreg, N):
    mu = uniform_measure(Zbig.ball(N))
    xi = delta(Zbig.el(0))
    oracle = float(harmonic(N) / (2 * N + 1))
    assert weak_pairing_average(zreg, mu, xi) == pytest.approx(oracle, abs=1e-12)
    assert abs_pairing_average(zreg, mu, xi) == pytest.approx(oracle, abs=1e-12)
    assert weak_pairing_average(zreg, mu, xi) == pytest.approx(flat_average(zreg, mu).inner(xi), abs=1e-12)


def test_rotation_weak_average_is_small(Zbig, zrot):
    mu = uniform_measure(Zbig.ball(2000))
    xi = coords(1.0, 0.0)
    weak, ab = weak_pairing_average(zrot, mu, xi), abs_pairing_average(zrot, mu, xi)
    assert abs(weak) <= ab
    assert abs(weak) < 0.005


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.lists(st.floats(-2, 2, allow_nan=False), min_size=2, max_size=2))
def test_cauchy_schwarz_chain(n, x):
    Z = FreeAbelian(1, radius_cap=64)
    b = z_generated_cocycle(RotationRep(Z, [1.0]), coords(0.3, -0.4))
    mu = uniform_measure(Z.ball(n))
    xi = coords(*x)
    weak = weak_pairing_average(b, mu, xi)
    ab = abs_pairing_average(b, mu, xi)
    sq = square_pairing_average(b, mu, xi)
    assert abs(weak) <= ab + 1e-15
    assert ab <= math.sqrt(sq) + 1e-15


def test_right_pairing_average(Zbig, zreg):
    mu = uniform_measure(Zbig.ball(100))
    assert right_pairing_average(zreg, mu, delta(Zbig.el(-1))) == pytest.approx(-float(harmonic(100) / 201), abs=1e-12)
    assert right_pairing_average(zreg, point_mass(Zbig.identity), delta(Zbig.el(0))) == 0
    eta = delta(Zbig.el(0)) + delta(Zbig.el(3)) * 0.5
    cb = Coboundary(zreg.rep, eta)
    xi = delta(Zbig.el(1))
    mu = uniform_measure(Zbig.ball(30))
    inv_len = math.fsum(w / Zbig.word_length(g) for g, w in mu.items() if not g.is_identity())
    assert abs(right_pairing_average(cb, mu, xi)) <= 2 * xi.norm() * eta.norm() * inv_len


def test_cesaro_sums():
    Z = FreeAbelian(1, radius_cap=2005)
    C, Cp = cesaro_sums(TrivialRep(Z), coords(1.0, 2.0), coords(3.0, 0.5), 50)
    assert all(c == pytest.approx(4.0, abs=1e-12) for c in C)
    C, Cp = cesaro_sums(RotationRep(Z, [GOLDEN_ANGLE]), coords(1.0, 0.0), coords(1.0, 0.0), 2000)
    assert abs(C[-1]) <= 0.005
    assert all(cp >= abs(c) - 1e-15 for c, cp in zip(C, Cp))
    for n in (100, 500, 2000):
        assert abs(C[n - 1]) <= 1.073 * math.log(n) / n


def test_proper_normalized_average(Zbig, zreg):
    N = 100
    mu = uniform_measure(Zbig.ball(N))
    oracle = math.fsum(1 / math.sqrt(n) for n in range(1, N + 1)) / (2 * N + 1)
    assert proper_normalized_average(zreg, mu, delta(Zbig.el(0))) == pytest.approx(oracle, abs=1e-12)
    assert proper_normalized_average(zreg, mu, delta(Zbig.el(5000))) == 0
    assert proper_normalized_average(zreg, point_mass(Zbig.identity), delta(Zbig.el(0))) == 0
    zero = Coboundary(zreg.rep, SparseVector())
    with pytest.raises(PropernessError):
        proper_normalized_average(zero, mu, delta(Zbig.el(0)))


def test_eta_sequence_examples(Zbig, zreg):
    cb = Coboundary(zreg.rep, delta(Zbig.el(0)))
    (eta,) = eta_sequence(cb, [Zbig.ball(4)])
    expected = delta(Zbig.el(0)) - SparseVector({g: 1 / 9 for g in Zbig.ball(4)})
    assert eta.distance(expected) < 1e-15
    assert eta_sequence(zreg, [[Zbig.identity]])[0].is_zero()
    (eta3,) = eta_sequence(zreg, [Zbig.ball(3)])
    oracle = {Zbig.el(k): (3 - k) / 7 for k in range(3)}
    oracle.update({Zbig.el(k): -(k + 4) / 7 for k in range(-3, 0)})
    assert eta3.distance(SparseVector(oracle)) < 1e-15


def test_displacement(Zbig, zreg):
    cb = Coboundary(zreg.rep, delta(Zbig.el(0)) * 2.0)
    T = AffineAction(cb)
    rep = displacement(T, cb.base_point)
    assert rep.max_displacement == 0
    eta = delta(Zbig.el(4)) - delta(Zbig.el(-2))
    for s, v in displacement_vectors(T, eta).items():
        assert v.distance((cb.rep(s, eta) - eta) + cb(s)) == 0.0
    Treg = AffineAction(zreg)
    for n in range(1, 30):
        F = Zbig.ball(n)
        (e,) = eta_sequence(zreg, [F])
        r = displacement(Treg, e, controlled_constant(F), K=2)
        assert r.bound_2CK == 4
        assert r.within_2CK and r.within_sharp


def _J(Q, c):
    return float(c @ Q @ c)


def test_mazur_trivial_cases(Z):
    w = {Z.el(1): coords(1.0, 2.0), Z.el(-1): coords(0.0, -1.0)}
    single = mazur_convexify([w])
    assert single.weights == [1.0]
    neg = {s: -v for s, v in w.items()}
    res = mazur_convexify([w, neg])
    assert res.weights == pytest.approx([0.5, 0.5], abs=1e-9)
    assert res.J == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6))
def test_mazur_beats_vertices_and_grid(k, seed):
    rng = np.random.default_rng(seed)
    Z = FreeAbelian(1)
    vecs = [{s: coords(*rng.normal(size=3)) for s in Z.generators} for _ in range(k)]
    res = mazur_convexify(vecs)
    assert min(res.weights) >= 0
    assert sum(res.weights) == pytest.approx(1.0, abs=1e-12)
    assert res.J <= min(res.vertex_J) + 1e-12
    steps = 20
    best = math.inf
    for grid in itertools.product(range(steps + 1), repeat=k):
        if sum(grid) == steps:
            c = [x / steps for x in grid]
            mixed = {s: sum((v[s] * ci for v, ci in zip(vecs, c)), SparseVector()) for s in Z.generators}
            best = min(best, math.fsum(m.norm() ** 2 for m in mixed.values()))
    assert res.J <= best + 1e-9


def test_simplex_solver_on_a_known_quadratic():
    Q = np.array([[2.0, 0.0], [0.0, 1.0]])
    c, J, iterations, converged = minimize_simplex_quadratic(Q)
    assert list(c) == pytest.approx([1 / 3, 2 / 3], abs=1e-6)
    assert J == pytest.approx(2 / 3, abs=1e-9)
    assert converged and iterations < 10**4


def test_coboundary_reaches_exact_fixed_point(Zbig, zreg):
    cb = Coboundary(zreg.rep, delta(Zbig.el(0)) + delta(Zbig.el(2)) * 0.5)
    search = almost_fixed_points(cb, [Zbig.ball(n) for n in range(1, 6)], 1e-9)
    assert search.reached
    assert search.windows[0].window == 1
    assert len(search.windows) == 1
    assert search.achieved <= 1e-9


def test_mixed_point_norm_sum_bound(Zbig, zreg):
    sets = [Zbig.ball(n) for n in range(2, 20)]
    search = almost_fixed_points(zreg, sets, 0.0, stop_at_target=False)
    for row in search.windows:
        assert row.max_displacement ** 2 <= len(Zbig.generators) * row.J + 1e-12
    disp = [r.max_displacement for r in search.windows]
    assert disp[-1] < disp[0]
    for lr in search.ledger:
        assert lr.pairing <= lr.sharp_bound + 1e-12
    assert fixpoint_csv(search).splitlines()[0] == "window,J,max_displacement,2CK_bound"


def test_z2_blockwise_rotation_cocycle_reaches_target():
    Z2 = FreeAbelian(2, radius_cap=45)
    rot = RotationRep(Z2, [GOLDEN_ANGLE, math.sqrt(2) * math.pi])
    b = zd_cocycle(rot, [coords(1.0, 0.0, 0.0, 0.0), coords(0.0, 0.0, 0.6, -0.8)])
    search = almost_fixed_points(b, [Z2.ball(n) for n in range(1, 41)], 0.2)
    assert search.reached
    assert search.achieved <= 0.2


def test_met_run_rows_and_csv(Zbig, zreg):
    rows = met_run(zreg, ball_measures(Zbig, [5, 10]), delta(Zbig.el(0)))
    assert [r.n for r in rows] == [5, 10]
    assert rows[0].weak == pytest.approx(float(harmonic(5) / 11), abs=1e-15)
    text = met_csv(rows)
    assert text.splitlines()[0] == "n,weak,abs,norm_of_average"


def test_sublinear_growth_scans(Zbig, zreg):
    norm_b = lambda g: zreg(g).norm()
    for n, v in sublinear_growth_scan(norm_b, Zbig, 30):
        assert v == pytest.approx(1 / math.sqrt(n), abs=1e-12)
    xi = delta(Zbig.el(0)) - delta(Zbig.el(1)) * 2.0
    cb = Coboundary(zreg.rep, xi)
    for n, v in sublinear_growth_scan(lambda g: cb(g).norm(), Zbig, 30):
        assert v <= 2 * xi.norm() / n + 1e-15
    rep = almost_sublinear_test(lambda g: 1.0, [uniform_measure(Zbig.ball(n)) for n in range(1, 20)])
    assert rep.values == pytest.approx([1.0] * 19)
    assert not rep.decaying


def test_rigidity_step_witness(Zbig):
    step = lambda g: 1.0 if g.data[0] >= 0 else 0.0
    sets = [[Zbig.el(i) for i in range(k + 1)] for k in range(1, 11)]
    rows = rigidity_counterexample(step, 1.0, sets, witnesses=[Zbig.el(2 * k) for k in range(1, 11)])
    for r in rows:
        assert r.integral == pytest.approx(1.0, abs=1e-12)
        assert r.reiter_defect == pytest.approx(2 / (r.k + 1), abs=1e-15)
    searched = rigidity_counterexample(step, 1.0, sets[:3], search_radius=20)
    assert all(r.integral >= 0.5 for r in searched)


def test_rigidity_fails_for_functions_vanishing_at_infinity():
    Z = FreeAbelian(1, radius_cap=30)
    decaying = lambda g: 1.0 / (1 + abs(g.data[0]))
    with pytest.raises(WitnessNotFoundError):
        rigidity_counterexample(decaying, 0.5, [[Z.el(i) for i in range(k + 1)] for k in range(1, 6)], search_radius=25)


def test_precompactness_proxy(Zbig, zreg, zrot):
    assert precompactness_proxy([SparseVector()], 0.1) == 1
    V = [flat(zreg)(Zbig.el(n)) for n in range(1, 401)]
    assert precompactness_proxy(V, 0.2) <= 26
    sizes = [precompactness_proxy(V, e) for e in (0.05, 0.1, 0.2, 0.4, 0.8)]
    assert sizes == sorted(sizes, reverse=True)
    W = [zrot(Zbig.el(n)) for n in range(-200, 201)]
    r = 1 / (2 * math.sin(GOLDEN_ANGLE / 2))
    for eps in (0.05, 0.1, 0.3):
        assert precompactness_proxy(W, eps) <= math.ceil(2 * math.pi * r / eps)
