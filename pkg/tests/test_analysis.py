import math

import numpy as np
import pytest

from rbffr.analysis import (
    COMBINED_HEADER,
    DISPERSION_HEADER,
    MAXDISS_HEADER,
    SBP_HEADER,
    DefectiveModeError,
    FourierConfig,
    amplification_phase,
    assemble_Q,
    bloch_vector,
    combined_analysis,
    combined_csv,
    combined_sweep,
    dispersion_dissipation,
    eigenvalue_tracks,
    khat_grid,
    loglog_slope,
    max_dissipation,
    max_dissipation_csv,
    max_dissipation_sweep,
    propagate,
    sbp_csv,
    sbp_report,
    sbp_sweep,
)
from rbffr.element import LAYOUTS, BasisSpec, build_operators, node_set, quadrature
from rbffr.solver import Mesh1D, PdeParams, SolutionState, rhs_advection_diffusion


def ops_for(variant="polynomial", layout="legendre", n=3, eps=None):
    pts = node_set(layout, n)
    if variant == "polynomial":
        return build_operators(BasisSpec.polynomial(pts))
    return build_operators(BasisSpec.rbf_ga(pts, eps))


def test_khat_grid():
    g = khat_grid(4)
    np.testing.assert_allclose(g, [math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi])
    assert len(khat_grid()) == 256
    with pytest.raises(ValueError):
        khat_grid(0)


def test_config_validation():
    ops = ops_for()
    with pytest.raises(ValueError):
        FourierConfig(ops, alpha=1.5)
    with pytest.raises(ValueError):
        FourierConfig(ops, k_hat=[0.0, 1.0])
    cfg = FourierConfig(ops)
    assert cfg.khat_from_k(cfg.k_from_khat(0.7)) == pytest.approx(0.7)


@pytest.mark.parametrize("alpha", [1.0, 0.5, 0.8])
@pytest.mark.parametrize("variant,eps", [("polynomial", None), ("rbf_ga", 0.7)])
def test_symbol_matches_solver_on_bloch_wave(alpha, variant, eps):
    ops = ops_for(variant, "chebyshev", 4, eps)
    N, m = 12, 5
    mesh = Mesh1D(0.0, 2.0 * N, N)
    k = 2 * math.pi * m / mesh.length
    cfg = FourierConfig(ops, alpha=alpha)
    v = bloch_vector(cfg, k)
    u = np.exp(1j * k * mesh.left_edges())[:, None] * v[None, :]
    params = PdeParams(a=1.0, alpha=alpha)
    st_ = SolutionState(mesh, ops, u.real)
    r = rhs_advection_diffusion(st_, params, u.real) + 1j * rhs_advection_diffusion(st_, params, u.imag)
    Q = assemble_Q(cfg, k)
    np.testing.assert_allclose(r[0], Q @ v, atol=1e-12)
    np.testing.assert_allclose(r[3], np.exp(1j * k * 6.0) * (Q @ v), atol=1e-12)


def test_symbol_conjugate_symmetry_and_constants():
    cfg = FourierConfig(ops_for("rbf_ga", "legendre", 4, 0.5), alpha=0.7)
    np.testing.assert_allclose(assemble_Q(cfg, -1.3), np.conj(assemble_Q(cfg, 1.3)), atol=1e-14)
    poly = FourierConfig(ops_for(n=4))
    np.testing.assert_allclose(assemble_Q(poly, 0.0) @ np.ones(4), 0.0, atol=1e-13)


def test_polynomial_upwind_dispersion():
    res = dispersion_dissipation(FourierConfig(ops_for()))
    c = res.physical_c_hat
    low = res.k_hat <= 0.2 * math.pi
    assert np.all(np.abs(c.real[low] - res.k_hat[low]) <= 0.01 * res.k_hat[low])
    assert c.imag.max() <= 1e-10
    assert res.omega.imag.max() <= 1e-10


def test_polynomial_physical_mode_resolves_wave():
    res = dispersion_dissipation(FourierConfig(ops_for(n=4), k_hat=[0.05, 0.1]))
    np.testing.assert_allclose(res.physical_c_hat.real, [0.05, 0.1], rtol=1e-6)
    assert np.all(res.overlap > 0.999)
    np.testing.assert_allclose(res.wavespeed[np.arange(2), res.physical].real, 1.0, rtol=1e-6)


def test_central_flux_is_neutral():
    res = dispersion_dissipation(FourierConfig(ops_for(n=4), alpha=0.5))
    assert np.abs(res.c_hat.imag).max() <= 1e-12


def test_gaussian_eps15_goes_unstable():
    res = dispersion_dissipation(FourierConfig(ops_for("rbf_ga", "legendre", 3, 1.5)))
    assert res.physical_c_hat.imag.max() > 0


def test_dispersion_csv():
    res = dispersion_dissipation(FourierConfig(ops_for(), k_hat=khat_grid(4)))
    lines = res.to_csv().splitlines()
    assert lines[0] == ",".join(DISPERSION_HEADER)
    assert len(lines) == 1 + 4 * 3
    assert sum(line.endswith(",1") for line in lines[1:]) == 4


@pytest.mark.parametrize("variant,n,eps", [("polynomial", 3, None), ("rbf_ga", 3, 1.5), ("rbf_ga", 5, 0.5)])
def test_eigenvalue_tracks_are_continuous(variant, n, eps):
    res = dispersion_dissipation(FourierConfig(ops_for(variant, "legendre", n, eps)))
    tr = eigenvalue_tracks(res)
    steps = np.abs(np.diff(tr, axis=0))
    assert steps.max() <= 10 * np.median(steps)
    # tracking is a permutation per row
    np.testing.assert_allclose(np.sort_complex(tr[7]), np.sort_complex(res.c_hat[7]))


def test_threads_do_not_change_results():
    cfg = FourierConfig(ops_for("rbf_ga", "lobatto", 4, 0.4), k_hat=khat_grid(64))
    a, b = dispersion_dissipation(cfg, 1), dispersion_dissipation(cfg, 4)
    assert a.to_csv() == b.to_csv()


def test_max_dissipation_small_eps():
    cfg = FourierConfig(ops_for("rbf_ga", "legendre", 3, 0.01))
    assert max_dissipation(cfg) <= 1e-8


def test_max_dissipation_sweep_trends():
    eps = [0.05, 0.1, 0.2, 0.4, 0.8]
    rows = max_dissipation_sweep(eps, [3], npts=128)
    d = [r.diss_max for r in rows]
    # below eps ~ 0.2 the maximum sits at the eigensolver noise floor
    assert np.all(np.diff(d) >= -1e-7)
    assert d[-1] > d[-2] > 1e-6
    text = max_dissipation_csv(rows)
    assert text.splitlines()[0] == ",".join(MAXDISS_HEADER)
    assert len(text.splitlines()) == 6


def test_max_dissipation_onset_moves_with_order():
    # smallest eps on the grid whose maximum growth rate exceeds 1e-6
    eps = np.round(np.arange(0.2, 0.7, 0.02), 2)
    onset = []
    for n in (3, 5):
        d = [r.diss_max for r in max_dissipation_sweep(eps, [n], npts=128)]
        onset.append(eps[np.argmax(np.array(d) > 1e-6)])
    assert onset[0] < onset[1]


def test_propagate_diagonal():
    Q = np.diag([-1j * 2.0, -0.5 + 0j])
    u = propagate(Q, np.array([1.0, 1.0]), 1.5)
    np.testing.assert_allclose(u, [np.exp(-3j), np.exp(-0.75)], atol=1e-14)


def test_propagate_rejects_defective():
    Q = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(DefectiveModeError):
        propagate(Q, np.ones(2), 1.0)


def test_amplification_phase_examples():
    xq, wq = quadrature(8)
    Vq = np.ones((8, 1))
    G, dphi = amplification_phase(np.array([0.5 * np.exp(-0.3j)]), np.array([1.0 + 0j]), Vq, wq)
    assert G == pytest.approx(0.5)
    assert dphi == pytest.approx(0.3)


@pytest.mark.parametrize("variant,eps", [("polynomial", None), ("rbf_ga", 0.5)])
def test_combined_at_time_zero(variant, eps):
    cfg = FourierConfig(ops_for(variant, "legendre", 3, eps), k_hat=khat_grid(32))
    for r in combined_sweep(cfg, [0.0]):
        assert r.G == pytest.approx(1.0, abs=1e-12)
        assert abs(r.dphi) <= 1e-12


def test_combined_polynomial_never_amplifies():
    cfg = FourierConfig(ops_for(), k_hat=khat_grid(64))
    for r in combined_sweep(cfg, [1.0, 2.0]):
        assert r.G <= 1 + 1e-10


def test_combined_gaussian_less_dissipative_on_upper_band():
    grid = khat_grid(64)
    up = grid >= math.pi / 2
    g_poly = np.array([r.G for r in combined_sweep(FourierConfig(ops_for(), k_hat=grid), [1.0])])
    g_ga = np.array([r.G for r in combined_sweep(FourierConfig(ops_for("rbf_ga", "legendre", 3, 0.5), k_hat=grid), [1.0])])
    assert np.all(g_ga[up] >= g_poly[up])


@pytest.mark.parametrize("k_hat", [0.05 * math.pi, 0.1 * math.pi])
def test_combined_matches_physical_mode_at_late_time(k_hat):
    cfg = FourierConfig(ops_for(), k_hat=[k_hat])
    k = float(cfg.k_from_khat(k_hat))
    om = dispersion_dissipation(cfg).physical_omega[0]
    t = 20.0
    r = combined_analysis(cfg, k, t)
    assert r.G == pytest.approx(math.exp(om.imag * t), rel=0.03)
    assert r.dphi == pytest.approx((om.real - k) * t, rel=0.03, abs=1e-9)


def test_combined_exact_advection_symbol():
    # a scheme whose symbol is exactly -ik keeps G = 1 and zero phase error
    cfg = FourierConfig(ops_for(n=4))
    k = 0.8
    u0 = bloch_vector(cfg, k)
    u = propagate(-1j * k * np.eye(4), u0, 3.0)
    xq, wq = quadrature(50)
    G, dphi = amplification_phase(u, u0 * np.exp(-3j * k), cfg.ops.basis_at(xq), wq)
    assert G == pytest.approx(1.0, abs=1e-13) and abs(dphi) <= 1e-13


def test_combined_csv_and_validation():
    cfg = FourierConfig(ops_for(), k_hat=khat_grid(3))
    res = combined_sweep(cfg, [1.0, 2.0])
    lines = combined_csv(res).splitlines()
    assert lines[0] == ",".join(COMBINED_HEADER) and len(lines) == 7
    with pytest.raises(ValueError):
        combined_analysis(cfg, 1.0, -1.0)


@pytest.mark.parametrize("layout", LAYOUTS)
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_sbp_polynomial_exact(layout, n):
    rep = sbp_report(ops_for("polynomial", layout, n))
    assert rep.conservation_error <= 1e-12
    assert rep.stability_error <= 1e-12


@pytest.mark.parametrize("layout", LAYOUTS)
def test_sbp_gaussian_errors_shrink_with_eps(layout):
    eps = [1.0, 0.5, 0.25, 0.125, 0.0625]
    rows = sbp_sweep(eps, [3], [layout])
    cons = [r.report.conservation_error for r in rows]
    stab = [r.report.stability_error for r in rows]
    assert np.all(np.diff(cons) < 0)
    assert np.all(np.diff(stab) < 0)


def test_sbp_csv():
    rows = sbp_sweep([0.5], [3], ["lobatto"])
    lines = sbp_csv(rows).splitlines()
    assert lines[0] == ",".join(SBP_HEADER)
    assert lines[1].startswith("0.5,3,lobatto,")


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert loglog_slope(x, 3 * x**2) == pytest.approx(2.0)
    assert loglog_slope(x, x**-1.5) == pytest.approx(-1.5)
