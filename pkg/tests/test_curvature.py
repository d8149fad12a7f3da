import numpy as np
import pytest

from calibrated_holonomy.calibration import CalibrationClass, PotentialSpec, admissible_from_spec, build_admissible_torsion
from calibrated_holonomy.curvature import (
    RIEMANN_LC_FRAME,
    assemble_gamma,
    block_report,
    calibrated_connection,
    check_convention,
    compat_residual,
    covariant_derivative_torsion,
    curvature_from_eq1,
    curvature_from_gamma,
    dual_path_gap,
    harmonic_connection,
    levi_civita,
    levi_civita_connection,
    ricci,
)
from calibrated_holonomy.errors import ConfigError, DomainError
from calibrated_holonomy.forms import FormField
from calibrated_holonomy.harness import offdiagonal_blocks


def zero_potential_torsion(grid, a, b):
    return build_admissible_torsion(CalibrationClass(a, b), FormField.zeros(2, grid), FormField.zeros(4, grid))


def test_levi_civita_curvature_is_product_curvature(grid):
    conn = levi_civita_connection(grid)
    for R in (curvature_from_eq1(conn), curvature_from_gamma(conn)):
        assert np.max(np.abs(R.riemann - RIEMANN_LC_FRAME.reshape((4,) * 4 + (1,) * 4))) < 1e-12
        ric = ricci(R).ric
        assert np.max(np.abs(ric - np.diag([1.0, 1, 0, 0]).reshape(4, 4, 1, 1, 1, 1))) < 1e-12
        assert block_report(R).offdiag_sup < 1e-12


def test_sphere_sectional_curvature_is_one():
    # R[D, C, A, B] = g(R(E_A, E_B) E_C, E_D), so K(e1, e2) sits at [0, 1, 0, 1]
    assert RIEMANN_LC_FRAME[0, 1, 0, 1] == 1.0
    assert RIEMANN_LC_FRAME[1, 0, 0, 1] == -1.0
    assert np.count_nonzero(RIEMANN_LC_FRAME[2:]) == 0


def test_dual_path_agreement_on_seeded_torsion(seeded_torsion):
    conn = calibrated_connection(seeded_torsion)
    assert dual_path_gap(conn) < 1e-8
    assert compat_residual(conn) < 1e-13


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dual_path_agreement_more_seeds(grid, seed):
    T = admissible_from_spec(CalibrationClass(1, 0), PotentialSpec(2, 1, 0.3, seed), grid)
    assert dual_path_gap(calibrated_connection(T)) < 1e-8


def test_harmonic_mixed_entry(grid):
    conn = calibrated_connection(zero_potential_torsion(grid, 1, 0))
    R = curvature_from_eq1(conn)
    # g(R(e1, f1) e1, f1) = 1
    assert np.max(np.abs(R.riemann[2, 0, 0, 2] - 1.0)) < 1e-12
    assert np.max(np.abs(R.riemann - assemble_gamma(conn))) < 1e-8


def test_harmonic_torsion_is_parallel(grid):
    T = zero_potential_torsion(grid, 2, 3)
    assert np.max(np.abs(covariant_derivative_torsion(T.tensor))) < 1e-12


def test_curvature_symmetries(seeded_torsion):
    R = curvature_from_eq1(calibrated_connection(seeded_torsion)).riemann
    assert np.max(np.abs(R + np.swapaxes(R, 2, 3))) < 1e-12
    # metric connection: R(X, Y) is skew
    assert np.max(np.abs(R + np.swapaxes(R, 0, 1))) < 1e-10


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_harmonic_block_scales_quadratically(grid, lam):
    spec = PotentialSpec(1, 1, 0.1, 3)
    base = offdiagonal_blocks(calibrated_connection(admissible_from_spec(CalibrationClass(1, 2), spec, grid)))
    scaled = offdiagonal_blocks(calibrated_connection(admissible_from_spec(CalibrationClass(lam, 2 * lam), spec, grid)))
    assert scaled.norm("harmonic") == pytest.approx(lam**2 * base.norm("harmonic"), rel=1e-6)


def test_harmonic_connection_drops_potentials(seeded_torsion):
    Rh = curvature_from_eq1(harmonic_connection(seeded_torsion))
    R0 = curvature_from_eq1(calibrated_connection(zero_potential_torsion(seeded_torsion.grid, 2, 3)))
    assert np.allclose(Rh.riemann, R0.riemann, atol=1e-12)


def test_conventions(seeded_torsion, grid):
    standard = curvature_from_eq1(calibrated_connection(seeded_torsion))
    literal = curvature_from_eq1(calibrated_connection(seeded_torsion, "paper-literal"))
    assert np.max(np.abs(standard.riemann - literal.riemann)) > 1e-3
    lc = levi_civita_connection(grid, "paper-literal")
    assert np.array_equal(curvature_from_eq1(lc).riemann, curvature_from_eq1(levi_civita_connection(grid)).riemann)
    with pytest.raises(ConfigError):
        check_convention("other")


def test_splits_sum_to_full(seeded_torsion):
    R = curvature_from_eq1(calibrated_connection(seeded_torsion))
    s = R.splits
    assert np.allclose(s["levi_civita"] + s["harmonic"] + s["nonharmonic"], R.riemann)


def test_coordinate_components_match_gamma_route(seeded_torsion):
    conn = calibrated_connection(seeded_torsion)
    coord = curvature_from_eq1(conn).coordinate_components()
    assert np.max(np.abs(coord - assemble_gamma(conn, frame=False))) < 1e-8


def test_levi_civita_at_pole_rejected():
    with pytest.raises(DomainError):
        levi_civita((np.pi, 0, 0, 0))
    G = levi_civita((np.pi / 3, 0, 0, 0))
    assert G[0, 1, 1] == pytest.approx(-np.sin(np.pi / 3) * np.cos(np.pi / 3))


def test_levi_civita_examples():
    G = levi_civita((np.pi / 2, 0, 0, 0))
    assert abs(G[0, 1, 1]) < 1e-15 and abs(G[1, 0, 1]) < 1e-15
    assert levi_civita((np.pi / 4, 0, 0, 0))[0, 1, 1] == pytest.approx(-0.5)
    assert np.count_nonzero(levi_civita((1.0, 0, 0, 0))[2:]) == 0


def test_mixed_entries_for_general_class(grid):
    a, b = 2.0, 3.0
    R = curvature_from_eq1(calibrated_connection(zero_potential_torsion(grid, a, b))).riemann
    # Proj_V2 R(e1, f1) e1 = a^2 f1 + ab f2
    assert np.allclose(R[2, 0, 0, 2], a * a, atol=1e-12)
    assert np.allclose(R[3, 0, 0, 2], a * b, atol=1e-12)
    assert block_report(curvature_from_eq1(calibrated_connection(zero_potential_torsion(grid, 1, 0)))).offdiag_sup >= 1 - 1e-8


def test_compat_residual_detects_symmetric_torsion(grid):
    from calibrated_holonomy.curvature import ConnectionField
    from calibrated_holonomy.forms import TorsionField

    assert compat_residual(levi_civita_connection(grid)) < 1e-12
    comps = np.zeros((4, 4, 4) + grid.shape)
    comps[2, 2, 3] = comps[2, 3, 2] = 0.3  # symmetric in the lower pair
    conn = ConnectionField(grid, TorsionField(comps, grid))
    assert compat_residual(conn) > 0.1


def test_covariant_derivative_matches_finite_differences(seeded_torsion):
    grid = seeded_torsion.grid
    conn = calibrated_connection(seeded_torsion)
    nabla = covariant_derivative_torsion(seeded_torsion.tensor)
    node = (7, 5, 3, 2)
    p = np.array(grid.node_coordinates(node))
    h = 1e-4

    def torsion_at(q):
        # T^k_ij from the interpolated connection minus the Levi-Civita part
        return conn.gamma_at(q) - levi_civita(q)

    T0 = torsion_at(p)
    G0 = levi_civita(p)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        dT = (torsion_at(p + e) - torsion_at(p - e)) / (2 * h)
        # nabla_i T^k_jl with T stored as T[k, j, l]
        fd = (
            dT
            + np.einsum("km,mjl->kjl", G0[:, i, :], T0)
            - np.einsum("mj,kml->kjl", G0[:, i, :], T0)
            - np.einsum("ml,kjm->kjl", G0[:, i, :], T0)
        )
        spectral = nabla[(i, slice(None), slice(None), slice(None)) + node]
        assert np.max(np.abs(fd - spectral)) < 1e-6


def test_covariant_derivative_of_torus_modulated_form(grid):
    from calibrated_holonomy.forms import form_to_torsion

    x, y = grid.coordinates()[2:]
    st = np.sin(grid.coordinates()[0])
    f = np.cos(x) * np.sin(2 * y)
    tau = FormField.from_components(3, grid, {(0, 1, 2): f * st * np.ones(grid.shape)})
    nabla = covariant_derivative_torsion(form_to_torsion(tau))
    # vol_S2 ^ dx is parallel, so only the coordinate partials of f survive
    base = form_to_torsion(FormField.from_components(3, grid, {(0, 1, 2): st * np.ones(grid.shape)})).components
    df = {2: -np.sin(x) * np.sin(2 * y), 3: 2 * np.cos(x) * np.cos(2 * y)}
    for i in range(4):
        expected = base * df.get(i, 0.0)
        assert np.max(np.abs(nabla[i] - expected)) < 1e-12


def test_covariant_derivative_is_linear(seeded_torsion, grid):
    from calibrated_holonomy.forms import form_to_torsion

    t1 = seeded_torsion.t_flat
    t2 = zero_potential_torsion(grid, 1, 1).t_flat
    lhs = covariant_derivative_torsion(form_to_torsion(t1 * 2.0 + t2))
    rhs = 2.0 * covariant_derivative_torsion(form_to_torsion(t1)) + covariant_derivative_torsion(form_to_torsion(t2))
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_ricci_is_linear(seeded_torsion, grid):
    from calibrated_holonomy.curvature import ricci_from_frame

    R1 = curvature_from_eq1(calibrated_connection(seeded_torsion)).riemann
    R2 = curvature_from_eq1(levi_civita_connection(grid)).riemann
    assert np.allclose(ricci_from_frame(R1 + R2).ric, ricci_from_frame(R1).ric + ricci_from_frame(R2).ric, atol=1e-12)


@pytest.mark.parametrize("klass", [(1, 0), (0, 1), (2, 3)])
def test_offdiagonal_aggregate_lower_bound(grid, klass):
    a, b = klass
    T = admissible_from_spec(CalibrationClass(a, b), PotentialSpec(1, 1, 0.1, 4), grid)
    R = curvature_from_eq1(calibrated_connection(T))
    assert block_report(R).offdiag_l2 >= 0.5 * (a * a + b * b) * np.sqrt(16 * np.pi**3)
