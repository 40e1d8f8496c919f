import numpy as np
import pytest

from rmtlab.contour import (
    ContourFamily,
    ContourInfeasibleError,
    ContourSpec,
    FactoredIntegrand,
    QuadratureError,
    _clique_contract,
    contour_nodes,
    integrate_tensor,
    nested_contours_beta2,
    nested_contours_general_beta,
    nested_contours_local,
)
from rmtlab.process import ProcessSchedule


def circle(radius, center=0.0, nodes=64):
    return ContourSpec(complex(center), radius, radius, nodes=nodes)


def test_simple_pole_residue():
    pts, wts = contour_nodes(circle(1.0))
    assert abs(np.sum(wts / pts) - 1.0) < 1e-13


def test_entire_function_integrates_to_zero():
    pts, wts = contour_nodes(circle(1.5))
    assert abs(np.sum(wts * np.exp(pts))) < 1e-13


def test_pole_outside_contour_gives_zero():
    pts, wts = contour_nodes(circle(1.0, nodes=256))
    assert abs(np.sum(wts / (pts - 2.0))) < 1e-12


def test_pole_inside_contour_gives_residue():
    pts, wts = contour_nodes(circle(3.0, nodes=256))
    assert abs(np.sum(wts / (pts - 2.0)) - 1.0) < 1e-12


def test_orientation_flip_negates():
    spec = circle(1.0)
    flipped = ContourSpec(spec.center, spec.semi_axis_real, spec.semi_axis_imag,
                          nodes=spec.nodes, counterclockwise=False)
    pts, wts = contour_nodes(flipped)
    assert abs(np.sum(wts / pts) + 1.0) < 1e-13


def test_separable_two_dim():
    fam = ContourFamily((circle(1.0), circle(2.0)))
    integrand = FactoredIntegrand((lambda z: 1.0 / z, lambda z: 1.0 / z), {})
    res = integrate_tensor(integrand, fam)
    assert res.converged
    assert abs(res.value - 1.0) < 1e-12


def test_nested_pair_pole():
    # inner z1 around 0, outer z2 catches the moving pole at z2 = z1
    fam = ContourFamily((circle(1.0), circle(3.0)))
    integrand = FactoredIntegrand(
        (lambda z: 1.0 / z, lambda z: np.ones_like(z)),
        {(0, 1): lambda a, b: 1.0 / (b - a)},
    )
    res = integrate_tensor(integrand, fam)
    assert res.converged
    assert abs(res.value - 1.0) < 1e-10


def test_tensor_matches_manual_sum_in_one_dim():
    spec = circle(1.0, nodes=128)
    pts, wts = contour_nodes(spec)
    manual = complex(np.sum(wts * np.exp(pts) / pts))
    res = integrate_tensor(
        FactoredIntegrand((lambda z: np.exp(z) / z,), {}),
        ContourFamily((spec,)),
    )
    assert abs(res.value - manual) < 1e-14


def test_spectral_accuracy_improves_with_doubling():
    # pole at 1.3 just outside the unit circle: error decays geometrically
    errs = []
    for nodes in (64, 128, 256):
        pts, wts = contour_nodes(circle(1.0, nodes=nodes))
        val = np.sum(wts / (pts - 1.3)) - 0.0
        errs.append(abs(val))
    assert errs[1] < errs[0] * 0.1
    assert errs[2] < errs[1] * 0.1


def test_deformation_invariance():
    base = None
    for radius in (2.0, 2.2, 1.8):
        pts, wts = contour_nodes(circle(radius, nodes=256))
        val = complex(np.sum(wts * (pts + 0.5) / (pts - 1.0)))
        if base is None:
            base = val
        else:
            assert abs(val - base) < 1e-9


def test_pole_rate_model():
    spec = circle(1.0)
    inside_far = spec.pole_rate(np.array([0.0 + 0.0j]))[0]
    inside_near = spec.pole_rate(np.array([0.9 + 0.0j]))[0]
    outside_near = spec.pole_rate(np.array([1.1 + 0.0j]))[0]
    outside_far = spec.pole_rate(np.array([3.0 + 0.0j]))[0]
    assert inside_far == np.inf  # center maps to w = 0
    assert inside_near < 1.0
    assert outside_near < outside_far
    # symmetric: rates at mirrored distances are comparable
    assert abs(inside_near - spec.pole_rate(np.array([-0.9 + 0.0j]))[0]) < 1e-12


def test_contour_spec_validation():
    with pytest.raises(ValueError):
        ContourSpec(0.0 + 0.0j, -1.0, 1.0)
    with pytest.raises(ValueError):
        ContourSpec(0.0 + 0.0j, 1.0, 1.0, nodes=100)  # not a power of two
    with pytest.raises(ValueError):
        ContourSpec(0.0 + 0.0j, 1.0, 1.0, nodes=8)  # below the minimum


def test_factored_integrand_matches_direct_callable():
    fam = ContourFamily((circle(1.0), circle(3.0)))
    factored = FactoredIntegrand(
        (lambda z: 1.0 / z, lambda z: np.exp(z)),
        {(0, 1): lambda a, b: 1.0 / (b - a)},
    )
    direct = lambda z1, z2: np.exp(z2) / (z1 * (z2 - z1))  # noqa: E731
    r1 = integrate_tensor(factored, fam)
    r2 = integrate_tensor(direct, fam)
    assert r1.converged and r2.converged
    assert abs(r1.value - 1.0) < 1e-10  # iterated residue: e^0
    assert abs(r1.value - r2.value) < 1e-10


def test_zero_integral_accepted_at_absolute_floor():
    fam = ContourFamily((circle(1.0), circle(3.0)))
    integrand = FactoredIntegrand(
        (lambda z: 1.0 / z, lambda z: z),
        {(0, 1): lambda a, b: 1.0 / (b - a)},
    )
    res = integrate_tensor(integrand, fam)
    assert res.converged
    assert abs(res.value) < 1e-13


def test_clique_contract_matches_einsum():
    rng = np.random.default_rng(7)
    for d, n in ((3, 12), (4, 9)):
        vecs = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(d)]
        mats = {
            (l, lp): rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            for l in range(d)
            for lp in range(l + 1, d)
        }
        got = _clique_contract(vecs, mats)
        if d == 3:
            want = np.einsum(
                "a,b,c,ab,ac,bc->", *vecs, mats[(0, 1)], mats[(0, 2)], mats[(1, 2)]
            )
        else:
            want = np.einsum(
                "a,b,c,d,ab,ac,ad,bc,bd,cd->",
                *vecs,
                mats[(0, 1)], mats[(0, 2)], mats[(0, 3)],
                mats[(1, 2)], mats[(1, 3)], mats[(2, 3)],
            )
        assert abs(got - want) / abs(want) < 1e-12


def test_unconverged_result_is_honest():
    # two poles hugging the contour from both sides, growth forbidden
    spec = ContourSpec(0.0 + 0.0j, 1.0, 1.0, nodes=16)
    integrand = FactoredIntegrand(
        (lambda z: 1.0 / ((z - 1.01) * (z - 0.99)),),
        {},
    )
    res = integrate_tensor(integrand, ContourFamily((spec,)), tol=1e-12, max_nodes=16)
    assert not res.converged
    with pytest.raises(QuadratureError):
        res.require_converged()


def test_general_beta_single_contour():
    sch = ProcessSchedule.constant(1, 1, 1, 1)
    fam = nested_contours_general_beta((1,), 1.0, 1, sch, (1,))
    assert len(fam) == 1
    assert fam.verify() == []
    spec = fam.specs[0]
    # encloses -theta*N = -1, excludes theta*(alpha+M-1) = 1
    assert spec.metric(np.array([-1.0 + 0.0j]))[0] < 1.0
    assert spec.metric(np.array([1.0 + 0.0j]))[0] > 1.0


def test_general_beta_nesting_shifts():
    sch = ProcessSchedule.constant(2, 1, 3, 1)
    fam = nested_contours_general_beta((2,), 1.0, 2, sch, (1,))
    assert len(fam) == 2
    assert fam.verify() == []
    inner, outer = fam.specs
    # inner shifted by +theta and -1 must stay inside the outer contour
    for shift in (1.0, -1.0):
        pts = inner.boundary(128) + shift
        assert np.all(outer.metric(pts) < 1.0)


def test_general_beta_infeasible_cell_raises():
    sch = ProcessSchedule.constant(1, 1, 1, 1)
    with pytest.raises(ContourInfeasibleError):
        nested_contours_general_beta((2, 2), 0.5, 1, sch, (1, 1))


def test_beta2_single_contour():
    sch = ProcessSchedule.constant(1, 1.25, 2, 1)
    fam = nested_contours_beta2((0.7,), 1, sch, (1,))
    assert fam.verify() == []
    spec = fam.specs[0]
    assert spec.metric(np.array([-0.7 + 0.0j]))[0] < 1.0  # encloses -c
    assert spec.metric(np.array([1.25 + 0.0j]))[0] > 1.0  # excludes alpha


def test_beta2_two_contours_verify():
    sch = ProcessSchedule.constant(2, 2.0, 1, 2)
    fam = nested_contours_beta2((0.25, 0.25), 2, sch, (2, 1))
    assert len(fam) == 2
    assert fam.verify() == []


def test_beta2_exclusion_squeeze_raises():
    sch = ProcessSchedule.constant(2, 0.1, 1, 1)
    with pytest.raises(ContourInfeasibleError):
        nested_contours_beta2((2.0, 2.0), 2, sch, (1, 1))


def test_beta2_requires_integer_m():
    sch = ProcessSchedule.constant(1, 1.0, 1.5, 1)
    with pytest.raises(ValueError):
        nested_contours_beta2((0.5,), 1, sch, (1,))


def test_local_contours_build_and_verify():
    for ks, theta in (((1,), 0.5), ((2,), 1.0), ((2, 1), 2.0)):
        fam = nested_contours_local(ks, theta)
        assert len(fam) == sum(ks)
        assert fam.verify() == []


def test_family_with_nodes_roundtrip():
    sch = ProcessSchedule.constant(1, 1, 1, 1)
    fam = nested_contours_general_beta((1,), 1.0, 1, sch, (1,))
    doubled = fam.with_nodes([fam.specs[0].nodes * 2])
    assert doubled.specs[0].nodes == fam.specs[0].nodes * 2
    assert doubled.specs[0].center == fam.specs[0].center
