import math

import numpy as np
import pytest

import oracles
from cvmaps.elements import (
    attenuation,
    attenuation_kraus,
    displacement,
    parametric_amplification,
    phase_rotation,
)
from cvmaps.fock import FockDim, coherent_state, thermal_state
from cvmaps.kernels import (
    AffineDelta,
    GaussianKernel,
    GridKernel,
    RadialKernel,
    SumKernel,
    apply_kernel,
    band_concentration,
    compose_kernels,
    input_marginal,
    kernel_from_kraus,
    kernel_from_tensor,
    kernel_norm,
    negativity,
    normalized_gaussian,
    output_marginal,
    radial_form,
    radial_norm,
    sample_kernel,
    scale_kernel,
)
from cvmaps.models import ideal_photon_addition
from cvmaps.tensors import KrausSet, apply_kraus, tensor_from_kraus
from cvmaps.wigner import QuadratureGrid, WignerField, wigner_of


def test_affine_delta_validation():
    with pytest.raises(ValueError):
        AffineDelta(2.0 * np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        AffineDelta(np.eye(2), np.zeros(3))
    d = AffineDelta(np.array([[0.0, -1.0], [1.0, 0.0]]), np.array([0.5, 0.0]))
    pts = np.array([[1.0, 2.0], [0.0, 0.0]])
    mapped = d.input_coords(pts)
    assert np.allclose(mapped[0], [-2.0 + 0.5, 1.0])
    assert np.allclose(mapped[1], [0.5, 0.0])


def test_gaussian_kernel_validation():
    with pytest.raises(ValueError):
        GaussianKernel(1.0, 0.0, 1.0, 1.0, 1.0)
    k = normalized_gaussian(0.8, 0.6, 0.8, 0.6)
    assert abs(k.prefactor - 1.0 / (math.pi * 0.36)) < 1e-14


def test_grid_kernel_validation():
    grid = QuadratureGrid(-1.0, 1.0, -1.0, 1.0, 3, 3)
    with pytest.raises(ValueError):
        GridKernel(grid, grid, np.zeros((3, 3, 3, 4)))
    with pytest.raises(ValueError):
        GridKernel(grid, grid, np.full((3, 3, 3, 3), 1.0 + 1e-5j))
    ok = GridKernel(grid, grid, np.full((3, 3, 3, 3), 1.0 + 1e-14j))
    assert ok.values.dtype == float
    with pytest.raises(ValueError):
        SumKernel(())


def test_sample_kernel_paths():
    grid = QuadratureGrid(-2.0, 2.0, -2.0, 2.0, 17, 17)
    gauss = attenuation(0.5, FockDim(3)).kernel
    sampled = sample_kernel(gauss, grid)
    ref = gauss.evaluate(grid.xs[3], grid.ps[5], grid.xs[7], grid.ps[1])
    assert abs(sampled.values[3, 5, 7, 1] - ref) < 1e-16
    assert sample_kernel(sampled, grid) is sampled
    other = QuadratureGrid(-2.0, 2.0, -2.0, 2.0, 9, 9)
    with pytest.raises(ValueError):
        sample_kernel(sampled, other)
    with pytest.raises(TypeError):
        sample_kernel(phase_rotation(0.3, FockDim(3)).kernel, grid)
    both = SumKernel(((0.25, gauss), (0.5, gauss)))
    s2 = sample_kernel(both, grid)
    assert np.max(np.abs(s2.values - 0.75 * sampled.values)) < 1e-15


def test_kernel_from_tensor_matches_closed_form():
    # truncated tensor representation converges onto the Gaussian kernel
    eta = 0.64
    dim = FockDim(40)
    t = tensor_from_kraus(KrausSet(dim, attenuation_kraus(eta, dim)))
    grid = QuadratureGrid(-2.0, 2.0, -2.0, 2.0, 17, 17)
    f = kernel_from_tensor(t, grid, grid)
    ref = oracles.attenuation_kernel_reference(
        eta,
        grid.xs[:, None, None, None], grid.ps[None, :, None, None],
        grid.xs[None, None, :, None], grid.ps[None, None, None, :])
    assert np.max(np.abs(f.values - ref)) < 5e-10


def test_delta_composition_is_matrix_product():
    a = phase_rotation(0.4, FockDim(3)).kernel
    b = phase_rotation(0.9, FockDim(3)).kernel
    ab = compose_kernels(b, a)
    ref = phase_rotation(1.3, FockDim(3)).kernel
    assert np.max(np.abs(ab.matrix - ref.matrix)) < 1e-15
    assert np.max(np.abs(ab.offset)) == 0.0
    d1 = displacement(0.2 + 0.1j, FockDim(3)).kernel
    d2 = displacement(-0.5j, FockDim(3)).kernel
    both = compose_kernels(d2, d1)
    ref2 = displacement(0.2 - 0.4j, FockDim(3)).kernel
    assert np.max(np.abs(both.offset - ref2.offset)) < 1e-15


def test_gaussian_composition_closed_form():
    dim = FockDim(3)
    left = compose_kernels(attenuation(0.6, dim).kernel,
                           attenuation(0.5, dim).kernel)
    ref = attenuation(0.3, dim).kernel
    for field in ("mu_x", "nu_x", "mu_p", "nu_p", "prefactor"):
        assert abs(getattr(left, field) - getattr(ref, field)) < 1e-14, field


def coherent_field(alpha, grid):
    return WignerField(grid, oracles.coherent_wigner(
        alpha, grid.xs[:, None], grid.ps[None, :]))


def test_gaussian_after_delta_semantics():
    # att(eta) following a displacement: coherent alpha lands on
    # sqrt(eta) (alpha + shift)
    dim = FockDim(3)
    grid = QuadratureGrid(-6.0, 6.0, -6.0, 6.0, 97, 97)
    eta = 0.49
    shift = 0.4 - 0.3j
    comp = compose_kernels(attenuation(eta, dim).kernel,
                           displacement(shift, dim).kernel)
    assert isinstance(comp, GaussianKernel)
    alpha = 0.5 + 0.2j
    out = apply_kernel(comp, coherent_field(alpha, grid))
    ref = coherent_field(math.sqrt(eta) * (alpha + shift), grid)
    assert np.max(np.abs(out.values - ref.values)) < 1e-10


def test_delta_after_gaussian_semantics():
    dim = FockDim(3)
    grid = QuadratureGrid(-6.0, 6.0, -6.0, 6.0, 97, 97)
    eta = 0.49
    shift = 0.3 + 0.6j
    comp = compose_kernels(displacement(shift, dim).kernel,
                           attenuation(eta, dim).kernel)
    assert isinstance(comp, GaussianKernel)
    alpha = 0.4 - 0.5j
    out = apply_kernel(comp, coherent_field(alpha, grid))
    ref = coherent_field(math.sqrt(eta) * alpha + shift, grid)
    assert np.max(np.abs(out.values - ref.values)) < 1e-10


def test_mixing_delta_needs_grid_path():
    dim = FockDim(3)
    rot = phase_rotation(0.3, dim).kernel  # mixes x and p
    gauss = attenuation(0.5, dim).kernel
    with pytest.raises(ValueError):
        compose_kernels(gauss, rot)
    with pytest.raises(ValueError):
        compose_kernels(rot, gauss)
    with pytest.raises(TypeError):
        compose_kernels(gauss, object())


def test_grid_composition_matches_closed_form():
    # two sampled loss kernels chained through a wide intermediate plane
    small = QuadratureGrid(-6.0, 6.0, -6.0, 6.0, 33, 33)
    mid = QuadratureGrid(-8.0, 8.0, -8.0, 8.0, 81, 81)
    dim = FockDim(3)
    f1 = sample_kernel(attenuation(0.5, dim).kernel, mid, small)
    f2 = sample_kernel(attenuation(0.6, dim).kernel, small, mid)
    comp = compose_kernels(f2, f1)
    assert comp.out_grid == small and comp.in_grid == small
    ref = sample_kernel(attenuation(0.3, dim).kernel, small, small)
    # compare on interior points to keep clear of in-plane tail cutoffs
    sl = slice(8, 25)
    assert np.max(np.abs(comp.values - ref.values)[sl, sl, sl, sl]) < 1e-10
    with pytest.raises(ValueError):
        compose_kernels(f1, f1)


def test_apply_kernel_grid_path():
    dim = FockDim(20)
    grid = QuadratureGrid(-6.0, 6.0, -6.0, 6.0, 81, 81)
    el = attenuation(0.64, dim)
    f = kernel_from_kraus(el.kraus, grid, grid)
    rho = coherent_state(0.5, dim)
    out = apply_kernel(f, wigner_of(rho, grid))
    ref = wigner_of(apply_kraus(el.kraus, rho), grid)
    assert np.max(np.abs(out.values - ref.values)) < 1e-6
    with pytest.raises(ValueError):
        apply_kernel(f, wigner_of(rho, QuadratureGrid(-5, 5, -5, 5, 61, 61)))


def test_apply_gaussian_thermal_closed_form():
    dim = FockDim(30)
    grid = QuadratureGrid(-8.0, 8.0, -8.0, 8.0, 129, 129)
    w_in = wigner_of(thermal_state(1.0, dim), grid)
    out = apply_kernel(attenuation(0.5, dim).kernel, w_in)
    s2 = 2.0 * 0.5 + 1.0  # thermal(0.5) variance doubled
    ref = np.exp(-(grid.xs[:, None] ** 2 + grid.ps[None, :] ** 2) / s2) / (math.pi * s2)
    assert np.max(np.abs(out.values - ref)) < 1e-8


def test_apply_identity_delta_is_exact():
    dim = FockDim(8)
    grid = QuadratureGrid(-4.0, 4.0, -4.0, 4.0, 41, 41)
    w = wigner_of(thermal_state(0.4, dim), grid)
    ident = AffineDelta(np.eye(2), np.zeros(2))
    out = apply_kernel(ident, w)
    assert np.max(np.abs(out.values - w.values)) == 0.0


def test_sum_kernel_apply_and_norm():
    dim = FockDim(6)
    grid = QuadratureGrid(-5.0, 5.0, -5.0, 5.0, 81, 81)
    f1 = kernel_from_kraus(attenuation(0.7, dim).kraus, grid)
    f2 = kernel_from_kraus(attenuation(0.4, dim).kraus, grid)
    s = SumKernel(((0.3, f1), (0.7, f2)))
    w = wigner_of(coherent_state(0.3, dim), grid)
    out = apply_kernel(s, w)
    ref = 0.3 * apply_kernel(f1, w).values + 0.7 * apply_kernel(f2, w).values
    assert np.max(np.abs(out.values - ref)) < 1e-14
    assert abs(kernel_norm(s) - (0.3 * kernel_norm(f1) + 0.7 * kernel_norm(f2))) < 1e-12
    with pytest.raises(TypeError):
        kernel_norm(attenuation(0.5, dim).kernel)


def test_marginals():
    dim = FockDim(8)
    gauss = attenuation(0.36, dim).kernel
    grid = QuadratureGrid(-3.0, 3.0, -3.0, 3.0, 11, 11)
    # E^dag E = I for a trace-preserving channel
    in_m = input_marginal(gauss, grid)
    assert np.max(np.abs(in_m.values - 1.0)) < 1e-12
    # E E^dag symbol for attenuation is the constant 1/eta
    out_m = output_marginal(gauss, grid)
    assert np.max(np.abs(out_m.values - 1.0 / 0.36)) < 1e-12
    delta = AffineDelta(np.eye(2), np.zeros(2))
    assert np.max(np.abs(input_marginal(delta, grid).values - 1.0)) == 0.0
    amp = parametric_amplification(1.5, dim).kernel
    assert abs(output_marginal(amp, grid).values[0, 0] - 1.0 / 1.5) < 1e-12
    with pytest.raises(ValueError):
        output_marginal(GaussianKernel(0.0, 1.0, 0.0, 1.0, 1.0), grid)


def test_kernel_norm_counts_levels():
    # trace-preserving map: norm = Tr(I) = D on a converged grid
    dim = FockDim(8)
    f = kernel_from_kraus(attenuation(0.5, dim).kraus)
    assert abs(kernel_norm(f) - dim.size) / dim.size < 0.02


def test_radial_form_matches_cartesian():
    dim = FockDim(8)
    t = tensor_from_kraus(attenuation(0.5, dim).kraus)
    grid = QuadratureGrid(-5.0, 5.0, -5.0, 5.0, 41, 41)
    f = kernel_from_tensor(t, grid, grid)
    half = grid.xs[20:]  # 0.0 .. 5.0
    rk = radial_form(t, rp_axis=half, r_axis=half,
                     theta_axis=np.array([0.0, math.pi]))
    cart0 = f.values[20:, 20, 20:, 20]
    assert np.max(np.abs(rk.values[:, :, 0] - cart0)) < 1e-11
    cart_pi = f.values[20::-1, 20, 20:, 20]
    assert np.max(np.abs(rk.values[:, :, 1] - cart_pi)) < 1e-11


def test_radial_form_rejects_covariant_maps():
    t = tensor_from_kraus(displacement(0.4, FockDim(5)).kraus)
    with pytest.raises(ValueError):
        radial_form(t)


def test_radial_norm_consistency():
    dim = FockDim(6)
    t = tensor_from_kraus(attenuation(0.7, dim).kraus)
    rk = radial_form(t, rp_axis=np.linspace(0, 6, 121),
                     r_axis=np.linspace(0, 6, 121),
                     theta_axis=np.linspace(0, 2 * math.pi, 73))
    grid = QuadratureGrid(-6.0, 6.0, -6.0, 6.0, 81, 81)
    f = kernel_from_tensor(t, grid, grid)
    # radial_norm folds the angular 2 pi into the measure already
    a = radial_norm(rk)
    b = kernel_norm(f)
    assert abs(a - b) / b < 0.01


def test_negativity_and_scale_covariance():
    dim = FockDim(6)
    t = ideal_photon_addition(dim)
    # the volume entry integrates over theta, so the axis needs extent
    rk = radial_form(t, rp_axis=np.linspace(0, 4, 81),
                     r_axis=np.linspace(0, 4, 81),
                     theta_axis=np.linspace(0, 2 * math.pi, 25))
    base = negativity(rk)
    assert base["min_value"] < 0.0
    assert base["negative_volume"] > 0.0
    doubled = negativity(scale_kernel(rk, 2.0))
    assert doubled["min_value"] == 2.0 * base["min_value"]
    assert doubled["negative_volume"] == 2.0 * base["negative_volume"]
    odd = negativity(scale_kernel(rk, 3.7))
    assert abs(odd["min_value"] - 3.7 * base["min_value"]) <= 1e-15 * abs(
        base["min_value"]) * 3.7 + 1e-300
    gauss = attenuation(0.5, dim).kernel
    assert negativity(gauss) == {"min_value": 0.0, "negative_volume": 0.0}
    with pytest.raises(TypeError):
        negativity(AffineDelta(np.eye(2), np.zeros(2)))


def test_band_concentration_limits():
    axis = np.linspace(0.0, 4.0, 81)
    ridge = np.exp(-((axis[:, None] - axis[None, :]) / 0.1) ** 2)
    rk = RadialKernel(axis, axis, np.array([0.0]), ridge[:, :, None])
    assert band_concentration(rk, half_width=0.5) > 0.999
    far = np.exp(-((axis[:, None] - axis[None, :] - 2.0) / 0.1) ** 2)
    rk_far = RadialKernel(axis, axis, np.array([0.0]), far[:, :, None])
    assert band_concentration(rk_far, half_width=0.5) < 0.05
    zero = RadialKernel(axis, axis, np.array([0.0]), np.zeros_like(ridge)[:, :, None])
    assert band_concentration(zero) == 1.0


def test_coarse_grid_warning():
    dim = FockDim(4)
    t = tensor_from_kraus(attenuation(0.5, dim).kraus)
    coarse = QuadratureGrid(-5.0, 5.0, -5.0, 5.0, 21, 21)
    with pytest.warns(RuntimeWarning):
        kernel_from_tensor(t, coarse, coarse)


def test_dense_cap():
    dim = FockDim(4)
    t = tensor_from_kraus(attenuation(0.5, dim).kraus)
    big = QuadratureGrid(-5.0, 5.0, -5.0, 5.0, 161, 161)
    huge = QuadratureGrid(-5.0, 5.0, -5.0, 5.0, 401, 401)
    with pytest.raises(ValueError):
        kernel_from_tensor(t, huge, big)


def test_scale_kernel_types():
    gauss = normalized_gaussian(0.5, 0.5, 0.5, 0.5)
    assert scale_kernel(gauss, 2.0).prefactor == 2.0 * gauss.prefactor
    s = SumKernel(((0.5, gauss),))
    assert scale_kernel(s, 2.0).terms[0][0] == 1.0
    with pytest.raises(TypeError):
        scale_kernel(AffineDelta(np.eye(2), np.zeros(2)), 2.0)
