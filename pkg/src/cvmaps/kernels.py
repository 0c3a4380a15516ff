"""Transfer kernels: phase-space representations of Fock-space maps.

A map E acting on Wigner functions is an integral transform

    W'(x', p') = Int dx dp f(x', p', x, p) W(x, p),

with f built from the process tensor as

    f = 2 pi sum_{l,k,n,m} E^{n,m}_{l,k} conj(W_{|n><m|}(x, p)) W_{|l><k|}(x', p').

The conjugate on the input-side basis function is required for the
identity tensor to act as the reproducing kernel; with real symmetric
combinations it is invisible, which makes it easy to drop by accident.

Kernel variants: AffineDelta (coordinate substitutions, Jacobian 1),
GaussianKernel (per-quadrature affine Gaussians), GridKernel (dense 4D
samples, indexed [out_x, out_p, in_x, in_p]), SumKernel (weighted sums).
Bookkeeping convention: integrating f over the output plane gives the
Weyl symbol of E^dag E (identity maps to the constant 1), and
kernel_norm(f) = (1/2 pi) Int f d^4 = Tr(E^dag E).
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fock import FockDim
from .tensors import KrausSet, ProcessTensor, tensor_from_kraus
from .wigner import QuadratureGrid, WignerField, _band_values, wigner_basis_table

__all__ = [
    "AffineDelta",
    "GaussianKernel",
    "GridKernel",
    "SumKernel",
    "RadialKernel",
    "kernel_from_tensor",
    "kernel_from_kraus",
    "apply_kernel",
    "compose_kernels",
    "input_marginal",
    "output_marginal",
    "kernel_norm",
    "radial_form",
    "negativity",
    "scale_kernel",
]

_MAX_GRID_VALUES = 70_000_000
_COARSE_SPACING = 0.25

_DEFAULT_KERNEL_GRID = QuadratureGrid(-5.0, 5.0, -5.0, 5.0, 81, 81)


def _thread_count() -> int:
    raw = os.environ.get("CVMAPS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class AffineDelta:
    """Delta kernel recording input coordinates as a function of output.

    r_in = matrix @ r_out + offset, coordinates ordered
    (x_1, p_1, ..., x_M, p_M). Jacobian is unity (|det matrix| = 1), so
    the action on Wigner functions is plain substitution,
    W'(r') = W(matrix @ r' + offset).
    """

    matrix: np.ndarray
    offset: np.ndarray
    modes: int = 1

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        off = np.asarray(self.offset, dtype=float)
        n = 2 * self.modes
        if mat.shape != (n, n) or off.shape != (n,):
            raise ValueError("coordinate relation has wrong shape")
        if abs(abs(np.linalg.det(mat)) - 1.0) > 1e-9:
            raise ValueError("coordinate relation must be volume preserving")
        mat = mat.copy(); mat.flags.writeable = False
        off = off.copy(); off.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "offset", off)

    @property
    def input_modes(self) -> int:
        return self.modes

    @property
    def output_modes(self) -> int:
        return self.modes

    def input_coords(self, out_coords: np.ndarray) -> np.ndarray:
        out_coords = np.asarray(out_coords, dtype=float)
        return out_coords @ self.matrix.T + self.offset


@dataclass(frozen=True)
class GaussianKernel:
    """f = prefactor exp(-((x'-mu_x x-off_x)/nu_x)^2 -((p'-mu_p p-off_p)/nu_p)^2).

    The trace-normalized prefactor for a channel built this way is
    1/(pi nu_x nu_p); the offsets extend the quadrature-diagonal family to
    displaced channels so that delta/Gaussian compositions stay closed.
    """

    mu_x: float
    nu_x: float
    mu_p: float
    nu_p: float
    prefactor: float
    off_x: float = 0.0
    off_p: float = 0.0

    input_modes = 1
    output_modes = 1

    def __post_init__(self):
        if self.nu_x == 0.0 or self.nu_p == 0.0:
            raise ValueError(
                "degenerate Gaussian channel (nu = 0); use AffineDelta"
            )

    def evaluate(self, xo, po, xi, pi) -> np.ndarray:
        ex = (np.asarray(xo) - self.mu_x * np.asarray(xi) - self.off_x) / self.nu_x
        ep = (np.asarray(po) - self.mu_p * np.asarray(pi) - self.off_p) / self.nu_p
        return self.prefactor * np.exp(-ex * ex - ep * ep)


def normalized_gaussian(mu_x: float, nu_x: float, mu_p: float, nu_p: float,
                        off_x: float = 0.0, off_p: float = 0.0) -> GaussianKernel:
    if nu_x == 0.0 or nu_p == 0.0:
        raise ValueError("degenerate Gaussian channel (nu = 0); use AffineDelta")
    pref = 1.0 / (math.pi * abs(nu_x) * abs(nu_p))
    return GaussianKernel(mu_x, nu_x, mu_p, nu_p, pref, off_x, off_p)


@dataclass(frozen=True, eq=False)
class GridKernel:
    """Dense 4D samples f[out_x, out_p, in_x, in_p] on two grids."""

    out_grid: QuadratureGrid
    in_grid: QuadratureGrid
    values: np.ndarray

    input_modes = 1
    output_modes = 1

    def __post_init__(self):
        vals = np.asarray(self.values)
        shape = (self.out_grid.n_x, self.out_grid.n_p,
                 self.in_grid.n_x, self.in_grid.n_p)
        if vals.shape != shape:
            raise ValueError(f"values shape {vals.shape} != {shape}")
        if np.iscomplexobj(vals):
            resid = float(np.max(np.abs(vals.imag)))
            scale = max(1.0, float(np.max(np.abs(vals.real))))
            if resid > 1e-10 * scale:
                raise ValueError(
                    f"kernel has imaginary residue {resid:.3e}; "
                    "transfer functions are real"
                )
            vals = vals.real
        vals = np.ascontiguousarray(vals, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SumKernel:
    """Weighted sum of kernels, e.g. exclusive heralded branches."""

    terms: tuple  # of (weight, kernel)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("SumKernel needs at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def input_modes(self) -> int:
        return self.terms[0][1].input_modes

    @property
    def output_modes(self) -> int:
        return self.terms[0][1].output_modes


@dataclass(frozen=True, eq=False)
class RadialKernel:
    """f(r', r, theta) samples for phase-invariant maps, [ir', ir, itheta]."""

    rp_axis: np.ndarray
    r_axis: np.ndarray
    theta_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rp = np.asarray(self.rp_axis, dtype=float)
        r = np.asarray(self.r_axis, dtype=float)
        th = np.asarray(self.theta_axis, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (rp.size, r.size, th.size):
            raise ValueError("radial values do not match axes")
        for arr in (rp, r, th, vals):
            arr.flags.writeable = False
        object.__setattr__(self, "rp_axis", rp)
        object.__setattr__(self, "r_axis", r)
        object.__setattr__(self, "theta_axis", th)
        object.__setattr__(self, "values", vals)


def _basis_at_points(dim: FockDim, xs: np.ndarray, ps: np.ndarray) -> np.ndarray:
    """W_{|n><m|} at a flat list of points; shape (D, D, N)."""
    size = dim.size
    n_pts = xs.size
    table = np.empty((size, size, n_pts), dtype=complex)
    for d in range(size):
        band = _band_values(d, size - d, xs, ps)
        for n in range(size - d):
            table[n, n + d] = band[n]
            if d:
                table[n + d, n] = np.conj(band[n])
    return table


def _check_single_mode(t: ProcessTensor):
    if t.input_modes != 1 or t.output_modes != 1:
        raise ValueError("stored kernels are single-mode in and out")


def _warn_if_coarse(grid: QuadratureGrid, name: str):
    if grid.dx > _COARSE_SPACING or grid.dp > _COARSE_SPACING:
        warnings.warn(
            f"{name} grid spacing ({grid.dx:.3f}, {grid.dp:.3f}) above "
            f"{_COARSE_SPACING}; quadratures may be inaccurate",
            RuntimeWarning,
            stacklevel=3,
        )


def kernel_from_tensor(t: ProcessTensor, in_grid: QuadratureGrid = None,
                       out_grid: QuadratureGrid = None) -> GridKernel:
    """Sample the transfer function of a process tensor on grids."""
    _check_single_mode(t)
    in_grid = in_grid or _DEFAULT_KERNEL_GRID
    out_grid = out_grid or in_grid
    _warn_if_coarse(in_grid, "input")
    _warn_if_coarse(out_grid, "output")
    n_vals = out_grid.n_x * out_grid.n_p * in_grid.n_x * in_grid.n_p
    if n_vals > _MAX_GRID_VALUES:
        raise ValueError(
            f"grid kernel with {n_vals} samples exceeds the dense cap; "
            "use coarser grids or radial_form"
        )
    d = t.dim.size
    b_in = wigner_basis_table(t.dim, in_grid).reshape(d * d, -1)
    b_out = wigner_basis_table(t.dim, out_grid).reshape(d * d, -1)
    e_mat = t.elements.reshape(d * d, d * d)
    flat = 2.0 * math.pi * (b_out.T @ e_mat @ np.conj(b_in))
    vals = flat.reshape(out_grid.n_x, out_grid.n_p, in_grid.n_x, in_grid.n_p)
    return GridKernel(out_grid, in_grid, vals)


def kernel_from_kraus(k: KrausSet, in_grid: QuadratureGrid = None,
                      out_grid: QuadratureGrid = None) -> GridKernel:
    return kernel_from_tensor(tensor_from_kraus(k), in_grid, out_grid)


def sample_kernel(f, out_grid: QuadratureGrid, in_grid: QuadratureGrid = None) -> GridKernel:
    """Sample a closed-form kernel on grids.

    Delta kernels are symbolic records and cannot be sampled; grid kernels
    pass through unchanged when the grids already match.
    """
    in_grid = in_grid or out_grid
    if isinstance(f, AffineDelta):
        raise TypeError("delta kernels are symbolic; sampling one is ill-defined")
    if isinstance(f, GridKernel):
        if f.out_grid == out_grid and f.in_grid == in_grid:
            return f
        raise ValueError("grid kernel resampling is not supported")
    if isinstance(f, SumKernel):
        total = None
        for w, term in f.terms:
            part = w * sample_kernel(term, out_grid, in_grid).values
            total = part if total is None else total + part
        return GridKernel(out_grid, in_grid, total)
    if not isinstance(f, GaussianKernel):
        raise TypeError(f"cannot sample {type(f).__name__}")
    vals = f.evaluate(out_grid.xs[:, None, None, None],
                      out_grid.ps[None, :, None, None],
                      in_grid.xs[None, None, :, None],
                      in_grid.ps[None, None, None, :])
    return GridKernel(out_grid, in_grid, vals)


def _axis_weights(n: int, step: float) -> np.ndarray:
    w = np.full(n, step)
    w[0] = w[-1] = step / 2
    return w


def apply_kernel(f, w_in: WignerField) -> WignerField:
    """Integral transform of a Wigner field; output on the kernel's out grid."""
    if isinstance(f, SumKernel):
        acc = None
        for weight, term in f.terms:
            part = apply_kernel(term, w_in)
            vals = weight * part.values
            acc = vals if acc is None else acc + vals
            out_grid = part.grid
        return WignerField(out_grid, acc)
    if isinstance(f, AffineDelta):
        if f.modes != 1:
            raise ValueError("only single-mode delta kernels can be applied")
        from scipy.interpolate import RegularGridInterpolator

        grid = w_in.grid
        interp = RegularGridInterpolator(
            (grid.xs, grid.ps), w_in.values, bounds_error=False, fill_value=0.0
        )
        outx = grid.xs[:, None, None]
        outp = grid.ps[None, :, None]
        pts = np.concatenate(
            [np.broadcast_to(outx, (grid.n_x, grid.n_p, 1)),
             np.broadcast_to(outp, (grid.n_x, grid.n_p, 1))], axis=2
        ).reshape(-1, 2)
        vals = interp(f.input_coords(pts)).reshape(grid.n_x, grid.n_p)
        return WignerField(grid, vals)
    if isinstance(f, GaussianKernel):
        grid = w_in.grid
        gx = np.exp(-((grid.xs[:, None] - f.mu_x * grid.xs[None, :]
                       - f.off_x) / f.nu_x) ** 2)
        gp = np.exp(-((grid.ps[:, None] - f.mu_p * grid.ps[None, :]
                       - f.off_p) / f.nu_p) ** 2)
        wx = _axis_weights(grid.n_x, grid.dx)
        wp = _axis_weights(grid.n_p, grid.dp)
        vals = f.prefactor * ((gx * wx[None, :]) @ w_in.values @ (gp * wp[None, :]).T)
        return WignerField(grid, vals)
    if isinstance(f, GridKernel):
        if f.in_grid != w_in.grid:
            raise ValueError("field grid does not match kernel input grid")
        wx = _axis_weights(f.in_grid.n_x, f.in_grid.dx)
        wp = _axis_weights(f.in_grid.n_p, f.in_grid.dp)
        weighted = w_in.values * wx[:, None] * wp[None, :]
        vals = np.einsum("abxy,xy->ab", f.values, weighted)
        return WignerField(f.out_grid, vals)
    raise TypeError(f"cannot apply kernel of type {type(f).__name__}")


def _compose_gaussians(f2: GaussianKernel, f1: GaussianKernel) -> GaussianKernel:
    # chain the in->mid and mid->out Gaussian integrals axis by axis
    mu_x = f2.mu_x * f1.mu_x
    mu_p = f2.mu_p * f1.mu_p
    nu_x = math.hypot(f2.nu_x, f2.mu_x * f1.nu_x)
    nu_p = math.hypot(f2.nu_p, f2.mu_p * f1.nu_p)
    off_x = f2.mu_x * f1.off_x + f2.off_x
    off_p = f2.mu_p * f1.off_p + f2.off_p
    pref = (f1.prefactor * f2.prefactor * math.pi
            * (abs(f1.nu_x) * abs(f2.nu_x) / nu_x)
            * (abs(f1.nu_p) * abs(f2.nu_p) / nu_p))
    return GaussianKernel(mu_x, nu_x, mu_p, nu_p, pref, off_x, off_p)


def _delta_axis_form(f: AffineDelta):
    """Per-quadrature (a_x, b_x, a_p, b_p) if the delta does not mix x and p."""
    m = f.matrix
    if f.modes != 1:
        return None
    if m[0, 1] != 0.0 or m[1, 0] != 0.0:
        return None
    return m[0, 0], f.offset[0], m[1, 1], f.offset[1]


def compose_kernels(f2, f1):
    """Kernel of (f2 after f1): integrates out the intermediate plane."""
    if isinstance(f1, SumKernel):
        return SumKernel(tuple((w, compose_kernels(f2, k)) for w, k in f1.terms))
    if isinstance(f2, SumKernel):
        return SumKernel(tuple((w, compose_kernels(k, f1)) for w, k in f2.terms))
    if isinstance(f2, AffineDelta) and isinstance(f1, AffineDelta):
        if f1.modes != f2.modes:
            raise ValueError("mode counts differ")
        return AffineDelta(
            f1.matrix @ f2.matrix,
            f1.matrix @ f2.offset + f1.offset,
            f1.modes,
        )
    if isinstance(f2, GaussianKernel) and isinstance(f1, GaussianKernel):
        return _compose_gaussians(f2, f1)
    if isinstance(f2, GaussianKernel) and isinstance(f1, AffineDelta):
        axis = _delta_axis_form(f1)
        if axis is None:
            raise ValueError(
                "delta kernel mixes x and p; compose through the grid path"
            )
        ax, bx, ap, bp = axis
        # mid = (in - b)/a per axis, from r_in = a r_mid + b
        return GaussianKernel(
            f2.mu_x / ax, f2.nu_x, f2.mu_p / ap, f2.nu_p,
            f2.prefactor,
            f2.off_x - f2.mu_x * bx / ax,
            f2.off_p - f2.mu_p * bp / ap,
        )
    if isinstance(f2, AffineDelta) and isinstance(f1, GaussianKernel):
        axis = _delta_axis_form(f2)
        if axis is None:
            raise ValueError(
                "delta kernel mixes x and p; compose through the grid path"
            )
        ax, bx, ap, bp = axis
        # substitute mid = a r_out + b into the first kernel's output slot;
        # pure substitution, so the peak value (prefactor) is unchanged
        return GaussianKernel(
            f1.mu_x / ax, f1.nu_x / abs(ax), f1.mu_p / ap, f1.nu_p / abs(ap),
            f1.prefactor,
            (f1.off_x - bx) / ax, (f1.off_p - bp) / ap,
        )
    if isinstance(f2, GridKernel) and isinstance(f1, GridKernel):
        if f1.out_grid != f2.in_grid:
            raise ValueError("intermediate grids do not match")
        mid = f2.in_grid
        wx = _axis_weights(mid.n_x, mid.dx)
        wp = _axis_weights(mid.n_p, mid.dp)
        vals = np.einsum(
            "abxy,x,y,xyij->abij", f2.values, wx, wp, f1.values, optimize=True
        )
        return GridKernel(f2.out_grid, f1.in_grid, vals)
    raise TypeError(
        f"no composition rule for {type(f2).__name__} after {type(f1).__name__}"
    )


def _marginal(f, grid: QuadratureGrid, over_output: bool) -> WignerField:
    if isinstance(f, SumKernel):
        acc = None
        for w, term in f.terms:
            part = _marginal(term, grid, over_output)
            acc = w * part.values if acc is None else acc + w * part.values
            g = part.grid
        return WignerField(g, acc)
    if isinstance(f, GridKernel):
        if over_output:
            g = f.out_grid
            wx = _axis_weights(g.n_x, g.dx)
            wp = _axis_weights(g.n_p, g.dp)
            vals = np.einsum("abxy,a,b->xy", f.values, wx, wp)
            return WignerField(f.in_grid, vals)
        g = f.in_grid
        wx = _axis_weights(g.n_x, g.dx)
        wp = _axis_weights(g.n_p, g.dp)
        vals = np.einsum("abxy,x,y->ab", f.values, wx, wp)
        return WignerField(f.out_grid, vals)
    grid = grid or _DEFAULT_KERNEL_GRID
    if isinstance(f, AffineDelta):
        if f.modes != 1:
            raise ValueError("marginals are defined for single-mode kernels")
        ones = np.ones((grid.n_x, grid.n_p))
        return WignerField(grid, ones)
    if isinstance(f, GaussianKernel):
        if over_output:
            # integral over the full output plane, closed form
            const = f.prefactor * math.pi * abs(f.nu_x) * abs(f.nu_p)
            return WignerField(grid, np.full((grid.n_x, grid.n_p), const))
        # integral over inputs: substitute u = (x' - mu x - off)/nu per axis
        if f.mu_x == 0.0 or f.mu_p == 0.0:
            raise ValueError("output marginal diverges for mu = 0 kernels")
        const = (f.prefactor * math.pi * abs(f.nu_x) * abs(f.nu_p)
                 / abs(f.mu_x * f.mu_p))
        return WignerField(grid, np.full((grid.n_x, grid.n_p), const))
    raise TypeError(f"no marginal rule for {type(f).__name__}")


def input_marginal(f, grid: QuadratureGrid = None) -> WignerField:
    """Int f dx' dp' as a field over inputs; Weyl symbol of E^dag E."""
    return _marginal(f, grid, over_output=True)


def output_marginal(f, grid: QuadratureGrid = None) -> WignerField:
    """Int f dx dp as a field over outputs; Weyl symbol of E E^dag."""
    return _marginal(f, grid, over_output=False)


def kernel_norm(f) -> float:
    """(1/2 pi) Int f d^4 = Tr(E^dag E), quadrature on the stored grids."""
    if isinstance(f, SumKernel):
        return float(sum(w * kernel_norm(k) for w, k in f.terms))
    if isinstance(f, GridKernel):
        marg = input_marginal(f)
        return marg.integral() / (2.0 * math.pi)
    raise TypeError(
        "kernel_norm requires sampled kernels; closed-form kernels have "
        "truncation-dependent norms"
    )


def radial_form(t: ProcessTensor, rp_axis=None, r_axis=None, theta_axis=None,
                defect_tol: float = 1e-10) -> RadialKernel:
    """Sample f(r', r, theta) of a phase-invariant map directly from the tensor.

    Points are (x, p) = (r, 0) and (x', p') = (r' cos theta, r' sin theta);
    no 4D grid is materialized. Slices over theta run in parallel when
    CVMAPS_THREADS is set above 1.
    """
    from .tensors import phase_invariance_defect

    _check_single_mode(t)
    defect = phase_invariance_defect(t)
    if defect > defect_tol:
        raise ValueError(
            f"map is not phase invariant (defect {defect:.3e}); "
            "no radial form exists"
        )
    rp_axis = np.asarray(
        rp_axis if rp_axis is not None else np.linspace(0.0, 5.0, 101), float)
    r_axis = np.asarray(
        r_axis if r_axis is not None else np.linspace(0.0, 5.0, 101), float)
    theta_axis = np.asarray(
        theta_axis if theta_axis is not None else np.linspace(0.0, 2 * math.pi, 73),
        float)
    d = t.dim.size
    e_mat = t.elements.reshape(d * d, d * d)
    b_in = _basis_at_points(t.dim, r_axis, np.zeros_like(r_axis)).reshape(d * d, -1)
    half = e_mat @ np.conj(b_in)  # (D^2, n_r)

    def slice_for(theta: float) -> np.ndarray:
        xo = rp_axis * math.cos(theta)
        po = rp_axis * math.sin(theta)
        b_out = _basis_at_points(t.dim, xo, po).reshape(d * d, -1)
        return 2.0 * math.pi * np.real(b_out.T @ half)

    n_threads = _thread_count()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            slices = list(pool.map(slice_for, theta_axis))
    else:
        slices = [slice_for(th) for th in theta_axis]
    vals = np.stack(slices, axis=-1)  # (n_rp, n_r, n_theta)
    return RadialKernel(rp_axis, r_axis, theta_axis, vals)


def radial_norm(rk: RadialKernel) -> float:
    """kernel_norm computed from radial samples: Int f r r' dr dr' dtheta."""
    w = rk.values * rk.rp_axis[:, None, None] * rk.r_axis[None, :, None]
    from .wigner import _trapz

    inner = _trapz(w, x=rk.theta_axis, axis=-1)
    inner = _trapz(inner, x=rk.r_axis, axis=-1)
    return float(_trapz(inner, x=rk.rp_axis, axis=-1))


def negativity(f) -> dict:
    """Most negative value and integrated negative part of a kernel."""
    from .wigner import _trapz

    if isinstance(f, GridKernel):
        vals = f.values
        neg = np.where(vals < 0.0, -vals, 0.0)
        part = _trapz(neg, dx=f.in_grid.dp, axis=-1)
        part = _trapz(part, dx=f.in_grid.dx, axis=-1)
        part = _trapz(part, dx=f.out_grid.dp, axis=-1)
        part = _trapz(part, dx=f.out_grid.dx, axis=-1)
        return {"min_value": float(vals.min()), "negative_volume": float(part)}
    if isinstance(f, RadialKernel):
        vals = f.values
        neg = np.where(vals < 0.0, -vals, 0.0)
        neg = neg * f.rp_axis[:, None, None] * f.r_axis[None, :, None]
        part = _trapz(neg, x=f.theta_axis, axis=-1)
        part = _trapz(part, x=f.r_axis, axis=-1)
        part = _trapz(part, x=f.rp_axis, axis=-1)
        return {"min_value": float(vals.min()), "negative_volume": float(part)}
    if isinstance(f, GaussianKernel):
        return {"min_value": 0.0, "negative_volume": 0.0}
    raise TypeError(f"no negativity rule for {type(f).__name__}")


def band_concentration(rk: RadialKernel, half_width: float = 0.5,
                       theta_index: int = 0) -> float:
    """Fraction of squared kernel mass within |r' - r| <= half_width.

    Concentration is measured on the squared values. The exact kernels of
    photon-number-shifting maps are delta derivatives supported on r' = r,
    and the truncated representation of such a ridge carries oscillatory
    tails whose absolute mass grows logarithmically with the cutoff; the
    squared mass converges onto the ridge instead.
    """
    sl = rk.values[:, :, theta_index] ** 2
    band = np.abs(rk.rp_axis[:, None] - rk.r_axis[None, :]) <= half_width
    from .wigner import _trapz

    total = _trapz(_trapz(sl, x=rk.rp_axis, axis=0), x=rk.r_axis, axis=0)
    inside = _trapz(_trapz(np.where(band, sl, 0.0), x=rk.rp_axis, axis=0),
                    x=rk.r_axis, axis=0)
    if total == 0.0:
        return 1.0
    return float(inside / total)


def scale_kernel(f, c: float):
    """Kernel scaled by a constant; negativity metrics scale by exactly c."""
    if isinstance(f, GridKernel):
        return GridKernel(f.out_grid, f.in_grid, c * f.values)
    if isinstance(f, RadialKernel):
        return RadialKernel(f.rp_axis, f.r_axis, f.theta_axis, c * f.values)
    if isinstance(f, GaussianKernel):
        return GaussianKernel(f.mu_x, f.nu_x, f.mu_p, f.nu_p,
                              c * f.prefactor, f.off_x, f.off_p)
    if isinstance(f, SumKernel):
        return SumKernel(tuple((c * w, k) for w, k in f.terms))
    raise TypeError(f"cannot scale kernel of type {type(f).__name__}")
