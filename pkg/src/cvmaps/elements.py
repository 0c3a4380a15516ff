"""Catalog of basic continuous-variable channels, detectors and sources.

Each catalog entry bundles a Kraus presentation with the closed-form
transfer kernel: affine coordinate deltas for the point transformations,
normalized Gaussians for attenuation and phase-insensitive amplification.

Conventions fixed here and relied on everywhere else:

  phase_rotation(theta) conjugates by exp(-i theta n), so a coherent state
  maps alpha -> exp(-i theta) alpha and the delta kernel reads
  x = cos(theta) x' - sin(theta) p'.

  beam_splitter(t) is exp(phi (a1+ a2 - a2+ a1)) with t = cos(phi),
  r = sin(phi) >= 0, giving a1 -> t a1 + r a2 in the Heisenberg picture
  and U|1,0> = t|1,0> - r|0,1>.

  parametric_down_conversion(g) is the two-mode squeezer with
  cosh(zeta) = sqrt(g), assembled from its normal-ordered factorization
  exp(G A1+ A2+) sech(zeta)^(n1+n2+1) exp(-G A1 A2), G = tanh(zeta).
  Down-chains and up-chains never pass through states above the larger of
  the bra/ket occupation, so every stored matrix element is exact at
  truncation; only columns near n_max lose the amplitude that escapes.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .fock import (
    FockDim,
    DensityOperator,
    annihilation,
    displacement_matrix,
    squeeze_matrix,
    _exp_nilpotent,
)
from .tensors import KrausSet, ProcessTensor, tensor_from_kraus
from .wigner import QuadratureGrid, weyl_symbol
from .kernels import AffineDelta, GaussianKernel, normalized_gaussian

__all__ = [
    "Element",
    "GaussianChannelSpec",
    "DetectorElement",
    "identity",
    "phase_rotation",
    "displacement",
    "squeezing",
    "beam_splitter",
    "beam_splitter_matrix",
    "parametric_down_conversion",
    "two_mode_squeeze_matrix",
    "attenuation",
    "attenuation_kraus",
    "parametric_amplification",
    "gaussian_channel",
    "apd_click",
    "photon_counter",
    "vacuum_projector",
    "experimental_single_photon",
]


@dataclass(frozen=True, eq=False)
class Element:
    """A named channel carried in both representations."""

    name: str
    params: dict
    kraus: KrausSet
    kernel: object = None  # AffineDelta | GaussianKernel | None

    @property
    def dim(self) -> FockDim:
        return self.kraus.dim

    def tensor(self) -> ProcessTensor:
        return tensor_from_kraus(self.kraus)


def _identity_delta(modes: int = 1) -> AffineDelta:
    n = 2 * modes
    return AffineDelta(np.eye(n), np.zeros(n), modes=modes)


def identity(dim: FockDim) -> Element:
    return Element("identity", {}, KrausSet(dim, [np.eye(dim.size)]),
                   _identity_delta())


def phase_rotation(theta: float, dim: FockDim) -> Element:
    theta = float(theta)
    u = np.diag(np.exp(-1j * theta * np.arange(dim.size)))
    c, s = math.cos(theta), math.sin(theta)
    delta = AffineDelta(np.array([[c, -s], [s, c]]), np.zeros(2))
    return Element("phase_rotation", {"theta": theta}, KrausSet(dim, [u]), delta)


def displacement(alpha: complex, dim: FockDim) -> Element:
    alpha = complex(alpha)
    off = -math.sqrt(2.0) * np.array([alpha.real, alpha.imag])
    return Element("displacement", {"alpha": alpha},
                   KrausSet(dim, [displacement_matrix(alpha, dim)]),
                   AffineDelta(np.eye(2), off))


def squeezing(r: float, dim: FockDim) -> Element:
    r = float(r)
    delta = AffineDelta(np.diag([math.exp(r), math.exp(-r)]), np.zeros(2))
    return Element("squeezing", {"r": r},
                   KrausSet(dim, [squeeze_matrix(r, dim)]), delta)


def beam_splitter_matrix(t: float, dim: FockDim) -> np.ndarray:
    """Two-mode beam-splitter matrix, index n1 * D + n2.

    Each total-photon-number block is exponentiated at its full size and
    then restricted to the stored entries, so amplitudes are exact; columns
    with total number above n_max lose the part that leaves the truncation.
    """
    if not -1.0 <= t <= 1.0:
        raise ValueError("beam-splitter amplitude must satisfy |t| <= 1")
    size = dim.size
    phi = math.acos(t)
    u = np.zeros((size * size, size * size))
    for tot in range(2 * dim.n_max + 1):
        gen = np.zeros((tot + 1, tot + 1))
        for j in range(tot):
            # a1+ a2 |j, tot-j> = sqrt((j+1)(tot-j)) |j+1, tot-j-1>
            gen[j + 1, j] = math.sqrt((j + 1) * (tot - j))
        block = expm(phi * (gen - gen.T))
        kept = [j for j in range(tot + 1) if j < size and tot - j < size]
        for j_out in kept:
            row = j_out * size + (tot - j_out)
            for j_in in kept:
                u[row, j_in * size + (tot - j_in)] = block[j_out, j_in]
    return u


def beam_splitter(t: float, dim: FockDim) -> Element:
    t = float(t)
    u = beam_splitter_matrix(t, dim)
    r = math.sqrt(max(0.0, 1.0 - t * t))
    mat = np.array([
        [t, 0.0, -r, 0.0],
        [0.0, t, 0.0, -r],
        [r, 0.0, t, 0.0],
        [0.0, r, 0.0, t],
    ])
    delta = AffineDelta(mat, np.zeros(4), modes=2)
    return Element("beam_splitter", {"t": t},
                   KrausSet(dim, [u], input_modes=2, output_modes=2), delta)


def two_mode_squeeze_matrix(g: float, dim: FockDim) -> np.ndarray:
    """Two-mode squeezer with cosh(zeta) = sqrt(g), index n1 * D + n2."""
    if g < 1.0:
        raise ValueError("parametric gain must satisfy g >= 1")
    size = dim.size
    zeta = math.acosh(math.sqrt(g))
    gam = math.tanh(zeta)
    a = annihilation(dim)
    eye = np.eye(size)
    a1, a2 = np.kron(a, eye), np.kron(eye, a)
    n_tot = np.add.outer(np.arange(size), np.arange(size)).ravel()
    mid = np.diag((1.0 / math.cosh(zeta)) ** (n_tot + 1.0))
    up = _exp_nilpotent(gam * (a1.T @ a2.T))
    dn = _exp_nilpotent(-gam * (a1 @ a2))
    return (up @ mid @ dn).real


def parametric_down_conversion(g: float, dim: FockDim) -> Element:
    g = float(g)
    u = two_mode_squeeze_matrix(g, dim)
    c, s = math.sqrt(g), math.sqrt(g - 1.0)
    mat = np.array([
        [c, 0.0, -s, 0.0],
        [0.0, c, 0.0, s],
        [-s, 0.0, c, 0.0],
        [0.0, s, 0.0, c],
    ])
    delta = AffineDelta(mat, np.zeros(4), modes=2)
    return Element("parametric_down_conversion", {"g": g},
                   KrausSet(dim, [u], input_modes=2, output_modes=2), delta)


def attenuation_kraus(eta: float, dim: FockDim) -> list:
    """Loss-channel operators K_j mapping |n> -> |n-j> with binomial weights."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("transmission must satisfy 0 <= eta <= 1")
    size = dim.size
    ops = []
    for j in range(size):
        k = np.zeros((size, size))
        for n in range(j, size):
            k[n - j, n] = math.sqrt(
                math.comb(n, j) * (1.0 - eta) ** j * eta ** (n - j))
        if np.any(k):
            ops.append(k)
    return ops


def attenuation(eta: float, dim: FockDim) -> Element:
    eta = float(eta)
    ops = attenuation_kraus(eta, dim)
    if eta == 1.0:
        kernel = _identity_delta()
    else:
        root = math.sqrt(eta)
        nu = math.sqrt(1.0 - eta)
        kernel = normalized_gaussian(root, nu, root, nu)
    return Element("attenuation", {"eta": eta}, KrausSet(dim, ops), kernel)


def parametric_amplification(g: float, dim: FockDim) -> Element:
    """Phase-insensitive amplifier; K_j adds j photons with thermal weights."""
    g = float(g)
    if g < 1.0:
        raise ValueError("gain must satisfy g >= 1")
    size = dim.size
    gam2 = (g - 1.0) / g
    ops = []
    for j in range(size):
        k = np.zeros((size, size))
        for n in range(size - j):
            k[n + j, n] = math.sqrt(
                gam2 ** j / math.factorial(j)
                * math.factorial(n + j) / math.factorial(n)
            ) * g ** (-(n + 1) / 2.0)
        if np.any(k):
            ops.append(k)
    if g == 1.0:
        kernel = _identity_delta()
    else:
        kernel = normalized_gaussian(math.sqrt(g), math.sqrt(g - 1.0),
                                     math.sqrt(g), math.sqrt(g - 1.0))
    return Element("parametric_amplification", {"g": g},
                   KrausSet(dim, ops), kernel)


@dataclass(frozen=True, eq=False)
class GaussianChannelSpec:
    """Per-quadrature coordinate transformation mixing the input with vacuum.

    m_x and m_p are 2x2 blocks [[mu, nu], [eps nu, mu]] with eps = +-1 and
    unit determinant: eps = -1 is the attenuation family (mu^2 + nu^2 = 1),
    eps = +1 the amplification family (mu^2 - nu^2 = 1).
    """

    m_x: np.ndarray
    m_p: np.ndarray

    def __post_init__(self):
        for name in ("m_x", "m_p"):
            m = np.array(getattr(self, name), dtype=float)
            if m.shape != (2, 2):
                raise ValueError(f"{name} must be a 2x2 matrix")
            if abs(m[1, 1] - m[0, 0]) > 1e-12 or abs(abs(m[1, 0]) - abs(m[0, 1])) > 1e-12:
                raise ValueError(f"{name} must have the form [[mu, nu], [eps nu, mu]]")
            if abs(np.linalg.det(m) - 1.0) > 1e-12:
                raise ValueError(f"det({name}) must be 1")
            m.flags.writeable = False
            object.__setattr__(self, name, m)

    @property
    def mu_x(self) -> float:
        return float(self.m_x[0, 0])

    @property
    def nu_x(self) -> float:
        return float(self.m_x[0, 1])

    @property
    def mu_p(self) -> float:
        return float(self.m_p[0, 0])

    @property
    def nu_p(self) -> float:
        return float(self.m_p[0, 1])


def gaussian_channel(spec: GaussianChannelSpec) -> GaussianKernel:
    if spec.nu_x == 0.0 or spec.nu_p == 0.0:
        raise ValueError("degenerate Gaussian channel (nu = 0); use AffineDelta")
    return normalized_gaussian(spec.mu_x, spec.nu_x, spec.mu_p, spec.nu_p)


_DETECTOR_KINDS = ("apd_click", "photon_counter", "vacuum_projector")


@dataclass(frozen=True)
class DetectorElement:
    """Diagonal POVM element of a photon detector.

    A measurement has input coordinates only; its kernel is 2 pi times the
    Wigner function of the POVM element, i.e. the Weyl symbol.
    """

    kind: str
    mu: float = 1.0
    n: int = None

    def __post_init__(self):
        if self.kind not in _DETECTOR_KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("detector efficiency must satisfy 0 < mu <= 1")
        if self.kind == "photon_counter":
            if self.n is None or self.n < 0:
                raise ValueError("photon counter needs a count n >= 0")

    def matrix(self, dim: FockDim) -> np.ndarray:
        occ = np.arange(dim.size, dtype=float)
        if self.kind == "apd_click":
            return np.diag(1.0 - (1.0 - self.mu) ** occ)
        target = 0 if self.kind == "vacuum_projector" else self.n
        diag = np.zeros(dim.size)
        if target < dim.size:
            diag[target] = 1.0
        return np.diag(diag)

    def no_click_matrix(self, dim: FockDim) -> np.ndarray:
        # completeness Pi + (I - Pi) = I is exact by construction
        return np.eye(dim.size) - self.matrix(dim)

    def weyl(self, dim: FockDim, grid: QuadratureGrid) -> np.ndarray:
        return weyl_symbol(self.matrix(dim), dim, grid).real


def apd_click(mu: float) -> DetectorElement:
    return DetectorElement("apd_click", mu=float(mu))


def photon_counter(n: int) -> DetectorElement:
    return DetectorElement("photon_counter", n=int(n))


def vacuum_projector() -> DetectorElement:
    return DetectorElement("vacuum_projector")


# Two-photon admixture fraction of the heralded single-photon source;
# w2 = _TWO_PHOTON_FRACTION * w1 * (1 - w1) vanishes at both endpoints.
_TWO_PHOTON_FRACTION = 0.25


def experimental_single_photon(delta: float, dim: FockDim) -> DensityOperator:
    """Heralded single-photon resource with purity parameter delta in [0, 2].

    Mixture of |0>, |1>, |2> with w1 = delta/2 and a small two-photon
    admixture from residual multi-pair emission. The Wigner origin value is
    (1 - delta)/pi independent of the two-photon weight (vacuum and
    two-photon terms both contribute +1/pi there), delta = 2 is the pure
    single photon exactly and delta = 0 is vacuum.
    """
    delta = float(delta)
    if not 0.0 <= delta <= 2.0:
        raise ValueError("purity parameter must satisfy 0 <= delta <= 2")
    w1 = delta / 2.0
    w2 = _TWO_PHOTON_FRACTION * w1 * (1.0 - w1)
    diag = np.zeros(dim.size)
    diag[0] = 1.0 - w1 - w2
    if dim.size > 1:
        diag[1] = w1
    if w1 > 0.0 and dim.size < 2:
        raise ValueError("need n_max >= 1 for a single-photon component")
    if w2 > 0.0:
        if dim.size < 3:
            raise ValueError("need n_max >= 2 for the two-photon admixture")
        diag[2] = w2
    return DensityOperator(dim, np.diag(diag))
