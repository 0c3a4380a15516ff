"""Independent reference implementations used by the test suite.

Everything here is built from first principles with scipy/numpy primitives
(direct expm circuits, quadrature integrals, textbook series) and avoids the
package's own recurrences and factorizations, so agreement is evidence and
not circularity.
"""

import math

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, factorial

from cvmaps.elements import experimental_single_photon
from cvmaps.fock import FockDim, annihilation


# ---------------------------------------------------------------------------
# phase-space references

def hermite_psi(n: int, x: np.ndarray) -> np.ndarray:
    """Position wavefunction <x|n> for the x = (a + ad)/sqrt(2) convention."""
    h_prev = np.ones_like(x)
    h = 2.0 * x
    if n == 0:
        poly = h_prev
    elif n == 1:
        poly = h
    else:
        for k in range(2, n + 1):
            h_prev, h = h, 2.0 * x * h - 2.0 * (k - 1) * h_prev
        poly = h
    norm = 1.0 / math.sqrt(2.0 ** n * factorial(n, exact=True) * math.sqrt(math.pi))
    return norm * poly * np.exp(-x * x / 2.0)


def wigner_quadrature(rho: np.ndarray, x: float, p: float,
                      nu_max: float = 18.0, n_nu: int = 3001) -> float:
    """W(x, p) from the defining chord integral, trapezoid in nu."""
    d = rho.shape[0]
    nu = np.linspace(-nu_max, nu_max, n_nu)
    left = np.array([hermite_psi(n, np.asarray(x - nu / 2.0)) for n in range(d)])
    right = np.array([hermite_psi(n, np.asarray(x + nu / 2.0)) for n in range(d)])
    chord = np.einsum("an,ab,bn->n", left, rho, right)
    integrand = np.exp(1j * nu * p) * chord
    val = np.trapezoid(integrand, nu) / (2.0 * math.pi)
    return float(np.real(val))


def wigner_basis_laguerre(n: int, m: int, x, p):
    """W_{|n><m|} from the associated-Laguerre closed form (small n, m only)."""
    z = np.asarray(x, dtype=float) + 1j * np.asarray(p, dtype=float)
    if m < n:
        return np.conj(wigner_basis_laguerre(m, n, x, p))
    d = m - n
    r2 = 2.0 * np.abs(z) ** 2
    pref = ((-1.0) ** n / math.pi
            * math.sqrt(factorial(n, exact=True) / factorial(m, exact=True)))
    return (pref * np.exp(-r2 / 2.0) * (math.sqrt(2.0) * z) ** d
            * eval_genlaguerre(n, d, r2))


def coherent_wigner(alpha: complex, x, p):
    """Closed-form coherent-state Wigner function."""
    x0 = math.sqrt(2.0) * alpha.real
    p0 = math.sqrt(2.0) * alpha.imag
    return np.exp(-(np.asarray(x) - x0) ** 2 - (np.asarray(p) - p0) ** 2) / math.pi


def attenuation_kernel_reference(eta: float, xp, pp, x, p):
    """Gaussian transfer kernel of the loss channel, written out directly."""
    nu2 = 1.0 - eta
    mu = math.sqrt(eta)
    val = np.exp(-((np.asarray(xp) - mu * np.asarray(x)) ** 2
                   + (np.asarray(pp) - mu * np.asarray(p)) ** 2) / nu2)
    return val / (math.pi * nu2)


def amplification_kernel_reference(g: float, xp, pp, x, p):
    nu2 = g - 1.0
    mu = math.sqrt(g)
    val = np.exp(-((np.asarray(xp) - mu * np.asarray(x)) ** 2
                   + (np.asarray(pp) - mu * np.asarray(p)) ** 2) / nu2)
    return val / (math.pi * nu2)


# ---------------------------------------------------------------------------
# Fock-space references

def coherent_amplitudes(alpha: complex, size: int) -> np.ndarray:
    if alpha == 0:
        return np.eye(size)[0].astype(complex)
    ns = np.arange(size)
    log_fact = np.cumsum(np.log(np.maximum(ns, 1)))
    return np.exp(-abs(alpha) ** 2 / 2.0 + ns * np.log(alpha + 0j)
                  - log_fact / 2.0)


def squeezed_coherent_amplitudes(r: float, alpha: complex, size: int) -> np.ndarray:
    """<n| S(r) |alpha> for S(r) = exp[(r/2)(a^2 - ad^2)].

    S(r)|alpha> is the squeezed vacuum displaced by
    beta = alpha cosh r - conj(alpha) sinh r; the displacement acts as the
    exact normal-ordered series.
    """
    beta = alpha * math.cosh(r) - np.conj(alpha) * math.sinh(r)
    t = math.tanh(r)
    vac = np.zeros(size, dtype=complex)
    for m in range(size // 2 + 1):
        n = 2 * m
        if n >= size:
            break
        vac[n] = ((-t / 2.0) ** m
                  * math.sqrt(factorial(n, exact=True)) / factorial(m, exact=True)
                  / math.sqrt(math.cosh(r)))
    # D(beta) via expm of the (truncated) generator on a buffered space
    buf = size + 25
    a = np.diag(np.sqrt(np.arange(1.0, buf)), 1)
    d_op = expm(beta * a.conj().T - np.conj(beta) * a)
    vac_buf = np.zeros(buf, dtype=complex)
    vac_buf[:size] = vac
    return (d_op @ vac_buf)[:size]


def thermal_diagonal(mean_n: float, size: int) -> np.ndarray:
    ratio = mean_n / (1.0 + mean_n)
    probs = (1.0 / (1.0 + mean_n)) * ratio ** np.arange(size)
    return probs


# ---------------------------------------------------------------------------
# heralded-circuit oracles (direct expm, no factorizations)

def bs2(t: float, size: int) -> np.ndarray:
    """Two-mode beam-splitter unitary exp[phi (a1d a2 - a1 a2d)], cos phi = t."""
    a = annihilation(FockDim(size - 1))
    ad = a.conj().T
    gen = np.kron(ad, a) - np.kron(a, ad)
    return expm(math.acos(t) * gen)


def tms2(chi: float, size: int) -> np.ndarray:
    """Two-mode squeezer exp[chi (a1d a2d - a1 a2)]."""
    a = annihilation(FockDim(size - 1))
    gen = np.kron(a.conj().T, a.conj().T) - np.kron(a, a)
    return expm(chi * gen)


def apply_pair(state: np.ndarray, u2: np.ndarray, ax_a: int, ax_b: int) -> np.ndarray:
    """Apply a two-mode unitary to axes (ax_a, ax_b) of a pure-state tensor."""
    size = state.shape[0]
    u4 = u2.reshape(size, size, size, size)
    moved = np.moveaxis(state, (ax_a, ax_b), (0, 1))
    out = np.tensordot(u4, moved, axes=([2, 3], [0, 1]))
    return np.moveaxis(out, (0, 1), (ax_a, ax_b))


def amplifier_oracle(psi_in: np.ndarray, cfg, size: int):
    """Herald probability and unnormalized output of the amplifier circuit.

    Five wires: input, mismatched component, resource photon, resource
    vacuum, mismatch splitter vacuum. The resource-arm splitter sends the
    photon toward the signal splitter; the click detector sits on the second
    signal-splitter port and the extra condition on the first.
    """
    occ = np.arange(size, dtype=float)
    if cfg.detector == "apd":
        nc1 = (1.0 - cfg.mu) ** occ
        click_pair = 1.0 - nc1[:, None] * nc1[None, :]
    else:
        click_pair = ((occ[:, None] + occ[None, :]) == 1.0).astype(float)
    if cfg.second_output == "vacuum":
        so = ((occ[:, None] == 0) & (occ[None, :] == 0)).astype(float)
    elif cfg.second_output == "no_click":
        nc = (1.0 - cfg.mu) ** occ
        so = nc[:, None] * nc[None, :]
    else:
        so = np.ones((size, size))

    u_m = bs2(math.sqrt(cfg.eta_m), size)
    u_a = bs2(math.sqrt(1.0 - cfg.reflectivity), size)
    u_half = bs2(math.sqrt(0.5), size)

    res_weights = np.real(np.diag(
        experimental_single_photon(cfg.delta, FockDim(2)).matrix))
    vac = np.zeros(size)
    vac[0] = 1.0
    p_total = 0.0
    sigma = np.zeros((size, size), dtype=complex)
    for phi, wphi in enumerate(res_weights):
        if wphi == 0.0:
            continue
        res = np.zeros(size)
        res[phi] = 1.0
        state = np.einsum("i,w,r,v,z->iwrvz", psi_in, vac, res, vac, vac)
        state = apply_pair(state, u_m, 0, 1)     # (in, wrong) -> (s, u)
        state = apply_pair(state, u_a, 2, 3)     # resource splitter -> (o, b)
        state = apply_pair(state, u_half, 0, 3)  # signal splitter -> (d1, d2)
        state = apply_pair(state, u_half, 1, 4)  # mismatch splitter -> (u1, u2)
        # axes (d1, u1, o, d2, u2); the click POVM acts on (d2, u2)
        amp2 = np.abs(state) ** 2
        p_total += wphi * float(np.einsum("daoeb,eb,da->", amp2, click_pair, so))
        sigma += wphi * np.einsum("daoeb,dafeb,eb,da->of", state, state.conj(),
                                  click_pair, so)
    return p_total, sigma


def addition_oracle(psi_in: np.ndarray, chi: float, mu: float, detector: str,
                    size: int):
    """Herald probability and output for the bare addition circuit (no parasite)."""
    u = tms2(chi, size)
    occ = np.arange(size, dtype=float)
    if detector == "apd":
        w = 1.0 - (1.0 - mu) ** occ
    else:
        w = (occ == 1.0).astype(float)
    vac = np.zeros(size)
    vac[0] = 1.0
    state = (u @ np.kron(psi_in, vac)).reshape(size, size)
    p = float(np.einsum("lj,j->", np.abs(state) ** 2, w))
    sigma = np.einsum("lj,kj,j->lk", state, state.conj(), w)
    return p, sigma


def scissors_probability(alpha: float, reflectivity: float) -> float:
    """Closed-form herald probability of the ideal truncating amplifier."""
    r2 = reflectivity
    t2 = 1.0 - reflectivity
    return math.exp(-alpha * alpha) * 0.5 * (r2 + t2 * alpha * alpha)


# frozen small values with their derivations:
# attenuation process tensor, one lost photon from |1><1|: E^{1,1}_{0,0} = 1 - eta
ATTENUATION_DROP_04 = 0.6
# on/off detector with efficiency 0.11 on |2>: 1 - (1 - 0.11)^2
APD_TWO_PHOTON_011 = 0.2079
# vacuum against a mean-0.5 thermal state: F = <0|rho|0> = 1/(1 + 0.5)
VACUUM_THERMAL_HALF_FIDELITY = 2.0 / 3.0
# two-mode squeezer at g = 1.2 on vacuum: idler marginal is thermal, <n> = g - 1
PDC_G12_HERALD_MEAN = 0.2
