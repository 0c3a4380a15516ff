"""End-to-end builders of the two heralded experiments.

Both models decompose the heralding event into a correct branch (the click
is caused by light in the intended herald mode) and a faulty branch (the
click comes from mismatched or parasitic light). The two branches are
complementary pieces of one exact POVM identity,

    I - NC (x) NC = Pi_click (x) NC  +  I (x) Pi_click,

evaluated on the pair (intended mode, spurious mode) seen by the same
detector, so the total herald probability is additive by construction and
equals the probability of the full circuit.

Amplifier circuit, exact amplitude-level assembly: the resource photon and
vacuum pass an asymmetric beam splitter (reflectivity R toward the herald
arm, gain g = sqrt((1-R)/R)); the input loses (1 - eta_m) of its light to a
mismatched mode before interfering with the herald arm on a symmetric beam
splitter; the mismatched light reaches the same pair of detectors through
its own symmetric split. The herald detector sits on the second S-BS
output, which fixes the sign so a coherent input alpha yields an output
proportional to |0> + g alpha |1>. All amplitude tables are built on the
interior space n_max + 2 (the resource adds at most two photons), where the
per-block beam-splitter construction is exact, so no interior truncation
error enters the stored tensor.

Addition circuit: a two-mode squeezer at gain g = cosh^2(chi) with vacuum
idler, heralded by a click on the idler detector. The faulty branch models
parasitic down-conversion at gain h = cosh^2(gamma chi) whose idler hits
the same detector while its signal stays in unobserved modes: the spurious
clicks leave the state unchanged (identity on the signal), with the exact
geometrically-resummed click weight.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fock import FockDim, DensityOperator, creation, fidelity, normalize
from .tensors import (
    KrausSet,
    ProcessTensor,
    tensor_from_kraus,
    identity_tensor,
    apply_tensor,
    success_probability,
    combine_heralding,
    scale_tensor,
    is_cp,
    is_trace_nonincreasing,
)
from .elements import beam_splitter_matrix, experimental_single_photon

__all__ = [
    "AmplifierConfig",
    "AdditionConfig",
    "ideal_truncated_amplifier",
    "ideal_photon_addition",
    "amplifier_branches",
    "amplifier_model",
    "addition_branches",
    "addition_model",
    "model_report",
]

_DETECTORS = ("apd", "photon_counter")
_SECOND_OUTPUT = ("vacuum", "no_click", "trace")


@dataclass(frozen=True)
class AmplifierConfig:
    """Heralded noiseless-amplifier parameters.

    Exactly one of reflectivity R (toward the herald arm) and gain g is
    given; the other follows from g = sqrt((1-R)/R). second_output chooses
    the condition on the unmonitored S-BS port and defaults to the vacuum
    projector for the photon_counter detector and to APD no-click for the
    apd detector.
    """

    dim: FockDim = FockDim(15)
    reflectivity: float = None
    gain: float = None
    mu: float = 1.0
    delta: float = 2.0
    eta_m: float = 1.0
    detector: str = "photon_counter"
    second_output: str = None
    include_faulty: bool = True

    def __post_init__(self):
        if (self.reflectivity is None) == (self.gain is None):
            raise ValueError("give exactly one of reflectivity and gain")
        if self.reflectivity is None:
            if self.gain < 1.0:
                raise ValueError("gain must satisfy g >= 1")
            object.__setattr__(self, "reflectivity", 1.0 / (1.0 + self.gain ** 2))
        else:
            if not 0.0 < self.reflectivity < 1.0:
                raise ValueError("reflectivity must satisfy 0 < R < 1")
            object.__setattr__(
                self, "gain",
                math.sqrt((1.0 - self.reflectivity) / self.reflectivity))
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("detector efficiency must satisfy 0 < mu <= 1")
        if not 0.0 <= self.delta <= 2.0:
            raise ValueError("purity parameter must satisfy 0 <= delta <= 2")
        if not 0.0 < self.eta_m <= 1.0:
            raise ValueError("mode matching must satisfy 0 < eta_m <= 1")
        if self.detector not in _DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.second_output is None:
            cond = "vacuum" if self.detector == "photon_counter" else "no_click"
            object.__setattr__(self, "second_output", cond)
        if self.second_output not in _SECOND_OUTPUT:
            raise ValueError(f"unknown second-output condition {self.second_output!r}")
        if self.dim.n_max < 2:
            raise ValueError("need n_max >= 2 for the two-photon resource term")


@dataclass(frozen=True)
class AdditionConfig:
    """Heralded photon-addition parameters; g = cosh^2(chi), h = cosh^2(gamma chi)."""

    dim: FockDim = FockDim(15)
    chi: float = 0.105
    gamma: float = 0.0
    mu: float = 1.0
    detector: str = "photon_counter"
    include_faulty: bool = True

    def __post_init__(self):
        if self.chi < 0.0:
            raise ValueError("interaction strength chi must be >= 0")
        if self.gamma < 0.0:
            raise ValueError("parasite ratio gamma must be >= 0")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("detector efficiency must satisfy 0 < mu <= 1")
        if self.detector not in _DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")


def ideal_truncated_amplifier(g: float, dim: FockDim) -> ProcessTensor:
    """Reference map g^n truncated to the span of |0> and |1>."""
    if g < 1.0:
        raise ValueError("gain must satisfy g >= 1")
    k = np.zeros((dim.size, dim.size))
    k[0, 0] = 1.0
    if dim.size > 1:
        k[1, 1] = g
    return tensor_from_kraus(KrausSet(dim, [k]))


def ideal_photon_addition(dim: FockDim) -> ProcessTensor:
    """Bare creation operator as a single Kraus; trace-increasing reference."""
    return tensor_from_kraus(KrausSet(dim, [creation(dim)]))


def _click_weights(detector: str, mu: float, count: int):
    """Per-branch diagonal weights (w_intended, w_spurious) for one detector.

    Branch 1 attributes the click to the intended mode (spurious quiet),
    branch 2 to the spurious mode (intended unconditioned); the two sum to
    the exact click POVM of the combined pair.
    """
    occ = np.arange(count, dtype=float)
    if detector == "apd":
        pc = 1.0 - (1.0 - mu) ** occ
        nc = (1.0 - mu) ** occ
        return (pc, nc), (np.ones(count), pc)
    one = (occ == 1.0).astype(float)
    vac = (occ == 0.0).astype(float)
    return (one, vac), (vac, one)


def _second_output_weights(kind: str, mu: float, count: int):
    occ = np.arange(count, dtype=float)
    if kind == "vacuum":
        w = (occ == 0.0).astype(float)
        return w, w.copy()
    if kind == "no_click":
        w = (1.0 - mu) ** occ
        return w, w.copy()
    return np.ones(count), np.ones(count)


def amplifier_branches(cfg: AmplifierConfig):
    """Correct and faulty amplifier tensors before combination."""
    dim = cfg.dim
    d = dim.size
    f = dim.n_max + 3  # interior size; the resource adds at most 2 photons

    # S-BS amplitude table <d1, d2| U |s, b>, exact for totals <= n_max + 2
    us = beam_splitter_matrix(math.sqrt(0.5), FockDim(f - 1))
    us4 = us.reshape(f, f, f, f)

    # resource after the asymmetric splitter: chi_phi[o, b], o = output arm
    t_a = math.sqrt(1.0 - cfg.reflectivity)
    ua = beam_splitter_matrix(t_a, FockDim(2))
    res = np.zeros((3, 3, f))
    for phi in range(3):
        res[phi] = ua[:, phi * 3].reshape(3, 3) @ np.eye(3, f)
    weights = np.real(np.diag(experimental_single_photon(cfg.delta, FockDim(2)).matrix))

    # mode-matching split of the input, s + u = n
    t_m, r_m = math.sqrt(cfg.eta_m), math.sqrt(1.0 - cfg.eta_m)
    um = np.zeros((f, f, d))
    for n in range(d):
        for s in range(n + 1):
            um[s, n - s, n] = math.sqrt(math.comb(n, s)) * t_m ** s * (-r_m) ** (n - s)

    # symmetric split of the mismatched light toward the two detectors
    vh = us4[:, :, :, 0]  # <v1, v2| U |u, 0>

    (w1_d, w1_u), (w2_d, w2_u) = _click_weights(cfg.detector, cfg.mu, f)
    wso_d, wso_u = _second_output_weights(cfg.second_output, cfg.mu, f)

    # the click detector sits on the second S-BS port (port 1 carries the
    # vacuum / no-click condition); this is the wiring that makes a coherent
    # input come out as |0> + g alpha |1> with a plus sign
    tensors = []
    for wd1, wu1 in ((w1_d, w1_u), (w2_d, w2_u)):
        e3 = np.zeros((3, 3, d, d))
        vw = vh * (wso_u[:, None, None] * wu1[None, :, None])
        q = np.einsum("vwu,vwt->ut", vw, vh)
        t_in = np.einsum("sun,ut,rtm->srnm", um, q, um, optimize=True)
        for phi in range(3):
            if weights[phi] == 0.0:
                continue
            g_tab = np.einsum("ob,desb->odes", res[phi], us4)
            gw = g_tab * (wso_d[None, :, None, None] * wd1[None, None, :, None])
            h_tab = np.einsum("ades,bdet->abst", gw, g_tab, optimize=True)
            e3 += weights[phi] * np.einsum("abst,stnm->abnm", h_tab, t_in,
                                           optimize=True)
        full = np.zeros((d, d, d, d))
        full[:3, :3] = e3
        full = (full + full.transpose(1, 0, 3, 2)) / 2.0
        tensors.append(ProcessTensor(dim, full.astype(complex)))
    return tensors[0], tensors[1]


def _gate_physical(t: ProcessTensor, label: str) -> ProcessTensor:
    if not is_cp(t):
        raise ArithmeticError(f"{label} failed the complete-positivity gate")
    if not is_trace_nonincreasing(t):
        raise ArithmeticError(f"{label} is trace-increasing")
    return t


def amplifier_model(cfg: AmplifierConfig) -> ProcessTensor:
    correct, faulty = amplifier_branches(cfg)
    total = combine_heralding(correct, faulty) if cfg.include_faulty else correct
    return _gate_physical(total, "amplifier model")


def _pair_table(chi: float, dim: FockDim) -> np.ndarray:
    """<n+j, j| U_tms |n, 0> closed form; axis order [signal, idler, input]."""
    d = dim.size
    lam, sech = math.tanh(chi), 1.0 / math.cosh(chi)
    v = np.zeros((d, d, d))
    for n in range(d):
        for j in range(d - n):
            v[n + j, j, n] = lam ** j * math.sqrt(math.comb(n + j, j)) * sech ** (n + 1)
    return v


def addition_branches(cfg: AdditionConfig):
    """Correct and faulty photon-addition tensors before combination."""
    dim = cfg.dim
    d = dim.size
    v = _pair_table(cfg.chi, dim)
    h = math.cosh(cfg.gamma * cfg.chi) ** 2
    occ = np.arange(d, dtype=float)
    if cfg.detector == "apd":
        wc = 1.0 - (1.0 - cfg.mu) ** occ
        # parasite thermal weights q_i = (1/h)((h-1)/h)^i resummed exactly
        kappa_nc = 1.0 / (cfg.mu * h + 1.0 - cfg.mu)
        correct = kappa_nc * np.einsum("ljn,j,kjm->lknm", v, wc, v)
        weight_faulty = 1.0 - kappa_nc
    else:
        q0 = 1.0 / h
        q1 = (h - 1.0) / h ** 2
        correct = q0 * np.einsum("ln,km->lknm", v[:, 1, :], v[:, 1, :])
        weight_faulty = q1
    correct_t = ProcessTensor(dim, correct.astype(complex))
    faulty_t = scale_tensor(identity_tensor(dim), weight_faulty)
    return correct_t, faulty_t


def addition_model(cfg: AdditionConfig) -> ProcessTensor:
    correct, faulty = addition_branches(cfg)
    total = combine_heralding(correct, faulty) if cfg.include_faulty else correct
    return _gate_physical(total, "addition model")


def model_report(t: ProcessTensor, inputs) -> dict:
    """Tabulate success probabilities, output fidelities and tensor diagonals."""
    d = t.dim.size
    diag = [[float(np.real(t.elements[k, k, m, m])) for k in range(d)]
            for m in range(d)]
    rows = []
    for rho in inputs:
        p = success_probability(t, rho)
        out = apply_tensor(t, rho)
        if p > 0.0:
            out_n = normalize(out)
            fid = fidelity(out_n, rho)
            out_diag = [float(np.real(x)) for x in out_n.diagonal()]
        else:
            fid = 0.0
            out_diag = [0.0] * d
        rows.append({
            "probability": float(p),
            "fidelity_to_input": float(fid),
            "output_diagonal": out_diag,
        })
    return {
        "n_max": t.dim.n_max,
        "input_modes": t.input_modes,
        "output_modes": t.output_modes,
        "diagonal": diag,
        "rows": rows,
    }
