"""Heralded continuous-variable processes as Fock tensors and Wigner kernels."""

from .fock import (
    DensityOperator,
    FockDim,
    coherent_state,
    fidelity,
    fock_state,
    thermal_state,
)
from .wigner import QuadratureGrid, WignerField, wigner_of
from .tensors import (
    KrausSet,
    ProcessTensor,
    apply_kraus,
    apply_tensor,
    choi,
    combine_heralding,
    compose_serial,
    cp_defect,
    identity_tensor,
    phase_invariance_defect,
    scale_tensor,
    success_probability,
    tensor_from_kraus,
    tni_defect,
)
from .kernels import (
    AffineDelta,
    GaussianKernel,
    GridKernel,
    RadialKernel,
    apply_kernel,
    band_concentration,
    compose_kernels,
    input_marginal,
    kernel_from_kraus,
    kernel_from_tensor,
    kernel_norm,
    negativity,
    output_marginal,
    radial_form,
    sample_kernel,
    scale_kernel,
)
from .elements import (
    DetectorElement,
    Element,
    GaussianChannelSpec,
    apd_click,
    attenuation,
    beam_splitter,
    displacement,
    experimental_single_photon,
    gaussian_channel,
    identity,
    parametric_amplification,
    parametric_down_conversion,
    phase_rotation,
    photon_counter,
    squeezing,
    vacuum_projector,
)
from .models import (
    AdditionConfig,
    AmplifierConfig,
    addition_model,
    amplifier_model,
    ideal_photon_addition,
    ideal_truncated_amplifier,
    model_report,
)

__all__ = [
    "FockDim",
    "DensityOperator",
    "fock_state",
    "coherent_state",
    "thermal_state",
    "fidelity",
    "QuadratureGrid",
    "WignerField",
    "wigner_of",
    "KrausSet",
    "ProcessTensor",
    "tensor_from_kraus",
    "identity_tensor",
    "apply_tensor",
    "apply_kraus",
    "compose_serial",
    "combine_heralding",
    "scale_tensor",
    "success_probability",
    "choi",
    "cp_defect",
    "tni_defect",
    "phase_invariance_defect",
    "AffineDelta",
    "GaussianKernel",
    "GridKernel",
    "RadialKernel",
    "kernel_from_tensor",
    "kernel_from_kraus",
    "sample_kernel",
    "apply_kernel",
    "compose_kernels",
    "input_marginal",
    "output_marginal",
    "kernel_norm",
    "radial_form",
    "negativity",
    "band_concentration",
    "scale_kernel",
    "Element",
    "identity",
    "phase_rotation",
    "displacement",
    "squeezing",
    "beam_splitter",
    "parametric_down_conversion",
    "attenuation",
    "parametric_amplification",
    "GaussianChannelSpec",
    "gaussian_channel",
    "DetectorElement",
    "apd_click",
    "photon_counter",
    "vacuum_projector",
    "experimental_single_photon",
    "AmplifierConfig",
    "AdditionConfig",
    "amplifier_model",
    "addition_model",
    "ideal_truncated_amplifier",
    "ideal_photon_addition",
    "model_report",
]

__version__ = "0.1.0"
