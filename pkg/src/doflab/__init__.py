"""DoF-region checking, detour planning and signal-space-alignment certification
for 3- and 4-user MIMO relay networks."""

__version__ = "0.1.0"

from .model import CycleForm, CycleKind, DerivedProfile, DoFTuple, NetworkConfig, derive_profile  # noqa: E402
from .bounds import BoundReport, check, enumerate_region, total_dof_cap  # noqa: E402
from .detour import DetourPlan, Scheme, plan  # noqa: E402
from .ssa import DecodabilityCertificate, SSADesign, certify, design_for, generate_channels  # noqa: E402

__all__ = [
    "__version__",
    "NetworkConfig",
    "DoFTuple",
    "CycleKind",
    "CycleForm",
    "DerivedProfile",
    "derive_profile",
    "BoundReport",
    "check",
    "enumerate_region",
    "total_dof_cap",
    "DetourPlan",
    "Scheme",
    "plan",
    "SSADesign",
    "DecodabilityCertificate",
    "generate_channels",
    "design_for",
    "certify",
]
