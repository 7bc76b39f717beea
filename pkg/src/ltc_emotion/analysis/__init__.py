from .dynamics import (
    ROLE_NAMES,
    KMeansResult,
    NeuronDynamics,
    RoleTable,
    kmeans,
    memory_dominance,
    neuron_dynamics,
    neuron_roles,
)
from .quality import (
    AttentionProfile,
    CalibrationReport,
    SeparabilityReport,
    attention_long_csv,
    attention_profiles,
    calibration,
    profile_distance,
    separability,
)
from .stats import BootstrapResult, bootstrap_ci, shapiro_coefficients, shapiro_wilk, spearman

__all__ = [
    "AttentionProfile", "BootstrapResult", "CalibrationReport", "KMeansResult", "NeuronDynamics",
    "ROLE_NAMES", "RoleTable", "SeparabilityReport", "attention_long_csv", "attention_profiles",
    "bootstrap_ci", "calibration", "kmeans", "memory_dominance", "neuron_dynamics",
    "neuron_roles", "profile_distance", "separability", "shapiro_coefficients", "shapiro_wilk",
    "spearman",
]
