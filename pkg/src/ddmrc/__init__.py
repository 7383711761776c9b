"""Data-driven model-reference control from noisy and noise-free data."""
from .approx_mrc import SynthesisResult, Verdict, minimize_distance, synthesize_approx
from .config import DEFAULT, NumericConfig
from .exact_mrc import check_exact_informativity, check_exact_informativity_lmi
from .models import ControllerGains, DataSet, LinearSystem, MatchingTolerance, ReferenceModel
from .qmi import NoiseModel, QmiSpec
from .stability import synthesize_with_stability

__version__ = "0.1.0"

__all__ = ["SynthesisResult", "Verdict", "minimize_distance", "synthesize_approx",
           "DEFAULT", "NumericConfig", "check_exact_informativity",
           "check_exact_informativity_lmi", "ControllerGains", "DataSet", "LinearSystem",
           "MatchingTolerance", "ReferenceModel", "NoiseModel", "QmiSpec",
           "synthesize_with_stability"]
