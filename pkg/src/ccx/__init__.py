"""Concentration-compactness toolkit for Orlicz norms of planar fields."""

from .bubbles import concentration, gen_moser, moser_profile, translate_profile
from .errors import BadInput, CCXError, NumericalFailure
from .extract import ExtractionConfig, decompose
from .field import Field, QuadratureSpec, SumField
from .orlicz import dirichlet_energy, l2_norm, orlicz_norm
from .profile import Profile, Triplet
from .rearrange import schwarz_rearrange

__version__ = "0.1.0"

__all__ = ["concentration", "gen_moser", "moser_profile", "translate_profile", "BadInput", "CCXError",
           "NumericalFailure", "ExtractionConfig", "decompose", "Field", "QuadratureSpec", "SumField",
           "dirichlet_energy", "l2_norm", "orlicz_norm", "Profile", "Triplet", "schwarz_rearrange"]
