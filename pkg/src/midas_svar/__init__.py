"""Mixed-frequency structural VARs: estimation, identification, equivalence tests."""

from .errors import MidasSvarError
from .layout import (
    AggregationScheme,
    CoefLayout,
    ExogBlock,
    FrequencyLayout,
    discarded_directions,
    reduced_equivalence_restrictions,
    selection_matrix,
    stacked_dim,
    structural_equivalence_restrictions,
)
from .reduced_form import (
    ReducedFormFit,
    StackedDataset,
    companion_spectral_radius,
    estimate_ols,
    estimate_restricted,
    information_criteria,
)
from .restrictions import LinearRestrictions
from .structural import (
    AbRestrictions,
    AbStructure,
    build_recursive_midas_scheme,
    check_identification,
    cholesky_scheme,
    estimate_ml,
    lr_test,
    named_scheme,
)

__version__ = "0.1.0"
