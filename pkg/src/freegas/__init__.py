"""Fermion (determinantal) and boson (permanental) point processes of free gases."""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    ConsistencyError,
    ConstraintError,
    DiscretizationError,
    DivergenceError,
    FreeGasError,
    ParameterError,
    SamplerStateError,
    SizeError,
)
from .kernels import (
    Kernel,
    MomentumDensity,
    bose_gas,
    bose_kernel,
    build_kernel,
    density_from_config,
    fermi_dirac,
    fermi_dirac_density,
    kernel_from_density,
    tabulated,
    validate_density,
    zero_temp_kernel_1d,
    zero_temp_kernel_3d,
    zero_temperature,
)
from .algebra import (
    BosonFockSpace,
    FermionFockSpace,
    FieldAlgebra,
    KMatrix,
    boson_fields,
    car_operators,
    ccr_operators,
    commutativity_check,
    factorial_moment,
    fermion_fields,
    n_point_check,
    normal_product,
    random_kmatrix,
    verify_algebra,
    wick_identity_check,
)
from .correlations import (
    CorrelationValue,
    correlation,
    det_correlation,
    hadamard_bound,
    kernel_matrix,
    per_correlation,
    permanent,
    raw_moments,
)
from .samplers import (
    Configuration,
    GridDiscretization,
    Window,
    count_statistics,
    discretize_kernel,
    estimate_intensity,
    estimate_pair_correlation,
    replica_rng,
    run_replicas,
    sample_boson,
    sample_fermion,
    BosonFieldSynthesizer,
)
from .functionals import (
    FunctionalValue,
    TestFunction,
    box_indicator,
    characteristic_series,
    empirical_characteristic,
    fredholm_value,
    gaussian_bump,
    tabulated_function,
)
