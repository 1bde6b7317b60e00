"""Click-counting statistics for multiplexed on-off photodetectors.

Forward model (state + detector -> exact click statistics), inverse path
(statistics -> normally ordered moments -> nonclassicality witnesses),
a closed-form decay example, and a Monte Carlo sampler with bootstrap
uncertainties.  See the README for the command line front end.
"""

from .series import (
    PowerSeries,
    series_add,
    series_mul,
    series_exp_neg,
    falling_factorial,
    diag_matrix_element,
)
from .states import (
    PhotonNumberDistribution,
    CoherentSuperposition,
    JointPhotonDistribution,
    coherent_distribution,
    thermal_distribution,
    spats_distribution,
    fock_distribution,
    odd_coherent,
    tmsv_joint,
    product_joint,
    mixture_joint,
    nom_expectation,
    mandel_q,
    state_from_descriptor,
)

from .detector import (
    Linear,
    Affine,
    Power,
    PolynomialSeries,
    NPhotonAbsorption,
    DetectorConfig,
    ClickStatistics,
    JointClickStatistics,
    response_series,
    click_statistics,
    joint_click_statistics,
    generating_function,
    multimode_effective_intensity,
    detector_from_descriptor,
)

from .witness import (
    PiMoments,
    JointPiMoments,
    MomentMatrix,
    WitnessReport,
    factorial_moment,
    pi_moments,
    joint_pi_moments,
    moment_matrix,
    joint_moment_matrix,
    leading_principal_minors,
    min_eigenvalue,
    qb_parameter,
    cross_correlation_minor,
    witness_report,
)

from .dynamics import (
    DecayModel,
    b_function,
    decay_minor,
)

from .sampler import (
    RngSeed,
    ClickHistogram,
    sample_clicks,
    estimate_statistics,
    bootstrap_witness,
    write_histogram_csv,
    read_histogram_csv,
)

__version__ = "0.1.0"
