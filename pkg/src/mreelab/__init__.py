"""Numerical laboratory for maximin rational expectations equilibria."""

from .config import DEFAULT, Config
from .economy import (
    Economy,
    EconomyError,
    PriceVector,
    make_economy,
    utility_eval,
    validate_economy,
)
from .partition import Partition, join_partitions
from .utility import UtilitySpec
from .correspondences import demand, preferred_membership, sample_preferred_set, truncation_bound
from .setval import CompactSetApprox, aumann_integral, hausdorff_distance, kuratowski_limits
from .aggregate import aggregate_preferred_set, continuity_probe
from .walras import (
    EquilibriumError,
    StateEquilibrium,
    aggregate_excess_certificate,
    excess_demand,
    solve_state_equilibrium,
)
from .maximin import (
    InfoStructure,
    MaximinCertificate,
    PriceSystem,
    build_price_system,
    compute_maximin_ree,
    in_bree,
    maximin_utility,
    sigma_pi_partition,
    verify_maximin_ree,
)
from .specfile import economy_to_dict, parse_economy, serialize

__all__ = [
    "DEFAULT",
    "Config",
    "Economy",
    "EconomyError",
    "PriceVector",
    "make_economy",
    "utility_eval",
    "validate_economy",
    "Partition",
    "join_partitions",
    "UtilitySpec",
    "demand",
    "preferred_membership",
    "sample_preferred_set",
    "truncation_bound",
    "CompactSetApprox",
    "aumann_integral",
    "hausdorff_distance",
    "kuratowski_limits",
    "aggregate_preferred_set",
    "continuity_probe",
    "EquilibriumError",
    "StateEquilibrium",
    "aggregate_excess_certificate",
    "excess_demand",
    "solve_state_equilibrium",
    "InfoStructure",
    "MaximinCertificate",
    "PriceSystem",
    "build_price_system",
    "compute_maximin_ree",
    "in_bree",
    "maximin_utility",
    "sigma_pi_partition",
    "verify_maximin_ree",
    "economy_to_dict",
    "parse_economy",
    "serialize",
]
