from .estimate import Estimate, EstimationError, McmcSettings
from .observables import Observables, per_configuration
from .sampler import (estimate_partition_ratio, expectations, iid_observables, mcmc_chain,
                      mcmc_expectations, partition_function, reweighted_expectation,
                      reweighted_expectations)
