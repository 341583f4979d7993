from .base import (
    FullyAdapted,
    ModelDomainError,
    StateSpaceModel,
    step_hessian,
    step_score,
)
from .lgss import (
    LgssParams,
    LinearGaussianModel,
    load_observations,
    make_lgss,
    save_observations,
    simulate_lgss,
)
from .poisson import (
    PoissonCountModel,
    load_earthquake_data,
    make_poisson_model,
    simulate_counts,
)

__all__ = [
    "FullyAdapted",
    "LgssParams",
    "LinearGaussianModel",
    "ModelDomainError",
    "PoissonCountModel",
    "StateSpaceModel",
    "load_earthquake_data",
    "load_observations",
    "make_lgss",
    "make_poisson_model",
    "save_observations",
    "simulate_counts",
    "simulate_lgss",
    "step_hessian",
    "step_score",
]
