from .normalize import (
    EqualitySystem,
    LinearEquality,
    SemilinearBound,
    bound_from_counts,
    expand_congruence,
    normalize_to_equalities,
    small_model_bound,
)

__all__ = [
    "EqualitySystem",
    "LinearEquality",
    "SemilinearBound",
    "bound_from_counts",
    "expand_congruence",
    "normalize_to_equalities",
    "small_model_bound",
]
