"""Fractional calculus on grids and distributed-order time-fractional solvers."""

from .calculus import (
    DistributedOrder,
    caputo_derivative,
    distributed_order_apply,
    fractional_integral,
    l1_coefficients,
    starting_weights,
)
from .field import BINARY_MAGIC, FieldOnGrid
from .generators import (
    GeneratorSpec,
    backward_operator_apply,
    discrete_delta,
    forward_operator_apply,
    grid_frequencies,
    periodic_grid,
)
from .solver import (
    MASS_DRIFT_WARN,
    history_weights,
    semigroup_field,
    solve_dode,
    solve_relaxation,
    subordination_solution,
)

__all__ = [
    "DistributedOrder",
    "caputo_derivative",
    "distributed_order_apply",
    "fractional_integral",
    "l1_coefficients",
    "starting_weights",
    "BINARY_MAGIC",
    "FieldOnGrid",
    "GeneratorSpec",
    "backward_operator_apply",
    "discrete_delta",
    "forward_operator_apply",
    "grid_frequencies",
    "periodic_grid",
    "MASS_DRIFT_WARN",
    "history_weights",
    "semigroup_field",
    "solve_dode",
    "solve_relaxation",
    "subordination_solution",
]
