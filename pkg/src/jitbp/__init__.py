"""Guillotine bin packing with just-in-time batch scheduling."""

from .abh import AbhParams, construct, run as run_abh
from .cp_search import SolveResult, edd_solution, solve as solve_cph
from .guillotine import (DEFAULT_BUDGET, UNLIMITED, GuillotinePlan, PackBudget, PackResult, PackStatus, Placement,
                         Region, lower_bound, pack, split)
from .instgen import GenSpec, generate, generate_suite
from .model import (BatchSequence, BinSpec, InputError, Instance, Item, Schedule, Solution, TimingParams,
                    ValidationReport, batch_processing_time, evaluate, load_instance, load_solution, make_instance,
                    save_instance, save_solution, validate)
from .timing import TimingProblem, optimal_schedule, schedule_batches

__all__ = [
    "AbhParams", "BatchSequence", "BinSpec", "DEFAULT_BUDGET", "GenSpec", "GuillotinePlan", "InputError",
    "Instance", "Item", "PackBudget", "PackResult", "PackStatus", "Placement", "Region", "Schedule", "Solution",
    "SolveResult", "TimingParams", "TimingProblem", "UNLIMITED", "ValidationReport", "batch_processing_time",
    "construct", "edd_solution", "evaluate", "generate", "generate_suite", "load_instance", "load_solution",
    "lower_bound", "make_instance", "optimal_schedule", "pack", "run_abh", "save_instance", "save_solution",
    "schedule_batches", "solve_cph", "split", "validate",
]
