"""Simulation and exact computation for kappa-color firefly cellular automata
on one-dimensional lattices: update rules and their edge-particle and
tournament expansions, walk statistics, survival-probability solvers, and a
reproducible experiment harness.
"""

from .lattice import (ColorConfig, Cycle, OneForm, Ranking, Segment,
                      StepReport, blink_color, light_cone_window, max_rank,
                      one_form, path_integral, ranking_from_form, simulate,
                      step_cca, step_fca, step_ghm, tournament_step)
from .particles import (FlipError, Particle, ParticleField, check_consistency,
                        init_particles, step_particles, survival_criterion_k3,
                        trace)
from .solver import (FAMILIES, QTables, build_qtable, disagreement_exact,
                     find_q_minus, matrix_A)
from .walks import (WalkPath, associated_walk, chunk_partition, comparison_walk,
                    covariance_exact, flip_free_env, g_general, g_triple,
                    gamma_squared, sa_constant, survival_mc)

__version__ = "0.1.0"
