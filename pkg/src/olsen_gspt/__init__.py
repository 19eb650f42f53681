"""Multiscale (geometric singular perturbation) analysis of the Olsen
peroxidase-oxidase oscillator: scaled model, stiff integration, critical
manifolds, blow-up of the fold set, transcritical passage, large loops,
candidate orbits and the global return map.
"""
from .errors import *  # noqa: F401,F403
from .model import *  # noqa: F401,F403
from .integrate import IntegratorConfig, SectionSpec, Trajectory, integrate, integrate_to_section  # noqa: F401
from .candidates import Case, CandidateOrbit, solve_candidate, mu_window_scan  # noqa: F401
from .returnmap import ReturnMapResult, SectionFrame, find_periodic_orbit, poincare_return  # noqa: F401

__version__ = "0.1.0"
