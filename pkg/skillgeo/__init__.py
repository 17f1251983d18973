"""
Skillgeo - Geometry of skill discovery on tabular MDPs

Exact, desk-scale computation of:
- State-distribution polytopes of deterministic policies
- The MISL (minimax-KL) center and its LSEPIN tie-break
- Adaptation-cost bounds (WAC, MAC) and their randomized checks
- Wasserstein objectives: AWD, WSEP, PWSEP discovery, SPWD
- Sample-based kNN and sliced-Wasserstein estimators

Usage:
    from skillgeo import load_mdp, polytope_from_mdp, misl_center

    polytope = polytope_from_mdp(load_mdp("mdp.json"))
    solution = misl_center(polytope)
    print(solution.center.to_list(), solution.radius)

CLI:
    skillgeo misl --mdp mdp.json --verify
    skillgeo repro c6
"""

from .adaptation import (
    BoundReport,
    BoundSuiteResult,
    TaskFamily,
    add_reward_target,
    ic_z,
    lemma_b1_bound,
    mac,
    mac_bounds,
    run_bound_suite,
    task_targets,
    wac,
    wac_bound_corollary,
)
from .cli import main
from .divergences import (
    CostMatrix,
    SkillSet,
    indicator_mi,
    kl,
    klsep,
    lsepin,
    skill_mutual_information,
    wasserstein,
    wsep,
)
from .errors import SkillgeoError
from .estimators import (
    SampleBatch,
    estimate_lsepin,
    knn_indicator_mi,
    particle_entropy,
    sample_skillset,
    sliced_w1,
)
from .export import Exporter, export_report
from .geometry import (
    MislSolution,
    check_necessary_conditions,
    grid_center_oracle,
    lsepin_tiebreak,
    misl_center,
    misl_weights,
)
from .mdp import (
    OccupancyMeasure,
    Policy,
    Polytope,
    TabularMdp,
    enumerate_policy_occupancies,
    extreme_points,
    hull_membership,
    load_mdp,
    occupancy,
    polytope_from_mdp,
)
from .progress import SolverProgress
from .wdsl import (
    PwsepState,
    awd,
    klsep_pathology_demo,
    maximize_awd,
    maximize_wsep,
    pwsep_project,
    pwsep_run,
    spwd,
)

__version__ = "0.1.0"
__all__ = [
    # MDPs and polytopes
    "TabularMdp",
    "Policy",
    "OccupancyMeasure",
    "Polytope",
    "load_mdp",
    "occupancy",
    "enumerate_policy_occupancies",
    "extreme_points",
    "hull_membership",
    "polytope_from_mdp",
    # Divergences
    "SkillSet",
    "CostMatrix",
    "kl",
    "skill_mutual_information",
    "indicator_mi",
    "lsepin",
    "wasserstein",
    "wsep",
    "klsep",
    # MISL geometry
    "MislSolution",
    "misl_center",
    "misl_weights",
    "lsepin_tiebreak",
    "check_necessary_conditions",
    "grid_center_oracle",
    # Adaptation
    "TaskFamily",
    "BoundReport",
    "BoundSuiteResult",
    "task_targets",
    "add_reward_target",
    "wac",
    "mac",
    "ic_z",
    "wac_bound_corollary",
    "mac_bounds",
    "lemma_b1_bound",
    "run_bound_suite",
    # Wasserstein skill learning
    "PwsepState",
    "awd",
    "maximize_awd",
    "maximize_wsep",
    "pwsep_project",
    "pwsep_run",
    "spwd",
    "klsep_pathology_demo",
    # Estimators
    "SampleBatch",
    "particle_entropy",
    "knn_indicator_mi",
    "estimate_lsepin",
    "sliced_w1",
    "sample_skillset",
    # Export
    "Exporter",
    "export_report",
    # Classes
    "SolverProgress",
    "SkillgeoError",
    # CLI
    "main",
    # Version
    "__version__",
]
