"""Statics of tendon-driven continuum robots with tapered backbones.

Core pieces: cross-section geometry with spatially varying stiffness
(geometry), the rod equilibrium equations with tendon actuation (model),
a shooting solver for the tip boundary conditions (solver), inverse
taper-angle design (design), and a calibration pipeline against capture
data (calibration). The CLI (taperod.cli) and HTTP service
(taperod.server) are thin fronts over the same entry points.
"""

__version__ = "0.1.0"

from .errors import (DegenerateGeometry, EmptyDataset, IoFailure,
                     NoConvergence, NonUnimodal, NotConverged,
                     NotSkewSymmetric, OffsetInsideBackbone, OutOfDomain,
                     SingularStiffness, SingularSystem, TaperodError,
                     ZeroTangent)
from .geometry import (DiscLayout, RobotSpec, SectionProperties, TendonPath,
                       disc_layout, export_manifest, import_manifest,
                       load_spec, radius_at, reference_spec, save_spec,
                       section_at, spec_from_taper, stiffness_at,
                       stiffness_diagonals, taper_angle, tendon_paths)
from .model import (ExternalLoads, RodState, gravity_loads, internal_loads,
                    rhs_actuated, rhs_unactuated, tendon_tip_loads,
                    validate_tensions)
from .solver import (RodSolution, SolverConfig, integrate, read_solution_csv,
                     shoot, solve_tension_sweep, write_solution_csv)
from .design import (CurvatureProfile, DesignProblem, DesignResult,
                     curvature_of, design_cost, optimize_taper,
                     planted_profile, planted_recovery_grid,
                     taper_tension_sweep)
from .calibration import (FX29_BENCH_TABLE, BiasField, CalibrationDataset,
                          FitReport, LoadCellTable, RigidTransform,
                          estimate_bias, evaluate_test, linesearch_youngs,
                          load_cell_table, read_dataset_csv, register_rigid,
                          resample_uniform, run_calibration,
                          split_train_test, synthesize_dataset,
                          tension_from_adc, write_dataset_csv)

__all__ = [name for name in dir() if not name.startswith("_")]
