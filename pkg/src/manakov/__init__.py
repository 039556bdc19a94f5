"""Manakov soliton trains in sech^2 potentials: a PDE engine, the perturbed
complex Toda chain, Lax-spectrum regime classification and a comparison
harness."""
from .soliton import (Field, Grid, PolarizationVector, SolitonParams, TrainConfig,
                      adiabaticity_report, apply_gauge, build_polarization, sample_train,
                      scalar_products)
from .potential import PotentialSpec, PotentialTerm, eval_potential, kernels, k_integral
from .ctc import CtcState, init_ctc_state, integrate_ctc, pctc_rhs, positions_from_state
from .lax import build_lax, classify_regime, critical_delta_nu, eigenvalues
from .vnlse import SolverOptions, conserved_quantities, run_vnlse, step_cn
from .tracking import TrajectorySet, associate_tracks, find_peaks
from .harness import Scenario, compare_trajectories, load_scenario, preset, run_scenario

__version__ = "0.1.0"
