"""Near-field radio map reconstruction from sparse RSS samples.

The pipeline simulates a ULA's spherical-wavefront RSS over an angle-radius
grid (:mod:`.channel`), samples each angular slice (:mod:`.sampling`), builds
a per-slice RBF prior (:mod:`.rbf`), picks a fusion tolerance from robust
leave-one-out errors (:mod:`.robust`) and refines the prior by box-constrained
nuclear-norm minimisation (:mod:`.lowrank`).
"""
from .channel import (
    ArrayGeometry,
    Beamformer,
    GridSpec,
    RadioMap,
    array_factor,
    default_scene,
    element_distance,
    element_offsets,
    generate_map,
    rss_db,
    sensitivity_bounds,
)
from .exceptions import DegenerateSliceError, IllConditionedError, InvalidArgumentError
from .lowrank import CompletionResult, SolverConfig, nuclear_norm, solve_box_nnm, solve_observed_nnm, sv_threshold
from .lpr import LprConfig, lpr_map, lpr_mc, lpr_predict
from .metrics import nmse, singular_energy
from .rbf import RbfSliceModel, SliceMeasurements, evaluate, fit_slice, interpolate_map, loocv_residuals
from .robust import HuberConfig, huber_estimate, huber_loss, mad, select_delta
from .sampling import MuLawParams, SampleMask, build_mask, draw_nonuniform_radii, fill_distance, mu_law_forward, mu_law_inverse

__version__ = "0.1.0"
