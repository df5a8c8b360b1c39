"""Joint radial undistortion and affine rectification from translated repeats.

Three radially-distorted point correspondences related by one scene-plane
translation determine the division-model parameter and the vanishing line
through a quartic in the distortion parameter.  The package holds the
minimal solver, vanishing-point recovery, a synthetic scene generator,
error metrics, a fixed-budget RANSAC driver and the benchmark studies.
"""

from .errors import (
    DegenerateConfiguration,
    DegenerateLine,
    DegenerateSelection,
    IdenticallyZeroDeterminant,
    NoFeasibleRoot,
    NoModelFound,
    NoRealPreimage,
    NoValidModel,
    RankDeficient,
    RectifyError,
    RetryExhausted,
    SchemaError,
)
from .evl import (
    SELECTIONS,
    MeetSelection,
    RectifyModel,
    build_M,
    det_poly,
    enumerate_selections,
    meet_row,
    solve_all,
    solve_best,
    solve_one,
    solve_random,
)
from .evp import evp_constraint_residuals, evp_matrix_eval
from .geom import ImageFrame, distort_point, rectify_homography, undistort_point
from .metrics import lambda_rel_error, symm_transfer_error, transfer_error, warp_error
from .ransac import RansacConfig, RansacResult, run_fixed
from .scene import GroundTruthScene, SceneConfig, gen_scene, load_scene, save_scene
from .vp import recover_vp

__version__ = "0.1.0"
