"""2D interference detection with oriented bounding box trees over closed
B-spline contours with roughness tolerances."""

from .contour import (
    ClosedContour,
    SegmentId,
    evaluate_contour,
    evaluate_segment,
    load_contour,
    sample_segment_arclength,
    sample_segment_uniform,
    save_contour,
    segment_arc_length,
    segment_tolerance,
    synthesize_rough_polyline,
)
from .multires import ContourPyramid, build_pyramid, children_of, coarsen_once, leaf_descendants
from .obbfit import (
    Covariance2,
    OrientedBox,
    PyramidLevelError,
    covariance_of_points,
    fit_elementary_box,
    fit_superbox,
    principal_axes,
    superbox_axes_elementary,
    superbox_axes_multires,
)
from .boxtree import (
    BoxTree,
    FitMethod,
    RigidPose,
    build_tree,
    total_box_area,
    transform_box,
    tree_to_dict,
    world_box,
)
from .detect import (
    Contact,
    InterferenceReport,
    Status,
    boxes_overlap,
    detect_scene,
    narrow_phase,
    polyline_min_distance,
    traverse,
)
from .harness import (
    ExperimentRecord,
    OracleCheckResult,
    Scene,
    SceneObject,
    animate,
    generate_fixture,
    load_scene,
    reference_scene,
    run_experiment,
    run_oracle_check,
)

__version__ = "0.1.0"
