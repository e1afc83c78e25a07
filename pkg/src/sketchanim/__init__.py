"""sketchanim: vector sketch animation as control-point trajectory optimization.

A sketch is a set of cubic Bezier strokes; an animation is the trajectory
of their control points.  The optimizer fits a small two-branch motion
model (per-frame global affine + per-point local offsets) against a
pluggable guidance oracle, regularized by a length-area term for temporal
consistency and a differentiable as-rigid-as-possible energy for shape
preservation.
"""

from .delaunay import TriangleMesh, delaunay_triangulate
from .errors import (
    AllCollinear,
    ConfigError,
    EmptyMesh,
    EmptySketch,
    MalformedSvg,
    NonFiniteLoss,
    ShapeMismatch,
    SketchAnimError,
    TooFewPoints,
    UnsupportedCommand,
)
from .geometry import (
    CubicBezier,
    GlobalTransform,
    Point2,
    QuadratureSpec,
    bezier_velocity,
    curve_length,
    eval_bezier,
    swept_area,
)
from .losses import (
    ArapConfig,
    LaConfig,
    LossBreakdown,
    arap_energy_per_frame,
    arap_loss,
    la_loss,
    total_loss,
)
from .metrics import MetricsReport, compute_metrics
from .motion import (
    EncodingSpec,
    MotionParams,
    backward,
    forward,
    load_checkpoint,
    positional_encode,
    refine,
    save_checkpoint,
)
from .optim import AdamState, TrainConfig, TrainReport, adam_step, export_history_csv, train
from .oracles import (
    GuidanceOracle,
    make_rigid_motion_oracle,
    make_static_oracle,
    make_target_oracle,
)
from .sketch import SketchFrame, SketchVideo, compose_video, frame_centroid
from .svg_io import frame_to_svg, load_video_dir, parse_svg, write_frame

__version__ = "0.1.0"
