"""2D skeleton retargeting toolkit.

Parses detector keypoints, converts poses between Cartesian and
tree-relative polar form, retargets body proportions between a person
and an art character via learned per-group factors, completes partially
detected poses, and provides the loss kernels used for stylization
training.  A CLI and a JSON-over-HTTP service expose the same
operations.
"""

__version__ = "0.1.0"

from .deform import GroupFactors, GroupLengths, deform, deform_naive, group_lengths
from .errors import (
    EmptyDataset,
    InvalidFactors,
    IoError,
    MissingJoint,
    MissingNeck,
    ModelMissing,
    ParseError,
    SchemaError,
    ShapeError,
    SkeleformError,
    VersionError,
)
from .mlp import (
    MlpConfig,
    MlpModel,
    TrainConfig,
    grad_check,
    load_model,
    mlp_backward,
    mlp_forward,
    mlp_init,
    optimizer_step,
    save_model,
)
from .pose import (
    DEFAULT_TOPOLOGY,
    JOINT_INDEX,
    JOINT_NAMES,
    NUM_GROUPS,
    NUM_JOINTS,
    ROOT,
    Group,
    KeypointSet,
    PolarPose,
    Topology,
    mirror,
    normalize,
    denormalize,
    to_cartesian,
    to_polar,
    topology_default,
)
from .pose_io import (
    PoseDocument,
    SvgStyle,
    load_dataset,
    parse_canonical,
    parse_openpose,
    parse_pose_file,
    render_svg,
    write_pose,
)
from .synth import synth_dataset, template_lengths, template_pose
from .training import (
    MaskedPose,
    complete_pose,
    default_completion_config,
    default_factor_config,
    encode_factor_input,
    predict_factors,
    train_completion_model,
    train_factor_model,
)
