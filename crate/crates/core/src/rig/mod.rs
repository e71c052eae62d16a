//! Skeletons, forward kinematics, rotation clustering and pin constraints.

mod cluster;
mod pins;
mod skeleton;

pub use cluster::{cluster_rotations, load_user_table, ClusterStrategy, RotationClustering, HIERARCHY_BAND};
pub use pins::{default_pin_radius, pin_targets, select_pins, PinSet, DEFAULT_PIN_RADIUS_FACTOR};
pub use skeleton::{
    forward_kinematics, point_segment_distance, Bone, BoneTransform, FrameSpec, Joint, PoseFrame, RigFile, Skeleton,
    SkeletonPose, QUATERNION_TOLERANCE,
};
