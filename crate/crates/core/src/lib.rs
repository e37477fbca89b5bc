#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bundle;
pub mod classify;
pub mod error;
pub mod features;
pub mod linalg;
pub mod manifold;
pub mod registration;
pub mod spd;
pub mod sphere;
pub mod stats;
pub mod tsrvf;
pub mod warp;

pub use bundle::{
    bundle_distance_dc, bundle_exp, bundle_shoot, fast_distance_dc, BundlePath, BundleTangent,
    ShootOptions,
};
pub use classify::{classify_nn, train_weights, ClassificationReport, QuadrantWeights};
pub use error::{Error, Result};
pub use features::{
    covariance_descriptor, hog_features, intensity_features, quadrant_descriptors,
    video_to_trajectory, FeatureConfig, FeatureKind, FeatureMap, GrayImage, HogParams,
    VideoDescriptor,
};
pub use manifold::{Manifold, TangentVector};
pub use registration::{
    dp_optimal_warp, fast_register, naive_warped_distance, pairwise_register, quotient_distance_dq,
    register_symmetric, register_tsrvf, BaselineMode, RegisterOptions, RegistrationResult,
};
pub use spd::{SpdManifold, SpdPoint, SpdTangent};
pub use sphere::{Sphere, SpherePoint, SphereTangent};
pub use stats::{
    cross_sectional_variance, groupwise_align, karcher_mean, pointwise_mean, MeanOptions,
    MeanResult,
};
pub use tsrvf::{reconstruct, tsrvf_of, warp_trajectory, warp_tsrvf, Trajectory, TsrvfRepr};
pub use warp::WarpFn;
