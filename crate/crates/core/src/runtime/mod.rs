//! Model bundles and finite-difference pushforwards.
//!
//! Taps are graph outputs. Per-channel normalization is part of the graph, so
//! the runtime feeds raw pixels and layer 0 is pixel space. Activations are
//! flattened channel-major.

mod bundle;
mod cache;
mod fixture;
mod manifest;
mod neural;

pub use bundle::{load_bundle, load_bundle_dir, ModelBundle, Precision, GRAPH_FILE, MANIFEST_FILE};
pub use cache::{ActivationCache, CacheEntry, CACHE_ENV};
pub use fixture::{
    build_fixture, make_fixture_bundle, Fixture, FixtureArch, FixtureSpec, FixtureWeights, FIXTURE_SIDE,
};
pub use manifest::{InputSpec, Layout, ModelManifest, Normalization, TapSpec};
pub use neural::{compute_neural_frame, NeuralFrame};
