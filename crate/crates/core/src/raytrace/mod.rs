//! Deterministic ray tracing: Fibonacci shoot-and-bounce discovery, exact
//! image-method reflection paths, single-edge UTD diffraction and complex
//! polarimetric path gains.

mod amplitude;
mod dump;
mod fibonacci;
mod fresnel;
mod geometry;
mod grid;
mod trace;
mod utd;

pub use amplitude::{diffraction_matrix, reflection_matrix, PolarizationMatrix};
pub use dump::{path_kind, write_paths_csv};
pub use fibonacci::fibonacci_directions;
pub use fresnel::{fresnel_coefficients, transition_function};
pub use geometry::{Edge, Plane, TraceScene};
pub use grid::{discover_on_grid, ReceiverGrid};
pub use trace::{discover_sequences, paths_for_candidates, trace_between, trace_paths, CandidateSet};
pub use utd::{diffraction_coefficients, WedgeGeometry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::MeshError;
use crate::scene::SceneError;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum RtError {
    #[error("ray tracing configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureRadius {
    /// Ray-tube footprint d·sqrt(4pi/n) at unfolded distance d.
    Auto,
    /// Constant radius in meters.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RtConfig {
    pub max_reflections: u32,
    pub enable_diffraction: bool,
    pub enable_scattering: bool,
    pub n_launch_rays: usize,
    pub capture_radius: CaptureRadius,
}

impl Default for RtConfig {
    fn default() -> Self {
        Self {
            max_reflections: 3,
            enable_diffraction: true,
            enable_scattering: false,
            n_launch_rays: 10_000,
            capture_radius: CaptureRadius::Auto,
        }
    }
}

impl RtConfig {
    /// The full-scale setting: 10^6 launch rays.
    pub fn paper() -> Self {
        Self {
            n_launch_rays: 1_000_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RtError> {
        if self.enable_scattering {
            return Err(RtError::Unsupported("diffuse scattering is not implemented; set enable_scattering = false".into()));
        }
        if self.n_launch_rays < 1 {
            return Err(RtError::Config("n_launch_rays must be at least 1".into()));
        }
        if let CaptureRadius::Fixed(r) = self.capture_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(RtError::Config(format!("fixed capture radius must be positive, got {r}")));
            }
        }
        Ok(())
    }

    pub(crate) fn capture_at(&self, unfolded: f64) -> f64 {
        match self.capture_radius {
            CaptureRadius::Auto => unfolded * (4.0 * std::f64::consts::PI / self.n_launch_rays as f64).sqrt(),
            CaptureRadius::Fixed(r) => r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interaction {
    Reflection { triangle: u32, plane: u32 },
    Diffraction { edge: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationPath {
    /// Empty for line of sight.
    pub interactions: Vec<Interaction>,
    /// Source, interaction points, target.
    pub vertices: Vec<[f64; 3]>,
    pub length: f64,
    pub delay_s: f64,
    /// Field transfer from the source's (theta, phi) basis along the departure
    /// direction to the target's basis facing the arrival; rows are the
    /// receive components. Excludes the propagation phase e^{-jkd}.
    pub amplitude: PolarizationMatrix,
    /// (theta, phi) of the departure direction, radians.
    pub departure: (f64, f64),
    /// (theta, phi) of the direction from the target back along the last
    /// segment, radians.
    pub arrival: (f64, f64),
}

impl PropagationPath {
    pub fn is_los(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn reflections(&self) -> usize {
        self.interactions
            .iter()
            .filter(|i| matches!(i, Interaction::Reflection { .. }))
            .count()
    }

    pub fn is_diffracted(&self) -> bool {
        self.interactions
            .iter()
            .any(|i| matches!(i, Interaction::Diffraction { .. }))
    }

    /// Co-polar (theta-theta) gain, the vertical-polarization channel.
    pub fn copolar(&self) -> num_complex::Complex64 {
        self.amplitude[0][0]
    }

    /// Polarization-averaged power gain in dB.
    pub fn gain_db(&self) -> f64 {
        let p: f64 = self.amplitude.iter().flatten().map(|a| a.norm_sqr()).sum();
        10.0 * (0.5 * p).log10()
    }

    /// Sort key: interaction signature, then length.
    pub(crate) fn order(a: &Self, b: &Self) -> std::cmp::Ordering {
        a.interactions
            .cmp(&b.interactions)
            .then(a.length.total_cmp(&b.length))
    }
}
