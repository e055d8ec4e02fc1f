//! Model construction from a run configuration, and the λ-point evaluation
//! helper honoring the `DTN_KREIN_THREADS` cap.

use std::fs::File;

use dtn_krein::assembly::{assemble, CoefficientField, GridSpec, InnerBox};
use dtn_krein::numerics::Complex64;
use dtn_krein::{presets, PartitionedHermitian};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{LayoutKind, ModelKind, RunConfig};

pub enum CliError {
    /// Configuration problem: exit status 2, nothing written.
    Config(String),
    /// Evaluation failed outright (not a tolerance miss): exit status 1.
    Eval(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Eval(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Eval(m) => m,
        }
    }
}

pub struct BuiltModel {
    pub model: PartitionedHermitian,
    pub summary: serde_json::Value,
    pub coupled: bool,
    /// Grid assembled from the plain Laplacian preset; some ordering
    /// assertions only hold for it.
    pub laplacian_grid: bool,
}

pub fn build_model(config: &RunConfig) -> Result<BuiltModel, CliError> {
    let seed = config.seed.unwrap_or(0);
    let threshold = config.tol.singular;
    let (model, summary, coupled, laplacian_grid) = match config.kind {
        ModelKind::Toy => (presets::toy_two_node(), json!({"kind": "toy"}), false, false),
        ModelKind::Path3Bounded => (presets::path_three_bounded(), json!({"kind": "path3-bounded"}), false, false),
        ModelKind::Path3Coupled => (presets::path_three_coupled(), json!({"kind": "path3"}), true, false),
        ModelKind::ZeroCoupling => (presets::zero_coupling_model(), json!({"kind": "zero-coupling"}), false, false),
        ModelKind::DecoupledInterior => {
            (presets::decoupled_interior_model(), json!({"kind": "decoupled-interior"}), false, false)
        }
        ModelKind::RankDeficient => {
            (presets::rank_deficient_boundary_model(seed), json!({"kind": "rank-deficient", "seed": seed}), false, false)
        }
        ModelKind::Random => (
            presets::random_model(seed, config.random_interior, config.random_boundary),
            json!({
                "kind": "random",
                "seed": seed,
                "interior": config.random_interior,
                "boundary": config.random_boundary,
            }),
            false,
            false,
        ),
        ModelKind::RandomCoupled => (
            presets::random_coupled_model(seed, config.random_interior, config.random_boundary, config.random_exterior),
            json!({
                "kind": "random-coupled",
                "seed": seed,
                "interior": config.random_interior,
                "boundary": config.random_boundary,
                "exterior": config.random_exterior,
            }),
            true,
            false,
        ),
        ModelKind::Grid => {
            let h = config.grid_h();
            let spec = match config.layout {
                LayoutKind::Bounded => GridSpec::bounded(config.nx, config.ny, h),
                LayoutKind::Coupled => {
                    let (i0, j0, i1, j1) = config.inner_box();
                    GridSpec::coupled(config.nx, config.ny, h, InnerBox { i0, j0, i1, j1 })
                }
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            let coeffs = if config.preset == "csv" {
                let path = config.coeffs_csv.as_ref().expect("validated");
                let file = File::open(path)
                    .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
                CoefficientField::from_csv(config.nx, config.ny, file)
                    .map_err(|e| CliError::Config(e.to_string()))?
            } else {
                CoefficientField::preset(&config.preset, config.nx, config.ny, h)
                    .map_err(|e| CliError::Config(e.to_string()))?
            };
            let model = assemble(&spec, &coeffs).map_err(|e| CliError::Config(e.to_string()))?;
            let coupled = config.layout == LayoutKind::Coupled;
            let summary = json!({
                "kind": "grid",
                "layout": if coupled { "coupled" } else { "bounded" },
                "nx": config.nx,
                "ny": config.ny,
                "h": h,
                "preset": config.preset,
            });
            (model, summary, coupled, config.preset == "laplacian")
        }
    };
    Ok(BuiltModel {
        model: model.with_singular_threshold(threshold),
        summary,
        coupled,
        laplacian_grid,
    })
}

fn thread_cap() -> Option<usize> {
    std::env::var("DTN_KREIN_THREADS").ok().and_then(|raw| raw.parse::<usize>().ok())
}

/// Evaluate one closure per λ point, in input order, optionally in
/// parallel. `DTN_KREIN_THREADS=0` (or 1) forces serial evaluation.
pub fn evaluate_points<T: Send>(
    points: &[Complex64],
    f: impl Fn(Complex64) -> T + Sync,
) -> Vec<T> {
    match thread_cap() {
        Some(0) | Some(1) => points.iter().map(|&lambda| f(lambda)).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(|| points.par_iter().map(|&lambda| f(lambda)).collect()),
        None => points.par_iter().map(|&lambda| f(lambda)).collect(),
    }
}
