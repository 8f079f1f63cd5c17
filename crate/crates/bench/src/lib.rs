//! Shared fixtures for the benchmark targets.

use semigen_core::blockops::{build_as, Closure};
use semigen_core::models::{multiplication_s, wave_ext, LambdaProfile, WaveModel};
use semigen_core::tol::Tolerances;

/// Wave extension plus matching multiplication closure at the given size.
pub fn wave_fixture(n_cells: usize) -> (WaveModel, Closure) {
    let profile: LambdaProfile = "2+sin".parse().expect("static profile");
    let model = wave_ext(n_cells, 0.5, -0.5, 2.0).expect("valid reflection data");
    let closure = multiplication_s(&profile.samples_at_midpoints(n_cells), &Tolerances::default())
        .expect("strictly positive profile");
    (model, closure)
}

/// The closed diffusion generator at the given size.
pub fn heat_generator(n_cells: usize) -> semigen_core::linalg::Matrix {
    let (model, closure) = wave_fixture(n_cells);
    build_as(&model.blocks, &closure).expect("dimensions agree")
}
