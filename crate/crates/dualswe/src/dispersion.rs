//! Linearization about a rest state and the Z-grid dispersion
//! equivalence.
//!
//! About φ = φ̄, ζ = γ = 0 with constant Coriolis f₀ and flat bottom,
//! both schemes linearize to the unstaggered vorticity-divergence system
//!
//! ```text
//! dφ'/dt = -φ̄ γ
//! dζ/dt  = -f₀ γ
//! dγ/dt  =  f₀ ζ - g Δφ'
//! ```
//!
//! so for every eigenvalue λ of -Δ_h the generator carries the frequency
//! pair ω = ±√(f₀² + g φ̄ λ) plus one zero-frequency geostrophic mode.
//! The scheme-specific vorticity terms beyond this system are compositions
//! that vanish identically (curl∘grad and div∘grad⊥), which is what makes
//! the two schemes share the spectrum; the per-scheme generator assembly
//! evaluates them through the discrete operators instead of dropping them.

use crate::dynamics::Scheme;
use crate::fields::CellField;
use crate::mesh::DualMesh;
use crate::ops;
use crate::{Error, Result};
use nalgebra::{Complex, DMatrix};

/// Rest-state parameters of the linearization.
#[derive(Clone, Copy, Debug)]
pub struct LinearizedSystem {
    pub f0: f64,
    pub phibar: f64,
    pub gravity: f64,
}

/// Action of the linearized generator on (φ', ζ, γ).
pub fn linear_tendency(
    phi_prime: &CellField,
    zeta: &CellField,
    gamma: &CellField,
    sys: &LinearizedSystem,
    mesh: &DualMesh,
) -> Result<(CellField, CellField, CellField)> {
    let lap_phi = ops::laplacian_cell(phi_prime, mesh)?;
    let dphi = gamma.scale(-sys.phibar);
    let dzeta = gamma.scale(-sys.f0);
    let dgamma = zeta.scale(sys.f0).axpy(-sys.gravity, &lap_phi);
    Ok((dphi, dzeta, dgamma))
}

fn require_periodic(mesh: &DualMesh) -> Result<()> {
    if !mesh.is_periodic() {
        return Err(Error::Unsupported(
            "dispersion analysis requires a periodic mesh".into(),
        ));
    }
    Ok(())
}

/// Dense 3N × 3N generator of the linearized system, columns ordered as
/// stacked (φ', ζ, γ).
pub fn assemble_generator(sys: &LinearizedSystem, mesh: &DualMesh) -> Result<DMatrix<f64>> {
    require_periodic(mesh)?;
    let n = mesh.num_cells();
    let mut gen = DMatrix::zeros(3 * n, 3 * n);
    for col in 0..3 * n {
        let mut basis = vec![0.0; 3 * n];
        basis[col] = 1.0;
        let phi = CellField::new(basis[..n].to_vec());
        let zeta = CellField::new(basis[n..2 * n].to_vec());
        let gamma = CellField::new(basis[2 * n..].to_vec());
        let (dphi, dzeta, dgamma) = linear_tendency(&phi, &zeta, &gamma, sys, mesh)?;
        for r in 0..n {
            gen[(r, col)] = dphi.values[r];
            gen[(n + r, col)] = dzeta.values[r];
            gen[(2 * n + r, col)] = dgamma.values[r];
        }
    }
    Ok(gen)
}

/// The scheme-specific linear vorticity terms beyond the shared system:
/// combinations of curl∘grad and div∘grad⊥ scaled by the background PV
/// q̄ = f₀/φ̄. They vanish identically; evaluating them through the
/// discrete operators (on the ζ column fields) keeps the per-scheme
/// generators honest rather than identical by construction.
fn null_vorticity_terms(
    scheme: Scheme,
    proxy: &CellField,
    sys: &LinearizedSystem,
    mesh: &DualMesh,
) -> Result<CellField> {
    let q_bar = sys.f0 / sys.phibar;
    let weight = match scheme {
        Scheme::Energy => 0.5 * q_bar,
        Scheme::EnergyEnstrophy => q_bar / 6.0,
    };
    let circulation = ops::vertex_to_cell(
        &ops::curl_normal(&ops::grad_cell(proxy, mesh)?, mesh)?,
        mesh,
    )?;
    let tilde = ops::cell_to_vertex(proxy, mesh)?;
    let trace = ops::cell_to_edge(proxy, mesh)?;
    let flux = ops::div_normal(&ops::skew_grad_vertex(&tilde, Some(&trace), mesh)?, mesh)?;
    Ok(circulation.sub(&flux).scale(weight))
}

/// Per-scheme generator: the shared linear system plus the identically
/// vanishing scheme terms, evaluated discretely.
pub fn assemble_generator_for_scheme(
    scheme: Scheme,
    sys: &LinearizedSystem,
    mesh: &DualMesh,
) -> Result<DMatrix<f64>> {
    require_periodic(mesh)?;
    let n = mesh.num_cells();
    let mut gen = assemble_generator(sys, mesh)?;
    for col in 0..n {
        let mut basis = vec![0.0; n];
        basis[col] = 1.0;
        let zeta = CellField::new(basis);
        let extra = null_vorticity_terms(scheme, &zeta, sys, mesh)?;
        for r in 0..n {
            gen[(n + r, n + col)] += extra.values[r];
        }
    }
    Ok(gen)
}

/// Eigenvalues of -Δ_h, computed independently of the generator by a
/// symmetric eigendecomposition of the area-similarity transform
/// D^{1/2} (-Δ) D^{-1/2}.
pub fn laplacian_eigenvalues(mesh: &DualMesh) -> Result<Vec<f64>> {
    let n = mesh.num_cells();
    let mut neg_lap = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut basis = vec![0.0; n];
        basis[col] = 1.0;
        let lap = ops::laplacian_cell(&CellField::new(basis), mesh)?;
        for r in 0..n {
            neg_lap[(r, col)] = -lap.values[r];
        }
    }
    let sqrt_area: Vec<f64> = (0..n).map(|i| mesh.cells[i].area.sqrt()).collect();
    let mut sym = neg_lap;
    for r in 0..n {
        for c in 0..n {
            sym[(r, c)] *= sqrt_area[r] / sqrt_area[c];
        }
    }
    // Symmetrize away roundoff before the eigensolve.
    let sym = (&sym + sym.transpose()).scale(0.5);
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

/// One matched inertia-gravity mode pair.
#[derive(Clone, Copy, Debug)]
pub struct DispersionMode {
    pub mode: usize,
    /// Eigenvalue λ of -Δ_h.
    pub laplacian_eigenvalue: f64,
    /// |Im| of the matched generator eigenvalue.
    pub omega_numeric: f64,
    /// √(f₀² + g φ̄ λ).
    pub omega_zgrid: f64,
    /// |ω² - (f₀² + g φ̄ λ)|.
    pub abs_err: f64,
}

/// Full dispersion comparison against the Z-grid relation.
#[derive(Clone, Debug)]
pub struct DispersionAnalysis {
    pub modes: Vec<DispersionMode>,
    /// Eigenvalues classified as zero-frequency (geostrophic) modes.
    pub zero_modes: usize,
    /// Zero modes expected from the Z-grid relation (N, plus the λ = 0
    /// gravity pair when f₀ = 0).
    pub expected_zero_modes: usize,
    /// Largest |Re| over all generator eigenvalues (skew spectrum check).
    pub max_real_part: f64,
    pub max_abs_err: f64,
}

/// Frequencies (imaginary parts of the generator eigenvalues), sorted.
pub fn dispersion_spectrum(sys: &LinearizedSystem, mesh: &DualMesh) -> Result<Vec<f64>> {
    let gen = assemble_generator(sys, mesh)?;
    let eigs = gen.complex_eigenvalues();
    let mut freqs: Vec<f64> = eigs.iter().map(|z| z.im).collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(freqs)
}

/// Matches the generator spectrum of the given matrix against the Z-grid
/// relation built from independently computed Laplacian eigenvalues.
pub fn analyze_generator(
    gen: &DMatrix<f64>,
    sys: &LinearizedSystem,
    mesh: &DualMesh,
) -> Result<DispersionAnalysis> {
    let n = mesh.num_cells();
    let eigs = gen.complex_eigenvalues();
    let lambdas = laplacian_eigenvalues(mesh)?;

    let omega_of = |lambda: f64| {
        (sys.f0 * sys.f0 + sys.gravity * sys.phibar * lambda)
            .max(0.0)
            .sqrt()
    };
    let omega_max = lambdas
        .iter()
        .map(|&l| omega_of(l))
        .fold(sys.f0.abs(), f64::max);
    let zero_tol = 1e-7 * omega_max.max(1e-300);

    let max_real_part = eigs.iter().map(|z| z.re.abs()).fold(0.0, f64::max);

    let mut numeric: Vec<f64> = eigs
        .iter()
        .filter(|z| z.norm() > zero_tol)
        .map(|z: &Complex<f64>| z.im)
        .filter(|&im| im > 0.0)
        .collect();
    numeric.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let zero_modes = eigs.iter().filter(|z| z.norm() <= zero_tol).count();

    let mut expected: Vec<(usize, f64, f64)> = Vec::new();
    let mut expected_zero_modes = n;
    for (k, &lambda) in lambdas.iter().enumerate() {
        let omega = omega_of(lambda);
        if omega <= zero_tol {
            expected_zero_modes += 2;
        } else {
            expected.push((k, lambda, omega));
        }
    }

    if numeric.len() != expected.len() {
        return Err(Error::Unsupported(format!(
            "spectrum mismatch: {} positive frequencies vs {} expected pairs \
             ({} zero modes vs {} expected)",
            numeric.len(),
            expected.len(),
            zero_modes,
            expected_zero_modes
        )));
    }

    let mut modes = Vec::with_capacity(expected.len());
    let mut max_abs_err: f64 = 0.0;
    for (slot, (&omega_numeric, &(mode, lambda, omega_zgrid))) in
        numeric.iter().zip(expected.iter()).enumerate()
    {
        let _ = slot;
        let abs_err = (omega_numeric * omega_numeric
            - (sys.f0 * sys.f0 + sys.gravity * sys.phibar * lambda))
            .abs();
        max_abs_err = max_abs_err.max(abs_err);
        modes.push(DispersionMode {
            mode,
            laplacian_eigenvalue: lambda,
            omega_numeric,
            omega_zgrid,
            abs_err,
        });
    }

    Ok(DispersionAnalysis {
        modes,
        zero_modes,
        expected_zero_modes,
        max_real_part,
        max_abs_err,
    })
}

/// Assembles the generator and runs the Z-grid comparison.
pub fn analyze(sys: &LinearizedSystem, mesh: &DualMesh) -> Result<DispersionAnalysis> {
    let gen = assemble_generator(sys, mesh)?;
    analyze_generator(&gen, sys, mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_periodic_quad_mesh, build_perturbed_lattice_mesh};

    const SYS: LinearizedSystem = LinearizedSystem {
        f0: 1.0,
        phibar: 1.0,
        gravity: 1.0,
    };

    #[test]
    fn generator_is_linear_and_zero_at_zero() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let zero = CellField::zeros(mesh.num_cells());
        let (a, b, c) = linear_tendency(&zero, &zero, &zero, &SYS, &mesh).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
        assert_eq!(c.max_abs(), 0.0);

        // Superposition.
        let mut rng = crate::rng::Lcg64::new(5);
        let x1: Vec<CellField> = (0..3)
            .map(|_| CellField::new(rng.fill(mesh.num_cells())))
            .collect();
        let x2: Vec<CellField> = (0..3)
            .map(|_| CellField::new(rng.fill(mesh.num_cells())))
            .collect();
        let t1 = linear_tendency(&x1[0], &x1[1], &x1[2], &SYS, &mesh).unwrap();
        let t2 = linear_tendency(&x2[0], &x2[1], &x2[2], &SYS, &mesh).unwrap();
        let sum = linear_tendency(
            &x1[0].add(&x2[0]),
            &x1[1].add(&x2[1]),
            &x1[2].add(&x2[2]),
            &SYS,
            &mesh,
        )
        .unwrap();
        for (combo, single) in [
            (&sum.0, (&t1.0, &t2.0)),
            (&sum.1, (&t1.1, &t2.1)),
            (&sum.2, (&t1.2, &t2.2)),
        ] {
            let expected = single.0.add(single.1);
            let scale = expected.max_abs().max(1.0);
            assert!(combo.sub(&expected).max_abs() / scale < 1e-13);
        }
    }

    #[test]
    fn constant_vorticity_drives_divergence() {
        let mesh = build_periodic_quad_mesh(4, 4, 1.0, 1.0).unwrap();
        let zero = CellField::zeros(mesh.num_cells());
        let zeta = CellField::constant(0.7, mesh.num_cells());
        let (dphi, dzeta, dgamma) = linear_tendency(&zero, &zeta, &zero, &SYS, &mesh).unwrap();
        assert_eq!(dphi.max_abs(), 0.0);
        assert_eq!(dzeta.max_abs(), 0.0);
        assert!(dgamma.values.iter().all(|&v| (v - 0.7).abs() < 1e-14));
    }

    #[test]
    fn spectrum_matches_z_grid_relation() {
        let mesh = build_periodic_quad_mesh(6, 6, 1.0, 1.0).unwrap();
        let analysis = analyze(&SYS, &mesh).unwrap();
        assert_eq!(analysis.zero_modes, mesh.num_cells());
        assert_eq!(analysis.expected_zero_modes, mesh.num_cells());
        assert!(
            analysis.max_abs_err < 1e-9,
            "max err {:.3e}",
            analysis.max_abs_err
        );
        assert!(
            analysis.max_real_part < 1e-10,
            "real part {:.3e}",
            analysis.max_real_part
        );
        // λ = 0 carries the pure inertial pair ω = ±f₀.
        let min_omega = analysis
            .modes
            .iter()
            .map(|m| m.omega_numeric)
            .fold(f64::INFINITY, f64::min);
        assert!((min_omega - SYS.f0).abs() < 1e-10);
    }

    #[test]
    fn zero_coriolis_gives_pure_gravity_waves() {
        let mesh = build_periodic_quad_mesh(5, 5, 1.0, 1.0).unwrap();
        let sys = LinearizedSystem {
            f0: 0.0,
            phibar: 2.0,
            gravity: 3.0,
        };
        let analysis = analyze(&sys, &mesh).unwrap();
        // λ = 0 joins the zero modes when f₀ = 0.
        assert_eq!(analysis.expected_zero_modes, mesh.num_cells() + 2);
        assert_eq!(analysis.zero_modes, analysis.expected_zero_modes);
        assert!(analysis.max_abs_err < 1e-9);
        for m in &analysis.modes {
            let expected = (sys.gravity * sys.phibar * m.laplacian_eigenvalue).sqrt();
            assert!((m.omega_zgrid - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bounded_mesh_is_unsupported() {
        let mesh = build_perturbed_lattice_mesh(4, 4, 0.1, 11).unwrap();
        match dispersion_spectrum(&SYS, &mesh).unwrap_err() {
            Error::Unsupported(_) => {}
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn generator_squares_to_negative_omega_squared_on_gravity_modes() {
        let mesh = build_periodic_quad_mesh(5, 5, 1.0, 1.0).unwrap();
        let n = mesh.num_cells();
        // Eigenvector of -Δ_h on the uniform mesh: a plane wave sampled at
        // cell centers.
        let wave = CellField::from_fn(n, |i| {
            (2.0 * std::f64::consts::PI * mesh.cells[i].center[0]).cos()
        });
        let lap = ops::laplacian_cell(&wave, &mesh).unwrap();
        let lambda = -lap.values[0] / wave.values[0];
        let zero = CellField::zeros(n);
        let first = linear_tendency(&zero, &zero, &wave, &SYS, &mesh).unwrap();
        let second = linear_tendency(&first.0, &first.1, &first.2, &SYS, &mesh).unwrap();
        let expected = -(SYS.f0 * SYS.f0 + SYS.gravity * SYS.phibar * lambda);
        let got = second.2.values[0] / wave.values[0];
        assert!(
            (got - expected).abs() / expected.abs() < 1e-11,
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn both_schemes_share_the_spectrum() {
        let mesh = build_periodic_quad_mesh(5, 5, 1.0, 1.0).unwrap();
        let g1 = assemble_generator_for_scheme(Scheme::Energy, &SYS, &mesh).unwrap();
        let g2 = assemble_generator_for_scheme(Scheme::EnergyEnstrophy, &SYS, &mesh).unwrap();
        let mut f1: Vec<f64> = g1.complex_eigenvalues().iter().map(|z| z.im).collect();
        let mut f2: Vec<f64> = g2.complex_eigenvalues().iter().map(|z| z.im).collect();
        f1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        f2.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = f1.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in f1.iter().zip(&f2) {
            assert!((a - b).abs() / scale < 1e-10, "{a} vs {b}");
        }
    }
}
