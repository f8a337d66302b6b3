use std::f64::consts::PI;

use num_complex::Complex;
use vexh::grid::{self, geometric_ladder, uniform_ladder};
use vexh::halfspace::*;
use vexh::{Grid, GridFunction, HalfSpaceField};

fn grid1(n: usize) -> Grid {
    Grid::new(1, 16.0, n).unwrap()
}

fn gaussian(grid: Grid, sigma: f64) -> GridFunction {
    GridFunction::from_rule(grid, "gauss", move |x| (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * sigma * sigma)).exp())
}

/// Periodized `P_1` on the torus, so its extension is exactly periodized `P_{1+t}`.
fn periodic_p1(grid: Grid) -> GridFunction {
    let vals = (0..grid.len()).map(|i| periodized_kernel(&grid, 0, 1.0, grid.coords(i)).unwrap()).collect();
    GridFunction::from_real(grid, vals, "P1").unwrap()
}

#[test]
fn constants_and_kernels() {
    assert!((PoissonConstants::new(1).unwrap().c_n - 1.0 / PI).abs() < 1e-15);
    assert!((PoissonConstants::new(2).unwrap().c_n - 0.5 / PI).abs() < 1e-15);
    // Γ(5/2) = 3√π/4, Γ(3) = 2
    assert!((half_integer_gamma(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
    assert_eq!(half_integer_gamma(6), 2.0);
    assert!((poisson_kernel(1, 1.0, &[0.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
    assert!((conjugate_poisson_kernel(1, 1, 1.0, &[1.0]).unwrap() - 0.5 / PI).abs() < 1e-15);
    assert!(poisson_kernel(1, 0.0, &[0.0]).is_err());
    assert!(conjugate_poisson_kernel(2, 3, 1.0, &[0.0, 0.0]).is_err());
}

#[test]
fn periodized_poisson_has_unit_mass() {
    for grid in [grid1(256), Grid::new(2, 8.0, 128).unwrap()] {
        let h = grid.spacing();
        for t in [4.0 * h, grid.period() / 16.0, grid.period() / 8.0] {
            let vals: Vec<f64> = (0..grid.len()).map(|i| periodized_kernel(&grid, 0, t, grid.coords(i)).unwrap()).collect();
            let mass = grid::quadrature_real(&grid, &vals);
            assert!((mass - 1.0).abs() < 1e-6, "n={} t={t}: {mass}", grid.dim());
        }
    }
}

#[test]
fn one_dimensional_periodization_matches_image_sum() {
    let grid = grid1(64);
    for &(t, x) in &[(0.5, 0.3), (2.0, -7.0), (1.0, 4.0)] {
        let mut p = 0.0;
        for k in -20000..=20000 {
            p += poisson_kernel(1, t, &[x + 16.0 * k as f64]).unwrap();
        }
        let closed = periodized_kernel(&grid, 0, t, [x, 0.0]).unwrap();
        assert!((p - closed).abs() < 1e-6, "{p} vs {closed}");
    }
}

#[test]
fn extension_fixes_constants_and_obeys_semigroup() {
    let g = grid1(256);
    let c = GridFunction::constant(g, 2.5);
    let u = poisson_extend(&c, &[0.1, 1.0, 3.0]).unwrap();
    assert!(u.slices().iter().all(|s| s.samples().iter().all(|z| (z.re - 2.5).abs() < 1e-13)));

    let f = gaussian(g, 0.7);
    let (t, s) = (0.3, 0.45);
    let step1 = poisson_extend(&f, &[t]).unwrap();
    let step2 = poisson_extend(step1.slice(0), &[s]).unwrap();
    let direct = poisson_extend(&f, &[t + s]).unwrap();
    assert!(step2.slice(0).max_diff(direct.slice(0)) < 1e-10);
    let mean0 = f.mean();
    for sl in direct.slices() {
        assert!((sl.mean() - mean0).norm() < 1e-13);
    }
}

#[test]
fn quadrature_path_gap_shrinks() {
    let mut prev = f64::INFINITY;
    for n in [128, 256, 512] {
        let g = grid1(n);
        let f = gaussian(g, 0.8);
        let ladder = [0.25, 0.5, 1.0];
        let a = poisson_extend(&f, &ladder).unwrap();
        let b = poisson_extend_quadrature(&f, &ladder, true).unwrap();
        let gap = a.slices().iter().zip(b.slices()).map(|(x, y)| x.max_diff(y)).fold(0.0, f64::max);
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-10);
}

#[test]
fn conjugate_identity_spectral_and_quadrature() {
    let mut prev = f64::INFINITY;
    for n in [128, 256, 512] {
        let f = gaussian(grid1(n), 0.6);
        let id = conjugate_identity(&f, 1, 0.125).unwrap();
        assert!(id.spectral_gap <= 1e-12);
        assert!(id.quadrature_gap < prev / 100.0);
        prev = id.quadrature_gap;
    }
    let mut prev = f64::INFINITY;
    for n in [32, 64, 128] {
        let g2 = Grid::new(2, 8.0, n).unwrap();
        let id = conjugate_identity(&gaussian(g2, 0.5), 2, 0.125).unwrap();
        assert!(id.spectral_gap <= 1e-12);
        assert!(id.quadrature_gap < prev / 10.0, "{} vs {prev}", id.quadrature_gap);
        prev = id.quadrature_gap;
    }
}

#[test]
fn periodized_conjugate_kernel_matches_fourier_series() {
    // Poisson summation: the periodized Q_t has coefficients -iξ_j/|ξ| e^{-t|ξ|} / L²
    let l = 8.0;
    let g = Grid::new(2, l, 16).unwrap();
    let t = 0.3;
    let w = 2.0 * PI / l;
    for x in [[0.0, 0.0], [1.5, -2.0], [-3.5, 3.25]] {
        for axis in [1, 2] {
            let k = periodized_kernel(&g, axis, t, x).unwrap();
            let mut series = 0.0;
            for a in -200i32..=200 {
                for b in -200i32..=200 {
                    let xi = [w * a as f64, w * b as f64];
                    let r = xi[0].hypot(xi[1]);
                    if r > 0.0 {
                        series += xi[axis - 1] / r * (-t * r).exp() * (xi[0] * x[0] + xi[1] * x[1]).sin();
                    }
                }
            }
            series /= l * l;
            assert!((k - series).abs() < 1e-7, "{k} vs {series}");
        }
    }
}

#[test]
fn vector_of_constant_and_poisson_data() {
    let g = grid1(512);
    let ladder = uniform_ladder(0.25, 0.25, 5);
    let v = poisson_vector(&GridFunction::constant(g, 1.5), &ladder).unwrap();
    assert!(v.component(0).slices().iter().all(|s| s.samples().iter().all(|z| (z.re - 1.5).abs() < 1e-13)));
    assert!(v.component(1).max_abs() < 1e-13);

    let f = periodic_p1(g);
    let v = poisson_vector(&f, &ladder).unwrap();
    for (k, &t) in ladder.iter().enumerate() {
        for i in 0..g.len() {
            let x = g.coords(i);
            let p = periodized_kernel(&g, 0, 1.0 + t, x).unwrap();
            let q = periodized_kernel(&g, 1, 1.0 + t, x).unwrap();
            assert!((v.component(0).slice(k).samples()[i].re - p).abs() < 1e-12);
            assert!((v.component(1).slice(k).samples()[i].re - q).abs() < 1e-12);
        }
        // near the origin the torus field is close to the line field |i/(π(z + i))|
        let mag = v.magnitude();
        let origin = g.points() / 2;
        let exact = 1.0 / (PI * (1.0 + t));
        assert!((mag.slice(k).samples()[origin].re - exact).abs() < 0.02);
    }
}

#[test]
fn cr_residuals_converge_and_detect_defects() {
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for n in [128, 256, 512] {
        let g = grid1(n);
        let h = g.spacing();
        let ladder = uniform_ladder(0.5, h, 5);
        let v = poisson_vector(&gaussian(g, 1.0), &ladder).unwrap();
        let r = cr_residual(&v).unwrap();
        assert!(r.div < prev.0 / 3.4 && r.curl < prev.1 / 3.4, "{r:?} vs {prev:?}");
        prev = (r.div, r.curl);
    }
    let g = grid1(256);
    let ladder = uniform_ladder(0.5, g.spacing(), 5);
    let v = poisson_vector(&gaussian(g, 1.0), &ladder).unwrap();
    let delta = 1e-2;
    let omega = 2.0 * PI / 16.0;
    let bumped = v.component(1).map_slices(|s| s.add(&GridFunction::from_rule(g, "d", |x| delta * (omega * x[0]).sin())).unwrap());
    let v = v.with_component(1, bumped).unwrap();
    let r = cr_residual(&v).unwrap();
    assert!(r.div >= delta * omega * (1.0 - 1e-2), "{r:?}");

    let zero = HalfSpaceField::from_rule(g, ladder.clone(), |_, _| Complex::new(0.0, 0.0)).unwrap();
    let z = vexh::halfspace::HarmonicVector::new(vec![zero.clone(), zero]).unwrap();
    let r = cr_residual(&z).unwrap();
    assert_eq!((r.div, r.curl), (0.0, 0.0));
}

#[test]
fn harmonicity_examples() {
    let g = Grid::new(2, 8.0, 32).unwrap();
    let ladder = uniform_ladder(0.5, 0.25, 4);
    let affine = HalfSpaceField::from_rule(g, ladder.clone(), |x, _| Complex::new(x[0], 0.0)).unwrap();
    assert!(harmonicity_residual(&affine).unwrap() < 1e-12);
    let quad = HalfSpaceField::from_rule(g, ladder.clone(), |_, t| Complex::new(t * t, 0.0)).unwrap();
    assert!((harmonicity_residual(&quad).unwrap() - 2.0).abs() < 1e-9);

    let residuals: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let g = Grid::new(2, 8.0, n).unwrap();
            let u = poisson_extend(&gaussian(g, 0.8), &uniform_ladder(0.3, g.spacing(), 4)).unwrap();
            harmonicity_residual(&u).unwrap()
        })
        .collect();
    assert!(residuals[0] / residuals[1] > 3.0 && residuals[1] / residuals[2] > 3.5, "{residuals:?}");
}

#[test]
fn tensor_field_identities() {
    let g = Grid::new(2, 8.0, 32).unwrap();
    let f = gaussian(g, 0.7).add(&GridFunction::constant(g, 0.3)).unwrap();
    let ladder = uniform_ladder(0.25, 0.25, 3);
    let v = poisson_vector(&f, &ladder).unwrap();
    let t1 = poisson_tensor(&f, &ladder, 1).unwrap();
    for j in 0..3 {
        assert!(t1.component(&[j]).slice(1).max_diff(v.component(j).slice(1)) < 1e-14);
    }
    for m in [2, 3] {
        let t = poisson_tensor(&f, &ladder, m).unwrap();
        assert!(t.symmetry_residual() <= 1e-9);
        assert!(t.trace_residual() <= 1e-9, "m={m}: {}", t.trace_residual());
        let u = poisson_extend(&f, &ladder).unwrap();
        assert_eq!(t.e0_component().slice(2).samples(), u.slice(2).samples());
    }
    assert!(matches!(poisson_tensor_capped(&f, &ladder, 2, 1024), Err(vexh::Error::Resource(_))));
}

#[test]
fn gradient_tensor_spectral_matches_fd() {
    let mut gaps = Vec::new();
    for n in [64, 128, 256] {
        let g = Grid::new(2, 8.0, n).unwrap();
        let ladder = uniform_ladder(0.5, g.spacing(), 5);
        let t = poisson_tensor(&gaussian(g, 0.8), &ladder, 2).unwrap();
        let exact = gradient_tensor(&t).unwrap();
        let fd = gradient_tensor_fd(&t).unwrap();
        assert!(exact.symmetry_residual() < 1e-9);
        let gap = exact
            .components()
            .iter()
            .zip(fd.components())
            .map(|(a, b)| (1..4).map(|k| a.slice(k).max_diff(b.slice(k))).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        gaps.push(gap);
    }
    assert!(gaps[0] / gaps[1] > 3.0 && gaps[1] / gaps[2] > 3.5, "{gaps:?}");
    let g = Grid::new(1, 4.0, 16).unwrap();
    let c = GridFunction::constant(g, 1.0);
    let t = poisson_tensor(&c, &uniform_ladder(0.5, 0.25, 3), 1).unwrap();
    let grad = gradient_tensor(&t).unwrap();
    assert!(grad.components().iter().all(|c| c.max_abs() < 1e-13));
}

#[test]
fn grad_m_magnitude_examples() {
    let l = 16.0;
    let g = grid1(64);
    let omega = 2.0 * PI / l;
    let f = GridFunction::from_complex_rule(g, "mode", |x| Complex::from_polar(1.0, omega * x[0]));
    let ladder = uniform_ladder(0.5, 0.5, 4);
    let u = poisson_extend(&f, &ladder).unwrap();
    let mag = grad_m_magnitude(&u, 1).unwrap();
    for (k, &t) in ladder.iter().enumerate() {
        let expect = omega * 2f64.sqrt() * (-omega * t).exp();
        assert!(mag.slice(k).samples().iter().all(|z| (z.re - expect).abs() < 1e-12));
    }
    let zeroth = grad_m_magnitude(&u, 0).unwrap();
    assert!(zeroth.slice(0).samples().iter().all(|z| (z.re - (-omega * 0.5f64).exp()).abs() < 1e-12));

    let affine = HalfSpaceField::from_rule(g, uniform_ladder(0.5, 0.5, 5), |x, t| Complex::new(3.0 * x[0] - t, 0.0)).unwrap();
    let m2 = grad_m_magnitude(&affine, 2).unwrap();
    // periodic wrap of the non-periodic rule pollutes two boundary nodes per side
    let (levels, interior) = (1..4, 2..62);
    for k in levels {
        for i in interior.clone() {
            assert!(m2.slice(k).samples()[i].re < 1e-9);
        }
    }
    let short = HalfSpaceField::from_rule(g, uniform_ladder(0.5, 0.5, 4), |x, _| Complex::new(x[0], 0.0)).unwrap();
    assert!(grad_m_magnitude(&short, 2).is_err());
}

#[test]
fn subharmonicity_examples() {
    let mut prev = f64::INFINITY;
    for n in [256, 512, 1024] {
        let g = grid1(n);
        let v = poisson_vector(&gaussian(g, 1.0), &uniform_ladder(0.25, g.spacing(), 6)).unwrap();
        let s = subharmonicity_check(&v.magnitude(), 0.5).unwrap();
        assert!(s.nodes_tested > 0);
        assert!(s.violation <= prev / 3.4 || s.violation < 1e-12, "{s:?}");
        prev = s.violation;
    }
    // harmonic and positive: Laplacian of u itself is O(h²)
    let v: Vec<f64> = [256, 512, 1024]
        .iter()
        .map(|&n| {
            let g = grid1(n);
            let u = poisson_extend(&gaussian(g, 1.0), &uniform_ladder(0.25, g.spacing(), 5)).unwrap();
            subharmonicity_check(&u, 1.0).unwrap().violation
        })
        .collect();
    assert!(v[0] / v[1] > 3.5 && v[1] / v[2] > 3.5, "{v:?}");
    let g = grid1(512);
    let u = poisson_extend(&gaussian(g, 1.0), &uniform_ladder(0.25, g.spacing(), 5)).unwrap();
    let neg = u.map_slices(|s| s.scale(-1.0));
    assert!(subharmonicity_check(&neg, 1.0).is_err());
    // n = 2 at the threshold (n-1)/n
    let g = Grid::new(2, 8.0, 64).unwrap();
    let v = poisson_vector(&gaussian(g, 0.8), &uniform_ladder(0.25, g.spacing(), 5)).unwrap();
    assert!(subharmonicity_check(&v.magnitude(), 0.5).unwrap().violation < 1e-3);
}

#[test]
fn majorant_examples() {
    let g = grid1(2048);
    let f = periodic_p1(g);
    let v = poisson_vector(&f, &geometric_ladder(0.25, 1.0)).unwrap();
    let excess = majorant_check(&v, 0.5, 0.25, 0.25, 1.0).unwrap();
    assert!(excess <= 1e-6, "{excess}");
    let zero = poisson_vector(&GridFunction::zeros(g), &[1.0]).unwrap();
    assert_eq!(majorant_check(&zero, 0.5, 0.25, 0.25, 1.0).unwrap(), 0.0);
    assert!(majorant_check(&v, 1.2, 0.25, 0.25, 1.0).is_err());
    assert!(majorant_check(&v, 0.5, 0.001, 0.25, 1.0).is_err());

    let t2 = poisson_tensor(&gaussian(Grid::new(2, 8.0, 64).unwrap(), 0.7), &[0.5], 2).unwrap();
    assert!(majorant_check(&t2, 0.4, 0.25, 0.5, 0.6).unwrap() <= 1e-4);
}

#[test]
fn k_integral_bounds() {
    let g = grid1(256);
    let zero = poisson_vector(&GridFunction::zeros(g), &[1.0]).unwrap();
    assert_eq!(k_integral(&zero, 0.5, 1.5, 0.25, 1.0, 1.0).unwrap(), 0.0);
    let f = gaussian(g, 1.0);
    let v = poisson_vector(&f, &[1.0]).unwrap();
    let bound = v.modulus_at(1.25).unwrap().into_iter().fold(0.0, f64::max);
    let (eta, q, t) = (0.5, 1.5, 1.0);
    let weight: Vec<f64> = (0..g.len()).map(|i| (g.radius(i) + 1.0 + t).powi(-2)).collect();
    let k = k_integral(&v, eta, q, 0.25, t, 1.0).unwrap();
    assert!(k <= bound.powf(eta * q) * grid::quadrature_real(&g, &weight) * (1.0 + 1e-12));
    assert!(k_integral(&v, eta, 3.0, 0.25, t, 1.0).is_err());
}

#[test]
fn tensor_weighted_gradient_matches_tensor_field() {
    let g = Grid::new(2, 8.0, 32).unwrap();
    let f = gaussian(g, 0.7);
    let ladder = uniform_ladder(0.5, 0.25, 3);
    let u = poisson_extend(&f, &ladder).unwrap();
    let weighted = grad_m_magnitude_with(&u, 2, GradNorm::Tensor).unwrap();
    let hess = gradient_tensor(&gradient_tensor(&poisson_tensor(&f, &ladder, 1).unwrap()).unwrap()).unwrap();
    // ∇²u is the (0, ·, ·) block of ∇(∇F) since u is the first component of F
    let mut sq = vec![0.0; g.len()];
    for a in 0..3 {
        for b in 0..3 {
            for (i, z) in hess.component(&[0, a, b]).slice(1).samples().iter().enumerate() {
                sq[i] += z.norm_sqr();
            }
        }
    }
    for (i, s) in sq.iter().enumerate() {
        assert!((weighted.slice(1).samples()[i].re - s.sqrt()).abs() < 1e-12);
    }
    let plain = grad_m_magnitude(&u, 2).unwrap();
    assert!(plain.slice(1).samples().iter().zip(weighted.slice(1).samples()).all(|(p, w)| p.re <= w.re + 1e-15));
}
