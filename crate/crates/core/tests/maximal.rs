use num_complex::Complex;
use vexh::grid::uniform_ladder;
use vexh::halfspace::periodized_kernel;
use vexh::maximal::*;
use vexh::{Grid, GridFunction, HalfSpaceField, Kernel};

fn gaussian(grid: Grid, sigma: f64) -> GridFunction {
    GridFunction::from_rule(grid, "gauss", move |x| (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * sigma * sigma)).exp())
}

fn le(a: &GridFunction, b: &GridFunction, slack: f64) -> bool {
    a.samples().iter().zip(b.samples()).all(|(x, y)| x.re <= y.re + slack)
}

#[test]
fn family_is_certified() {
    for (dim, order) in [(1, 4), (2, 7)] {
        let fam = TestFamily::standard(dim, order).unwrap();
        assert_eq!(fam.len(), dim + 2);
        assert!(fam.certified());
        for m in &fam.members {
            assert!((m.factor * m.kernel.seminorm(order, AUDIT_POINTS) - 1.0).abs() < 1e-12);
        }
    }
    let loud = TestFamily::with_factors(2, vec![(Kernel::gaussian(1), 100.0)]).unwrap();
    assert!(!loud.certified());
    let g = Grid::new(1, 16.0, 128).unwrap();
    let f = gaussian(g, 1.0);
    assert!(grand_maximal(&f, &loud, &default_t_set(&g), MaximalMode::Radial).is_err());
}

#[test]
fn radial_examples() {
    let g = Grid::new(1, 16.0, 256).unwrap();
    let ts = default_t_set(&g);
    let c = GridFunction::constant(g, -1.5);
    let r = radial_maximal(&c, &Kernel::gaussian(1), &ts).unwrap();
    assert!(r.samples().iter().all(|z| (z.re - 1.5).abs() < 1e-12));

    let f = gaussian(g, 0.8);
    let r = radial_maximal(&f, &Kernel::gaussian(1), &ts).unwrap();
    for &t in &ts {
        let single = radial_maximal(&f, &Kernel::gaussian(1), &[t]).unwrap();
        assert!(le(&single, &r, 0.0));
    }
    let mut finer = ts.clone();
    finer.extend(ts.iter().map(|t| t * 1.5).filter(|&t| t <= 4.0));
    finer.sort_by(f64::total_cmp);
    let rf = radial_maximal(&f, &Kernel::gaussian(1), &finer).unwrap();
    assert!(le(&r, &rf, 0.0));
}

#[test]
fn nontangential_examples() {
    let g = Grid::new(2, 8.0, 64).unwrap();
    let ts = default_t_set(&g);
    let psi = Kernel::gaussian(2);
    let f = GridFunction::from_rule(g, "f", |x| (-(x[0] - 0.5).powi(2) - 2.0 * x[1] * x[1]).exp() - 0.4 * (-(x[0] + 1.0).powi(2)).exp());
    let rad = radial_maximal(&f, &psi, &ts).unwrap();
    let nt = nontangential_maximal(&f, &psi, &ts).unwrap();
    assert!(le(&rad, &nt, 0.0));

    let c = GridFunction::constant(g, 2.0);
    let a = radial_maximal(&c, &psi, &ts).unwrap();
    let b = nontangential_maximal(&c, &psi, &ts).unwrap();
    assert!(a.max_diff(&b) < 1e-12);

    for axis in [1, 2] {
        let shifted = nontangential_maximal(&f.shift(axis, 1).unwrap(), &psi, &ts).unwrap();
        let expect = nt.shift(axis, 1).unwrap();
        assert!(shifted.max_diff(&expect) < 1e-12);
    }

    let fam = TestFamily::standard(2, 3).unwrap();
    let grand = grand_maximal(&f, &fam, &ts, MaximalMode::Nontangential).unwrap();
    let scaled = nt.scale(fam.members[0].factor);
    assert!(le(&scaled, &grand, 1e-15));
}

#[test]
fn grand_examples() {
    let g = Grid::new(1, 16.0, 256).unwrap();
    let ts = default_t_set(&g);
    let f = gaussian(g, 1.0);
    let order = 3;
    let single = TestFamily::normalized(order, vec![Kernel::gaussian(1)]).unwrap();
    let grand = grand_maximal(&f, &single, &ts, MaximalMode::Radial).unwrap();
    let direct = radial_maximal(&f, &Kernel::gaussian(1), &ts).unwrap().scale(single.members[0].factor);
    assert!(grand.max_diff(&direct) < 1e-15);

    let pair = TestFamily::normalized(order, vec![Kernel::gaussian(1), Kernel::gaussian_derivative(1, 1)]).unwrap();
    let bigger = grand_maximal(&f, &pair, &ts, MaximalMode::Radial).unwrap();
    assert!(le(&grand, &bigger, 0.0));
    // the Gaussian member dominates the derivative member at every node
    let members = member_maximals(&f, &pair, &ts, MaximalMode::Radial).unwrap();
    assert!(members[0].iter().zip(&members[1]).all(|(a, b)| a >= b));
    assert!(bigger.max_diff(&grand) < 1e-15);
}

#[test]
fn poisson_nt_examples() {
    let g = Grid::new(1, 16.0, 512).unwrap();
    let ts = default_t_set(&g);
    let c = GridFunction::constant(g, -0.75);
    let m = poisson_nt_maximal(&c, &ts).unwrap();
    assert!(m.samples().iter().all(|z| (z.re - 0.75).abs() < 1e-12));

    // discrete delta of unit mass at the origin: the extension is the periodized kernel
    let h = g.spacing();
    let delta = GridFunction::from_rule(g, "delta", |x| if x[0] == 0.0 { 1.0 / h } else { 0.0 });
    // aliasing of the discrete delta decays like e^{-πt/h}
    let ts: Vec<f64> = ts.into_iter().filter(|&t| t >= 16.0 * h).collect();
    let m = poisson_nt_maximal(&delta, &ts).unwrap();
    for i in (0..g.len()).step_by(7) {
        let x = g.coords(i)[0];
        let mut oracle: f64 = 0.0;
        for &t in &ts {
            for j in 0..g.len() {
                let y = g.coords(j)[0];
                let d = (x - y).abs().min(16.0 - (x - y).abs());
                if d < t {
                    oracle = oracle.max(periodized_kernel(&g, 0, t, [y, 0.0]).unwrap());
                }
            }
        }
        assert!((m.samples()[i].re - oracle).abs() < 1e-9 * oracle.max(1.0));
    }
    assert!(m.samples().iter().all(|z| z.re > 0.0));
}

#[test]
fn field_nt_examples() {
    let g = Grid::new(2, 8.0, 32).unwrap();
    let ladder = uniform_ladder(0.25, 0.25, 4);
    let c = HalfSpaceField::from_rule(g, ladder.clone(), |_, _| Complex::new(3.0, 0.0)).unwrap();
    assert!(field_nt_maximal(&c).unwrap().samples().iter().all(|z| (z.re - 3.0).abs() < 1e-15));

    let f = gaussian(g, 0.6);
    let a = poisson_nt_maximal(&f, &ladder).unwrap();
    let b = field_nt_maximal(&vexh::halfspace::poisson_extend(&f, &ladder).unwrap()).unwrap();
    assert_eq!(a.samples(), b.samples());

    // spike at node y on level k lifts u* exactly on {|x - y| < t_k}
    let (y, k) = (g.flat_index([10, 20]), 2);
    let t = ladder[k];
    let spike = HalfSpaceField::from_rule(g, ladder.clone(), |x, s| {
        let yc = g.coords(y);
        Complex::new(if (s - t).abs() < 1e-12 && x == yc { 5.0 } else { 0.0 }, 0.0)
    })
    .unwrap();
    let m = field_nt_maximal(&spike).unwrap();
    let yc = g.coords(y);
    for i in 0..g.len() {
        let x = g.coords(i);
        let wrap = |d: f64| d.abs().min(8.0 - d.abs());
        let inside = wrap(x[0] - yc[0]).hypot(wrap(x[1] - yc[1])) < t;
        assert_eq!(m.samples()[i].re, if inside { 5.0 } else { 0.0 });
    }
}
