use nalgebra::DMatrix;
use sphgd_core::rng::par_sample_sum;
use sphgd_core::sphere::*;

/// Dimension of degree-k harmonic polynomials in n variables, as the nullity
/// of the Laplacian from degree k to degree k-2 homogeneous polynomials.
fn harmonic_dim_bruteforce(n: usize, k: usize) -> usize {
    fn monomials(n: usize, k: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![k]];
        }
        (0..=k)
            .flat_map(|e| {
                monomials(n - 1, k - e).into_iter().map(move |mut rest| {
                    rest.insert(0, e);
                    rest
                })
            })
            .collect()
    }
    let src = monomials(n, k);
    if k < 2 {
        return src.len();
    }
    let dst = monomials(n, k - 2);
    let mut lap = DMatrix::<f64>::zeros(dst.len(), src.len());
    for (j, m) in src.iter().enumerate() {
        for v in 0..n {
            if m[v] >= 2 {
                let mut t = m.clone();
                t[v] -= 2;
                let i = dst.iter().position(|d| *d == t).unwrap();
                lap[(i, j)] += (m[v] * (m[v] - 1)) as f64;
            }
        }
    }
    src.len() - lap.rank(1e-9)
}

#[test]
fn harmonic_dimension_matches_laplacian_nullity() {
    for n in 3..=6 {
        for k in 0..=5 {
            assert_eq!(harmonic_dim(n, k).unwrap() as usize, harmonic_dim_bruteforce(n, k), "n={n} k={k}");
        }
    }
}

#[test]
fn zonal_harmonic_has_unit_norm() {
    let ev = LegendreEvaluator::new(7, 4).unwrap();
    let u = UnitVector::basis(7, 2).unwrap();
    for k in [1, 2, 4] {
        let m = 1_000_000;
        let acc = par_sample_sum(17 + k as u64, m, 2, |rng, count, acc| {
            let mut x = vec![0.0; 7];
            for _ in 0..count {
                fill_uniform(rng, &mut x);
                let z = zonal_eval(&ev, k, u.coords(), &x).unwrap();
                acc[0] += z * z;
                acc[1] += z.powi(4);
            }
        });
        let mean = acc[0] / m as f64;
        let se = ((acc[1] / m as f64 - mean * mean) / m as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "k={k}: {mean} ± {se}");
    }
}

#[test]
fn projections_of_zonal_harmonics() {
    let probe = sample_uniform_sphere(6, 400, 1).unwrap();
    let quad = sample_uniform_sphere(6, 20_000, 2).unwrap();
    let u = UnitVector::basis(6, 0).unwrap();
    let f = ZonalSum::single(1.0, 2, u);
    let same = project_degree(|x| f.eval(x), 2, &probe, &quad).unwrap();
    assert!((same.energy - 1.0).abs() <= 3.0 * same.std_error, "{same:?}");
    for other in [1, 3] {
        let p = project_degree(|x| f.eval(x), other, &probe, &quad).unwrap();
        assert!(p.energy.abs() <= 3.0 * p.std_error, "k'={other}: {} ± {}", p.energy, p.std_error);
    }
    let c = project_degree(|_| 0.7, 0, &probe, &quad).unwrap();
    assert!((c.energy - 0.49).abs() <= 3.0 * c.std_error + 1e-12);
    assert!(c.values.iter().all(|v| (v - 0.7).abs() < 1e-12));
}

#[test]
fn projection_values_match_component() {
    let probe = sample_uniform_sphere(5, 50, 3).unwrap();
    let quad = sample_uniform_sphere(5, 200_000, 4).unwrap();
    let mut rng = sphgd_core::rng::chunk_rng(9, 0);
    let u = UnitVector::random(5, &mut rng).unwrap();
    let v = UnitVector::random(5, &mut rng).unwrap();
    let f = ZonalSum::new(
        5,
        vec![ZonalTerm { coef: 0.8, degree: 1, pole: u }, ZonalTerm { coef: 0.5, degree: 3, pole: v }],
    )
    .unwrap();
    let p = project_degree(|x| f.eval(x), 3, &probe, &quad).unwrap();
    let comp = f.component(3);
    let rms = (p.values.iter().zip(probe.iter()).map(|(a, x)| (a - comp.eval(x)).powi(2)).sum::<f64>() / 50.0).sqrt();
    assert!(rms < 0.05, "{rms}");
    assert!((p.energy - f.energy(3)).abs() <= 3.0 * p.std_error);
}

#[test]
fn downstream_estimates_are_deterministic() {
    let a = sample_uniform_sphere(5, 3000, 11).unwrap();
    let b = sample_uniform_sphere(5, 3000, 11).unwrap();
    let f = |x: &[f64]| x[0] * x[1] + x[2];
    let pa = project_degree(f, 2, &a, &b).unwrap();
    let pb = project_degree(f, 2, &b, &a).unwrap();
    assert_eq!(pa, pb);
}
