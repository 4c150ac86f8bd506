use sphgd_core::activation::ActivationSpec;
use sphgd_core::operator::{apply_tz, FunkOperator};
use sphgd_core::sphere::{sample_uniform_sphere, project_degree, UnitVector, ZonalSum, ZonalTerm};
use sphgd_core::spectrum::*;

#[test]
fn sigmoid_odd_eigenvalues_decrease() {
    let s = build_spectrum(10, &ActivationSpec::sigmoid(), 6, SpectrumMethod::Quadrature).unwrap();
    let l = s.lambdas();
    assert!(l[1].abs() > l[3].abs() && l[3].abs() > l[5].abs());
    assert_eq!(s.support(), vec![0, 1, 3, 5]);
}

#[test]
fn eigenvalues_bounded_by_sup_norm() {
    for act in [ActivationSpec::sigmoid(), ActivationSpec::softplus(), ActivationSpec::relu(), ActivationSpec::step()] {
        for n in [3, 5, 10] {
            let s = build_spectrum(n, &act, 8, SpectrumMethod::Quadrature).unwrap();
            assert!(s.all_converged(), "{} n={n}", act.label());
            for e in &s.entries {
                assert!(e.lambda.abs() <= act.sup_norm_bound(), "{} n={n} k={}", act.label(), e.k);
            }
        }
    }
}

#[test]
fn series_and_quadrature_agree_on_grid() {
    for act in [ActivationSpec::sigmoid(), ActivationSpec::softplus()] {
        for n in [5, 10, 20] {
            let q = build_spectrum(n, &act, 6, SpectrumMethod::Quadrature).unwrap();
            let b = build_spectrum(n, &act, 6, SpectrumMethod::BetaSeries).unwrap();
            for (x, y) in q.lambdas().iter().zip(b.lambdas()) {
                assert!((x - y).abs() <= 1e-6 * x.abs().max(y.abs()) + 1e-14, "{} n={n}: {x} vs {y}", act.label());
            }
        }
    }
}

#[test]
fn ideal_operator_contracts_zonal_sums() {
    let s = build_spectrum(8, &ActivationSpec::sigmoid(), 5, SpectrumMethod::Quadrature).unwrap();
    let j = FunkOperator::Ideal(s.clone());
    let mut rng = sphgd_core::rng::chunk_rng(2, 0);
    let terms: Vec<ZonalTerm> = (0..=5)
        .map(|k| ZonalTerm { coef: 1.0 / (1.0 + k as f64), degree: k, pole: UnitVector::random(8, &mut rng).unwrap() })
        .collect();
    let f = ZonalSum::new(8, terms).unwrap();
    let j2 = j.apply_zonal(&j.apply_zonal(&f).unwrap()).unwrap();
    // f - J²f scales degree k by 1 - λ_k².
    let diff = f.scaled_by_degree(|k| 1.0 - s.entries[k].lambda.powi(2));
    let lhs = diff.norm_sq();
    let in_support: f64 = s.support().iter().map(|&k| f.energy(k)).sum();
    assert!(lhs <= f.norm_sq() - s.alpha().powi(4) * in_support);
    for k in 0..=5 {
        assert!((j2.energy(k) - s.entries[k].lambda.powi(4) * f.energy(k)).abs() < 1e-15);
    }
}

#[test]
fn empirical_operator_acts_diagonally() {
    // Degree energies of T_Z f against λ² times those of f.
    let n = 6;
    let act = ActivationSpec::relu();
    let s = build_spectrum(n, &act, 3, SpectrumMethod::Quadrature).unwrap();
    let f = ZonalSum::new(
        n,
        vec![
            ZonalTerm { coef: 1.0, degree: 1, pole: UnitVector::basis(n, 0).unwrap() },
            ZonalTerm { coef: 1.0, degree: 2, pole: UnitVector::basis(n, 1).unwrap() },
        ],
    )
    .unwrap();
    let z = sample_uniform_sphere(n, 50_000, 7).unwrap();
    let fz = z.map(|x| f.eval(x));
    let probe = sample_uniform_sphere(n, 500, 8).unwrap();
    let quad = sample_uniform_sphere(n, 5000, 9).unwrap();
    let tz = |u: &[f64]| apply_tz(&z, &act, &fz, u).unwrap();
    for k in [1, 2] {
        let p = project_degree(tz, k, &probe, &quad).unwrap();
        let want = s.entries[k].lambda.powi(2) * f.energy(k);
        assert!((p.energy - want).abs() <= 3.0 * p.std_error + 0.05 * want, "k={k}: {} vs {want} ± {}", p.energy, p.std_error);
    }
}
