mod common;

use proptest::prelude::*;
use uvlab_core::lattice::{
    covariance_convolve, interaction_integral, pairing, source_inner, FieldSampler, Mode, SourceField, SourceSpec,
};
use uvlab_core::{covariance_zero, BoundedInteraction, FieldSample, ModelParams, SpectralDensity, TorusLattice};

fn small() -> (TorusLattice, ModelParams) {
    let lat = TorusLattice::new(2, 8, 4.0).unwrap();
    (lat, ModelParams::new(2, 1.0, 4.0, 3.0).unwrap())
}

#[test]
fn sampled_covariance_matches_kernel() {
    let (lat, p) = small();
    let density = SpectralDensity::bare(lat, &p).unwrap();
    let kernel = density.kernel();
    let sampler = FieldSampler::new(&density);
    let n = lat.num_sites();
    let pairs = 20_000;
    let lags = [0usize, 1, 9, 27];
    let mut mean0 = 0.0;
    let mut prods = vec![Vec::with_capacity(2 * pairs); lags.len()];
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    for s in 0..pairs {
        sampler.sample_pair_into(s as u64, &mut a, &mut b);
        for phi in [&a, &b] {
            mean0 += phi[0];
            for (k, &lag) in lags.iter().enumerate() {
                prods[k].push(phi[0] * phi[lag]);
            }
        }
    }
    let total = (2 * pairs) as f64;
    mean0 /= total;
    assert!(mean0.abs() < 5.0 * (kernel[0] / total).sqrt());
    for (k, &lag) in lags.iter().enumerate() {
        let m = prods[k].iter().sum::<f64>() / total;
        let var = prods[k].iter().map(|x| (x - m).powi(2)).sum::<f64>() / (total - 1.0);
        let se = (var / total).sqrt();
        assert!((m - kernel[lag]).abs() < 5.0 * se, "lag {lag}: {m} vs {}", kernel[lag]);
    }
}

#[test]
fn lattice_zero_lag_converges_to_continuum() {
    // Heavy mass and large box: image terms are ~e^{-mL}.
    let p = ModelParams::new(2, 2.0, 16.0, std::f64::consts::E).unwrap();
    let lat = TorusLattice::new(2, 64, 16.0).unwrap();
    let c_lat = SpectralDensity::bare(lat, &p).unwrap().c0();
    let c = covariance_zero(&p).unwrap();
    assert!(((c_lat - c) / c).abs() < 1e-8, "{c_lat} vs {c}");
}

#[test]
fn quadratic_form_matches_direct_double_sum() {
    let (lat, p) = small();
    let density = SpectralDensity::bare(lat, &p).unwrap();
    let kernel = density.kernel();
    let j = SourceSpec::Modes {
        modes: vec![
            Mode { k: vec![1, 0], amplitude: 0.7, phase: 0.2 },
            Mode { k: vec![2, -1], amplitude: -0.4, phase: 1.1 },
        ],
    }
    .build(&lat)
    .unwrap();
    let cj = covariance_convolve(&j, &density).unwrap();
    let fast = source_inner(&j, &cj).unwrap();
    let vol = lat.cell_volume();
    let mut direct = 0.0;
    for x in 0..lat.num_sites() {
        for y in 0..lat.num_sites() {
            direct += j.values()[x] * kernel[lat.lag_index(x, y)] * j.values()[y];
        }
    }
    direct *= vol * vol;
    assert!(((fast - direct) / direct).abs() < 1e-10);
    assert!(fast > 0.0);
}

#[test]
fn delta_source_reproduces_kernel() {
    let (lat, p) = small();
    let density = SpectralDensity::bare(lat, &p).unwrap();
    let kernel = density.kernel();
    let site = 19;
    let c = covariance_convolve(&SourceField::delta(lat, site), &density).unwrap();
    for x in 0..lat.num_sites() {
        assert!((c.values()[x] - kernel[lat.lag_index(x, site)]).abs() < 1e-12);
    }
}

#[test]
fn interaction_integral_is_a_riemann_sum() {
    let (lat, p) = small();
    let density = SpectralDensity::bare(lat, &p).unwrap();
    let phi = FieldSampler::new(&density).sample(42);
    let v = BoundedInteraction::catalog("arctan", None).unwrap();
    let direct: f64 = phi.values().iter().map(|x| x.atan()).sum::<f64>() * lat.cell_volume();
    assert!((interaction_integral(&phi, &v) - direct).abs() < 1e-12);
    assert!(interaction_integral(&phi, &v).abs() <= v.sup_norm() * lat.volume());
}

#[test]
fn cameron_martin_reweighting() {
    // E[V(φ + C̃J)] = E[e^{⟨φ,J⟩ - ½⟨J,C̃J⟩} V(φ)], both by Monte Carlo.
    let (lat, p) = small();
    let density = SpectralDensity::bare(lat, &p).unwrap();
    let sampler = FieldSampler::new(&density);
    let j = SourceSpec::single_mode(vec![1, 0], 0.5).build(&lat).unwrap();
    let cj = covariance_convolve(&j, &density).unwrap();
    let half_norm = 0.5 * source_inner(&j, &cj).unwrap();
    let v = BoundedInteraction::catalog("tanh", None).unwrap();
    let (mut shifted, mut weighted) = (Vec::new(), Vec::new());
    let n = lat.num_sites();
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    for s in 0..20_000u64 {
        sampler.sample_pair_into(s, &mut a, &mut b);
        for phi in [&a, &b] {
            let field = FieldSample::new(lat, phi.clone(), None);
            shifted.push(interaction_integral(&field.shifted(&cj).unwrap(), &v));
            let w = (pairing(&field, &j).unwrap() - half_norm).exp();
            weighted.push(w * interaction_integral(&field, &v));
        }
    }
    let stats = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
        (m, (var / x.len() as f64).sqrt())
    };
    let (m1, s1) = stats(&shifted);
    let (m2, s2) = stats(&weighted);
    assert!((m1 - m2).abs() < 4.0 * (s1 * s1 + s2 * s2).sqrt(), "{m1} vs {m2}");
}

#[test]
fn sampling_is_reproducible_per_seed() {
    let (lat, p) = small();
    let density = SpectralDensity::bare(lat, &p).unwrap();
    let s = FieldSampler::new(&density);
    assert_eq!(s.sample(7).values(), s.sample(7).values());
    assert_ne!(s.sample(7).values(), s.sample(8).values());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convolution_is_linear_and_translation_covariant(
        a in -2.0f64..2.0, b in -2.0f64..2.0, sx in -8i64..8, sy in -8i64..8, phase in 0.0f64..6.0
    ) {
        let (lat, p) = small();
        let density = SpectralDensity::bare(lat, &p).unwrap();
        let f = SourceSpec::Modes { modes: vec![Mode { k: vec![1, 2], amplitude: 1.0, phase }] }.build(&lat).unwrap();
        let g = SourceField::delta(lat, 5);
        let lhs = covariance_convolve(&f.scaled(a).add(&g.scaled(b)).unwrap(), &density).unwrap();
        let cf = covariance_convolve(&f, &density).unwrap();
        let cg = covariance_convolve(&g, &density).unwrap();
        for x in 0..lat.num_sites() {
            let rhs = a * cf.values()[x] + b * cg.values()[x];
            prop_assert!((lhs.values()[x] - rhs).abs() < 1e-10);
        }
        let shift = [sx, sy];
        let t1 = covariance_convolve(&g.translated(&shift), &density).unwrap();
        let t2 = cg.translated(&shift);
        for x in 0..lat.num_sites() {
            prop_assert!((t1.values()[x] - t2.values()[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_is_positive_semidefinite(vals in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let (lat, p) = small();
        let density = SpectralDensity::bare(lat, &p).unwrap();
        let j = SourceField::from_values(lat, vals).unwrap();
        let cj = covariance_convolve(&j, &density).unwrap();
        prop_assert!(source_inner(&j, &cj).unwrap() >= -1e-14);
    }
}

#[test]
fn zero_lag_gap_shrinks_with_refinement() {
    let p = ModelParams::new(2, 3.0, 8.0, 6.0).unwrap();
    let c = covariance_zero(&p).unwrap();
    let gaps: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let lat = TorusLattice::new(2, n, 8.0).unwrap();
            (SpectralDensity::bare(lat, &p).unwrap().c0() - c).abs()
        })
        .collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    assert!(gaps[2] / c < 1e-4);
}
