use proptest::prelude::*;
use singular_drift::lab::stats::wasserstein1;
use singular_drift::sde::NoiseStream;
use singular_drift::spectral::{GridSpec, SobolevIndex, SpectralField, TimeField, TimeGrid};
use singular_drift::zvonkin::{InverseConfig, TransformContext};

fn trig(grid: GridSpec, a: &[f64]) -> SpectralField {
    SpectralField::from_fn(grid, 1, |x, out| {
        out[0] = a
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * x[0]).sin())
            .sum();
    })
}

proptest! {
    #[test]
    fn bessel_powers_compose(a in prop::collection::vec(-1.0f64..1.0, 5), s in -2.0f64..2.0, r in -2.0f64..2.0) {
        let f = trig(GridSpec::periodic(1, 32).unwrap(), &a);
        let lhs = f.bessel_power(s).bessel_power(r);
        prop_assert!(lhs.max_coeff_diff(&f.bessel_power(s + r)) <= 1e-12 * (1.0 + f.parseval_norm(4.0)));
    }

    #[test]
    fn heat_contracts_every_norm(a in prop::collection::vec(-1.0f64..1.0, 5), t in 0.0f64..2.0, s in -1.0f64..2.0) {
        let f = trig(GridSpec::periodic(1, 32).unwrap(), &a);
        let idx = SobolevIndex::new(s, 2.0).unwrap();
        prop_assert!(f.heat_semigroup(t).sobolev_norm(idx) <= (-t).exp() * f.sobolev_norm(idx) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn transform_round_trip(amp in 0.0f64..0.45, t in 0.0f64..1.0, y in -10.0f64..10.0) {
        // u = amp sin x has |u'| <= amp < 1/2
        let grid = GridSpec::periodic(1, 16).unwrap();
        let u = TimeField::constant(TimeGrid::new(1.0, 4).unwrap(), trig(grid, &[amp]));
        let ctx = TransformContext::new(u, InverseConfig::default()).unwrap();
        let x = ctx.psi(t, &[y]).unwrap();
        prop_assert!((ctx.phi(t, &x)[0] - y).abs() <= 1e-11);
        prop_assert!((x[0] + amp * x[0].sin() - y).abs() <= 1e-11);
    }

    #[test]
    fn w1_is_translation_equivariant(x in prop::collection::vec(-5.0f64..5.0, 1..40), shift in -3.0f64..3.0) {
        let y: Vec<f64> = x.iter().map(|v| v + shift).collect();
        prop_assert!((wasserstein1(&x, &y) - shift.abs()).abs() <= 1e-12);
    }

    #[test]
    fn noise_seek_is_stateless(seed in any::<u64>(), path in 0u64..1000, j in 0usize..64) {
        let mut a = NoiseStream::new(seed, path, 2, 1.0, 64, 1);
        let mut buf = [0.0; 2];
        for _ in 0..j {
            a.next_increment(&mut buf);
        }
        let mut b = NoiseStream::new(seed, path, 2, 1.0, 64, 1);
        b.seek(j);
        let (mut x, mut y) = ([0.0; 2], [0.0; 2]);
        a.next_increment(&mut x);
        b.next_increment(&mut y);
        prop_assert_eq!(x, y);
    }
}
