use qfi_bandlimit::quadrature::gauss_legendre_on;
use qfi_bandlimit::zernike_cfi::{cfi, mode_prob_derivatives, mode_probabilities, ZernikeMode};
use qfi_bandlimit::MONOCHROMATIC_QFI;
use std::f64::consts::PI;

fn bessel_integral(n: u32, z: f64) -> f64 {
    let m = 256;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|k| {
            let t = k as f64 * h;
            (n as f64 * t - z * t.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

/// Mode probabilities from the pupil projection integrals, averaged over a
/// flat band with Gauss-Legendre nodes in frequency.
fn pupil_probabilities(bw: f64, l: f64, phi: f64) -> [f64; 4] {
    let (u, wu) = gauss_legendre_on(48, 0.0, 1.0);
    let m = 96;
    let h = 2.0 * PI / m as f64;
    let (fs, wf) = if bw == 0.0 {
        (vec![0.0], vec![1.0])
    } else {
        let (f, w) = gauss_legendre_on(24, -0.5 * bw, 0.5 * bw);
        (f, w.iter().map(|w| w / bw).collect())
    };
    let mut out = [0.0; 4];
    for (f, wfreq) in fs.iter().zip(&wf) {
        let x = 2.0 * PI * (1.0 + f) * l;
        let mut amp = [(0.0, 0.0); 4];
        for (r, w) in u.iter().zip(&wu) {
            for k in 0..m {
                let a = k as f64 * h;
                let phase = -x * r * (a - phi).cos();
                let (s, c) = phase.sin_cos();
                let z = [
                    1.0,
                    2.0 * r * a.cos(),
                    2.0 * r * a.sin(),
                    3f64.sqrt() * (1.0 - 2.0 * r * r),
                ];
                for (n, zn) in z.iter().enumerate() {
                    amp[n].0 += w * h * r * zn * c / PI;
                    amp[n].1 += w * h * r * zn * s / PI;
                }
            }
        }
        for n in 0..4 {
            out[n] += wfreq * (amp[n].0 * amp[n].0 + amp[n].1 * amp[n].1);
        }
    }
    out
}

#[test]
fn probabilities_match_pupil_oracle() {
    for (bw, l, phi) in [
        (0.1, 0.2, 0.0),
        (0.1, 0.2, 0.7),
        (0.2, 1.3, 2.0),
        (0.0, 0.6, 0.3),
        (0.05, 2.0, 0.0),
    ] {
        let s = mode_probabilities(bw, l, phi).unwrap();
        let o = pupil_probabilities(bw, l, phi);
        for n in 0..4 {
            assert!(
                (s.probs[n] - o[n]).abs() < 1e-10,
                "({bw},{l},{phi}) n={n}: {} vs {}",
                s.probs[n],
                o[n]
            );
        }
    }
}

#[test]
fn defocus_bracket_reduces_to_j3() {
    for i in 0..60 {
        let x = 0.5 + 0.5 * i as f64;
        let (j0, j1, j3) = (
            bessel_integral(0, x),
            bessel_integral(1, x),
            bessel_integral(3, x),
        );
        let bracket = j0 * j0 / x.powi(4)
            + j1 * j1 * (4.0 / x.powi(6) - 1.0 / x.powi(4) + 1.0 / (16.0 * x * x))
            + j0 * j1 * (0.5 / x.powi(3) - 4.0 / x.powi(5));
        let want = j3 * j3 / (16.0 * x * x);
        assert!(
            (bracket - want).abs() < 1e-9 * want.abs().max(1e-6 / (x * x)),
            "x={x}"
        );
    }
}

/// Richardson-extrapolated central difference of `P_n` with base step `h`.
fn fd_derivative(bw: f64, l: f64, phi: f64, h: f64) -> [f64; 4] {
    let central = |h: f64| {
        let up = mode_probabilities(bw, l + h, phi).unwrap().probs;
        let dn = mode_probabilities(bw, l - h, phi).unwrap().probs;
        [0, 1, 2, 3].map(|n| (up[n] - dn[n]) / (2.0 * h))
    };
    let (a, b) = (central(h), central(0.5 * h));
    [0, 1, 2, 3].map(|n| (4.0 * b[n] - a[n]) / 3.0)
}

#[test]
fn derivatives_match_finite_differences() {
    let mut worst = 0.0f64;
    for bw in [0.05, 0.1, 0.2] {
        for i in 0..=78 {
            let l = 0.05 + 0.025 * i as f64;
            let s = mode_probabilities(bw, l, 0.4).unwrap();
            let fd = fd_derivative(bw, l, 0.4, 1e-5 * l);
            for n in 0..4 {
                let fd = fd[n];
                let rel = (fd - s.derivs[n]).abs() / s.derivs[n].abs();
                worst = worst.max(rel);
                assert!(rel < 1e-6, "B={bw} l={l} n={n}: {fd} vs {}", s.derivs[n]);
            }
        }
    }
    assert!(worst < 1e-6);
}

#[test]
fn monochromatic_derivatives_match_finite_differences() {
    for l in [0.1, 0.37, 1.0, 1.9] {
        let s = mode_probabilities(0.0, l, 0.0).unwrap();
        let fd = fd_derivative(0.0, l, 0.0, 1e-5 * l);
        for n in [0, 1, 3] {
            let fd = fd[n];
            assert!(
                (fd - s.derivs[n]).abs() < 1e-6 * s.derivs[n].abs(),
                "l={l} n={n}"
            );
        }
        assert_eq!(mode_prob_derivatives(&s), s.derivs);
    }
}

#[test]
fn vanishing_offset_puts_everything_in_piston() {
    for bw in [0.0, 0.1, 0.5] {
        let s = mode_probabilities(bw, 1e-6, 0.3).unwrap();
        assert!((s.probs[0] - 1.0).abs() < 1e-10);
        for n in 1..4 {
            assert!(s.probs[n] < 1e-10);
        }
    }
}

#[test]
fn azimuth_only_moves_weight_between_tip_and_tilt() {
    let a = mode_probabilities(0.1, 0.8, 0.0).unwrap();
    assert_eq!(a.probs[2], 0.0);
    assert_eq!(a.derivs[2], 0.0);
    for phi in [0.3, 1.0, 2.5] {
        let b = mode_probabilities(0.1, 0.8, phi).unwrap();
        assert!((a.probs[1] - b.probs[1] - b.probs[2]).abs() < 1e-15);
        assert_eq!(a.probs[0], b.probs[0]);
        assert_eq!(a.probs[3], b.probs[3]);
    }
}

#[test]
fn probabilities_are_sub_normalized() {
    for bw in [0.0, 0.1, 0.5] {
        for i in 0..100 {
            let l = 0.02 + 0.04 * i as f64;
            let s = mode_probabilities(bw, l, 0.9).unwrap();
            assert!(s.probs.iter().all(|p| *p >= 0.0));
            assert!(s.probs.iter().sum::<f64>() <= 1.0 + 1e-12);
            assert!((s.bucket_prob + s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!((s.bucket_deriv + s.derivs.iter().sum::<f64>()).abs() < 1e-12);
        }
    }
}

#[test]
fn cfi_matches_oracle_probabilities() {
    let (bw, l) = (0.1, 0.2);
    let h = 1e-4 * l;
    let p = pupil_probabilities(bw, l, 0.0);
    let up = pupil_probabilities(bw, l + h, 0.0);
    let dn = pupil_probabilities(bw, l - h, 0.0);
    let d: Vec<f64> = (0..4).map(|n| (up[n] - dn[n]) / (2.0 * h)).collect();
    let tip_tilt = d[1] * d[1] / p[1];
    let four: f64 = (0..4)
        .filter(|&n| p[n] > 0.0)
        .map(|n| d[n] * d[n] / p[n])
        .sum();
    let s = mode_probabilities(bw, l, 0.0).unwrap();
    let tt = cfi(&s, &[ZernikeMode::Tip, ZernikeMode::Tilt], false).unwrap();
    let all = cfi(&s, &ZernikeMode::ALL, false).unwrap();
    assert!(
        (tt.value - tip_tilt).abs() < 1e-5 * tip_tilt,
        "{} vs {tip_tilt}",
        tt.value
    );
    assert!(
        (all.value - four).abs() < 1e-5 * four,
        "{} vs {four}",
        all.value
    );
    assert!(tt.notes.iter().any(|n| n.contains("Z3")));
}

#[test]
fn bucket_term_adds_information() {
    let s = mode_probabilities(0.1, 0.2, 0.0).unwrap();
    let off = cfi(&s, &[ZernikeMode::Tip, ZernikeMode::Tilt], false).unwrap();
    let on = cfi(&s, &[ZernikeMode::Tip, ZernikeMode::Tilt], true).unwrap();
    assert_eq!(on.diagonal_sum, off.value);
    let pb = 1.0 - s.probs[1] - s.probs[2];
    let db = -(s.derivs[1] + s.derivs[2]);
    assert!((on.cross_sum - db * db / pb).abs() < 1e-12 * on.cross_sum);
}

#[test]
fn adding_modes_never_lowers_cfi() {
    use ZernikeMode::*;
    let sets: [&[ZernikeMode]; 4] = [
        &[Tip],
        &[Tip, Tilt],
        &[Piston, Tip, Tilt],
        &[Piston, Tip, Tilt, Defocus],
    ];
    for i in 0..40 {
        let l = 0.05 + 0.05 * i as f64;
        let s = mode_probabilities(0.15, l, 0.6).unwrap();
        let mut prev = 0.0;
        for m in sets {
            let v = cfi(&s, m, false).unwrap().value;
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}

#[test]
fn tip_tilt_information_vanishes_at_stationary_point() {
    // bracket the first interior zero of dP2/dl and check the CFI dip
    let d = |l: f64| mode_probabilities(0.1, l, 0.0).unwrap().derivs[1];
    let (mut a, mut b) = (0.3, 1.2);
    assert!(d(a) * d(b) < 0.0);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if d(a) * d(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let l0 = 0.5 * (a + b);
    let tt = |l: f64| {
        let s = mode_probabilities(0.1, l, 0.0).unwrap();
        cfi(&s, &[ZernikeMode::Tip, ZernikeMode::Tilt], false)
            .unwrap()
            .value
    };
    assert!(d(l0).abs() < 1e-10);
    assert!(tt(l0) < 1e-12);
    assert!(tt(l0 - 0.01) > tt(l0) && tt(l0 + 0.01) > tt(l0));
}

#[test]
fn tip_tilt_approaches_quantum_limit_at_small_separation() {
    for bw in [0.0, 0.1, 0.2] {
        let s = mode_probabilities(bw, 1e-3, 0.0).unwrap();
        let v = cfi(&s, &[ZernikeMode::Tip, ZernikeMode::Tilt], false)
            .unwrap()
            .value;
        assert!((v / MONOCHROMATIC_QFI - 1.0).abs() < 5e-3, "B={bw}: {v}");
    }
}

#[test]
fn argument_errors() {
    assert!(mode_probabilities(0.6, 1.0, 0.0).is_err());
    assert!(mode_probabilities(0.1, 0.0, 0.0).is_err());
    assert!(mode_probabilities(0.1, 1.0, f64::NAN).is_err());
    let s = mode_probabilities(0.1, 1.0, 0.0).unwrap();
    assert!(cfi(&s, &[], true).is_err());
}
