use nalgebra::{DMatrix, SymmetricEigen};
use qfi_bandlimit::fisher::{pair_cross_elements, pair_drho_element, pair_matrix_elements};
use qfi_bandlimit::pswf::{build_basis, default_truncation};
use qfi_bandlimit::quadrature::gauss_legendre;
use qfi_bandlimit::spdo_loc::SolveOptions;
use qfi_bandlimit::spdo_pair::{build_pair_matrices, solve_pair};
use qfi_bandlimit::Error;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn o_oracle(z: f64) -> f64 {
    let z = z.abs();
    if z < 1.0 {
        let mut t = 1.0;
        let mut s = 1.0;
        for k in 1..30 {
            t *= -0.25 * z * z / (k as f64 * (k + 1) as f64);
            s += t;
        }
        s
    } else {
        let m = 512;
        let h = 2.0 * PI / m as f64;
        let j1 = (0..m)
            .map(|k| (k as f64 * h - z * (k as f64 * h).sin()).cos())
            .sum::<f64>()
            / m as f64;
        2.0 * j1 / z
    }
}

/// Eigenvalues of the pair density operator from the Gram operator of the
/// `2n` states `|K_{±f_k}⟩`, descending.
fn pair_nystrom(bw: f64, l: f64, n: usize) -> Vec<f64> {
    let (x, w) = gauss_legendre(n);
    let f: Vec<f64> = x.iter().map(|t| 0.5 * bw * t).collect();
    let w: Vec<f64> = w.iter().map(|t| 0.25 * t).collect();
    let a = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (si, fi) = (i / n, f[i % n]);
        let (sj, fj) = (j / n, f[j % n]);
        let arg = if si == sj { fi - fj } else { 2.0 + fi + fj };
        (w[i % n] * w[j % n]).sqrt() * o_oracle(2.0 * PI * arg * l)
    });
    let mut v: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[test]
fn spectrum_matches_two_source_gram_oracle() {
    for (bw, l) in [(0.1, 1.0), (0.2, 2.0), (0.05, 0.3)] {
        let (p, m) = solve_pair(bw, l, &SolveOptions::default()).unwrap();
        let mut ours: Vec<f64> = p.eigs().into_iter().chain(m.eigs()).collect();
        ours.sort_by(|a, b| b.total_cmp(a));
        let oracle = pair_nystrom(bw, l, 64);
        for (k, v) in ours.iter().enumerate() {
            assert!(
                (v - oracle[k]).abs() < 1e-9 * v + 1e-14,
                "({bw},{l}) k={k}: {v} vs {}",
                oracle[k]
            );
        }
    }
}

#[test]
fn unit_trace_over_both_subspaces() {
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..20 {
        let bw: f64 = rng.gen_range(0.001..0.5);
        let l: f64 = rng.gen_range(0.01..8.0);
        let (p, m) = solve_pair(bw, l, &SolveOptions::default()).unwrap();
        let t = p.trace() + m.trace();
        assert!((t - 1.0).abs() < 1e-8, "({bw},{l}): {t}");
    }
}

#[test]
fn coincident_sources_leave_odd_subspace_empty() {
    let (p, m) = solve_pair(0.1, 1e-3, &SolveOptions::default()).unwrap();
    assert!(m.trace() < 1e-5, "{}", m.trace());
    assert!((p.trace() - 1.0).abs() < 1e-5);
    let c = PI * 0.1 * 1e-4;
    let b = build_basis(c, default_truncation(c), 2048).unwrap();
    let (ft, gt) = build_pair_matrices(&b, 1e-4).unwrap();
    let diff = ft
        .iter()
        .zip(&gt)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(diff < 1e-5);
}

#[test]
fn matrices_are_real_symmetric_with_parity_zeros() {
    let (bw, l) = (0.2, 2.0);
    let c = PI * bw * l;
    let b = build_basis(c, default_truncation(c), 4096).unwrap();
    let (ft, gt) = build_pair_matrices(&b, l).unwrap();
    let n = b.len();
    for i in 0..n {
        for j in 0..n {
            assert!((ft[i * n + j] - ft[j * n + i]).abs() < 1e-15);
            assert!((gt[i * n + j] - gt[j * n + i]).abs() < 1e-15);
            if (i + j) % 2 == 1 {
                assert_eq!(ft[i * n + j], 0.0);
            }
        }
    }
}

#[test]
fn retained_count_tracks_shannon_number() {
    let (p, m) = solve_pair(0.1, 1.0, &SolveOptions::default()).unwrap();
    let s = (2.0 * PI * 0.1 * 1.0 / PI).ceil() as usize;
    assert!(p.states.len() <= s + 4 && m.states.len() <= s + 4);
    let all: Vec<f64> = p.eigs().into_iter().chain(m.eigs()).collect();
    let lmax = all.iter().copied().fold(0.0, f64::max);
    let lmin = all.iter().copied().fold(1.0, f64::min);
    assert!(lmax / lmin > 1e9);
}

#[test]
fn t_vectors_orthonormal_after_renormalization() {
    let (bw, l) = (0.2, 2.0);
    let (p, m) = solve_pair(bw, l, &SolveOptions::default()).unwrap();
    for sys in [&p, &m] {
        for (i, a) in sys.states.iter().enumerate() {
            for (j, b) in sys.states.iter().enumerate() {
                let dot: f64 = a.t_vector.iter().zip(&b.t_vector).map(|(x, y)| x * y).sum();
                let g = dot * l * (a.eigenvalue * b.eigenvalue).sqrt() / bw;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-10, "{i},{j}: {g}");
            }
        }
    }
}

#[test]
fn coefficient_normalization() {
    let (p, m) = solve_pair(0.1, 1.0, &SolveOptions::default()).unwrap();
    for sys in [&p, &m] {
        for s in &sys.states {
            let sq: Vec<f64> = s.coeff.iter().map(|d| d * d).collect();
            let g = 4.0 * s.eigenvalue * sys.rule.integrate_values(&sq, |_| 1.0);
            assert!((g - 1.0).abs() < 1e-6, "{g}");
        }
    }
}

#[test]
fn near_monochromatic_trace_split() {
    let (p, m) = solve_pair(1e-3, 0.5, &SolveOptions::default()).unwrap();
    assert!((p.states[0].eigenvalue + m.states[0].eigenvalue - 1.0).abs() < 1e-6);
    let (p, m) = solve_pair(0.0, 0.5, &SolveOptions::default()).unwrap();
    let o2 = o_oracle(2.0 * PI * 2.0 * 0.5);
    assert!((p.eigs()[0] - 0.5 * (1.0 + o2)).abs() < 1e-14);
    assert!((m.eigs()[0] - 0.5 * (1.0 - o2)).abs() < 1e-14);
}

#[test]
fn cross_subspace_derivative_elements_vanish() {
    for (bw, l) in [(0.1, 1.0), (0.2, 0.5), (0.1, 0.2)] {
        let (p, m) = solve_pair(bw, l, &SolveOptions::default()).unwrap();
        let x = pair_cross_elements(&p, &m).unwrap();
        assert!(x < 1e-10, "({bw},{l}): {x}");
    }
}

#[test]
fn direct_elements_match_subspace_elements() {
    let (p, m) = solve_pair(0.1, 1.0, &SolveOptions::default()).unwrap();
    for sys in [&p, &m] {
        let (d, _) = pair_matrix_elements(sys).unwrap();
        let r = sys.states.len();
        let pi = sys.sign as f64;
        for i in 0..r.min(3) {
            for j in 0..r.min(3) {
                let direct =
                    pair_drho_element(sys, &sys.states[i], pi, &sys.states[j], pi).unwrap();
                let scale = d[i * r + i].abs().max(1.0);
                assert!(
                    (direct - d[i * r + j]).abs() < 1e-9 * scale,
                    "{i},{j}: {direct} vs {}",
                    d[i * r + j]
                );
            }
        }
    }
}

#[test]
fn mismatched_subspaces_are_rejected() {
    let (p, _) = solve_pair(0.1, 1.0, &SolveOptions::default()).unwrap();
    let (_, m) = solve_pair(0.1, 0.5, &SolveOptions::default()).unwrap();
    assert!(matches!(
        pair_cross_elements(&p, &m),
        Err(Error::Mismatch(_))
    ));
    assert!(matches!(
        pair_cross_elements(&p, &p),
        Err(Error::Mismatch(_))
    ));
}
