use betabaker::beta_shift::{
    f_beta, greedy_expansion, greedy_expansion_detailed, phi_prefix, quasi_greedy_one, BetaSystem,
    DMinus,
};
use betabaker::derived::beta_n_word;
use betabaker::EPWord;
use proptest::prelude::*;

const TABLE_BETA: [f64; 5] = [1.558980, 1.438417, 1.365039, 1.315114, 1.278665];
const TABLE_INV: [f64; 5] = [0.641445, 0.695209, 0.732580, 0.760390, 0.782066];

// Root of Σ_k d_k β^{-k} = 1 for d = (1, 0^n, (1, 0^{n+1})^∞), by explicit
// digit summation and plain bisection.
fn beta_n_oracle(n: usize) -> f64 {
    let digits: Vec<u32> = (0..600)
        .map(|k| match k {
            0 => 1,
            k if k <= n => 0,
            k => u32::from((k - n - 1).is_multiple_of(n + 2)),
        })
        .collect();
    let value = |b: f64| {
        digits
            .iter()
            .enumerate()
            .map(|(k, &d)| d as f64 * b.powi(-(k as i32 + 1)))
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (1.01, 2.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if value(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn table_systems() -> Vec<BetaSystem<f64>> {
    (1..=5)
        .map(|n| BetaSystem::from_greedy_word(&beta_n_word(n).unwrap()).unwrap())
        .collect()
}

#[test]
fn table_values_match_oracle_and_published_digits() {
    for (i, sys) in table_systems().iter().enumerate() {
        let b = sys.beta();
        assert!((b - beta_n_oracle(i + 1)).abs() < 1e-12, "n = {}", i + 1);
        assert!((b - TABLE_BETA[i]).abs() < 1e-5);
        assert!((1.0 / b - TABLE_INV[i]).abs() < 1e-5);
    }
}

#[test]
fn chain_head_solves_to_published_value() {
    let sys = BetaSystem::<f64>::from_greedy_word(&"1,1,0;1,0".parse().unwrap()).unwrap();
    assert!((sys.beta() - 1.801938).abs() < 1e-5);
    assert!((1.0 / sys.beta() - 0.554958).abs() < 1e-5);
}

#[test]
fn quasi_greedy_words_of_table_betas_are_exact() {
    for (n, sys) in (1..=5).zip(table_systems()) {
        match sys.dminus() {
            DMinus::Exact(w) => assert_eq!(w, &beta_n_word(n).unwrap()),
            other => panic!("{other:?}"),
        }
    }
    let golden = quasi_greedy_one(&EPWord::finite(vec![1, 1]).unwrap()).unwrap();
    assert_eq!(golden, ";1,0".parse::<EPWord>().unwrap());
}

// Number of leading digits for which float drift stays far below the
// boundary tolerance.
fn safe_depth(beta: f64) -> usize {
    ((1e6f64).ln() / beta.ln()).floor().clamp(1.0, 40.0) as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn greedy_commutes_with_the_beta_map(x in 0.0f64..1.0, beta in 1.05f64..3.5) {
        let n = safe_depth(beta);
        let g = greedy_expansion_detailed(x, beta, n + 1).unwrap();
        let h = greedy_expansion_detailed(f_beta(x, beta), beta, n).unwrap();
        let reliable = g.first_unreliable.unwrap_or(n + 1).min(h.first_unreliable.map_or(n + 1, |k| k + 1));
        for k in 1..reliable {
            prop_assert_eq!(g.digits[k], h.digits[k - 1], "digit {}", k);
        }
    }

    #[test]
    fn phi_reconstructs_within_tail(x in 0.0f64..1.0, beta in 1.05f64..3.5, n in 1usize..40) {
        let digits = greedy_expansion(x, beta, n).unwrap();
        let r = x - phi_prefix(&digits, beta);
        prop_assert!(r >= -1e-12 && r <= beta.powi(-(n as i32)) + 1e-12, "residual {}", r);
    }

    #[test]
    fn greedy_digits_are_admissible(x in 0.0f64..1.0, beta in 1.05f64..3.5) {
        let sys = BetaSystem::from_beta(beta).unwrap();
        let n = safe_depth(beta);
        let g = greedy_expansion_detailed(x, beta, n).unwrap();
        let k = g.first_unreliable.unwrap_or(n);
        prop_assert!(sys.is_admissible_prefix(&g.digits[..k]).unwrap());
    }

    #[test]
    fn quasi_greedy_word_is_self_admissible(beta in 1.05f64..3.5) {
        let sys = BetaSystem::from_beta(beta).unwrap();
        match sys.dminus() {
            DMinus::Exact(w) => prop_assert!(sys.is_admissible(w).unwrap()),
            DMinus::Truncated(ds) => prop_assert!(sys.is_admissible_prefix(ds).unwrap()),
        }
    }

    #[test]
    fn table_shifts_are_nested(pre in prop::collection::vec(0u32..2, 0..8), per in prop::collection::vec(0u32..2, 1..8)) {
        let w = EPWord::new(pre, per, 1).unwrap();
        let systems = table_systems();
        for pair in systems.windows(2) {
            let (larger, smaller) = (&pair[0], &pair[1]);
            prop_assert!(larger.beta() > smaller.beta());
            if smaller.is_admissible(&w).unwrap() {
                prop_assert!(larger.is_admissible(&w).unwrap());
            }
        }
    }
}
