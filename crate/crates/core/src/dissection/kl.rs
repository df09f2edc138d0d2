use super::{DissectError, Result};

pub const KL_EPSILON: f64 = 1e-12;

const NORMALIZATION_TOL: f64 = 1e-9;

fn check(name: &str, v: &[f64]) -> Result<()> {
    if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(DissectError::Distribution(format!("{name} has entry {bad}")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(DissectError::Distribution(format!("{name} sums to {total}")));
    }
    Ok(())
}

/// `Σᵢ pᵢ ln(pᵢ / max(qᵢ, ε))`, natural log, with `pᵢ = 0` terms dropped.
///
/// Identical inputs give exactly 0. Clamping `q` can make the sum dip a few
/// ulps below zero when `p` has mass under `ε`, so the result is floored at 0.
pub fn kl_divergence(p: &[f64], q: &[f64], epsilon: f64) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(DissectError::Distribution(format!(
            "length mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    check("p", p)?;
    check("q", q)?;
    let total: f64 = p
        .iter()
        .zip(q)
        .filter(|(pi, qi)| **pi > 0.0 && pi != qi)
        .map(|(&pi, &qi)| pi * (pi / qi.max(epsilon)).ln())
        .sum();
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_is_zero() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p, KL_EPSILON).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_against_uniform_is_ln2() {
        let v = kl_divergence(&[1.0, 0.0], &[0.5, 0.5], KL_EPSILON).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_in_q_is_clamped() {
        // 0.5 ln(0.5) + 0.5 ln(0.5 / 1e-12)
        let want = 0.5 * 0.5f64.ln() + 0.5 * (0.5f64 / 1e-12).ln();
        let v = kl_divergence(&[0.5, 0.5], &[1.0, 0.0], KL_EPSILON).unwrap();
        assert!((v - want).abs() < 1e-12);
        assert!((v - 13.1224).abs() < 1e-3, "{v}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(kl_divergence(&[1.0], &[0.5, 0.5], KL_EPSILON).is_err());
        assert!(kl_divergence(&[0.6, 0.6], &[0.5, 0.5], KL_EPSILON).is_err());
        assert!(kl_divergence(&[1.5, -0.5], &[0.5, 0.5], KL_EPSILON).is_err());
    }

    fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("non-zero mass", |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| w.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn non_negative(p in distribution(6), q in distribution(6)) {
            prop_assert!(kl_divergence(&p, &q, KL_EPSILON).unwrap() >= 0.0);
        }

        #[test]
        fn self_divergence_vanishes(p in distribution(5)) {
            prop_assert_eq!(kl_divergence(&p, &p, KL_EPSILON).unwrap(), 0.0);
        }
    }
}
