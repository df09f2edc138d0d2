use super::{Graph, Tensor, TensorError, Var};

/// Gradient magnitudes below this are compared on an absolute scale: the
/// relative error is `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
/// Central differences carry roughly `1e-16 * |loss| / step` of rounding
/// noise, which swamps a purely relative comparison for vanishing gradients.
pub const GRADCHECK_SCALE_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub passed: bool,
    pub worst_rel_error: f64,
    /// Coordinates compared.
    pub checked: usize,
    /// `(leaf position, flat index)` pairs whose perturbation crossed a relu
    /// or abs kink and so have no classical derivative to compare.
    pub excluded: Vec<(usize, usize)>,
}

fn evaluate<F, E>(builder: &F, point: &[Tensor]) -> std::result::Result<(f64, Vec<i8>), E>
where
    F: Fn(&mut Graph, &[Var]) -> std::result::Result<Var, E>,
    E: From<TensorError>,
{
    let mut g = Graph::new();
    let leaves: Vec<Var> = point.iter().map(|t| g.leaf(t.clone(), false)).collect();
    let loss = builder(&mut g, &leaves)?;
    let value = g
        .value(loss)
        .item()
        .ok_or_else(|| TensorError::NonScalarLoss(g.value(loss).shape().to_vec()))?;
    Ok((value, g.kink_signature()))
}

/// Compares reverse-mode gradients of `builder` at `point` with central
/// differences of width `2 * step`. The builder may fail with any error that
/// tensor errors convert into.
pub fn finite_diff_check<F, E>(
    builder: F,
    point: &[Tensor],
    step: f64,
    tolerance: f64,
) -> std::result::Result<GradCheckReport, E>
where
    F: Fn(&mut Graph, &[Var]) -> std::result::Result<Var, E>,
    E: From<TensorError>,
{
    let mut g = Graph::new();
    let leaves: Vec<Var> = point.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let loss = builder(&mut g, &leaves)?;
    let grads = g.backward(loss)?;
    let base_sig = g.kink_signature();

    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut excluded = Vec::new();
    let mut probe = point.to_vec();
    for (li, leaf) in leaves.iter().enumerate() {
        let analytic = grads.get(*leaf).expect("leaf requires grad");
        for idx in 0..point[li].len() {
            let orig = point[li].data()[idx];
            probe[li].data_mut()[idx] = orig + step;
            let (plus, sig_plus) = evaluate(&builder, &probe)?;
            probe[li].data_mut()[idx] = orig - step;
            let (minus, sig_minus) = evaluate(&builder, &probe)?;
            probe[li].data_mut()[idx] = orig;

            if sig_plus != base_sig || sig_minus != base_sig {
                excluded.push((li, idx));
                continue;
            }
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic.data()[idx];
            let denom = a.abs().max(numeric.abs()).max(GRADCHECK_SCALE_FLOOR);
            let rel = (a - numeric).abs() / denom;
            worst = worst.max(rel);
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        passed: worst < tolerance && worst.is_finite(),
        worst_rel_error: worst,
        checked,
        excluded,
    })
}
