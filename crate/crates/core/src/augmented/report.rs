use serde::Serialize;

use crate::field::ScalarField;

use super::{AugmentedField, PointTag};

/// Share of the extended grid excluded from marching.
#[derive(Clone, Debug, Serialize)]
pub struct DomainReduction {
    /// Extended gridpoints outside obstacles.
    pub points: usize,
    pub capped: usize,
    pub below_mfl: usize,
    pub marched: usize,
    /// Percentage of points where the cap gives `w = u_0`.
    pub cap_percent: f64,
    /// Percentage of the remaining (non-capped) points below the MFL.
    pub mfl_percent: f64,
    /// Single budget: mean of `max(B_1 - v_10, 0) / B_1`, in percent.
    pub cap_formula_percent: Option<f64>,
    /// Single budget: mean of `min(B_1, u_1) / min(B_1, v_10)`, in percent.
    pub mfl_formula_percent: Option<f64>,
}

/// Counts the tags of a marched field and, for a single budget with `u_1` and
/// `v_10` given, evaluates the continuous ratio formulas as well.
pub fn domain_reduction_report(field: &AugmentedField, single: Option<(&ScalarField, &ScalarField)>) -> DomainReduction {
    let mut points = 0;
    let mut capped = 0;
    let mut below = 0;
    let mut marched = 0;
    for tag in &field.tags {
        match tag {
            PointTag::Blocked => continue,
            PointTag::Capped => capped += 1,
            PointTag::BelowMfl => below += 1,
            PointTag::Active => marched += 1,
            _ => {}
        }
        points += 1;
    }
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    let (cap_formula_percent, mfl_formula_percent) = match single {
        Some((u1, v10)) if field.budgets.r() == 1 => {
            let b1 = field.budgets.axis(0).bound;
            let mut cap_sum = 0.0;
            let mut cap_n = 0usize;
            let mut mfl_sum = 0.0;
            let mut mfl_n = 0usize;
            for k in field.grid.indices() {
                let (u, v) = (u1.at(k), v10.at(k));
                if !u.is_finite() || !v.is_finite() {
                    continue;
                }
                cap_sum += (b1 - v).max(0.0) / b1;
                cap_n += 1;
                let den = b1.min(v);
                if den > 0.0 {
                    mfl_sum += b1.min(u) / den;
                    mfl_n += 1;
                }
            }
            (
                (cap_n > 0).then(|| 100.0 * cap_sum / cap_n as f64),
                (mfl_n > 0).then(|| 100.0 * mfl_sum / mfl_n as f64),
            )
        }
        _ => (None, None),
    };
    DomainReduction {
        points,
        capped,
        below_mfl: below,
        marched,
        cap_percent: pct(capped, points),
        mfl_percent: pct(below, points - capped),
        cap_formula_percent,
        mfl_formula_percent,
    }
}
