//! Least squares via QR, pooled and with group fixed effects.

use super::StatsError;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// One named regressor.
#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            values,
        }
    }
}

/// A fitted regression. `standard_errors` is parallel to `coefficients`;
/// `fixed_effect_levels` carries the recovered per-group intercepts of a
/// within-group fit and is `None` for pooled regressions.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub coefficients: Vec<(String, f64)>,
    pub standard_errors: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub fixed_effect_levels: Option<Vec<(String, f64)>>,
    pub residuals: Vec<f64>,
}

/// Ordinary least squares of `y` on the named columns, optionally with an
/// intercept (reported first, named `intercept`). Standard errors come from
/// `sigma_hat^2 (X'X)^{-1}`; `r_squared` uses the centered total sum of
/// squares when an intercept is present and the uncentered one otherwise.
pub fn ols(y: &[f64], columns: &[Column], intercept: bool) -> Result<RegressionResult, StatsError> {
    check_inputs(y, columns)?;
    let n = y.len();
    let k = columns.len();
    let p = k + usize::from(intercept);
    if intercept && columns.iter().any(|c| c.name == "intercept") {
        return Err(StatsError::Validation(
            "a column may not be named `intercept` when an intercept is requested".into(),
        ));
    }
    if n <= p {
        return Err(StatsError::InsufficientData(format!(
            "{n} observations cannot identify {p} parameters"
        )));
    }

    let mut names = Vec::with_capacity(p);
    let design = DMatrix::from_fn(n, p, |i, j| {
        if intercept {
            if j == 0 {
                1.0
            } else {
                columns[j - 1].values[i]
            }
        } else {
            columns[j].values[i]
        }
    });
    if intercept {
        names.push("intercept".to_string());
    }
    names.extend(columns.iter().map(|c| c.name.clone()));

    let fit = least_squares(design, &names, y, n - p)?;

    let sst = if intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };

    Ok(RegressionResult {
        coefficients: names.into_iter().zip(fit.beta).collect(),
        standard_errors: fit.se,
        r_squared: r_squared(fit.ssr, sst),
        n_obs: n,
        fixed_effect_levels: None,
        residuals: fit.residuals,
    })
}

/// Least squares with one intercept per group, estimated by demeaning `y`
/// and every column within each group and fitting without an intercept.
/// Slopes therefore reflect only within-group covariation. Degrees of
/// freedom charge for all group intercepts, so standard errors match the
/// equivalent dummy-variable regression; the per-group intercepts are
/// recovered as `mean(y_g) - sum_j beta_j mean(x_gj)` and returned sorted.
/// `r_squared` is the within version: explained share of demeaned variance.
pub fn ols_fixed_effects(
    y: &[f64],
    columns: &[Column],
    groups: &[String],
) -> Result<RegressionResult, StatsError> {
    check_inputs(y, columns)?;
    let n = y.len();
    let k = columns.len();
    if groups.len() != n {
        return Err(StatsError::Validation(format!(
            "{} group labels for {n} observations",
            groups.len()
        )));
    }

    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    let n_groups = members.len();
    if n <= k + n_groups {
        return Err(StatsError::InsufficientData(format!(
            "{n} observations cannot identify {k} slopes plus {n_groups} group intercepts"
        )));
    }

    let demean = |values: &[f64]| -> Vec<f64> {
        let mut out = values.to_vec();
        for indices in members.values() {
            let mean = indices.iter().map(|&i| values[i]).sum::<f64>() / indices.len() as f64;
            for &i in indices {
                out[i] -= mean;
            }
        }
        out
    };

    let y_within = demean(y);
    let mut within_cols = Vec::with_capacity(k);
    let mut names = Vec::with_capacity(k);
    for col in columns {
        let within = demean(&col.values);
        let scale = col.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if within.iter().all(|v| v.abs() <= 1e-10 * scale) {
            return Err(StatsError::Unidentified(format!(
                "column `{}` has no within-group variation",
                col.name
            )));
        }
        within_cols.push(within);
        names.push(col.name.clone());
    }
    let design = DMatrix::from_fn(n, k, |i, j| within_cols[j][i]);

    let fit = least_squares(design, &names, &y_within, n - k - n_groups)?;

    let levels = members
        .iter()
        .map(|(group, indices)| {
            let m = indices.len() as f64;
            let y_mean = indices.iter().map(|&i| y[i]).sum::<f64>() / m;
            let x_part: f64 = columns
                .iter()
                .zip(&fit.beta)
                .map(|(col, beta)| beta * indices.iter().map(|&i| col.values[i]).sum::<f64>() / m)
                .sum();
            (group.to_string(), y_mean - x_part)
        })
        .collect();

    let sst = y_within.iter().map(|v| v * v).sum::<f64>();
    Ok(RegressionResult {
        coefficients: names.into_iter().zip(fit.beta).collect(),
        standard_errors: fit.se,
        r_squared: r_squared(fit.ssr, sst),
        n_obs: n,
        fixed_effect_levels: Some(levels),
        residuals: fit.residuals,
    })
}

fn check_inputs(y: &[f64], columns: &[Column]) -> Result<(), StatsError> {
    if y.is_empty() {
        return Err(StatsError::Validation("no observations".into()));
    }
    if columns.is_empty() {
        return Err(StatsError::Validation("no regressors".into()));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(StatsError::Validation("non-finite response value".into()));
    }
    for (j, col) in columns.iter().enumerate() {
        if col.values.len() != y.len() {
            return Err(StatsError::Validation(format!(
                "column `{}` has {} values for {} observations",
                col.name,
                col.values.len(),
                y.len()
            )));
        }
        if !col.values.iter().all(|v| v.is_finite()) {
            return Err(StatsError::Validation(format!(
                "non-finite value in column `{}`",
                col.name
            )));
        }
        if col.name.is_empty() || columns[..j].iter().any(|c| c.name == col.name) {
            return Err(StatsError::Validation(format!(
                "column names must be unique and non-empty; `{}` is not",
                col.name
            )));
        }
    }
    Ok(())
}

struct Fit {
    beta: Vec<f64>,
    se: Vec<f64>,
    residuals: Vec<f64>,
    ssr: f64,
}

/// Thin-QR solve of `design * beta = y` with rank checking on the diagonal
/// of R (a vanishing pivot means the column is a combination of the ones
/// before it). `dof` is the error degrees of freedom used for
/// `sigma_hat^2`, which callers vary because fixed effects consume extra.
fn least_squares(
    design: DMatrix<f64>,
    names: &[String],
    y: &[f64],
    dof: usize,
) -> Result<Fit, StatsError> {
    let n = design.nrows();
    let p = design.ncols();
    let qr = design.clone().qr();
    let q = qr.q();
    let r = qr.r();

    let max_pivot = (0..p).fold(0.0f64, |m, i| m.max(r[(i, i)].abs()));
    for i in 0..p {
        if r[(i, i)].abs() < 1e-10 * max_pivot.max(1.0) {
            return Err(StatsError::Collinear {
                column: names[i].clone(),
            });
        }
    }

    let qty = q.transpose() * DVector::from_column_slice(y);
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for j in i + 1..p {
            acc -= r[(i, j)] * beta[j];
        }
        beta[i] = acc / r[(i, i)];
    }

    let mut residuals = y.to_vec();
    for i in 0..n {
        for j in 0..p {
            residuals[i] -= design[(i, j)] * beta[j];
        }
    }
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = ssr / dof as f64;

    // cov(beta) = sigma^2 (R'R)^{-1} = sigma^2 R^{-1} R^{-T}, so the j-th
    // variance is sigma^2 times the squared norm of row j of R^{-1}
    let mut rinv = DMatrix::zeros(p, p);
    for c in 0..p {
        for i in (0..=c).rev() {
            let mut acc = if i == c { 1.0 } else { 0.0 };
            for j in i + 1..=c {
                acc -= r[(i, j)] * rinv[(j, c)];
            }
            rinv[(i, c)] = acc / r[(i, i)];
        }
    }
    let se = (0..p)
        .map(|j| {
            let row_sq: f64 = (j..p).map(|c| rinv[(j, c)].powi(2)).sum();
            (sigma2 * row_sq).sqrt()
        })
        .collect();

    Ok(Fit {
        beta,
        se,
        residuals,
        ssr,
    })
}

/// Guarded 1 - SSR/SST: a (numerically) zero total sum of squares reports
/// zero rather than 0/0, and float dust cannot push the ratio outside [0, 1].
fn r_squared(ssr: f64, sst: f64) -> f64 {
    if sst <= 0.0 {
        return 0.0;
    }
    (1.0 - ssr / sst).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn col(name: &str, values: &[f64]) -> Column {
        Column::new(name, values.to_vec())
    }

    /// Independent check: solve the normal equations X'X b = X'y by
    /// Gaussian elimination with partial pivoting, inverting X'X along the
    /// way for the standard errors. Shares no code with the QR path.
    fn normal_equations(rows: &[Vec<f64>], y: &[f64], dof: usize) -> (Vec<f64>, Vec<f64>) {
        let p = rows[0].len();
        let mut xtx = vec![vec![0.0; p]; p];
        let mut xty = vec![0.0; p];
        for (row, &yi) in rows.iter().zip(y) {
            for i in 0..p {
                xty[i] += row[i] * yi;
                for j in 0..p {
                    xtx[i][j] += row[i] * row[j];
                }
            }
        }
        // augment with identity and with X'y, eliminate
        let mut aug: Vec<Vec<f64>> = xtx
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut v = r.clone();
                v.extend((0..p).map(|j| f64::from(u8::from(i == j))));
                v.push(xty[i]);
                v
            })
            .collect();
        for c in 0..p {
            let pivot = (c..p).max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs())).unwrap();
            aug.swap(c, pivot);
            let d = aug[c][c];
            for v in aug[c].iter_mut() {
                *v /= d;
            }
            for r2 in 0..p {
                if r2 != c {
                    let f = aug[r2][c];
                    for j in 0..aug[r2].len() {
                        aug[r2][j] -= f * aug[c][j];
                    }
                }
            }
        }
        let beta: Vec<f64> = (0..p).map(|i| aug[i][2 * p]).collect();
        let mut ssr = 0.0;
        for (row, &yi) in rows.iter().zip(y) {
            let fitted: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            ssr += (yi - fitted).powi(2);
        }
        let sigma2 = ssr / dof as f64;
        let se = (0..p).map(|i| (sigma2 * aug[i][p + i]).sqrt()).collect();
        (beta, se)
    }

    #[test]
    fn exact_line_is_recovered_exactly() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols(&y, &[col("x", &x)], true).unwrap();
        assert_eq!(fit.coefficients[0].0, "intercept");
        assert!(fit.coefficients[0].1.abs() < 1e-12);
        assert_eq!(fit.coefficients[1].0, "x");
        assert!((fit.coefficients[1].1 - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-10));
        assert_eq!(fit.n_obs, 10);
        assert!(fit.fixed_effect_levels.is_none());
    }

    #[test]
    fn constant_response_has_zero_slope_and_zero_r2() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let y = vec![5.0; 8];
        let fit = ols(&y, &[col("x", &x)], true).unwrap();
        assert!(fit.coefficients[1].1.abs() < 1e-12);
        assert!((fit.coefficients[0].1 - 5.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn three_point_fit_matches_hand_computation() {
        // x = [1,2,3], y = [1,3,2]: slope 1/2, intercept 1, SSR 3/2,
        // SST 2, R^2 1/4, se(slope) = sqrt(3/4), se(intercept) = sqrt(7/2)
        let fit = ols(&[1.0, 3.0, 2.0], &[col("x", &[1.0, 2.0, 3.0])], true).unwrap();
        assert!((fit.coefficients[0].1 - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1].1 - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 0.25).abs() < 1e-12);
        assert!((fit.standard_errors[0] - 3.5f64.sqrt()).abs() < 1e-12);
        assert!((fit.standard_errors[1] - 0.75f64.sqrt()).abs() < 1e-12);
        let expected_resid = [-0.5, 1.0, -0.5];
        for (e, want) in fit.residuals.iter().zip(expected_resid) {
            assert!((e - want).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_matches_the_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..20 {
            let n = 50;
            let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..n)
                .map(|i| 1.5 + 0.7 * x1[i] - 2.2 * x2[i] + rng.gen_range(-1.0..1.0))
                .collect();
            let fit = ols(&y, &[col("x1", &x1), col("x2", &x2)], true).unwrap();
            let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0, x1[i], x2[i]]).collect();
            let (beta, se) = normal_equations(&rows, &y, n - 3);
            for j in 0..3 {
                assert!(
                    (fit.coefficients[j].1 - beta[j]).abs() < 1e-8,
                    "trial {trial} beta {j}: {} vs {}",
                    fit.coefficients[j].1,
                    beta[j]
                );
                assert!(
                    (fit.standard_errors[j] - se[j]).abs() < 1e-8,
                    "trial {trial} se {j}"
                );
            }
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_every_regressor() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 40;
        let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let fit = ols(&y, &[col("x1", &x1), col("x2", &x2)], true).unwrap();
        for column in [&vec![1.0; n], &x1, &x2] {
            let dot: f64 = fit.residuals.iter().zip(column).map(|(e, x)| e * x).sum();
            assert!(dot.abs() < 1e-8, "residual·column = {dot}");
        }
    }

    #[test]
    fn collinear_columns_are_named() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let y: Vec<f64> = (0..10).map(|i| f64::from(i % 3)).collect();
        match ols(&y, &[col("a", &x), col("b", &doubled)], true) {
            Err(StatsError::Collinear { column }) => assert_eq!(column, "b"),
            other => panic!("expected collinearity error, got {other:?}"),
        }
        // a constant column duplicates the intercept
        match ols(&y, &[col("c", &vec![3.0; 10])], true) {
            Err(StatsError::Collinear { column }) => assert_eq!(column, "c"),
            other => panic!("expected collinearity error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(
            ols(&[1.0, 2.0], &[col("x", &[1.0, 2.0])], true),
            Err(StatsError::InsufficientData(_))
        ));
        assert!(matches!(
            ols(&[1.0, f64::NAN, 2.0], &[col("x", &[1.0, 2.0, 3.0])], true),
            Err(StatsError::Validation(_))
        ));
        assert!(matches!(
            ols(&[1.0, 2.0, 3.0], &[col("x", &[1.0, 2.0])], true),
            Err(StatsError::Validation(_))
        ));
        assert!(matches!(
            ols(
                &[1.0, 2.0, 3.0, 4.0],
                &[col("intercept", &[1.0, 2.0, 3.0, 4.0])],
                true
            ),
            Err(StatsError::Validation(_))
        ));
    }

    fn groups(labels: &[&str]) -> Vec<String> {
        labels.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_group_fixed_effects_equal_pooled_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 25;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - v + rng.gen_range(-0.5..0.5)).collect();
        let pooled = ols(&y, &[col("x", &x)], true).unwrap();
        let fe = ols_fixed_effects(&y, &[col("x", &x)], &groups(&vec!["PA"; n])).unwrap();
        assert!((fe.coefficients[0].1 - pooled.coefficients[1].1).abs() < 1e-10);
        assert!((fe.standard_errors[0] - pooled.standard_errors[1]).abs() < 1e-10);
        assert!((fe.r_squared - pooled.r_squared).abs() < 1e-10);
        let levels = fe.fixed_effect_levels.unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].1 - pooled.coefficients[0].1).abs() < 1e-10);
    }

    #[test]
    fn group_levels_hide_the_slope_from_pooled_ols() {
        // both groups follow y = 2x + level, but the high-x group sits on
        // the lower level, dragging the pooled slope toward 102/101
        let x = [0.0, 1.0, 10.0, 11.0];
        let y = [10.0, 12.0, 20.0, 22.0];
        let g = groups(&["A", "A", "B", "B"]);
        let pooled = ols(&y, &[col("x", &x)], true).unwrap();
        assert!((pooled.coefficients[1].1 - 102.0 / 101.0).abs() < 1e-12);
        let fe = ols_fixed_effects(&y, &[col("x", &x)], &g).unwrap();
        assert!((fe.coefficients[0].1 - 2.0).abs() < 1e-12);
        assert!((fe.r_squared - 1.0).abs() < 1e-12);
        let levels = fe.fixed_effect_levels.unwrap();
        assert_eq!(levels[0].0, "A");
        assert!((levels[0].1 - 10.0).abs() < 1e-12);
        assert_eq!(levels[1].0, "B");
        assert!(levels[1].1.abs() < 1e-12);
    }

    #[test]
    fn fixed_effects_match_the_dummy_variable_regression() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let names = ["AL", "GA", "PA", "TX"];
        let n = 60;
        let g: Vec<String> = (0..n).map(|i| names[i % 4].to_string()).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let level = 3.0 * (i % 4) as f64;
                level + 1.7 * x[i] - 0.9 * z[i] + rng.gen_range(-0.3..0.3)
            })
            .collect();
        let fe = ols_fixed_effects(&y, &[col("x", &x), col("z", &z)], &g).unwrap();

        // same model with explicit group dummies and no shared intercept
        let mut dummies: Vec<Column> = vec![col("x", &x), col("z", &z)];
        for name in names {
            let d: Vec<f64> = g.iter().map(|gi| f64::from(u8::from(gi == name))).collect();
            dummies.push(col(name, &d));
        }
        let dummy_fit = ols(&y, &dummies, false).unwrap();
        for j in 0..2 {
            assert!(
                (fe.coefficients[j].1 - dummy_fit.coefficients[j].1).abs() < 1e-8,
                "slope {j}"
            );
            assert!((fe.standard_errors[j] - dummy_fit.standard_errors[j]).abs() < 1e-8);
        }
        let levels = fe.fixed_effect_levels.unwrap();
        for (level, name) in levels.iter().zip(names) {
            let dummy_coef = dummy_fit
                .coefficients
                .iter()
                .find(|(n, _)| n == name)
                .unwrap()
                .1;
            assert_eq!(level.0, name);
            assert!((level.1 - dummy_coef).abs() < 1e-8);
        }
        // residuals agree too: the two parameterisations are the same model
        for (a, b) in fe.residuals.iter().zip(&dummy_fit.residuals) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn no_within_variation_is_an_identification_error() {
        // x is constant inside each group even though it varies overall
        let x = [1.0, 1.0, 4.0, 4.0, 4.0, 1.0];
        let y = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let g = groups(&["A", "A", "B", "B", "B", "C"]);
        match ols_fixed_effects(&y, &[col("x", &x)], &g) {
            Err(StatsError::Unidentified(msg)) => assert!(msg.contains('x'), "{msg}"),
            other => panic!("expected identification error, got {other:?}"),
        }
    }

    #[test]
    fn fixed_effects_need_enough_observations() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 3.0];
        let g = groups(&["A", "B", "C"]);
        assert!(matches!(
            ols_fixed_effects(&y, &[col("x", &x)], &g),
            Err(StatsError::InsufficientData(_))
        ));
    }
}
