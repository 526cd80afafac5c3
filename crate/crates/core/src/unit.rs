//! Polynomial neural units (LNU and QNU) and regressor-vector conventions.
//!
//! A linear neural unit computes `y = w · x`; a quadratic neural unit computes
//! `y = rowx · colW`, where `rowx` is the long-vector of all pairwise products
//! `x_i · x_j` with `0 <= i <= j <= n`. Only the upper-triangular pairs are
//! stored; the symmetric coefficient is absorbed into the single weight, which
//! leaves the representable function class unchanged.
//!
//! The regressor `x` is laid out as
//!
//! ```text
//! x = [1, y(k-1) .. y(k-n_y), u(k-1) .. u(k-n_u)]
//! ```
//!
//! with the bias fixed at `x_0 = 1`, model outputs first and plant inputs
//! second, most recent lag first within each block. All types here are
//! immutable value objects and all functions are pure.

use crate::error::{HonuError, Result};

/// Lag structure of a regressor: `n_y` fed-back model outputs and `n_u` plant
/// inputs, plus the implicit bias slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegressorLayout {
    /// Count of lagged model outputs.
    pub n_y: usize,
    /// Count of lagged plant inputs.
    pub n_u: usize,
}

impl RegressorLayout {
    pub fn new(n_y: usize, n_u: usize) -> Self {
        Self { n_y, n_u }
    }

    /// Total regressor length including the bias slot.
    pub fn len(&self) -> usize {
        1 + self.n_y + self.n_u
    }

    pub fn is_empty(&self) -> bool {
        false // the bias slot is always present
    }

    /// First sample index with enough history to build a regressor.
    pub fn warmup(&self) -> usize {
        self.n_y.max(self.n_u)
    }

    /// Index of the newest plant-input lag `u(k-1)` inside the regressor, if
    /// the layout has any input lags at all.
    pub fn newest_input_slot(&self) -> Option<usize> {
        (self.n_u > 0).then_some(1 + self.n_y)
    }
}

/// The unit's input vector: bias, lagged model outputs, lagged plant inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorVector {
    values: Vec<f64>,
    layout: RegressorLayout,
}

impl RegressorVector {
    /// Wrap raw values, checking the bias slot and the layout length.
    pub fn new(values: Vec<f64>, layout: RegressorLayout) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(HonuError::DimensionMismatch {
                context: "regressor vector",
                expected: layout.len(),
                actual: values.len(),
            });
        }
        if values[0] != 1.0 {
            return Err(HonuError::InvalidConfig(format!(
                "regressor bias slot must be 1, got {}",
                values[0]
            )));
        }
        Ok(Self { values, layout })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> RegressorLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Build the regressor for sample `k` from the model-output and plant-input
/// histories: `[1, y(k-1)..y(k-n_y), u(k-1)..u(k-n_u)]`.
///
/// `model_outputs` and `plant_inputs` must cover samples `0..k`; `k` must be
/// at least `layout.warmup()` so every requested lag exists.
pub fn build_regressor(
    model_outputs: &[f64],
    plant_inputs: &[f64],
    k: usize,
    layout: RegressorLayout,
) -> Result<RegressorVector> {
    let required = layout.warmup();
    if k < required {
        return Err(HonuError::InsufficientHistory { k, required });
    }
    if model_outputs.len() < k && layout.n_y > 0 {
        return Err(HonuError::InsufficientHistory {
            k,
            required: model_outputs.len() + 1,
        });
    }
    if plant_inputs.len() < k && layout.n_u > 0 {
        return Err(HonuError::InsufficientHistory {
            k,
            required: plant_inputs.len() + 1,
        });
    }
    let mut values = Vec::with_capacity(layout.len());
    values.push(1.0);
    for lag in 1..=layout.n_y {
        values.push(model_outputs[k - lag]);
    }
    for lag in 1..=layout.n_u {
        values.push(plant_inputs[k - lag]);
    }
    Ok(RegressorVector { values, layout })
}

/// Flat position of the ordered pair `(i, j)` with `i <= j` in the canonical
/// upper-triangular ordering over an input of dimension `dim`.
pub fn pair_to_flat(i: usize, j: usize, dim: usize) -> usize {
    debug_assert!(i <= j && j < dim);
    i * dim - i * (i + 1) / 2 + j
}

/// Inverse of [`pair_to_flat`].
pub fn flat_to_pair(pos: usize, dim: usize) -> (usize, usize) {
    let mut i = 0;
    let mut row_start = 0;
    loop {
        let row_len = dim - i;
        if pos < row_start + row_len {
            return (i, i + (pos - row_start));
        }
        row_start += row_len;
        i += 1;
    }
}

/// Number of upper-triangular pairs for an input of dimension `dim`.
pub fn expansion_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Quadratic long-vector `rowx`: all products `x_i · x_j`, `0 <= i <= j <= n`,
/// in canonical order. The column counterpart `colx` is the same flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticExpansion {
    values: Vec<f64>,
}

impl QuadraticExpansion {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Expand raw input values into the quadratic long-vector.
pub fn expand_values(values: &[f64]) -> Vec<f64> {
    let dim = values.len();
    let mut out = Vec::with_capacity(expansion_len(dim));
    for i in 0..dim {
        for j in i..dim {
            out.push(values[i] * values[j]);
        }
    }
    out
}

/// Expand a regressor into its quadratic long-vector; the first element is
/// the bias-squared term and equals 1.
pub fn quadratic_expand(x: &RegressorVector) -> QuadraticExpansion {
    QuadraticExpansion {
        values: expand_values(x.values()),
    }
}

fn check_finite(weights: &[f64]) -> Result<()> {
    for (index, w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(HonuError::NonFiniteWeight { index });
        }
    }
    Ok(())
}

/// Linear neural unit: `y = w · x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearUnit {
    weights: Vec<f64>,
}

impl LinearUnit {
    /// Zero-initialized unit for a regressor of length `input_len`.
    pub fn zeros(input_len: usize) -> Self {
        Self {
            weights: vec![0.0; input_len],
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        check_finite(&weights)?;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_len(&self) -> usize {
        self.weights.len()
    }

    /// Inner product with raw input values.
    pub fn output(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(HonuError::DimensionMismatch {
                context: "LNU input",
                expected: self.weights.len(),
                actual: values.len(),
            });
        }
        Ok(dot(&self.weights, values))
    }
}

/// Quadratic neural unit: `y = rowx · colW` over the upper-triangular
/// expansion of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticUnit {
    weights: Vec<f64>,
    input_len: usize,
}

impl QuadraticUnit {
    /// Zero-initialized unit for a regressor of length `input_len`.
    pub fn zeros(input_len: usize) -> Self {
        Self {
            weights: vec![0.0; expansion_len(input_len)],
            input_len,
        }
    }

    /// Wrap an existing weight long-vector; its length must be a triangular
    /// number `(n+1)(n+2)/2` matching `input_len`.
    pub fn from_weights(weights: Vec<f64>, input_len: usize) -> Result<Self> {
        if weights.len() != expansion_len(input_len) {
            return Err(HonuError::DimensionMismatch {
                context: "QNU weight long-vector",
                expected: expansion_len(input_len),
                actual: weights.len(),
            });
        }
        check_finite(&weights)?;
        Ok(Self { weights, input_len })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Weight for the pair `(i, j)`, `i <= j`.
    pub fn weight_at(&self, i: usize, j: usize) -> f64 {
        self.weights[pair_to_flat(i, j, self.input_len)]
    }

    /// `rowx · colW` over raw input values.
    pub fn output(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.input_len {
            return Err(HonuError::DimensionMismatch {
                context: "QNU input",
                expected: self.input_len,
                actual: values.len(),
            });
        }
        let mut acc = 0.0;
        let mut pos = 0;
        for i in 0..self.input_len {
            for j in i..self.input_len {
                acc += self.weights[pos] * values[i] * values[j];
                pos += 1;
            }
        }
        Ok(acc)
    }

    /// Analytic derivative of the output with respect to input slot `s` at the
    /// given input: `sum_{j>=s} w_{s,j} x_j + sum_{i<=s} w_{i,s} x_i`.
    pub fn input_derivative(&self, values: &[f64], slot: usize) -> f64 {
        let dim = self.input_len;
        let mut acc = 0.0;
        for (j, v) in values.iter().enumerate().take(dim).skip(slot) {
            acc += self.weights[pair_to_flat(slot, j, dim)] * v;
        }
        for (i, v) in values.iter().enumerate().take(slot + 1) {
            acc += self.weights[pair_to_flat(i, slot, dim)] * v;
        }
        acc
    }
}

/// Unit architecture selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Lnu,
    Qnu,
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Architecture::Lnu => write!(f, "lnu"),
            Architecture::Qnu => write!(f, "qnu"),
        }
    }
}

/// Either unit type behind one interface. Training and the controller work
/// with this enum so lag structures and update rules stay architecture-
/// agnostic.
#[derive(Debug, Clone, PartialEq)]
pub enum NeuralUnit {
    Linear(LinearUnit),
    Quadratic(QuadraticUnit),
}

impl NeuralUnit {
    /// Zero-initialized unit of the requested architecture for a regressor of
    /// length `input_len`. Zero start makes the first epoch reproducible.
    pub fn zeros(arch: Architecture, input_len: usize) -> Self {
        match arch {
            Architecture::Lnu => NeuralUnit::Linear(LinearUnit::zeros(input_len)),
            Architecture::Qnu => NeuralUnit::Quadratic(QuadraticUnit::zeros(input_len)),
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            NeuralUnit::Linear(_) => Architecture::Lnu,
            NeuralUnit::Quadratic(_) => Architecture::Qnu,
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            NeuralUnit::Linear(u) => u.weights(),
            NeuralUnit::Quadratic(u) => u.weights(),
        }
    }

    pub fn weight_count(&self) -> usize {
        self.weights().len()
    }

    pub fn input_len(&self) -> usize {
        match self {
            NeuralUnit::Linear(u) => u.input_len(),
            NeuralUnit::Quadratic(u) => u.input_len(),
        }
    }

    /// Unit output over raw input values.
    pub fn output(&self, values: &[f64]) -> Result<f64> {
        match self {
            NeuralUnit::Linear(u) => u.output(values),
            NeuralUnit::Quadratic(u) => u.output(values),
        }
    }

    /// Unit output over a regressor.
    pub fn predict(&self, x: &RegressorVector) -> Result<f64> {
        self.output(x.values())
    }

    /// Gradient of the output with respect to the weights: the input vector
    /// itself for an LNU, its quadratic expansion for a QNU. This is the
    /// static gradient used by both training paths.
    pub fn weight_gradient(&self, values: &[f64]) -> Vec<f64> {
        match self {
            NeuralUnit::Linear(_) => values.to_vec(),
            NeuralUnit::Quadratic(_) => expand_values(values),
        }
    }

    /// Derivative of the output with respect to one input slot at the given
    /// input values.
    pub fn input_derivative(&self, values: &[f64], slot: usize) -> f64 {
        match self {
            NeuralUnit::Linear(u) => u.weights()[slot],
            NeuralUnit::Quadratic(u) => u.input_derivative(values, slot),
        }
    }

    /// Return a unit with `scale * delta` added to the weights, checking the
    /// result stays finite.
    pub fn with_update(&self, delta: &[f64], scale: f64) -> Result<NeuralUnit> {
        let current = self.weights();
        if delta.len() != current.len() {
            return Err(HonuError::DimensionMismatch {
                context: "weight update",
                expected: current.len(),
                actual: delta.len(),
            });
        }
        let updated: Vec<f64> = current
            .iter()
            .zip(delta)
            .map(|(w, d)| w + scale * d)
            .collect();
        match self {
            NeuralUnit::Linear(_) => Ok(NeuralUnit::Linear(LinearUnit::from_weights(updated)?)),
            NeuralUnit::Quadratic(u) => Ok(NeuralUnit::Quadratic(QuadraticUnit::from_weights(
                updated,
                u.input_len(),
            )?)),
        }
    }
}

/// LNU output `w · x`.
pub fn lnu_predict(unit: &LinearUnit, x: &RegressorVector) -> Result<f64> {
    unit.output(x.values())
}

/// QNU output `rowx · colW`.
pub fn qnu_predict(unit: &QuadraticUnit, x: &RegressorVector) -> Result<f64> {
    unit.output(x.values())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(values: Vec<f64>, n_y: usize, n_u: usize) -> RegressorVector {
        RegressorVector::new(values, RegressorLayout::new(n_y, n_u)).unwrap()
    }

    /// Explicit double-sum oracle for the QNU output, independent of the
    /// flat-vector path.
    fn qnu_double_sum(unit: &QuadraticUnit, values: &[f64]) -> f64 {
        let dim = values.len();
        let mut acc = 0.0;
        for i in 0..dim {
            for j in i..dim {
                acc += unit.weight_at(i, j) * values[i] * values[j];
            }
        }
        acc
    }

    #[test]
    fn regressor_single_input_lag() {
        let x = build_regressor(&[], &[5.0, 7.0], 1, RegressorLayout::new(0, 1)).unwrap();
        assert_eq!(x.values(), &[1.0, 5.0]);
    }

    #[test]
    fn regressor_deep_lag_structure_at_zero_history() {
        let y = [0.0; 6];
        let u = [0.0; 6];
        let x = build_regressor(&y, &u, 5, RegressorLayout::new(3, 5)).unwrap();
        assert_eq!(x.values().len(), 9);
        assert_eq!(x.values()[0], 1.0);
        assert!(x.values()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn regressor_most_recent_lag_first() {
        let y = [1.0, 2.0, 3.0, 0.0];
        let u = [10.0, 20.0, 30.0, 0.0];
        let x = build_regressor(&y, &u, 3, RegressorLayout::new(2, 2)).unwrap();
        assert_eq!(x.values(), &[1.0, 3.0, 2.0, 30.0, 20.0]);
    }

    #[test]
    fn regressor_rejects_short_history() {
        let err = build_regressor(&[1.0], &[1.0], 1, RegressorLayout::new(2, 1)).unwrap_err();
        match err {
            HonuError::InsufficientHistory { k: 1, required: 2 } => {}
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn lnu_zero_weights_and_bias_only() {
        let x = reg(vec![1.0, 3.0], 0, 1);
        let zero = LinearUnit::zeros(2);
        assert_eq!(lnu_predict(&zero, &x).unwrap(), 0.0);
        let bias = LinearUnit::from_weights(vec![1.0, 0.0]).unwrap();
        assert_eq!(lnu_predict(&bias, &x).unwrap(), 1.0);
    }

    #[test]
    fn lnu_hand_dot_product() {
        let unit = LinearUnit::from_weights(vec![0.5, 2.0]).unwrap();
        let x = reg(vec![1.0, 3.0], 0, 1);
        assert_eq!(lnu_predict(&unit, &x).unwrap(), 6.5);
    }

    #[test]
    fn lnu_dimension_mismatch() {
        let unit = LinearUnit::from_weights(vec![0.5, 2.0, 1.0]).unwrap();
        let x = reg(vec![1.0, 3.0], 0, 1);
        assert!(lnu_predict(&unit, &x).is_err());
    }

    #[test]
    fn expansion_enumerations() {
        let x1 = reg(vec![1.0], 0, 0);
        assert_eq!(quadratic_expand(&x1).values(), &[1.0]);
        let x2 = reg(vec![1.0, 2.0], 0, 1);
        assert_eq!(quadratic_expand(&x2).values(), &[1.0, 2.0, 4.0]);
        let x3 = reg(vec![1.0, 2.0, 3.0], 1, 1);
        assert_eq!(quadratic_expand(&x3).values(), &[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn qnu_trivial_weights() {
        let x = reg(vec![1.0, 3.0], 0, 1);
        let zero = QuadraticUnit::zeros(2);
        assert_eq!(qnu_predict(&zero, &x).unwrap(), 0.0);
        let bias = QuadraticUnit::from_weights(vec![1.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(qnu_predict(&bias, &x).unwrap(), 1.0);
        // weight on x_1^2 only
        let sq = QuadraticUnit::from_weights(vec![0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(qnu_predict(&sq, &x).unwrap(), 9.0);
    }

    #[test]
    fn qnu_matches_double_sum_oracle() {
        // Deterministic LCG so the test needs no RNG dependency here.
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for dim in 1..=6 {
            for _ in 0..50 {
                let mut values = vec![1.0];
                values.extend((1..dim).map(|_| 3.0 * next()));
                let weights: Vec<f64> = (0..expansion_len(dim)).map(|_| next()).collect();
                let unit = QuadraticUnit::from_weights(weights, dim).unwrap();
                let fast = unit.output(&values).unwrap();
                let oracle = qnu_double_sum(&unit, &values);
                let scale = oracle.abs().max(1.0);
                assert!(
                    (fast - oracle).abs() <= 1e-12 * scale,
                    "dim={dim}: fast={fast}, oracle={oracle}"
                );
            }
        }
    }

    #[test]
    fn index_map_round_trips() {
        for dim in 1..=9 {
            let mut seen = vec![false; expansion_len(dim)];
            for i in 0..dim {
                for j in i..dim {
                    let pos = pair_to_flat(i, j, dim);
                    assert!(!seen[pos], "collision at ({i},{j}) dim={dim}");
                    seen[pos] = true;
                    assert_eq!(flat_to_pair(pos, dim), (i, j));
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn doubling_the_input_dimension_roughly_quadruples_expansion_terms() {
        // (n+1)(n+2)/2 growth: the QNU per-step cost scales with the term
        // count, which approaches 4x when the input lag count doubles.
        for dim in [10usize, 20, 50] {
            let ratio = expansion_len(2 * dim) as f64 / expansion_len(dim) as f64;
            assert!((3.0..=5.0).contains(&ratio), "dim {dim}: ratio {ratio}");
        }
    }

    #[test]
    fn non_finite_weights_rejected() {
        assert!(LinearUnit::from_weights(vec![1.0, f64::NAN]).is_err());
        assert!(QuadraticUnit::from_weights(vec![1.0, f64::INFINITY, 0.0], 2).is_err());
    }
}
