use std::fmt;

use rand::Rng;
use serde::Serialize;

use super::{Gradients, Mlp, MlpSpec};
use crate::error::{Error, Result};
use crate::rng;

const STEP: f64 = 1e-5;
// Relative errors are measured against at least this magnitude so that
// gradients that are zero up to round-off do not blow up the ratio.
const MAGNITUDE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParamCoord {
    pub layer: usize,
    /// `"w"` or `"b"`.
    pub kind: &'static str,
    pub index: usize,
}

impl fmt::Display for ParamCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "layer {} {}[{}]", self.layer, self.kind, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub spec: MlpSpec,
    pub params_checked: usize,
    pub max_rel_error: f64,
    pub worst: ParamCoord,
    pub analytic: f64,
    pub numeric: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} in={} hidden={:?} out={} params={} max_rel_error={:.3e} worst=({}: analytic={:.6e} numeric={:.6e}) tol={:.0e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.spec.input_dim,
            self.spec.hidden,
            self.spec.output_dim,
            self.params_checked,
            self.max_rel_error,
            self.worst,
            self.analytic,
            self.numeric,
            self.tolerance
        )
    }
}

fn param_mut<'a>(net: &'a mut Mlp, layer: usize, kind: &str, index: usize) -> &'a mut f64 {
    let l = &mut net.layers_mut()[layer];
    if kind == "w" {
        &mut l.weights_mut()[index]
    } else {
        &mut l.bias_mut()[index]
    }
}

/// Compares [`Mlp::backward`] with central differences on a random network
/// built from `spec` (seeded by `seed`) and a random input.
pub fn gradient_check(spec: &MlpSpec, seed: u64, tolerance: f64) -> Result<GradCheckReport> {
    gradient_check_with(spec, seed, tolerance, |mlp, x, upstream| {
        mlp.backward(x, upstream)
    })
}

/// Like [`gradient_check`] with a caller-supplied analytic gradient.
///
/// The scalar objective is `c · forward(x)` for a random vector `c`, so the
/// analytic gradient is `backward(x, c)`.
pub fn gradient_check_with<F>(
    spec: &MlpSpec,
    seed: u64,
    tolerance: f64,
    analytic: F,
) -> Result<GradCheckReport>
where
    F: Fn(&Mlp, &[f64], &[f64]) -> Result<Gradients>,
{
    if !(tolerance > 0.0) {
        return Err(Error::config(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut mlp = Mlp::new(MlpSpec {
        init_seed: rng.gen(),
        ..spec.clone()
    })?;
    for layer in mlp.layers_mut() {
        for b in layer.bias_mut() {
            *b = rng.gen_range(-0.1..0.1);
        }
    }
    let input: Vec<f64> = (0..spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let upstream: Vec<f64> = (0..spec.output_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let grads = analytic(&mlp, &input, &upstream)?;
    if grads.layers.len() != mlp.layers().len() {
        return Err(Error::contract("analytic gradient has the wrong shape"));
    }

    let objective = |net: &Mlp| -> Result<f64> {
        Ok(net
            .forward(&input)?
            .iter()
            .zip(&upstream)
            .map(|(y, c)| y * c)
            .sum())
    };

    let mut report = GradCheckReport {
        spec: spec.clone(),
        params_checked: 0,
        max_rel_error: 0.0,
        worst: ParamCoord {
            layer: 0,
            kind: "w",
            index: 0,
        },
        analytic: 0.0,
        numeric: 0.0,
        tolerance,
        pass: false,
    };

    for layer in 0..mlp.layers().len() {
        let n_weights = mlp.layers()[layer].weights().len();
        let n_bias = mlp.layers()[layer].bias().len();
        let coords = (0..n_weights)
            .map(|i| ("w", i))
            .chain((0..n_bias).map(|i| ("b", i)));
        for (kind, index) in coords {
            let original = *param_mut(&mut mlp, layer, kind, index);
            *param_mut(&mut mlp, layer, kind, index) = original + STEP;
            let plus = objective(&mlp)?;
            *param_mut(&mut mlp, layer, kind, index) = original - STEP;
            let minus = objective(&mlp)?;
            *param_mut(&mut mlp, layer, kind, index) = original;

            let numeric = (plus - minus) / (2.0 * STEP);
            let g = &grads.layers[layer];
            let analytic = if kind == "w" {
                g.weights()[index]
            } else {
                g.bias()[index]
            };
            let scale = analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR);
            let rel = (analytic - numeric).abs() / scale;
            report.params_checked += 1;
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = rel;
                report.worst = ParamCoord { layer, kind, index };
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    report.pass = report.max_rel_error < tolerance;
    Ok(report)
}
