//! Dormand–Prince 5(4) for small linear first-order systems.
//!
//! Steps are clipped so that every requested output node is hit exactly.
//! Because the shooting systems are linear and homogeneous, the integrator
//! may rescale the whole trajectory when it grows large; callers only ever
//! use ratios of components.

use crate::error::{BridgeError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const RESCALE_AT: f64 = 1e100;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// State at each requested node, all multiplied by one common positive factor.
    pub states: Vec<Vec<f64>>,
    /// The common factor; the initial state in trajectory units is `factor · y0`.
    pub factor: f64,
    pub steps: usize,
}

/// Integrate y′ = rhs(r, y) from (r0, y0) through the increasing `nodes`
/// (all greater than r0) with relative local error `rtol`.
pub fn integrate_linear<F>(rhs: F, r0: f64, y0: &[f64], nodes: &[f64], rtol: f64) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut r = r0;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(nodes.len());
    let span = nodes.last().copied().unwrap_or(r0) - r0;
    let mut h = (1e-3 * (nodes.first().copied().unwrap_or(r0) - r0)).max(1e-12 * span);
    let mut steps = 0;
    let mut factor = 1.0;
    rhs(r, &y, &mut k[0]);
    for &target in nodes {
        if !(target > r) {
            return Err(BridgeError::Grid(format!("output node {target} is not beyond {r}")));
        }
        while r < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(BridgeError::Grid(format!("ODE step limit reached at r = {r}")));
            }
            let last = r + h >= target;
            let step = if last { target - r } else { h };
            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += step * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                rhs(r + C[s] * step, &tmp, &mut k[s]);
            }
            // tmp holds the fifth-order solution (FSAL stage 7 was evaluated there).
            let scale = y.iter().chain(tmp.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
            let mut err = 0.0_f64;
            for i in 0..dim {
                let e: f64 = (0..7).map(|s| (B5[s] - B4[s]) * k[s][i]).sum::<f64>() * step;
                let sc = rtol * (scale + y[i].abs().max(tmp[i].abs()));
                err = err.max(e.abs() / sc.max(f64::MIN_POSITIVE));
            }
            if !err.is_finite() {
                return Err(BridgeError::Grid(format!("non-finite ODE state at r = {r}")));
            }
            if err <= 1.0 {
                r = if last { target } else { r + step };
                y.copy_from_slice(&tmp);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                if scale > RESCALE_AT {
                    let f = 1.0 / scale;
                    factor *= f;
                    y.iter_mut().for_each(|v| *v *= f);
                    k[0].iter_mut().for_each(|v| *v *= f);
                    for s in states.iter_mut() {
                        s.iter_mut().for_each(|v| *v *= f);
                    }
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                h = step * factor;
            }
            if h < 1e-15 * r.abs().max(span) {
                return Err(BridgeError::Grid(format!("ODE step underflow at r = {r}")));
            }
        }
        states.push(y.clone());
    }
    Ok(Trajectory { states, factor, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let nodes: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let tr = integrate_linear(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            &nodes,
            1e-12,
        )
        .unwrap();
        for (x, s) in nodes.iter().zip(&tr.states) {
            assert!((s[0] - x.sin()).abs() < 1e-10, "{x}: {}", s[0] - x.sin());
        }
    }

    #[test]
    fn rescaling_preserves_ratios() {
        let nodes = [100.0, 300.0];
        let tr = integrate_linear(
            |_, y, dy| {
                dy[0] = y[0];
                dy[1] = 2.0 * y[0];
            },
            0.0,
            &[1.0, 2.0],
            &nodes,
            1e-12,
        )
        .unwrap();
        for s in &tr.states {
            assert!((s[1] / s[0] - 2.0).abs() < 1e-10);
        }
        // e^{300}/e^{100} survives the rescaling
        let ratio = tr.states[1][0] / tr.states[0][0];
        assert!(((ratio.ln() - 200.0) / 200.0).abs() < 1e-10);
    }
}
