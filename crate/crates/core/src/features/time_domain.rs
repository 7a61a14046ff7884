//! Nine dimensionless and amplitude health indexes of a window.

/// Column labels, in output order.
pub const NAMES: [&str; 9] = ["I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8", "I9"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIndexes {
    pub std_dev: f64,
    pub peak: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub rms: f64,
    pub crest: f64,
    pub clearance: f64,
    pub shape: f64,
    pub impulse: f64,
    /// Set when the window has zero variance or zero energy and the
    /// affected ratios were replaced by the zero convention.
    pub degenerate: bool,
}

impl TimeIndexes {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.std_dev,
            self.peak,
            self.skewness,
            self.kurtosis,
            self.rms,
            self.crest,
            self.clearance,
            self.shape,
            self.impulse,
        ]
    }
}

/// Computes I1..I9.
///
/// Skewness and kurtosis divide by `(N - 1) * I1^p`. A constant window gets
/// `I1 = I3 = I4 = 0`; an all-zero window additionally gets `I6..I9 = 0`.
pub fn time_domain_indexes(x: &[f64]) -> TimeIndexes {
    assert!(!x.is_empty(), "time-domain indexes need at least one point");
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let constant = x.iter().all(|&v| v == x[0]);

    let (m2, m3, m4) = if constant {
        (0.0, 0.0, 0.0)
    } else {
        x.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &v| {
            let d = v - mean;
            let d2 = d * d;
            (a + d2, b + d2 * d, c + d2 * d2)
        })
    };
    let std_dev = (m2 / n).sqrt();
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mean_sqrt_abs = x.iter().map(|v| v.abs().sqrt()).sum::<f64>() / n;

    let (skewness, kurtosis) = if std_dev > 0.0 {
        let dof = (n - 1.0).max(1.0);
        (m3 / (dof * std_dev.powi(3)), m4 / (dof * std_dev.powi(4)))
    } else {
        (0.0, 0.0)
    };
    let (crest, clearance, shape, impulse) = if rms > 0.0 {
        (
            peak / rms,
            peak / (mean_sqrt_abs * mean_sqrt_abs),
            rms / mean_abs,
            peak / mean_abs,
        )
    } else {
        (0.0, 0.0, 0.0, 0.0)
    };

    TimeIndexes {
        std_dev,
        peak,
        skewness,
        kurtosis,
        rms,
        crest,
        clearance,
        shape,
        impulse,
        degenerate: std_dev == 0.0 || rms == 0.0,
    }
}
