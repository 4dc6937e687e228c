//! Second-order IIR sections for the parametric equalizer and the rumble
//! low-pass, designed with the bilinear-transform formulas from the
//! Bristow-Johnson audio EQ cookbook. Coefficients are normalized so a0 = 1.

use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn checked(self, what: &str) -> Result<Self> {
        let finite = [self.b0, self.b1, self.b2, self.a1, self.a2]
            .iter()
            .all(|c| c.is_finite());
        // Poles inside the unit circle: |a2| < 1 and |a1| < 1 + a2.
        if !finite || self.a2.abs() >= 1.0 || self.a1.abs() >= 1.0 + self.a2 {
            return Err(Error::domain(
                "guides",
                format!("unstable {what} filter coefficients: {self:?}"),
            ));
        }
        Ok(self)
    }

    /// Peaking EQ: `center_hz`, `gain_db`, quality `q`.
    pub fn peaking(fs: f64, center_hz: f64, gain_db: f64, q: f64) -> Result<Self> {
        validate_freq(fs, center_hz)?;
        if q <= 0.0 || !gain_db.is_finite() {
            return Err(Error::domain("guides", format!("bad peaking params q={q} gain={gain_db}")));
        }
        let a = 10f64.powf(gain_db / 40.0);
        let w0 = 2.0 * PI * center_hz / fs;
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha / a;
        Biquad {
            b0: (1.0 + alpha * a) / a0,
            b1: -2.0 * w0.cos() / a0,
            b2: (1.0 - alpha * a) / a0,
            a1: -2.0 * w0.cos() / a0,
            a2: (1.0 - alpha / a) / a0,
        }
        .checked("peaking")
    }

    /// Low shelf at `corner_hz` with `gain_db`, fixed shelf slope (Q = 1/√2).
    pub fn low_shelf(fs: f64, corner_hz: f64, gain_db: f64) -> Result<Self> {
        validate_freq(fs, corner_hz)?;
        let a = 10f64.powf(gain_db / 40.0);
        let w0 = 2.0 * PI * corner_hz / fs;
        let cos = w0.cos();
        let alpha = w0.sin() * std::f64::consts::FRAC_1_SQRT_2;
        let t = 2.0 * a.sqrt() * alpha;
        let a0 = (a + 1.0) + (a - 1.0) * cos + t;
        Biquad {
            b0: a * ((a + 1.0) - (a - 1.0) * cos + t) / a0,
            b1: 2.0 * a * ((a - 1.0) - (a + 1.0) * cos) / a0,
            b2: a * ((a + 1.0) - (a - 1.0) * cos - t) / a0,
            a1: -2.0 * ((a - 1.0) + (a + 1.0) * cos) / a0,
            a2: ((a + 1.0) + (a - 1.0) * cos - t) / a0,
        }
        .checked("low-shelf")
    }

    /// High shelf at `corner_hz` with `gain_db`, fixed shelf slope (Q = 1/√2).
    pub fn high_shelf(fs: f64, corner_hz: f64, gain_db: f64) -> Result<Self> {
        validate_freq(fs, corner_hz)?;
        let a = 10f64.powf(gain_db / 40.0);
        let w0 = 2.0 * PI * corner_hz / fs;
        let cos = w0.cos();
        let alpha = w0.sin() * std::f64::consts::FRAC_1_SQRT_2;
        let t = 2.0 * a.sqrt() * alpha;
        let a0 = (a + 1.0) - (a - 1.0) * cos + t;
        Biquad {
            b0: a * ((a + 1.0) + (a - 1.0) * cos + t) / a0,
            b1: -2.0 * a * ((a - 1.0) + (a + 1.0) * cos) / a0,
            b2: a * ((a + 1.0) + (a - 1.0) * cos - t) / a0,
            a1: 2.0 * ((a - 1.0) - (a + 1.0) * cos) / a0,
            a2: ((a + 1.0) - (a - 1.0) * cos - t) / a0,
        }
        .checked("high-shelf")
    }

    /// Low-pass with cutoff `f0` and quality `q`.
    pub fn low_pass(fs: f64, f0: f64, q: f64) -> Result<Self> {
        validate_freq(fs, f0)?;
        if q <= 0.0 {
            return Err(Error::domain("guides", format!("bad low-pass q={q}")));
        }
        let w0 = 2.0 * PI * f0 / fs;
        let cos = w0.cos();
        let alpha = w0.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        Biquad {
            b0: (1.0 - cos) / 2.0 / a0,
            b1: (1.0 - cos) / a0,
            b2: (1.0 - cos) / 2.0 / a0,
            a1: -2.0 * cos / a0,
            a2: (1.0 - alpha) / a0,
        }
        .checked("low-pass")
    }

    /// Run the section over a buffer in place (direct form II transposed,
    /// zero initial state).
    pub fn process(&self, x: &mut [f64]) {
        let mut z1 = 0.0;
        let mut z2 = 0.0;
        for v in x.iter_mut() {
            let input = *v;
            let out = self.b0 * input + z1;
            z1 = self.b1 * input - self.a1 * out + z2;
            z2 = self.b2 * input - self.a2 * out;
            *v = out;
        }
    }

    /// Magnitude response at frequency `f` (Hz).
    pub fn magnitude_at(&self, fs: f64, f: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let (re, im) = (w.cos(), -w.sin());
        // Evaluate H(e^{jw}) = (b0 + b1 z^-1 + b2 z^-2)/(1 + a1 z^-1 + a2 z^-2)
        let z1 = (re, im);
        let z2 = (re * re - im * im, 2.0 * re * im);
        let num = (self.b0 + self.b1 * z1.0 + self.b2 * z2.0, self.b1 * z1.1 + self.b2 * z2.1);
        let den = (1.0 + self.a1 * z1.0 + self.a2 * z2.0, self.a1 * z1.1 + self.a2 * z2.1);
        (num.0 * num.0 + num.1 * num.1).sqrt() / (den.0 * den.0 + den.1 * den.1).sqrt()
    }
}

/// Cascade of sections applied in order.
pub fn process_cascade(sections: &[Biquad], x: &mut [f64]) {
    for s in sections {
        s.process(x);
    }
}

fn validate_freq(fs: f64, f: f64) -> Result<()> {
    if !(fs > 0.0) || !(f > 0.0) || f >= fs / 2.0 {
        return Err(Error::domain(
            "guides",
            format!("filter frequency {f} Hz invalid for fs {fs} Hz"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaking_gain_at_center() {
        let fs = 44100.0;
        let bq = Biquad::peaking(fs, 3000.0, 12.0, 1.0).unwrap();
        let g = 20.0 * bq.magnitude_at(fs, 3000.0).log10();
        assert!((g - 12.0).abs() < 0.01, "gain at center {g}");
        // far from center the response returns to unity
        let g_far = 20.0 * bq.magnitude_at(fs, 50.0).log10();
        assert!(g_far.abs() < 0.5, "gain far away {g_far}");
    }

    #[test]
    fn low_pass_rolls_off() {
        let fs = 8000.0;
        let bq = Biquad::low_pass(fs, 200.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let pass = bq.magnitude_at(fs, 20.0);
        let stop = bq.magnitude_at(fs, 2000.0);
        assert!(pass > 0.9);
        assert!(20.0 * (stop / pass).log10() < -35.0);
    }

    #[test]
    fn rejects_out_of_range_frequency() {
        assert!(Biquad::peaking(8000.0, 4000.0, 3.0, 1.0).is_err());
        assert!(Biquad::peaking(8000.0, -1.0, 3.0, 1.0).is_err());
        assert!(Biquad::low_pass(8000.0, 5000.0, 0.7).is_err());
    }

    #[test]
    fn shelf_gains() {
        let fs = 44100.0;
        let lo = Biquad::low_shelf(fs, 500.0, -6.0).unwrap();
        assert!((20.0 * lo.magnitude_at(fs, 20.0).log10() + 6.0).abs() < 0.3);
        assert!(20.0 * lo.magnitude_at(fs, 10000.0).log10().abs() < 0.3);
        let hi = Biquad::high_shelf(fs, 4000.0, 9.0).unwrap();
        assert!((20.0 * hi.magnitude_at(fs, 18000.0).log10() - 9.0).abs() < 0.3);
    }
}
