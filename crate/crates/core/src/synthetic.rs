//! Seeded synthetic data: a pseudo-ECG generator, amplitude and shape
//! anomaly injection, and a two-variable relational construction.
//!
//! The pseudo-ECG beat is a sum of three Gaussians (P, QRS and T-like
//! waves) placed at fixed fractions of the beat period, evaluated on the
//! circle so the output is exactly periodic in `round(60 * fs / bpm)`
//! samples. Each variable gets a seeded phase offset and uniform noise in
//! `[-noise, noise]`. The defaults sample at 10 Hz, so a 500-sample series
//! holds dozens of beats, and sit on a unit baseline so that multiplicative
//! anomalies also show between beats.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::MultiSeries;

/// One Gaussian wave of the beat template.
#[derive(Debug, Clone, Copy)]
struct Wave {
    amplitude: f64,
    /// Center as a fraction of the beat period.
    center: f64,
    /// Width in seconds.
    sigma: f64,
}

const BEAT: [Wave; 3] = [
    Wave {
        amplitude: 0.15,
        center: 0.2,
        sigma: 0.025,
    },
    Wave {
        amplitude: 1.0,
        center: 0.4,
        sigma: 0.015,
    },
    Wave {
        amplitude: 0.3,
        center: 0.7,
        sigma: 0.05,
    },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcgOptions {
    /// Samples per second.
    pub sampling_rate: f64,
    /// Half-width of the uniform noise.
    pub noise: f64,
    /// Constant added to every sample.
    pub baseline: f64,
}

impl Default for EcgOptions {
    fn default() -> Self {
        Self {
            sampling_rate: 10.0,
            noise: 0.02,
            baseline: 1.0,
        }
    }
}

/// Beat period in samples.
pub fn beat_period(rate_bpm: f64, sampling_rate: f64) -> usize {
    ((60.0 * sampling_rate / rate_bpm).round() as usize).max(1)
}

fn beat_value(phase_sample: usize, period: usize, sampling_rate: f64) -> f64 {
    let p = period as f64;
    BEAT.iter()
        .map(|w| {
            let raw = (phase_sample as f64 - w.center * p).rem_euclid(p);
            let delta = raw.min(p - raw);
            let sigma = w.sigma * sampling_rate;
            w.amplitude * (-delta * delta / (2.0 * sigma * sigma)).exp()
        })
        .sum()
}

/// Pseudo-ECG with one variable per heart rate and default options.
pub fn gen_pseudo_ecg(len: usize, rates: &[f64], seed: u64) -> Result<MultiSeries> {
    gen_pseudo_ecg_with(len, rates, seed, &EcgOptions::default())
}

pub fn gen_pseudo_ecg_with(
    len: usize,
    rates: &[f64],
    seed: u64,
    options: &EcgOptions,
) -> Result<MultiSeries> {
    if rates.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one heart rate is required".into(),
        ));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::InvalidConfig(format!("invalid heart rate {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns: Vec<Vec<f64>> = rates
        .iter()
        .map(|&rate| {
            let period = beat_period(rate, options.sampling_rate);
            let shift = rng.gen_range(0..period);
            (0..len)
                .map(|t| {
                    let noise = if options.noise > 0.0 {
                        rng.gen_range(-options.noise..=options.noise)
                    } else {
                        0.0
                    };
                    options.baseline
                        + beat_value((t + shift) % period, period, options.sampling_rate)
                        + noise
                })
                .collect()
        })
        .collect();
    let names = rates.iter().map(|r| format!("ecg_{r}bpm")).collect();
    MultiSeries::from_columns(names, &columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionKind {
    Amplitude,
    Shape,
    Relational,
}

/// A half-open timestamp range `[start, end)` of one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
    pub variable: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize, variable: usize) -> Self {
        Self {
            start,
            end,
            variable,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Injection {
    pub start: usize,
    pub end: usize,
    pub variable: usize,
    pub kind: InjectionKind,
    pub factor: Option<f64>,
}

/// Ground truth of everything a generator or injector changed.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InjectionLog {
    pub records: Vec<Injection>,
}

impl InjectionLog {
    /// Per-timestamp labels: true inside any logged interval.
    pub fn labels(&self, len: usize) -> Vec<bool> {
        let mut out = vec![false; len];
        for r in &self.records {
            for slot in &mut out[r.start.min(len)..r.end.min(len)] {
                *slot = true;
            }
        }
        out
    }

    pub fn extend(&mut self, other: InjectionLog) {
        self.records.extend(other.records);
    }
}

/// Range of the multiplicative factors drawn for each interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorRange {
    pub low: f64,
    pub high: f64,
    /// Draws falling inside this band are repeated.
    pub redraw_inside: Option<(f64, f64)>,
    pub allow_overlap: bool,
}

impl FactorRange {
    pub fn new(low: f64, high: f64) -> Self {
        Self {
            low,
            high,
            redraw_inside: None,
            allow_overlap: false,
        }
    }

    /// Amplitude factors from `[0, 3]`.
    pub fn amplitude() -> Self {
        Self::new(0.0, 3.0)
    }

    /// Frequency factors from `[1, 3]`.
    pub fn shape() -> Self {
        Self::new(1.0, 3.0)
    }

    pub fn redraw_inside(mut self, low: f64, high: f64) -> Self {
        self.redraw_inside = Some((low, high));
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.low.is_finite() && self.high.is_finite() && self.low <= self.high) {
            return Err(Error::Injection(format!(
                "factor range [{}, {}] is invalid",
                self.low, self.high
            )));
        }
        if let Some((a, b)) = self.redraw_inside {
            if a <= self.low && b >= self.high {
                return Err(Error::Injection(
                    "redraw band covers the whole factor range".into(),
                ));
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let f = if self.low == self.high {
                self.low
            } else {
                rng.gen_range(self.low..=self.high)
            };
            match self.redraw_inside {
                Some((a, b)) if f >= a && f <= b => continue,
                _ => return f,
            }
        }
    }
}

fn check_intervals(
    series: &MultiSeries,
    intervals: &[Interval],
    allow_overlap: bool,
) -> Result<()> {
    for (k, iv) in intervals.iter().enumerate() {
        if iv.is_empty() || iv.end > series.len() || iv.variable >= series.num_vars() {
            return Err(Error::Injection(format!(
                "interval {k} ({}..{} of variable {}) is outside the series",
                iv.start, iv.end, iv.variable
            )));
        }
        if !allow_overlap {
            if let Some(other) = intervals[..k].iter().find(|o| o.overlaps(iv)) {
                return Err(Error::Injection(format!(
                    "interval {}..{} overlaps {}..{}",
                    iv.start, iv.end, other.start, other.end
                )));
            }
        }
    }
    Ok(())
}

/// Draws `count` non-overlapping intervals of `length` timestamps, each on a
/// random variable, keeping at least `length` timestamps between them.
pub fn random_intervals(
    series_len: usize,
    vars: usize,
    count: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<Interval>> {
    if length == 0 || vars == 0 {
        return Err(Error::Injection(
            "interval length and variable count must be positive".into(),
        ));
    }
    let needed = count * 2 * length;
    if needed > series_len {
        return Err(Error::Injection(format!(
            "{count} intervals of length {length} do not fit in {series_len} timestamps"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Place the intervals in order with random slack distributed between them.
    let slack = series_len - needed;
    let mut cuts: Vec<usize> = (0..count).map(|_| rng.gen_range(0..=slack)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(count);
    for (k, &extra) in cuts.iter().enumerate() {
        let start = k * 2 * length + extra + length / 2;
        out.push(Interval::new(start, start + length, rng.gen_range(0..vars)));
    }
    Ok(out)
}

/// Multiplies each interval by a seeded factor.
pub fn inject_amplitude(
    series: &MultiSeries,
    intervals: &[Interval],
    factors: FactorRange,
    seed: u64,
) -> Result<(MultiSeries, InjectionLog)> {
    factors.validate()?;
    check_intervals(series, intervals, factors.allow_overlap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = series.clone();
    let mut log = InjectionLog::default();
    for iv in intervals {
        let f = factors.draw(&mut rng);
        for t in iv.start..iv.end {
            out.set(t, iv.variable, out.get(t, iv.variable) * f);
        }
        log.records.push(Injection {
            start: iv.start,
            end: iv.end,
            variable: iv.variable,
            kind: InjectionKind::Amplitude,
            factor: Some(f),
        });
    }
    Ok((out, log))
}

fn interpolate(seg: &[f64], pos: f64) -> f64 {
    let last = seg.len() - 1;
    if pos <= 0.0 {
        return seg[0];
    }
    if pos >= last as f64 {
        return seg[last];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    seg[i] + frac * (seg[i + 1] - seg[i])
}

/// Speeds a segment up by `factor`: resamples it to `len / factor` samples
/// by linear interpolation and tiles the result over the original length.
pub fn compress_segment(seg: &[f64], factor: f64) -> Vec<f64> {
    let len = seg.len();
    let short = ((len as f64 / factor).round() as usize).clamp(2, len);
    let step = len as f64 / short as f64;
    let resampled: Vec<f64> = (0..short)
        .map(|k| interpolate(seg, k as f64 * step))
        .collect();
    (0..len).map(|t| resampled[t % short]).collect()
}

/// Raises the frequency inside each interval by a seeded factor.
pub fn inject_shape(
    series: &MultiSeries,
    intervals: &[Interval],
    factors: FactorRange,
    seed: u64,
) -> Result<(MultiSeries, InjectionLog)> {
    factors.validate()?;
    if factors.low < 1.0 {
        return Err(Error::Injection(
            "frequency factors must be at least 1".into(),
        ));
    }
    check_intervals(series, intervals, factors.allow_overlap)?;
    if let Some(iv) = intervals.iter().find(|iv| iv.len() < 4) {
        return Err(Error::Injection(format!(
            "interval {}..{} is too short to resample",
            iv.start, iv.end
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = series.clone();
    let mut log = InjectionLog::default();
    for iv in intervals {
        let f = factors.draw(&mut rng);
        let seg: Vec<f64> = (iv.start..iv.end)
            .map(|t| series.get(t, iv.variable))
            .collect();
        for (t, x) in (iv.start..iv.end).zip(compress_segment(&seg, f)) {
            out.set(t, iv.variable, x);
        }
        log.records.push(Injection {
            start: iv.start,
            end: iv.end,
            variable: iv.variable,
            kind: InjectionKind::Shape,
            factor: Some(f),
        });
    }
    Ok((out, log))
}

/// Timestamps per block of the relational construction.
pub const RELATIONAL_BLOCK: usize = 5;
/// Noise half-width of the relational construction.
pub const RELATIONAL_NOISE: f64 = 0.05;

/// Template id (1-based) sequences of the two relational variables; the
/// second variable's block 10 carries template 6 instead of 5.
pub const RELATIONAL_FIRST: [usize; 16] = [1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3];
pub const RELATIONAL_SECOND: [usize; 16] = [4, 4, 4, 4, 4, 5, 5, 5, 5, 5, 6, 6, 6, 6, 6, 6];
/// Zero-based block index of the mismatched pairing.
pub const RELATIONAL_ANOMALY_BLOCK: usize = 10;

/// Constant-plus-sinusoid template `id` (1..=6) over one block.
pub fn relational_template(id: usize) -> [f64; RELATIONAL_BLOCK] {
    // (level, amplitude, phase)
    const PARAMS: [(f64, f64, f64); 6] = [
        (0.0, 1.0, 0.0),
        (2.0, 0.5, 0.5 * PI),
        (-1.5, 1.5, PI),
        (1.0, 1.0, PI / 3.0),
        (-2.0, 0.8, 0.0),
        (0.5, 1.2, 1.5 * PI),
    ];
    let (level, amp, phase) = PARAMS[id - 1];
    let mut out = [0.0; RELATIONAL_BLOCK];
    for (t, x) in out.iter_mut().enumerate() {
        *x = level + amp * (2.0 * PI * t as f64 / RELATIONAL_BLOCK as f64 + phase).sin();
    }
    out
}

/// Two-variable series built from six block templates paired (1,4), (2,5),
/// (3,6), except for one block where template 2 meets template 6.
pub fn gen_relational(seed: u64) -> (MultiSeries, InjectionLog) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = vec![Vec::new(), Vec::new()];
    for (col, ids) in columns
        .iter_mut()
        .zip([RELATIONAL_FIRST, RELATIONAL_SECOND])
    {
        for id in ids {
            col.extend(
                relational_template(id)
                    .iter()
                    .map(|x| x + rng.gen_range(-RELATIONAL_NOISE..=RELATIONAL_NOISE)),
            );
        }
    }
    let series = MultiSeries::from_columns(vec!["signal_a".into(), "signal_b".into()], &columns)
        .expect("relational construction is well formed");
    let start = RELATIONAL_ANOMALY_BLOCK * RELATIONAL_BLOCK;
    let log = InjectionLog {
        records: vec![Injection {
            start,
            end: start + RELATIONAL_BLOCK,
            variable: 1,
            kind: InjectionKind::Relational,
            factor: None,
        }],
    };
    (series, log)
}
