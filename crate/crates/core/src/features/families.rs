//! Numeric definitions of the feature families.
//!
//! Every function returns `None` on a degenerate input; the caller maps that
//! to 0 and counts it.

use std::cell::{OnceCell, RefCell};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::descriptor::{FeatureKind, FftAttr, SpectralAgg, StatAgg, TrendAttr};

/// Variances below this are treated as a constant series.
pub const VAR_EPS: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Shared per-series intermediates, computed on first use.
pub struct SeriesContext<'a> {
    x: &'a [f64],
    mean: f64,
    var: f64,
    sorted: OnceCell<Vec<f64>>,
    spectrum: OnceCell<Vec<Complex64>>,
    cwt: RefCell<Vec<(usize, Vec<f64>)>>,
}

impl<'a> SeriesContext<'a> {
    pub fn new(x: &'a [f64]) -> Self {
        let mean = mean(x);
        let var = if x.is_empty() {
            f64::NAN
        } else {
            x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64
        };
        SeriesContext {
            x,
            mean,
            var,
            sorted: OnceCell::new(),
            spectrum: OnceCell::new(),
            cwt: RefCell::new(Vec::new()),
        }
    }

    pub fn values(&self) -> &[f64] {
        self.x
    }

    fn std(&self) -> f64 {
        self.var.sqrt()
    }

    fn sorted(&self) -> &[f64] {
        self.sorted.get_or_init(|| {
            let mut s = self.x.to_vec();
            s.sort_by(f64::total_cmp);
            s
        })
    }

    fn quantile(&self, q: f64) -> Option<f64> {
        quantile_sorted(self.sorted(), q)
    }

    /// One-sided spectrum, `n / 2 + 1` bins.
    fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| rfft(self.x))
    }

    fn cwt_row(&self, width: usize, coeff: usize) -> Option<f64> {
        if let Some((_, row)) = self.cwt.borrow().iter().find(|(w, _)| *w == width) {
            return row.get(coeff).copied();
        }
        let row = cwt_ricker(self.x, width);
        let v = row.get(coeff).copied();
        self.cwt.borrow_mut().push((width, row));
        v
    }

    pub fn eval(&self, kind: &FeatureKind) -> Option<f64> {
        let v = self.eval_raw(kind)?;
        v.is_finite().then_some(v)
    }

    fn eval_raw(&self, kind: &FeatureKind) -> Option<f64> {
        use FeatureKind as K;
        let x = self.x;
        if x.is_empty() {
            return None;
        }
        let n = x.len() as f64;
        match *kind {
            K::AbsEnergy => Some(x.iter().map(|v| v * v).sum()),
            K::AbsoluteMaximum => Some(x.iter().fold(0.0, |m, v| m.max(v.abs()))),
            K::AbsoluteSumOfChanges => Some(x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()),
            K::AggAutocorrelation { f_agg, maxlag } => self.agg_autocorrelation(f_agg, maxlag),
            K::AggLinearTrend { chunk_len, attr } => agg_linear_trend(x, chunk_len, attr),
            K::ApproximateEntropy { m, r } => approximate_entropy(x, m, r * self.std()),
            K::Autocorrelation { lag } => self.autocorrelation(lag),
            K::BenfordCorrelation => benford_correlation(x),
            K::BinnedEntropy { max_bins } => binned_entropy(x, max_bins),
            K::C3 { lag } => c3(x, lag),
            K::ChangeQuantiles {
                ql,
                qh,
                isabs,
                f_agg,
            } => self.change_quantiles(ql, qh, isabs, f_agg),
            K::CidCe { normalize } => self.cid_ce(normalize),
            K::CountAbove { t } => Some(x.iter().filter(|&&v| v > t).count() as f64 / n),
            K::CountBelow { t } => Some(x.iter().filter(|&&v| v < t).count() as f64 / n),
            K::CwtCoefficients { w, coeff } => self.cwt_row(w, coeff),
            K::FftAggregated { aggtype } => fft_aggregated(self.spectrum(), aggtype),
            K::FftCoefficient { coeff, attr } => {
                let c = *self.spectrum().get(coeff)?;
                Some(match attr {
                    FftAttr::Real => c.re,
                    FftAttr::Imag => c.im,
                    FftAttr::Abs => c.norm(),
                    FftAttr::Angle => c.im.atan2(c.re).to_degrees(),
                })
            }
            K::FourierEntropy { bins } => fourier_entropy(x, bins),
            K::LinearTrend { attr } => {
                let t: Vec<f64> = (0..x.len()).map(|i| i as f64).collect();
                linregress(&t, x).and_then(|fit| fit.attr(attr))
            }
            K::MaxLangevinFixedPoint { m, r } => max_langevin_fixed_point(x, m, r),
            K::Maximum => Some(*self.sorted().last()?),
            K::Mean => Some(self.mean),
            K::MeanAbsChange => {
                (x.len() > 1).then(|| x.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n - 1.0))
            }
            K::MeanNAbsoluteMax { n: k } => {
                if k == 0 || k > x.len() {
                    return None;
                }
                let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                a.sort_by(|p, q| q.total_cmp(p));
                Some(a[..k].iter().sum::<f64>() / k as f64)
            }
            K::Median => self.quantile(0.5),
            K::Minimum => Some(*self.sorted().first()?),
            K::NumberCrossingM { m } => Some(
                x.windows(2)
                    .filter(|w| (w[0] > m) != (w[1] > m))
                    .count() as f64,
            ),
            K::NumberPeaks { n: support } => number_peaks(x, support),
            K::PermutationEntropy { dimension, tau } => permutation_entropy(x, dimension, tau),
            K::Quantile { q } => self.quantile(q),
            K::RangeCount { min, max } => Some(x.iter().filter(|&&v| min <= v && v < max).count() as f64),
            K::RootMeanSquare => Some((x.iter().map(|v| v * v).sum::<f64>() / n).sqrt()),
            K::SampleEntropy { m, r } => sample_entropy(x, m, r * self.std()),
            K::StandardDeviation => Some(self.std()),
            K::SumValues => Some(x.iter().sum()),
            K::Variance => Some(self.var),
            K::VariationCoefficient => {
                if self.mean == 0.0 {
                    None
                } else {
                    Some(self.std() / self.mean)
                }
            }
        }
    }

    fn autocorrelation(&self, lag: usize) -> Option<f64> {
        let x = self.x;
        if lag >= x.len() || self.var < VAR_EPS {
            return None;
        }
        let mu = self.mean;
        let s: f64 = x[..x.len() - lag]
            .iter()
            .zip(&x[lag..])
            .map(|(a, b)| (a - mu) * (b - mu))
            .sum();
        Some(s / ((x.len() - lag) as f64 * self.var))
    }

    fn agg_autocorrelation(&self, f_agg: StatAgg, maxlag: usize) -> Option<f64> {
        let maxlag = maxlag.min(self.x.len().saturating_sub(1));
        if maxlag == 0 {
            return None;
        }
        let acf: Vec<f64> = (1..=maxlag)
            .map(|lag| self.autocorrelation(lag))
            .collect::<Option<_>>()?;
        Some(aggregate(&acf, f_agg))
    }

    fn change_quantiles(&self, ql: f64, qh: f64, isabs: bool, f_agg: StatAgg) -> Option<f64> {
        if ql >= qh {
            return None;
        }
        let lo = self.quantile(ql)?;
        let hi = self.quantile(qh)?;
        let inside: Vec<bool> = self.x.iter().map(|&v| lo <= v && v <= hi).collect();
        let changes: Vec<f64> = self
            .x
            .windows(2)
            .zip(inside.windows(2))
            .filter(|(_, b)| b[0] && b[1])
            .map(|(w, _)| {
                let d = w[1] - w[0];
                if isabs {
                    d.abs()
                } else {
                    d
                }
            })
            .collect();
        if changes.is_empty() {
            return None;
        }
        Some(aggregate(&changes, f_agg))
    }

    fn cid_ce(&self, normalize: bool) -> Option<f64> {
        let scale = if normalize {
            if self.var < VAR_EPS {
                return None;
            }
            1.0 / self.std()
        } else {
            1.0
        };
        let s: f64 = self
            .x
            .windows(2)
            .map(|w| {
                let d = (w[1] - w[0]) * scale;
                d * d
            })
            .sum();
        Some(s.sqrt())
    }
}

/// Value of one feature kind on `x`; `None` when degenerate or non-finite.
pub fn evaluate(kind: &FeatureKind, x: &[f64]) -> Option<f64> {
    SeriesContext::new(x).eval(kind)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn population_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

fn aggregate(x: &[f64], f_agg: StatAgg) -> f64 {
    match f_agg {
        StatAgg::Mean => mean(x),
        StatAgg::Var => population_var(x),
    }
}

/// Linear-interpolation quantile over sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn rfft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    buf.truncate(n / 2 + 1);
    // DC and Nyquist bins of a real signal are exactly real
    buf[0].im = 0.0;
    if n % 2 == 0 {
        buf[n / 2].im = 0.0;
    }
    buf
}

fn fft_aggregated(spectrum: &[Complex64], agg: SpectralAgg) -> Option<f64> {
    let mag: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();
    let total: f64 = mag.iter().sum();
    if total == 0.0 {
        return None;
    }
    let moment = |k: i32| -> f64 {
        mag.iter()
            .enumerate()
            .map(|(i, m)| m * (i as f64).powi(k))
            .sum::<f64>()
            / total
    };
    let centroid = moment(1);
    let variance = moment(2) - centroid * centroid;
    match agg {
        SpectralAgg::Centroid => Some(centroid),
        SpectralAgg::Variance => Some(variance),
        SpectralAgg::Skew => {
            if variance < 0.5 {
                return None;
            }
            let third = moment(3) - 3.0 * centroid * variance - centroid.powi(3);
            Some(third / variance.powf(1.5))
        }
        SpectralAgg::Kurtosis => {
            if variance < 0.5 {
                return None;
            }
            let fourth = moment(4) - 4.0 * centroid * moment(3)
                + 6.0 * moment(2) * centroid * centroid
                - 3.0 * centroid.powi(4);
            Some(fourth / (variance * variance))
        }
    }
}

/// Ricker wavelet sampled on `points` points with width `a`.
pub fn ricker(points: usize, a: f64) -> Vec<f64> {
    let amp = 2.0 / ((3.0 * a).sqrt() * std::f64::consts::PI.powf(0.25));
    let wsq = a * a;
    (0..points)
        .map(|i| {
            let t = i as f64 - (points as f64 - 1.0) / 2.0;
            let tsq = t * t;
            amp * (1.0 - tsq / wsq) * (-tsq / (2.0 * wsq)).exp()
        })
        .collect()
}

/// Continuous wavelet transform row for one width, same-length convolution.
fn cwt_ricker(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let points = (10 * width).min(n);
    let wav = ricker(points, width as f64);
    let offset = (points - 1) / 2;
    (0..n)
        .map(|i| {
            let k = i + offset;
            let lo = k.saturating_sub(points - 1);
            let hi = k.min(n - 1);
            (lo..=hi).map(|j| x[j] * wav[k - j]).sum()
        })
        .collect()
}

/// Equal-width histogram counts; the last bin is closed.
pub fn histogram(x: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    let mut lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let step = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| i as f64 * step + lo).collect();
    edges[bins] = hi;
    let norm = bins as f64 / (hi - lo);
    for &v in x {
        let mut idx = (((v - lo) * norm) as usize).min(bins - 1);
        if v < edges[idx] {
            idx -= 1;
        } else if idx != bins - 1 && v >= edges[idx + 1] {
            idx += 1;
        }
        counts[idx] += 1;
    }
    counts
}

fn entropy_of_counts(counts: &[usize], total: usize) -> f64 {
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            p * p.ln()
        })
        .sum::<f64>()
}

fn binned_entropy(x: &[f64], bins: usize) -> Option<f64> {
    if bins == 0 {
        return None;
    }
    Some(entropy_of_counts(&histogram(x, bins), x.len()))
}

/// One-segment Welch density with a periodic Hann window and mean removal.
pub fn welch_density(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let win: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let scale = 1.0 / win.iter().map(|w| w * w).sum::<f64>();
    let tapered: Vec<f64> = x.iter().zip(&win).map(|(v, w)| (v - m) * w).collect();
    let mut psd: Vec<f64> = rfft(&tapered).iter().map(|c| c.norm_sqr() * scale).collect();
    let last = psd.len();
    let end = if n % 2 == 0 { last - 1 } else { last };
    for p in &mut psd[1..end.max(1)] {
        *p *= 2.0;
    }
    psd
}

fn fourier_entropy(x: &[f64], bins: usize) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let psd = welch_density(x);
    let max = psd.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return None;
    }
    let norm: Vec<f64> = psd.iter().map(|p| p / max).collect();
    binned_entropy(&norm, bins)
}

fn c3(x: &[f64], lag: usize) -> Option<f64> {
    let n = x.len();
    if 2 * lag >= n {
        return None;
    }
    let count = n - 2 * lag;
    Some(
        (0..count)
            .map(|i| x[i + 2 * lag] * x[i + lag] * x[i])
            .sum::<f64>()
            / count as f64,
    )
}

fn approximate_entropy(x: &[f64], m: usize, r: f64) -> Option<f64> {
    let n = x.len();
    if r <= 0.0 || n <= m + 1 {
        return None;
    }
    let phi = |m: usize| -> f64 {
        let count = n - m + 1;
        let mut total = 0.0;
        for i in 0..count {
            let mut c = 0usize;
            for j in 0..count {
                if (0..m).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                    c += 1;
                }
            }
            total += (c as f64 / count as f64).ln();
        }
        total / count as f64
    };
    Some((phi(m) - phi(m + 1)).abs())
}

fn sample_entropy(x: &[f64], m: usize, r: f64) -> Option<f64> {
    let n = x.len();
    if r <= 0.0 || n <= m + 1 {
        return None;
    }
    let within = |i: usize, j: usize, len: usize| (0..len).all(|k| (x[i + k] - x[j + k]).abs() <= r);
    let mut b = 0usize;
    let mut a = 0usize;
    for i in 0..=n - m {
        for j in 0..=n - m {
            if i != j && within(i, j, m) {
                b += 1;
            }
        }
    }
    for i in 0..n - m {
        for j in 0..n - m {
            if i != j && within(i, j, m + 1) {
                a += 1;
            }
        }
    }
    if a == 0 || b == 0 {
        return None;
    }
    Some(-(a as f64 / b as f64).ln())
}

fn benford_correlation(x: &[f64]) -> Option<f64> {
    let mut counts = [0usize; 9];
    for v in x {
        let s = format!("{:e}", v.abs());
        if let Some(d) = s.chars().next().and_then(|c| c.to_digit(10)) {
            if d > 0 {
                counts[d as usize - 1] += 1;
            }
        }
    }
    let total = x.len() as f64;
    let data: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let benford: Vec<f64> = (1..=9).map(|d| (1.0 + 1.0 / d as f64).log10()).collect();
    pearson(&benford, &data)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (p, q) in a.iter().zip(b) {
        sab += (p - ma) * (q - mb);
        saa += (p - ma) * (p - ma);
        sbb += (q - mb) * (q - mb);
    }
    let den = (saa * sbb).sqrt();
    if den == 0.0 {
        return None;
    }
    Some(sab / den)
}

fn number_peaks(x: &[f64], support: usize) -> Option<f64> {
    if support == 0 {
        return None;
    }
    let n = x.len();
    if n < 2 * support + 1 {
        return Some(0.0);
    }
    let count = (support..n - support)
        .filter(|&t| (1..=support).all(|i| x[t] > x[t - i] && x[t] > x[t + i]))
        .count();
    Some(count as f64)
}

fn permutation_entropy(x: &[f64], dimension: usize, tau: usize) -> Option<f64> {
    if dimension < 2 || tau == 0 {
        return None;
    }
    let span = (dimension - 1) * tau;
    if x.len() <= span {
        return None;
    }
    let windows = x.len() - span;
    let mut patterns: Vec<Vec<usize>> = Vec::with_capacity(windows);
    for start in 0..windows {
        let mut order: Vec<usize> = (0..dimension).collect();
        order.sort_by(|&a, &b| x[start + a * tau].total_cmp(&x[start + b * tau]));
        let mut rank = vec![0usize; dimension];
        for (r, &pos) in order.iter().enumerate() {
            rank[pos] = r;
        }
        patterns.push(rank);
    }
    patterns.sort();
    let mut counts = Vec::new();
    let mut run = 1usize;
    for w in patterns.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            counts.push(run);
            run = 1;
        }
    }
    counts.push(run);
    Some(entropy_of_counts(&counts, windows))
}

/// Ordinary least squares fit of `y` on `x`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub rvalue: f64,
    pub stderr: Option<f64>,
}

impl LinearFit {
    fn attr(&self, attr: TrendAttr) -> Option<f64> {
        match attr {
            TrendAttr::Slope => Some(self.slope),
            TrendAttr::Intercept => Some(self.intercept),
            TrendAttr::Rvalue => Some(self.rvalue),
            TrendAttr::Stderr => self.stderr,
        }
    }
}

pub fn linregress(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let xm = mean(x);
    let ym = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - xm) * (a - xm);
        sxy += (a - xm) * (b - ym);
        syy += (b - ym) * (b - ym);
    }
    let nf = n as f64;
    let (sxx, sxy, syy) = (sxx / nf, sxy / nf, syy / nf);
    if sxx == 0.0 {
        return None;
    }
    let den = (sxx * syy).sqrt();
    let rvalue = if den == 0.0 {
        0.0
    } else {
        (sxy / den).clamp(-1.0, 1.0)
    };
    let slope = sxy / sxx;
    let stderr = (n > 2).then(|| ((1.0 - rvalue * rvalue) * syy / sxx / (nf - 2.0)).sqrt());
    Some(LinearFit {
        slope,
        intercept: ym - slope * xm,
        rvalue,
        stderr,
    })
}

fn agg_linear_trend(x: &[f64], chunk_len: usize, attr: TrendAttr) -> Option<f64> {
    if chunk_len == 0 || chunk_len >= x.len() {
        return None;
    }
    let means: Vec<f64> = x.chunks(chunk_len).map(mean).collect();
    let t: Vec<f64> = (0..means.len()).map(|i| i as f64).collect();
    linregress(&t, &means)?.attr(attr)
}

fn max_langevin_fixed_point(x: &[f64], degree: usize, bins: usize) -> Option<f64> {
    let n = x.len();
    if n < 3 || bins == 0 {
        return None;
    }
    let signal = &x[..n - 1];
    let delta: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = signal.to_vec();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (0..=bins)
        .map(|i| quantile_sorted(&sorted, i as f64 / bins as f64))
        .collect::<Option<_>>()?;
    if edges.windows(2).any(|e| e[0] == e[1]) {
        return None;
    }
    let mut sums = vec![(0.0, 0.0, 0usize); bins];
    for (&s, &d) in signal.iter().zip(&delta) {
        let bin = edges[1..bins].iter().filter(|&&e| e < s).count();
        sums[bin].0 += s;
        sums[bin].1 += d;
        sums[bin].2 += 1;
    }
    let (px, py): (Vec<f64>, Vec<f64>) = sums
        .iter()
        .filter(|s| s.2 > 0)
        .map(|s| (s.0 / s.2 as f64, s.1 / s.2 as f64))
        .unzip();
    if px.len() <= degree {
        return None;
    }
    let coeffs = polyfit(&px, &py, degree)?;
    poly_roots(&coeffs)
        .into_iter()
        .map(|z| z.re)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
}

/// Least-squares polynomial coefficients, highest power first.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Option<Vec<f64>> {
    let rows = x.len();
    let cols = degree + 1;
    // Vandermonde columns, each scaled to unit norm
    let mut a: Vec<Vec<f64>> = (0..cols)
        .map(|c| x.iter().map(|&v| v.powi((degree - c) as i32)).collect())
        .collect();
    let scale: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if scale.iter().any(|&s| s == 0.0) {
        return None;
    }
    for (col, s) in a.iter_mut().zip(&scale) {
        col.iter_mut().for_each(|v| *v /= s);
    }
    let mut b = y.to_vec();
    // Householder QR
    for k in 0..cols {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|e| e * e).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k) {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, e) in col[k..].iter_mut().zip(&v) {
                *c -= f * e;
            }
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vnorm2;
        for (c, e) in b[k..].iter_mut().zip(&v) {
            *c -= f * e;
        }
    }
    if rows < cols {
        return None;
    }
    let mut coef = vec![0.0; cols];
    for k in (0..cols).rev() {
        let s: f64 = (k + 1..cols).map(|j| a[j][k] * coef[j]).sum();
        if a[k][k] == 0.0 {
            return None;
        }
        coef[k] = (b[k] - s) / a[k][k];
    }
    Some(coef.iter().zip(&scale).map(|(c, s)| c / s).collect())
}

/// Complex roots of a polynomial given highest power first.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let start = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
    let c = &coeffs[start..];
    if c.len() < 2 {
        return Vec::new();
    }
    let deg = c.len() - 1;
    let monic: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v / c[0], 0.0)).collect();
    let eval = |z: Complex64| monic.iter().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
    let bound = 1.0 + monic[1..].iter().map(|k| k.norm()).fold(0.0, f64::max);
    // Durand-Kerner from points on a non-symmetric spiral
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg)
        .map(|i| seed.powu(i as u32) * bound * 0.5)
        .collect();
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let zi = roots[i];
            let den = (0..deg)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (zi - roots[j]));
            if den.norm() == 0.0 {
                continue;
            }
            let step = eval(zi) / den;
            roots[i] = zi - step;
            moved = moved.max(step.norm());
        }
        if moved <= 1e-15 * bound {
            break;
        }
    }
    // Newton polish on the original polynomial
    let deriv: Vec<Complex64> = monic[..deg]
        .iter()
        .enumerate()
        .map(|(i, k)| k * (deg - i) as f64)
        .collect();
    let deval = |z: Complex64| deriv.iter().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
    for r in &mut roots {
        for _ in 0..3 {
            let d = deval(*r);
            if d.norm() == 0.0 {
                break;
            }
            let next = *r - eval(*r) / d;
            if !next.re.is_finite() || !next.im.is_finite() || eval(next).norm() >= eval(*r).norm() {
                break;
            }
            *r = next;
        }
    }
    roots
}
