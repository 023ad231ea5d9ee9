//! Naive, definition-level reimplementations of every feature family.
//!
//! Written from the textbook formulas with no shared code: direct DFT sums
//! instead of an FFT, explicit template lists for the entropies, full
//! convolution for the wavelet transform, Gram-Schmidt least squares and a
//! closed-form cubic for the Langevin fixed point.

use std::collections::HashMap;
use std::f64::consts::PI;

use gaitscope::features::{FeatureKind, FftAttr, Family, SpectralAgg, StatAgg, TrendAttr};

/// Families whose value is an exact statistic and must agree to 1e-12
/// absolute; every other family is held to 1e-9 relative.
pub fn is_exact(family: Family) -> bool {
    matches!(
        family,
        Family::AbsEnergy
            | Family::AbsoluteMaximum
            | Family::CountAbove
            | Family::CountBelow
            | Family::Maximum
            | Family::Mean
            | Family::MeanNAbsoluteMax
            | Family::Median
            | Family::Minimum
            | Family::NumberCrossingM
            | Family::NumberPeaks
            | Family::Quantile
            | Family::RangeCount
            | Family::SumValues
    )
}

pub fn agrees(family: Family, got: Option<f64>, want: Option<f64>) -> bool {
    match (got, want) {
        (None, None) => true,
        (Some(a), Some(b)) => {
            let diff = (a - b).abs();
            if is_exact(family) {
                diff <= 1e-12
            } else {
                diff <= 1e-12 || diff <= 1e-9 * a.abs().max(b.abs())
            }
        }
        _ => false,
    }
}

fn mean(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v;
    }
    s / x.len() as f64
}

/// Population variance, two-pass.
fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    let mut s = 0.0;
    for v in x {
        s += (v - m).powi(2);
    }
    s / x.len() as f64
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

fn quantile(x: &[f64], q: f64) -> f64 {
    let s = sorted(x);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= s.len() {
        return s[s.len() - 1];
    }
    s[lo] + (h - lo as f64) * (s[lo + 1] - s[lo])
}

fn acf(x: &[f64], lag: usize) -> Option<f64> {
    let n = x.len();
    let v = var(x);
    if lag >= n || v < 1e-10 {
        return None;
    }
    let m = mean(x);
    let mut s = 0.0;
    for t in 0..n - lag {
        s += (x[t] - m) * (x[t + lag] - m);
    }
    Some(s / ((n - lag) as f64 * v))
}

fn agg(values: &[f64], f: StatAgg) -> f64 {
    match f {
        StatAgg::Mean => mean(values),
        StatAgg::Var => var(values),
    }
}

/// `(re, im)` of the k-th DFT term, summed term by term.
fn dft(x: &[f64], k: usize) -> (f64, f64) {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (t, v) in x.iter().enumerate() {
        let angle = 2.0 * PI * (k * t) as f64 / n;
        re += v * angle.cos();
        im -= v * angle.sin();
    }
    // a real signal's DC term has no imaginary part
    if k == 0 {
        im = 0.0;
    }
    (re, im)
}

struct Regression {
    slope: f64,
    intercept: f64,
    r: f64,
    stderr: Option<f64>,
}

fn regress(y: &[f64]) -> Option<Regression> {
    let n = y.len();
    if n < 2 {
        return None;
    }
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let (tm, ym) = (mean(&t), mean(y));
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        stt += (t[i] - tm).powi(2);
        sty += (t[i] - tm) * (y[i] - ym);
        syy += (y[i] - ym).powi(2);
    }
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let r = if syy == 0.0 { 0.0 } else { sty / (stt * syy).sqrt() };
    let stderr = (n > 2).then(|| {
        let mut sse = 0.0;
        for i in 0..n {
            sse += (y[i] - intercept - slope * t[i]).powi(2);
        }
        (sse / (n - 2) as f64 / stt).sqrt()
    });
    Some(Regression {
        slope,
        intercept,
        r,
        stderr,
    })
}

fn trend_attr(fit: Regression, attr: TrendAttr) -> Option<f64> {
    match attr {
        TrendAttr::Slope => Some(fit.slope),
        TrendAttr::Intercept => Some(fit.intercept),
        TrendAttr::Rvalue => Some(fit.r),
        TrendAttr::Stderr => fit.stderr,
    }
}

/// Count-based entropy with natural log.
fn entropy(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / total as f64;
            h -= p * p.ln();
        }
    }
    h
}

/// Equal-width bins over [min, max]; the maximum lands in the last bin.
fn binned(x: &[f64], bins: usize) -> f64 {
    let mut lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let mut counts = vec![0usize; bins];
    for &v in x {
        let b = (((v - lo) / (hi - lo)) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    entropy(counts.into_iter(), x.len())
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn templates(x: &[f64], m: usize) -> Vec<&[f64]> {
    (0..=x.len() - m).map(|i| &x[i..i + m]).collect()
}

fn approximate_entropy(x: &[f64], m: usize, r: f64) -> Option<f64> {
    if r <= 0.0 || x.len() <= m + 1 {
        return None;
    }
    let phi = |len: usize| {
        let t = templates(x, len);
        let mut total = 0.0;
        for a in &t {
            let close = t.iter().filter(|b| chebyshev(a, b) <= r).count();
            total += (close as f64 / t.len() as f64).ln();
        }
        total / t.len() as f64
    };
    Some((phi(m) - phi(m + 1)).abs())
}

fn sample_entropy(x: &[f64], m: usize, r: f64) -> Option<f64> {
    if r <= 0.0 || x.len() <= m + 1 {
        return None;
    }
    let matches = |len: usize| {
        let t = templates(x, len);
        let mut c = 0usize;
        for (i, a) in t.iter().enumerate() {
            for (j, b) in t.iter().enumerate() {
                if i != j && chebyshev(a, b) <= r {
                    c += 1;
                }
            }
        }
        c
    };
    let b = matches(m);
    let a = matches(m + 1);
    if a == 0 || b == 0 {
        return None;
    }
    Some((b as f64 / a as f64).ln())
}

fn leading_digit(v: f64) -> usize {
    let a = v.abs();
    if a == 0.0 {
        return 0;
    }
    let mut e = a.log10().floor() as i32;
    let mut d = (a / 10f64.powi(e)).floor();
    if d < 1.0 {
        e -= 1;
        d = (a / 10f64.powi(e)).floor();
    } else if d >= 10.0 {
        e += 1;
        d = (a / 10f64.powi(e)).floor();
    }
    d as usize
}

fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma).powi(2);
        sbb += (b[i] - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / saa.sqrt() / sbb.sqrt())
}

fn ricker(points: usize, a: f64) -> Vec<f64> {
    let amplitude = 2.0 / ((3.0 * a).sqrt() * PI.powf(0.25));
    let center = (points as f64 - 1.0) / 2.0;
    (0..points)
        .map(|i| {
            let t = i as f64 - center;
            amplitude * (1.0 - (t / a).powi(2)) * (-(t * t) / (2.0 * a * a)).exp()
        })
        .collect()
}

fn cwt(x: &[f64], width: usize, coeff: usize) -> Option<f64> {
    let n = x.len();
    let wav = ricker((10 * width).min(n), width as f64);
    let m = wav.len();
    let mut full = vec![0.0; n + m - 1];
    for i in 0..n {
        for j in 0..m {
            full[i + j] += x[i] * wav[j];
        }
    }
    let same = &full[(m - 1) / 2..(m - 1) / 2 + n];
    same.get(coeff).copied()
}

fn spectral(x: &[f64], aggtype: SpectralAgg) -> Option<f64> {
    let mags: Vec<f64> = (0..=x.len() / 2)
        .map(|k| {
            let (re, im) = dft(x, k);
            re.hypot(im)
        })
        .collect();
    let total: f64 = mags.iter().sum();
    if total == 0.0 {
        return None;
    }
    let p: Vec<f64> = mags.iter().map(|m| m / total).collect();
    let centroid: f64 = p.iter().enumerate().map(|(k, pk)| k as f64 * pk).sum();
    let central = |order: i32| -> f64 {
        p.iter()
            .enumerate()
            .map(|(k, pk)| (k as f64 - centroid).powi(order) * pk)
            .sum()
    };
    let variance = central(2);
    match aggtype {
        SpectralAgg::Centroid => Some(centroid),
        SpectralAgg::Variance => Some(variance),
        SpectralAgg::Skew => (variance >= 0.5).then(|| central(3) / variance.powf(1.5)),
        SpectralAgg::Kurtosis => (variance >= 0.5).then(|| central(4) / variance.powi(2)),
    }
}

/// Welch density of a single full-length segment, periodic Hann taper,
/// constant detrend, one-sided.
fn welch(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let w: Vec<f64> = (0..n)
        .map(|i| (PI * i as f64 / n as f64).sin().powi(2))
        .collect();
    let tapered: Vec<f64> = (0..n).map(|i| (x[i] - m) * w[i]).collect();
    let energy: f64 = w.iter().map(|v| v * v).sum();
    (0..=n / 2)
        .map(|k| {
            let (re, im) = dft(&tapered, k);
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            one_sided * (re * re + im * im) / energy
        })
        .collect()
}

fn fourier_entropy(x: &[f64], bins: usize) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let psd = welch(x);
    let peak = psd.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return None;
    }
    let scaled: Vec<f64> = psd.iter().map(|p| p / peak).collect();
    Some(binned(&scaled, bins))
}

/// Least squares by modified Gram-Schmidt on the raw Vandermonde matrix;
/// coefficients highest power first.
fn lstsq_poly(x: &[f64], y: &[f64], degree: usize) -> Option<Vec<f64>> {
    let cols = degree + 1;
    if x.len() < cols {
        return None;
    }
    let mut q: Vec<Vec<f64>> = (0..cols)
        .map(|c| x.iter().map(|v| v.powi((degree - c) as i32)).collect())
        .collect();
    let mut r = vec![vec![0.0; cols]; cols];
    for k in 0..cols {
        let norm = q[k].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        r[k][k] = norm;
        for v in q[k].iter_mut() {
            *v /= norm;
        }
        for j in k + 1..cols {
            let dot: f64 = q[k].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[k][j] = dot;
            let qk = q[k].clone();
            for (v, e) in q[j].iter_mut().zip(&qk) {
                *v -= dot * e;
            }
        }
    }
    let qty: Vec<f64> = q.iter().map(|col| col.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut coef = vec![0.0; cols];
    for k in (0..cols).rev() {
        let s: f64 = (k + 1..cols).map(|j| r[k][j] * coef[j]).sum();
        coef[k] = (qty[k] - s) / r[k][k];
    }
    Some(coef)
}

/// Largest real part among the roots of a cubic, closed form.
fn cubic_max_real_part(c: &[f64]) -> Option<f64> {
    let (a, b, cc, d) = (c[0], c[1], c[2], c[3]);
    if a == 0.0 {
        return None;
    }
    let shift = b / (3.0 * a);
    let p = (3.0 * a * cc - b * b) / (3.0 * a * a);
    let q = (2.0 * b.powi(3) - 9.0 * a * b * cc + 27.0 * a * a * d) / (27.0 * a.powi(3));
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let best = if disc > 0.0 {
        let s = disc.sqrt();
        let real = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        // the complex pair has real part -real / 2
        real.max(-real / 2.0)
    } else {
        let rho = 2.0 * (-p / 3.0).sqrt();
        let theta = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| rho * (theta - 2.0 * PI * k as f64 / 3.0).cos())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Some(best - shift)
}

fn langevin(x: &[f64], degree: usize, bins: usize) -> Option<f64> {
    assert_eq!(degree, 3, "oracle only solves cubics");
    let n = x.len();
    if n < 3 || bins == 0 {
        return None;
    }
    let signal = &x[..n - 1];
    let edges: Vec<f64> = (0..=bins).map(|i| quantile(signal, i as f64 / bins as f64)).collect();
    if edges.windows(2).any(|e| e[0] == e[1]) {
        return None;
    }
    // quantile bins (e_i, e_{i+1}], the first one closed on the left
    let mut groups: Vec<(f64, f64, usize)> = vec![(0.0, 0.0, 0); bins];
    for t in 0..n - 1 {
        let s = signal[t];
        let b = (0..bins).find(|&b| s <= edges[b + 1]).unwrap_or(bins - 1);
        groups[b].0 += s;
        groups[b].1 += x[t + 1] - x[t];
        groups[b].2 += 1;
    }
    let kept: Vec<&(f64, f64, usize)> = groups.iter().filter(|g| g.2 > 0).collect();
    let gx: Vec<f64> = kept.iter().map(|g| g.0 / g.2 as f64).collect();
    let gy: Vec<f64> = kept.iter().map(|g| g.1 / g.2 as f64).collect();
    if gx.len() <= degree {
        return None;
    }
    cubic_max_real_part(&lstsq_poly(&gx, &gy, degree)?)
}

fn permutation_entropy(x: &[f64], dimension: usize, tau: usize) -> Option<f64> {
    let span = (dimension - 1) * tau;
    if dimension < 2 || tau == 0 || x.len() <= span {
        return None;
    }
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let windows = x.len() - span;
    for s in 0..windows {
        // argsort of the embedded vector identifies the ordinal pattern
        let mut idx: Vec<usize> = (0..dimension).collect();
        idx.sort_by(|&a, &b| x[s + a * tau].partial_cmp(&x[s + b * tau]).unwrap());
        *counts.entry(idx).or_default() += 1;
    }
    Some(entropy(counts.into_values(), windows))
}

/// Reference value of `kind` on `x`; `None` when undefined.
pub fn oracle(kind: &FeatureKind, x: &[f64]) -> Option<f64> {
    use FeatureKind as K;
    let n = x.len();
    let sd = var(x).sqrt();
    let v = match *kind {
        K::AbsEnergy => Some(x.iter().map(|v| v * v).sum()),
        K::AbsoluteMaximum => Some(x.iter().map(|v| v.abs()).fold(0.0, f64::max)),
        K::AbsoluteSumOfChanges => Some((1..n).map(|i| (x[i] - x[i - 1]).abs()).sum()),
        K::AggAutocorrelation { f_agg, maxlag } => {
            let top = maxlag.min(n - 1);
            let lags: Option<Vec<f64>> = (1..=top).map(|l| acf(x, l)).collect();
            lags.filter(|l| !l.is_empty()).map(|l| agg(&l, f_agg))
        }
        K::AggLinearTrend { chunk_len, attr } => {
            let chunks = n.div_ceil(chunk_len);
            if chunks < 2 {
                None
            } else {
                let means: Vec<f64> = (0..chunks)
                    .map(|c| mean(&x[c * chunk_len..((c + 1) * chunk_len).min(n)]))
                    .collect();
                regress(&means).and_then(|f| trend_attr(f, attr))
            }
        }
        K::ApproximateEntropy { m, r } => approximate_entropy(x, m, r * sd),
        K::Autocorrelation { lag } => acf(x, lag),
        K::BenfordCorrelation => {
            let digits: Vec<usize> = x.iter().map(|&v| leading_digit(v)).collect();
            let observed: Vec<f64> = (1..=9)
                .map(|d| digits.iter().filter(|&&g| g == d).count() as f64 / n as f64)
                .collect();
            let expected: Vec<f64> = (1..=9).map(|d| (1.0 + 1.0 / d as f64).log10()).collect();
            correlation(&expected, &observed)
        }
        K::BinnedEntropy { max_bins } => (max_bins > 0).then(|| binned(x, max_bins)),
        K::C3 { lag } => {
            if 2 * lag >= n {
                None
            } else {
                let terms: Vec<f64> = (0..n - 2 * lag).map(|i| x[i] * x[i + lag] * x[i + 2 * lag]).collect();
                Some(mean(&terms))
            }
        }
        K::ChangeQuantiles { ql, qh, isabs, f_agg } => {
            if ql >= qh {
                None
            } else {
                let (lo, hi) = (quantile(x, ql), quantile(x, qh));
                let inside = |v: f64| v >= lo && v <= hi;
                let diffs: Vec<f64> = (1..n)
                    .filter(|&i| inside(x[i - 1]) && inside(x[i]))
                    .map(|i| {
                        let d = x[i] - x[i - 1];
                        if isabs {
                            d.abs()
                        } else {
                            d
                        }
                    })
                    .collect();
                (!diffs.is_empty()).then(|| agg(&diffs, f_agg))
            }
        }
        K::CidCe { normalize } => {
            let z: Vec<f64> = if normalize {
                if sd == 0.0 {
                    return None;
                }
                let m = mean(x);
                x.iter().map(|v| (v - m) / sd).collect()
            } else {
                x.to_vec()
            };
            Some((1..n).map(|i| (z[i] - z[i - 1]).powi(2)).sum::<f64>().sqrt())
        }
        K::CountAbove { t } => Some(x.iter().filter(|&&v| v > t).count() as f64 / n as f64),
        K::CountBelow { t } => Some(x.iter().filter(|&&v| v < t).count() as f64 / n as f64),
        K::CwtCoefficients { w, coeff } => cwt(x, w, coeff),
        K::FftAggregated { aggtype } => spectral(x, aggtype),
        K::FftCoefficient { coeff, attr } => {
            if coeff > n / 2 {
                None
            } else {
                let (re, im) = dft(x, coeff);
                Some(match attr {
                    FftAttr::Real => re,
                    FftAttr::Imag => im,
                    FftAttr::Abs => (re * re + im * im).sqrt(),
                    FftAttr::Angle => im.atan2(re) * 180.0 / PI,
                })
            }
        }
        K::FourierEntropy { bins } => fourier_entropy(x, bins),
        K::LinearTrend { attr } => regress(x).and_then(|f| trend_attr(f, attr)),
        K::MaxLangevinFixedPoint { m, r } => langevin(x, m, r),
        K::Maximum => Some(sorted(x)[n - 1]),
        K::Mean => Some(mean(x)),
        K::MeanAbsChange => (n > 1).then(|| (1..n).map(|i| (x[i] - x[i - 1]).abs()).sum::<f64>() / (n - 1) as f64),
        K::MeanNAbsoluteMax { n: k } => {
            if k == 0 || k > n {
                None
            } else {
                let abs = sorted(&x.iter().map(|v| v.abs()).collect::<Vec<_>>());
                Some(mean(&abs[n - k..]))
            }
        }
        K::Median => Some(quantile(x, 0.5)),
        K::Minimum => Some(sorted(x)[0]),
        K::NumberCrossingM { m } => Some(
            (1..n)
                .filter(|&i| x[i - 1].min(x[i]) <= m && m < x[i - 1].max(x[i]))
                .count() as f64,
        ),
        K::NumberPeaks { n: s } => {
            if s == 0 {
                None
            } else {
                let peaks = (0..n)
                    .filter(|&t| t >= s && t + s < n)
                    .filter(|&t| (t - s..=t + s).filter(|&u| u != t).all(|u| x[t] > x[u]))
                    .count();
                Some(peaks as f64)
            }
        }
        K::PermutationEntropy { dimension, tau } => permutation_entropy(x, dimension, tau),
        K::Quantile { q } => (0.0..=1.0).contains(&q).then(|| quantile(x, q)),
        K::RangeCount { min, max } => Some(x.iter().filter(|&&v| v >= min && v < max).count() as f64),
        K::RootMeanSquare => Some((x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()),
        K::SampleEntropy { m, r } => sample_entropy(x, m, r * sd),
        K::StandardDeviation => Some(sd),
        K::SumValues => Some(x.iter().sum()),
        K::Variance => Some(var(x)),
        K::VariationCoefficient => {
            let m = mean(x);
            (m != 0.0).then(|| sd / m)
        }
    };
    v.filter(|v| v.is_finite())
}
