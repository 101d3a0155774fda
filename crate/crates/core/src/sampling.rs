//! Design-matrix generation: sample the state space, run the forward model,
//! standardize inputs, and partition rows into train/validation/test.
//!
//! A sample is a 4-parameter atmospheric state plus one surface reflectance
//! per channel, so the design matrix has `4 + k` columns. Per-channel
//! reflectances are sampled independently (uniform and Latin hypercube
//! methods); the grid method grids the five scalar parameters and uses a flat
//! surface spectrum.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::oracle::{self, AtmosphericState, OracleConfig, SurfaceSpectrum, WavelengthGrid};

/// Row label in the dataset partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse {
                location: "split column".into(),
                message: format!("unknown split label {other:?}"),
            }),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-parameter sampling bounds. Degenerate (low == high) bounds are allowed
/// and collapse that dimension to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateRanges {
    pub mu0: (f64, f64),
    pub tau550: (f64, f64),
    pub alpha: (f64, f64),
    pub wvap: (f64, f64),
    pub rho_s: (f64, f64),
}

impl Default for StateRanges {
    fn default() -> Self {
        Self {
            mu0: (0.3, 1.0),
            tau550: (0.0, 0.5),
            alpha: (0.5, 2.0),
            wvap: (0.0, 5.0),
            rho_s: (0.0, 0.9),
        }
    }
}

impl StateRanges {
    pub fn validate(&self) -> Result<()> {
        let within = |name, (lo, hi): (f64, f64), (tlo, thi): (f64, f64)| -> Result<()> {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= tlo && hi <= thi) {
                return Err(Error::Config(format!(
                    "range {name} = ({lo}, {hi}) outside type bounds [{tlo}, {thi}]"
                )));
            }
            Ok(())
        };
        within("mu0", self.mu0, (0.3, 1.0))?;
        within("tau550", self.tau550, (0.0, 0.5))?;
        within("alpha", self.alpha, (0.5, 2.0))?;
        within("wvap", self.wvap, (0.0, 5.0))?;
        within("rho_s", self.rho_s, (0.0, 0.9))?;
        Ok(())
    }

    fn bounds(&self) -> [(f64, f64); 5] {
        [self.mu0, self.tau550, self.alpha, self.wvap, self.rho_s]
    }

    pub fn contains_state(&self, s: &AtmosphericState) -> bool {
        let b = self.bounds();
        s.mu0 >= b[0].0
            && s.mu0 <= b[0].1
            && s.tau550 >= b[1].0
            && s.tau550 <= b[1].1
            && s.alpha >= b[2].0
            && s.alpha <= b[2].1
            && s.wvap >= b[3].0
            && s.wvap <= b[3].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    Uniform,
    LatinHypercube,
    Grid,
}

/// One draw: atmospheric state plus a per-channel surface spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: AtmosphericState,
    pub surf: SurfaceSpectrum,
}

/// Draw `n` samples for a `k`-channel instrument. Deterministic for a fixed
/// `(method, seed, n, k)`.
///
/// The grid method requires `n = g^5` and produces a full factorial over the
/// five scalar parameters with a flat (spectrally constant) reflectance.
pub fn sample_states(
    ranges: &StateRanges,
    n: usize,
    method: SampleMethod,
    k: usize,
    seed: u64,
) -> Result<Vec<Sample>> {
    ranges.validate()?;
    if n == 0 {
        return Err(Error::Config("need n >= 1 samples".into()));
    }
    if k == 0 {
        return Err(Error::Config("need k >= 1 channels".into()));
    }
    let dims = 4 + k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = ranges.bounds();
    let col_bounds = |d: usize| if d < 4 { bounds[d] } else { bounds[4] };

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dims);
    match method {
        SampleMethod::Uniform => {
            for d in 0..dims {
                let (lo, hi) = col_bounds(d);
                columns.push(
                    (0..n)
                        .map(|_| lo + rng.random::<f64>() * (hi - lo))
                        .collect(),
                );
            }
        }
        SampleMethod::LatinHypercube => {
            // One point per stratum and dimension: shuffle the strata, then
            // jitter within each.
            for d in 0..dims {
                let (lo, hi) = col_bounds(d);
                let mut strata: Vec<usize> = (0..n).collect();
                shuffle(&mut strata, &mut rng);
                columns.push(
                    strata
                        .into_iter()
                        .map(|s| {
                            let u = (s as f64 + rng.random::<f64>()) / n as f64;
                            lo + u * (hi - lo)
                        })
                        .collect(),
                );
            }
        }
        SampleMethod::Grid => {
            let g = integer_fifth_root(n).ok_or(Error::GridSize { n, dims: 5 })?;
            let axes: Vec<Vec<f64>> = bounds.iter().map(|&(lo, hi)| linspace(lo, hi, g)).collect();
            let mut scalar_cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 5];
            let mut idx = [0usize; 5];
            loop {
                for d in 0..5 {
                    scalar_cols[d].push(axes[d][idx[d]]);
                }
                // Mixed-radix increment, last axis fastest.
                let mut carry = true;
                for d in (0..5).rev() {
                    if carry {
                        idx[d] += 1;
                        if idx[d] == g {
                            idx[d] = 0;
                        } else {
                            carry = false;
                        }
                    }
                }
                if carry {
                    break;
                }
            }
            let rho = scalar_cols.pop().expect("five columns");
            columns = scalar_cols;
            for _ in 0..k {
                columns.push(rho.clone());
            }
        }
    }

    (0..n)
        .map(|i| {
            let state =
                AtmosphericState::new(columns[0][i], columns[1][i], columns[2][i], columns[3][i])?;
            let surf = SurfaceSpectrum::new((0..k).map(|c| columns[4 + c][i]).collect())?;
            Ok(Sample { state, surf })
        })
        .collect()
}

fn integer_fifth_root(n: usize) -> Option<usize> {
    let mut g = (n as f64).powf(0.2).round() as usize;
    g = g.max(1);
    for cand in g.saturating_sub(1)..=g + 1 {
        if cand.checked_pow(5) == Some(n) {
            return Some(cand);
        }
    }
    None
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn shuffle<T>(v: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

/// Per-feature standardization statistics, fitted on train rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Mat, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("cannot fit scaler on zero rows".into()));
        }
        let m = x.cols();
        let inv_n = 1.0 / rows.len() as f64;
        let mut mean = vec![0.0; m];
        for &r in rows {
            for (acc, v) in mean.iter_mut().zip(x.row(r)) {
                *acc += v;
            }
        }
        for v in &mut mean {
            *v *= inv_n;
        }
        let mut var = vec![0.0; m];
        for &r in rows {
            for ((acc, v), mu) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                let d = v - mu;
                *acc += d * d;
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v * inv_n).sqrt()).collect();
        if let Some(j) = std.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Config(format!(
                "degenerate constant column {j}: standard deviation is zero"
            )));
        }
        Ok(Self { mean, std })
    }

    #[inline]
    pub fn standardize(&self, feature: usize, value: f64) -> f64 {
        (value - self.mean[feature]) / self.std[feature]
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// The full regression dataset: raw inputs `x` (n rows, 4+k columns), targets
/// `y` (n rows, k columns), the channel grid, per-row split labels, and the
/// train-fitted input scaler. `x` is stored raw; standardization happens when
/// a [`ChannelView`] is extracted.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataset {
    pub x: Mat,
    pub y: Mat,
    pub grid: WavelengthGrid,
    pub split: Vec<Split>,
    pub scaler: Scaler,
}

impl SpectralDataset {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn k(&self) -> usize {
        self.grid.k()
    }

    pub fn rows_of(&self, split: Split) -> impl Iterator<Item = usize> + '_ {
        self.split
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == split)
            .map(|(i, _)| i)
    }

    /// Reassemble row `r` as typed state and surface.
    pub fn sample(&self, r: usize) -> Result<Sample> {
        let row = self.x.row(r);
        let state = AtmosphericState::new(row[0], row[1], row[2], row[3])?;
        let surf = SurfaceSpectrum::new(row[4..4 + self.k()].to_vec())?;
        Ok(Sample { state, surf })
    }

    /// Train-split mean absolute target for channel `i` (the nMAE normalizer).
    pub fn train_abs_mean(&self, i: usize) -> f64 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for r in self.rows_of(Split::Train) {
            acc += self.y.at(r, i).abs();
            count += 1;
        }
        acc / count as f64
    }
}

/// Evaluate the forward model on every sample and partition the rows.
///
/// Fractions must be positive and sum to 1; train gets `floor(n*f_train)`
/// rows, validation `floor(n*f_val)`, test the remainder, assigned by a
/// seeded shuffle. The scaler is fitted on train rows only.
pub fn generate_dataset(
    samples: &[Sample],
    grid: &WavelengthGrid,
    cfg: &OracleConfig,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SpectralDataset> {
    cfg.validate()?;
    let n = samples.len();
    let k = grid.k();
    if n == 0 {
        return Err(Error::Config("empty sample set".into()));
    }
    let (ft, fv, fe) = fractions;
    if !(ft > 0.0 && fv > 0.0 && fe > 0.0) || (ft + fv + fe - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "fractions ({ft}, {fv}, {fe}) must be positive and sum to 1"
        )));
    }
    let n_train = (n as f64 * ft).floor() as usize;
    let n_val = (n as f64 * fv).floor() as usize;
    let n_test = n - n_train - n_val;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Config(format!(
            "n = {n} too small for nonempty splits ({n_train}/{n_val}/{n_test})"
        )));
    }

    let mut x = Mat::zeros(n, 4 + k);
    let mut y = Mat::zeros(n, k);
    for (r, sample) in samples.iter().enumerate() {
        if sample.surf.len() != k {
            return Err(Error::Dimension {
                context: "sample surface length vs grid",
                expected: k,
                got: sample.surf.len(),
            });
        }
        let row = x.row_mut(r);
        row[0] = sample.state.mu0;
        row[1] = sample.state.tau550;
        row[2] = sample.state.alpha;
        row[3] = sample.state.wvap;
        row[4..].copy_from_slice(&sample.surf.rho_s);
        oracle::spectrum_into(&sample.state, &sample.surf, grid, cfg, y.row_mut(r))?;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle(&mut order, &mut rng);
    let mut split = vec![Split::Test; n];
    for (pos, &row) in order.iter().enumerate() {
        split[row] = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }

    let train_rows: Vec<usize> = split
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == Split::Train)
        .map(|(i, _)| i)
        .collect();
    let scaler = Scaler::fit(&x, &train_rows)?;

    Ok(SpectralDataset {
        x,
        y,
        grid: grid.clone(),
        split,
        scaler,
    })
}

/// Standardized per-channel regression view: inputs are the four atmospheric
/// columns plus the channel's own reflectance column, targets are that
/// channel's responses.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelView {
    pub inputs: Mat,
    pub targets: Vec<f64>,
    pub split: Vec<Split>,
}

impl ChannelView {
    pub fn rows_of(&self, split: Split) -> impl Iterator<Item = usize> + '_ {
        self.split
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s == split)
            .map(|(i, _)| i)
    }

    pub fn train_abs_target_mean(&self) -> f64 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in self.rows_of(Split::Train) {
            acc += self.targets[i].abs();
            count += 1;
        }
        acc / count.max(1) as f64
    }
}

/// Extract the standardized view for channel `i`.
pub fn channel_view(ds: &SpectralDataset, i: usize) -> Result<ChannelView> {
    let k = ds.k();
    if i >= k {
        return Err(Error::IndexOutOfRange {
            context: "channel",
            index: i,
            len: k,
        });
    }
    let n = ds.n();
    let mut inputs = Mat::zeros(n, 5);
    for r in 0..n {
        let src = ds.x.row(r);
        let dst = inputs.row_mut(r);
        for d in 0..4 {
            dst[d] = ds.scaler.standardize(d, src[d]);
        }
        dst[4] = ds.scaler.standardize(4 + i, src[4 + i]);
    }
    let targets = (0..n).map(|r| ds.y.at(r, i)).collect();
    Ok(ChannelView {
        inputs,
        targets,
        split: ds.split.clone(),
    })
}

/// Sidecar metadata stored next to the dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub lambdas: Vec<f64>,
    pub scaler: Scaler,
    pub seed: u64,
    pub ranges: StateRanges,
    pub method: SampleMethod,
    pub fractions: (f64, f64, f64),
    pub n: usize,
    /// Full run-configuration echo for provenance; opaque to this crate.
    #[serde(default)]
    pub config_echo: serde_json::Value,
}

/// Write `dataset.csv` (header `mu0,tau550,alpha,wvap,rho_s_*,y_*,split`) and
/// its JSON sidecar. Values use shortest round-trip decimal formatting, so a
/// read-back reproduces every f64 bit for bit.
pub fn save_dataset(
    ds: &SpectralDataset,
    sidecar: &DatasetSidecar,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let k = ds.k();
    let mut w = BufWriter::new(fs::File::create(csv_path)?);
    let mut header = String::from("mu0,tau550,alpha,wvap");
    for i in 0..k {
        header.push_str(&format!(",rho_s_{i}"));
    }
    for i in 0..k {
        header.push_str(&format!(",y_{i}"));
    }
    header.push_str(",split");
    writeln!(w, "{header}")?;
    for r in 0..ds.n() {
        let mut line = String::new();
        for v in ds.x.row(r) {
            line.push_str(&format!("{v},"));
        }
        for v in ds.y.row(r) {
            line.push_str(&format!("{v},"));
        }
        line.push_str(ds.split[r].as_str());
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    fs::write(json_path, serde_json::to_vec_pretty(sidecar)?)?;
    Ok(())
}

/// Read a dataset written by [`save_dataset`].
pub fn load_dataset(csv_path: &Path, json_path: &Path) -> Result<(SpectralDataset, DatasetSidecar)> {
    let sidecar: DatasetSidecar = serde_json::from_slice(&fs::read(json_path)?)?;
    let grid = WavelengthGrid::new(sidecar.lambdas.clone())?;
    let k = grid.k();

    let reader = BufReader::new(fs::File::open(csv_path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        location: format!("{}:1", csv_path.display()),
        message: "empty file".into(),
    })??;
    let expected_cols = 4 + 2 * k + 1;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != expected_cols {
        return Err(Error::Parse {
            location: format!("{}:1", csv_path.display()),
            message: format!(
                "expected {expected_cols} header fields for k = {k}, got {}",
                fields.len()
            ),
        });
    }

    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut y_rows: Vec<Vec<f64>> = Vec::new();
    let mut split = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let loc = || format!("{}:{}", csv_path.display(), lineno + 2);
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != expected_cols {
            return Err(Error::Parse {
                location: loc(),
                message: format!("expected {expected_cols} fields, got {}", parts.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                location: loc(),
                message: format!("bad float {s:?}: {e}"),
            })
        };
        let xs: Vec<f64> = parts[..4 + k].iter().map(|s| parse(s)).collect::<Result<_>>()?;
        let ys: Vec<f64> = parts[4 + k..4 + 2 * k]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<_>>()?;
        split.push(Split::parse(parts[expected_cols - 1])?);
        x_rows.push(xs);
        y_rows.push(ys);
    }
    let ds = SpectralDataset {
        x: Mat::from_rows(&x_rows)?,
        y: Mat::from_rows(&y_rows)?,
        grid,
        split,
        scaler: sidecar.scaler.clone(),
    };
    Ok((ds, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> WavelengthGrid {
        WavelengthGrid::new(vec![0.45, 0.65, 0.97, 1.6]).unwrap()
    }

    #[test]
    fn uniform_degenerate_ranges_yield_corner_point() {
        let ranges = StateRanges {
            mu0: (0.5, 0.5),
            tau550: (0.1, 0.1),
            alpha: (1.0, 1.0),
            wvap: (2.0, 2.0),
            rho_s: (0.3, 0.3),
        };
        let s = sample_states(&ranges, 1, SampleMethod::Uniform, 3, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].state.mu0, 0.5);
        assert_eq!(s[0].state.tau550, 0.1);
        assert_eq!(s[0].state.wvap, 2.0);
        assert_eq!(s[0].surf.rho_s, vec![0.3; 3]);
    }

    #[test]
    fn latin_hypercube_hits_every_stratum_once() {
        let ranges = StateRanges::default();
        let n = 100;
        let samples = sample_states(&ranges, n, SampleMethod::LatinHypercube, 2, 9).unwrap();
        let bounds = ranges.bounds();
        let column = |d: usize| -> Vec<f64> {
            samples
                .iter()
                .map(|s| match d {
                    0 => s.state.mu0,
                    1 => s.state.tau550,
                    2 => s.state.alpha,
                    3 => s.state.wvap,
                    c => s.surf.rho_s[c - 4],
                })
                .collect()
        };
        for d in 0..6 {
            let (lo, hi) = if d < 4 { bounds[d] } else { bounds[4] };
            let mut seen = vec![false; n];
            for v in column(d) {
                let stratum = (((v - lo) / (hi - lo)) * n as f64).floor() as usize;
                let stratum = stratum.min(n - 1);
                assert!(!seen[stratum], "dim {d}: stratum {stratum} hit twice");
                seen[stratum] = true;
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let ranges = StateRanges::default();
        for method in [SampleMethod::Uniform, SampleMethod::LatinHypercube] {
            let a = sample_states(&ranges, 50, method, 4, 7).unwrap();
            let b = sample_states(&ranges, 50, method, 4, 7).unwrap();
            let c = sample_states(&ranges, 50, method, 4, 8).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn grid_method_needs_perfect_fifth_power() {
        let ranges = StateRanges::default();
        assert!(matches!(
            sample_states(&ranges, 33, SampleMethod::Grid, 2, 0),
            Err(Error::GridSize { n: 33, dims: 5 })
        ));
        let s = sample_states(&ranges, 32, SampleMethod::Grid, 2, 0).unwrap();
        assert_eq!(s.len(), 32);
        // Flat surface per sample; corners covered.
        assert!(s.iter().all(|smp| smp.surf.rho_s[0] == smp.surf.rho_s[1]));
        assert!(s.iter().any(|smp| smp.state.mu0 == 0.3));
        assert!(s.iter().any(|smp| smp.state.mu0 == 1.0));
    }

    #[test]
    fn samples_respect_ranges() {
        let ranges = StateRanges {
            mu0: (0.4, 0.6),
            tau550: (0.05, 0.2),
            alpha: (0.8, 1.4),
            wvap: (1.0, 3.0),
            rho_s: (0.1, 0.5),
        };
        for method in [SampleMethod::Uniform, SampleMethod::LatinHypercube] {
            for s in sample_states(&ranges, 64, method, 3, 3).unwrap() {
                assert!(s.state.mu0 >= 0.4 && s.state.mu0 <= 0.6);
                assert!(s.state.tau550 >= 0.05 && s.state.tau550 <= 0.2);
                assert!(s.state.alpha >= 0.8 && s.state.alpha <= 1.4);
                assert!(s.state.wvap >= 1.0 && s.state.wvap <= 3.0);
                assert!(s.surf.rho_s.iter().all(|&r| (0.1..=0.5).contains(&r)));
            }
        }
    }

    fn build_dataset(n: usize, seed: u64) -> SpectralDataset {
        let grid = small_grid();
        let samples = sample_states(
            &StateRanges::default(),
            n,
            SampleMethod::LatinHypercube,
            grid.k(),
            seed,
        )
        .unwrap();
        generate_dataset(&samples, &grid, &OracleConfig::default(), (0.8, 0.1, 0.1), seed).unwrap()
    }

    #[test]
    fn split_sizes_follow_exact_division() {
        let ds = build_dataset(1000, 0);
        assert_eq!(ds.rows_of(Split::Train).count(), 800);
        assert_eq!(ds.rows_of(Split::Val).count(), 100);
        assert_eq!(ds.rows_of(Split::Test).count(), 100);
        // Partition: every row in exactly one split.
        assert_eq!(ds.split.len(), 1000);
    }

    #[test]
    fn responses_match_direct_oracle_reevaluation() {
        let ds = build_dataset(50, 4);
        let cfg = OracleConfig::default();
        for r in [0usize, 7, 49] {
            let sample = ds.sample(r).unwrap();
            let direct = oracle::spectrum(&sample.state, &sample.surf, &ds.grid, &cfg).unwrap();
            assert_eq!(direct, ds.y.row(r).to_vec());
        }
    }

    #[test]
    fn standardized_train_columns_are_zero_mean_unit_std() {
        let ds = build_dataset(400, 11);
        let train: Vec<usize> = ds.rows_of(Split::Train).collect();
        for feature in 0..ds.x.cols() {
            let z: Vec<f64> = train
                .iter()
                .map(|&r| ds.scaler.standardize(feature, ds.x.at(r, feature)))
                .collect();
            let mean = z.iter().sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / z.len() as f64;
            assert!(mean.abs() < 1e-10, "feature {feature} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scaler_is_fit_on_train_rows_only() {
        let ds = build_dataset(400, 12);
        let train: Vec<usize> = ds.rows_of(Split::Train).collect();
        let val: Vec<usize> = ds.rows_of(Split::Val).collect();
        let refit_train = Scaler::fit(&ds.x, &train).unwrap();
        let refit_val = Scaler::fit(&ds.x, &val).unwrap();
        assert_eq!(ds.scaler, refit_train);
        assert_ne!(ds.scaler, refit_val);
    }

    #[test]
    fn dataset_too_small_for_splits_errors() {
        let grid = small_grid();
        let samples = sample_states(&StateRanges::default(), 5, SampleMethod::Uniform, grid.k(), 0)
            .unwrap();
        let r = generate_dataset(
            &samples,
            &grid,
            &OracleConfig::default(),
            (0.8, 0.1, 0.1),
            0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn channel_view_is_the_single_channel_dataset() {
        let ds = build_dataset(60, 5);
        let v = channel_view(&ds, 2).unwrap();
        assert_eq!(v.inputs.cols(), 5);
        assert_eq!(v.targets, (0..ds.n()).map(|r| ds.y.at(r, 2)).collect::<Vec<_>>());
        assert!(channel_view(&ds, 9).is_err());
    }

    #[test]
    fn channel_view_ignores_other_channels_reflectance() {
        let mut ds = build_dataset(40, 6);
        let before = channel_view(&ds, 1).unwrap();
        // Perturb rho_s column of channel 3; channel 1's view must not move.
        for r in 0..ds.n() {
            *ds.x.at_mut(r, 4 + 3) += 0.01;
        }
        let after = channel_view(&ds, 1).unwrap();
        assert_eq!(before.inputs, after.inputs);
        assert_eq!(before.targets, after.targets);
    }

    #[test]
    fn identical_channels_give_identical_views() {
        // Two channels with identical wavelength is not representable (the
        // grid is strictly increasing), but identical rho_s columns and
        // identical targets give identical views; emulate by copying columns.
        let mut ds = build_dataset(30, 8);
        for r in 0..ds.n() {
            let v = ds.x.at(r, 4);
            *ds.x.at_mut(r, 5) = v;
            let t = ds.y.at(r, 0);
            *ds.y.at_mut(r, 1) = t;
        }
        // Rebuild scaler so feature stats match the copied column.
        let train: Vec<usize> = ds.rows_of(Split::Train).collect();
        ds.scaler = Scaler::fit(&ds.x, &train).unwrap();
        let a = channel_view(&ds, 0).unwrap();
        let b = channel_view(&ds, 1).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.targets, b.targets);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let ds = build_dataset(64, 13);
        let sidecar = DatasetSidecar {
            lambdas: ds.grid.lambdas().to_vec(),
            scaler: ds.scaler.clone(),
            seed: 13,
            ranges: StateRanges::default(),
            method: SampleMethod::LatinHypercube,
            fractions: (0.8, 0.1, 0.1),
            n: ds.n(),
            config_echo: serde_json::Value::Null,
        };
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("ds.csv");
        let json = dir.path().join("ds.json");
        save_dataset(&ds, &sidecar, &csv, &json).unwrap();
        let (back, side_back) = load_dataset(&csv, &json).unwrap();
        assert_eq!(ds, back);
        assert_eq!(sidecar, side_back);
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        let ds = build_dataset(20, 1);
        let sidecar = DatasetSidecar {
            lambdas: ds.grid.lambdas().to_vec(),
            scaler: ds.scaler.clone(),
            seed: 1,
            ranges: StateRanges::default(),
            method: SampleMethod::Uniform,
            fractions: (0.8, 0.1, 0.1),
            n: ds.n(),
            config_echo: serde_json::Value::Null,
        };
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("ds.csv");
        let json = dir.path().join("ds.json");
        save_dataset(&ds, &sidecar, &csv, &json).unwrap();
        let mut text = std::fs::read_to_string(&csv).unwrap();
        text.push_str("not,a,valid,row\n");
        std::fs::write(&csv, text).unwrap();
        assert!(load_dataset(&csv, &json).is_err());
    }
}
