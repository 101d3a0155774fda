//! Per-channel spectral emulation with weight propagation.
//!
//! One subnetwork per wavelength channel regresses that channel's response
//! from `[mu0, tau550, alpha, wvap, rho_s_i]`. Channels are trained in grid
//! order; the first starts from Glorot initialization and every later channel
//! starts from the previous channel's converged parameters (weight
//! propagation), exploiting the spectral correlation of adjacent channels.
//! Optimizer state never propagates, only weights and biases.
//!
//! Because channel i never sees rho_s_j for j != i, the reflectance block of
//! the assembled Jacobian is diagonal by construction, which is what makes
//! the per-channel retrieval in [`crate::retrieval`] exact.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::nn::{self, EvalScratch, ForwardCache, Loss, MlpModel, TrainOptions, TrainReport};
use crate::oracle::{AtmosphericState, SurfaceSpectrum, WavelengthGrid};
use crate::sampling::{channel_view, Scaler, SpectralDataset, Split};

/// Subnetwork architecture and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// `[5, hidden.., 1]`; the input is always the four atmospheric
    /// parameters plus the channel's own reflectance.
    pub layer_dims: Vec<usize>,
    pub lr: f64,
    pub lr_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Convergence tolerance on validation normalized MAE.
    pub tolerance: f64,
    pub patience: usize,
    pub loss: Loss,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let t = TrainOptions::default();
        Self {
            layer_dims: vec![5, 64, 64, 1],
            lr: t.lr,
            lr_decay: t.lr_decay,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            tolerance: t.tolerance,
            patience: t.patience,
            loss: t.loss,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.first() != Some(&5) {
            return Err(Error::Config(format!(
                "subnetwork input dimension must be 5, got {:?}",
                self.layer_dims.first()
            )));
        }
        if self.layer_dims.last() != Some(&1) {
            return Err(Error::Config("subnetwork output dimension must be 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be >= 0".into()));
        }
        Ok(())
    }

    fn train_options(&self, shuffle_seed: u64) -> TrainOptions {
        TrainOptions {
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
            patience: self.patience,
            loss: self.loss,
            lr: self.lr,
            lr_decay: self.lr_decay,
            seed: shuffle_seed,
        }
    }
}

/// Per-channel seeds derived deterministically from the run seed: channel i
/// consumes the 2i-th and (2i+1)-th draws of a ChaCha8 stream.
fn channel_seeds(seed: u64, k: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| (rng.random(), rng.random())).collect()
}

/// Training provenance kept inside the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulatorMeta {
    pub network: NetworkConfig,
    pub seed: u64,
    pub reports: Vec<TrainReport>,
}

/// The assembled spectral surrogate: k subnetworks in channel order, the
/// wavelength grid, and the input scaler of the training dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EmulatorModel {
    subnets: Vec<MlpModel>,
    grid: WavelengthGrid,
    scaler: Scaler,
    pub meta: EmulatorMeta,
}

/// Next-channel initialization: an exact parameter copy of the previous
/// trained subnetwork. The caller gets fresh optimizer state from `train`.
pub fn propagate_weights(prev: &MlpModel) -> MlpModel {
    prev.clone()
}

/// Train all k subnetworks sequentially in grid order.
pub fn train_emulator(
    ds: &SpectralDataset,
    cfg: &NetworkConfig,
    seed: u64,
) -> Result<EmulatorModel> {
    cfg.validate()?;
    let k = ds.k();
    let seeds = channel_seeds(seed, k);
    let mut subnets: Vec<MlpModel> = Vec::with_capacity(k);
    let mut reports = Vec::with_capacity(k);
    for i in 0..k {
        let view = channel_view(ds, i)?;
        let init = if i == 0 {
            MlpModel::glorot_init(&cfg.layer_dims, seeds[0].0)?
        } else {
            propagate_weights(&subnets[i - 1])
        };
        let (trained, report) =
            nn::train(init, &view, &cfg.train_options(seeds[i].1)).map_err(|e| match e {
                Error::Diverged { epoch, .. } => Error::Diverged { channel: i, epoch },
                other => other,
            })?;
        subnets.push(trained);
        reports.push(report);
    }
    Ok(EmulatorModel {
        subnets,
        grid: ds.grid.clone(),
        scaler: ds.scaler.clone(),
        meta: EmulatorMeta {
            network: cfg.clone(),
            seed,
            reports,
        },
    })
}

/// Paired training outcomes for one channel in the warm-start ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPair {
    /// Zero-based channel index (covers channels 1..k-1).
    pub channel: usize,
    pub propagated: TrainReport,
    pub cold: TrainReport,
}

/// Train channels 1..k-1 twice: once warm-started by weight propagation
/// (inside the normal sequential chain) and once from a fresh Glorot
/// initialization, with identical shuffle seeds. Returns the trained
/// (propagated) emulator and the paired reports.
pub fn ablation_cold_start(
    ds: &SpectralDataset,
    cfg: &NetworkConfig,
    seed: u64,
) -> Result<(EmulatorModel, Vec<AblationPair>)> {
    cfg.validate()?;
    let k = ds.k();
    let seeds = channel_seeds(seed, k);
    let emulator = train_emulator(ds, cfg, seed)?;
    let mut pairs = Vec::with_capacity(k.saturating_sub(1));
    for i in 1..k {
        let view = channel_view(ds, i)?;
        let init = MlpModel::glorot_init(&cfg.layer_dims, seeds[i].0)?;
        let (_, cold) =
            nn::train(init, &view, &cfg.train_options(seeds[i].1)).map_err(|e| match e {
                Error::Diverged { epoch, .. } => Error::Diverged { channel: i, epoch },
                other => other,
            })?;
        pairs.push(AblationPair {
            channel: i,
            propagated: emulator.meta.reports[i].clone(),
            cold,
        });
    }
    Ok((emulator, pairs))
}

/// Accuracy metrics on one split. `overall_nmae` is the arithmetic mean of
/// the per-channel values; normalizers are train-split mean absolute targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub per_channel_mae: Vec<f64>,
    pub per_channel_nmae: Vec<f64>,
    pub overall_nmae: f64,
    pub max_channel_nmae: f64,
}

impl EmulatorModel {
    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn k(&self) -> usize {
        self.subnets.len()
    }

    pub fn subnets(&self) -> &[MlpModel] {
        &self.subnets
    }

    pub fn layer_dims(&self) -> &[usize] {
        self.subnets[0].layer_dims()
    }

    fn standardized_input(&self, state: &AtmosphericState, rho_s_i: f64, i: usize) -> [f64; 5] {
        [
            self.scaler.standardize(0, state.mu0),
            self.scaler.standardize(1, state.tau550),
            self.scaler.standardize(2, state.alpha),
            self.scaler.standardize(3, state.wvap),
            self.scaler.standardize(4 + i, rho_s_i),
        ]
    }

    /// Emulated response for a single channel.
    pub fn predict_channel(&self, state: &AtmosphericState, rho_s_i: f64, i: usize) -> Result<f64> {
        if i >= self.k() {
            return Err(Error::IndexOutOfRange {
                context: "channel",
                index: i,
                len: self.k(),
            });
        }
        let x = self.standardized_input(state, rho_s_i, i);
        let mut scratch = EvalScratch::default();
        self.subnets[i].predict(&x, &mut scratch)
    }

    /// Emulated spectrum; element i depends only on the state and rho_s_i.
    pub fn predict_spectrum(
        &self,
        state: &AtmosphericState,
        surf: &SurfaceSpectrum,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.k()];
        let mut scratch = EvalScratch::default();
        self.predict_spectrum_into(state, surf, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// No-allocation variant of [`Self::predict_spectrum`].
    pub fn predict_spectrum_into(
        &self,
        state: &AtmosphericState,
        surf: &SurfaceSpectrum,
        scratch: &mut EvalScratch,
        out: &mut [f64],
    ) -> Result<()> {
        if surf.len() != self.k() || out.len() != self.k() {
            return Err(Error::Dimension {
                context: "predict_spectrum lengths",
                expected: self.k(),
                got: surf.len(),
            });
        }
        for i in 0..self.k() {
            let x = self.standardized_input(state, surf.rho_s[i], i);
            out[i] = self.subnets[i].predict(&x, scratch)?;
        }
        Ok(())
    }

    /// Analytic Jacobian of the spectrum: k rows by (4 + k) columns, columns
    /// ordered `[mu0, tau550, alpha, wvap, rho_s_0, .., rho_s_{k-1}]`. The
    /// subnetwork input Jacobians are chained through the input scaler
    /// (divide by the feature standard deviation). Reflectance entries (i, j)
    /// with j != i are exactly zero by construction.
    pub fn jacobian(&self, state: &AtmosphericState, surf: &SurfaceSpectrum) -> Result<Mat> {
        if surf.len() != self.k() {
            return Err(Error::Dimension {
                context: "jacobian surface length",
                expected: self.k(),
                got: surf.len(),
            });
        }
        let k = self.k();
        let mut jac = Mat::zeros(k, 4 + k);
        let mut cache = ForwardCache::for_model(&self.subnets[0]);
        let mut grad = [0.0; 5];
        for i in 0..k {
            let x = self.standardized_input(state, surf.rho_s[i], i);
            self.subnets[i].input_jacobian_into(&x, &mut cache, &mut grad)?;
            let row = jac.row_mut(i);
            for d in 0..4 {
                row[d] = grad[d] / self.scaler.std[d];
            }
            row[4 + i] = grad[4] / self.scaler.std[4 + i];
        }
        Ok(jac)
    }

    /// Metrics over the chosen validation or test split.
    pub fn evaluate(&self, ds: &SpectralDataset, split: Split) -> Result<EvalMetrics> {
        if split == Split::Train {
            // Allowed: useful for overfitting diagnostics.
        }
        if ds.k() != self.k() {
            return Err(Error::Dimension {
                context: "dataset channels vs emulator",
                expected: self.k(),
                got: ds.k(),
            });
        }
        let rows: Vec<usize> = ds.rows_of(split).collect();
        if rows.is_empty() {
            return Err(Error::Config(format!("split {split} is empty")));
        }
        let k = self.k();
        let mut abs_err = vec![0.0; k];
        let mut scratch = EvalScratch::default();
        for &r in &rows {
            let sample = ds.sample(r)?;
            for i in 0..k {
                let x = self.standardized_input(&sample.state, sample.surf.rho_s[i], i);
                let pred = self.subnets[i].predict(&x, &mut scratch)?;
                abs_err[i] += (pred - ds.y.at(r, i)).abs();
            }
        }
        let per_channel_mae: Vec<f64> =
            abs_err.iter().map(|e| e / rows.len() as f64).collect();
        let per_channel_nmae: Vec<f64> = per_channel_mae
            .iter()
            .enumerate()
            .map(|(i, mae)| mae / ds.train_abs_mean(i))
            .collect();
        let overall_nmae = per_channel_nmae.iter().sum::<f64>() / k as f64;
        let max_channel_nmae = per_channel_nmae.iter().cloned().fold(0.0, f64::max);
        Ok(EvalMetrics {
            per_channel_mae,
            per_channel_nmae,
            overall_nmae,
            max_channel_nmae,
        })
    }

    /// Serialize to the single-document JSON model format.
    pub fn save(&self) -> Vec<u8> {
        serde_json::to_vec(&EmulatorFile::from(self)).expect("emulator serialization cannot fail")
    }

    pub fn load(bytes: &[u8]) -> Result<Self> {
        let file: EmulatorFile = serde_json::from_slice(bytes)?;
        file.into_model()
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelParams {
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct EmulatorFile {
    grid: WavelengthGrid,
    scaler: Scaler,
    layer_dims: Vec<usize>,
    channels: Vec<ChannelParams>,
    meta: EmulatorMeta,
}

impl From<&EmulatorModel> for EmulatorFile {
    fn from(m: &EmulatorModel) -> Self {
        Self {
            grid: m.grid.clone(),
            scaler: m.scaler.clone(),
            layer_dims: m.layer_dims().to_vec(),
            channels: m
                .subnets
                .iter()
                .map(|s| ChannelParams {
                    w: s.weights().iter().map(|w| w.as_slice().to_vec()).collect(),
                    b: s.biases().to_vec(),
                })
                .collect(),
            meta: m.meta.clone(),
        }
    }
}

impl EmulatorFile {
    fn into_model(self) -> Result<EmulatorModel> {
        let k = self.grid.k();
        if self.channels.len() != k {
            return Err(Error::Parse {
                location: "channels".into(),
                message: format!("expected {k} channel blocks, got {}", self.channels.len()),
            });
        }
        if self.scaler.len() != 4 + k {
            return Err(Error::Parse {
                location: "scaler".into(),
                message: format!("expected {} features, got {}", 4 + k, self.scaler.len()),
            });
        }
        let mut subnets = Vec::with_capacity(k);
        for (i, ch) in self.channels.into_iter().enumerate() {
            let mut weights = Vec::with_capacity(ch.w.len());
            for (l, flat) in ch.w.into_iter().enumerate() {
                if l + 1 >= self.layer_dims.len() {
                    return Err(Error::Parse {
                        location: format!("channels[{i}].w"),
                        message: "more weight blocks than layers".into(),
                    });
                }
                let (rows, cols) = (self.layer_dims[l + 1], self.layer_dims[l]);
                weights.push(Mat::from_vec(rows, cols, flat).map_err(|_| Error::Parse {
                    location: format!("channels[{i}].w[{l}]"),
                    message: "weight block does not match layer_dims".into(),
                })?);
            }
            subnets.push(MlpModel::from_parameters(
                self.layer_dims.clone(),
                weights,
                ch.b,
            )?);
        }
        Ok(EmulatorModel {
            subnets,
            grid: self.grid,
            scaler: self.scaler,
            meta: self.meta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleConfig;
    use crate::sampling::{generate_dataset, sample_states, SampleMethod, StateRanges};

    fn tiny_grid() -> WavelengthGrid {
        WavelengthGrid::new(vec![0.46, 0.66, 0.86]).unwrap()
    }

    fn tiny_dataset(n: usize, seed: u64) -> SpectralDataset {
        let grid = tiny_grid();
        let samples = sample_states(
            &StateRanges::default(),
            n,
            SampleMethod::LatinHypercube,
            grid.k(),
            seed,
        )
        .unwrap();
        generate_dataset(&samples, &grid, &OracleConfig::default(), (0.7, 0.15, 0.15), seed)
            .unwrap()
    }

    fn quick_config() -> NetworkConfig {
        NetworkConfig {
            layer_dims: vec![5, 16, 16, 1],
            max_epochs: 30,
            tolerance: 5e-3,
            lr: 3e-3,
            batch_size: 64,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn propagation_copies_parameters_exactly() {
        let prev = MlpModel::glorot_init(&[5, 8, 8, 1], 3).unwrap();
        let next = propagate_weights(&prev);
        assert_eq!(prev, next);
    }

    #[test]
    fn propagated_subnet_starts_from_previous_parameters() {
        let ds = tiny_dataset(200, 21);
        let cfg = quick_config();
        let model = train_emulator(&ds, &cfg, 21).unwrap();
        // Train channel 1 zero epochs starting from channel 0's result: the
        // initial parameters must equal channel 0's final parameters, so the
        // zero-epoch model predicts identically to subnet 0.
        let view = channel_view(&ds, 1).unwrap();
        let init = propagate_weights(&model.subnets()[0]);
        let opts = TrainOptions {
            max_epochs: 0,
            ..TrainOptions::default()
        };
        let (untrained, report) = nn::train(init, &view, &opts).unwrap();
        assert_eq!(report.epochs_run, 0);
        assert_eq!(&untrained, &model.subnets()[0]);
    }

    #[test]
    fn single_channel_emulator_equals_plain_training() {
        let grid = WavelengthGrid::new(vec![0.56]).unwrap();
        let samples = sample_states(&StateRanges::default(), 150, SampleMethod::LatinHypercube, 1, 5)
            .unwrap();
        let ds =
            generate_dataset(&samples, &grid, &OracleConfig::default(), (0.7, 0.15, 0.15), 5)
                .unwrap();
        let cfg = quick_config();
        let model = train_emulator(&ds, &cfg, 77).unwrap();

        let seeds = channel_seeds(77, 1);
        let view = channel_view(&ds, 0).unwrap();
        let init = MlpModel::glorot_init(&cfg.layer_dims, seeds[0].0).unwrap();
        let (direct, _) = nn::train(init, &view, &cfg.train_options(seeds[0].1)).unwrap();
        assert_eq!(model.subnets()[0], direct);
    }

    #[test]
    fn meta_records_one_report_per_channel() {
        let ds = tiny_dataset(150, 2);
        let cfg = quick_config();
        let model = train_emulator(&ds, &cfg, 2).unwrap();
        assert_eq!(model.meta.reports.len(), 3);
        assert!(model
            .meta
            .reports
            .iter()
            .all(|r| r.epochs_run <= cfg.max_epochs));
    }

    #[test]
    fn prediction_ignores_other_channel_reflectances() {
        let ds = tiny_dataset(150, 3);
        let model = train_emulator(&ds, &quick_config(), 3).unwrap();
        let state = AtmosphericState::new(0.8, 0.2, 1.1, 2.2).unwrap();
        let a = SurfaceSpectrum::new(vec![0.3, 0.5, 0.7]).unwrap();
        let b = SurfaceSpectrum::new(vec![0.3, 0.1, 0.2]).unwrap();
        let ya = model.predict_spectrum(&state, &a).unwrap();
        let yb = model.predict_spectrum(&state, &b).unwrap();
        assert_eq!(ya[0].to_bits(), yb[0].to_bits());
        assert_ne!(ya[1], yb[1]);
    }

    #[test]
    fn jacobian_reflectance_block_is_diagonal() {
        let ds = tiny_dataset(150, 4);
        let model = train_emulator(&ds, &quick_config(), 4).unwrap();
        let state = AtmosphericState::new(0.7, 0.15, 1.3, 1.0).unwrap();
        let surf = SurfaceSpectrum::new(vec![0.2, 0.4, 0.6]).unwrap();
        let jac = model.jacobian(&state, &surf).unwrap();
        assert_eq!(jac.rows(), 3);
        assert_eq!(jac.cols(), 7);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(jac.at(i, 4 + j), 0.0);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_of_prediction() {
        let ds = tiny_dataset(200, 6);
        let model = train_emulator(&ds, &quick_config(), 6).unwrap();
        let state = AtmosphericState::new(0.75, 0.22, 1.4, 1.8).unwrap();
        let surf = SurfaceSpectrum::new(vec![0.25, 0.45, 0.65]).unwrap();
        let jac = model.jacobian(&state, &surf).unwrap();

        let h = 1e-6;
        // rho_s diagonal entries.
        for i in 0..3 {
            let fp = model.predict_channel(&state, surf.rho_s[i] + h, i).unwrap();
            let fm = model.predict_channel(&state, surf.rho_s[i] - h, i).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let an = jac.at(i, 4 + i);
            let denom = an.abs().max(fd.abs()).max(1e-10);
            assert!((an - fd).abs() / denom <= 1e-4, "channel {i}: {an} vs {fd}");
        }
        // wvap column.
        for i in 0..3 {
            let sp = AtmosphericState::new(state.mu0, state.tau550, state.alpha, state.wvap + h)
                .unwrap();
            let sm = AtmosphericState::new(state.mu0, state.tau550, state.alpha, state.wvap - h)
                .unwrap();
            let fd = (model.predict_channel(&sp, surf.rho_s[i], i).unwrap()
                - model.predict_channel(&sm, surf.rho_s[i], i).unwrap())
                / (2.0 * h);
            let an = jac.at(i, 3);
            let denom = an.abs().max(fd.abs()).max(1e-10);
            assert!((an - fd).abs() / denom <= 1e-4, "channel {i}: {an} vs {fd}");
        }
    }

    #[test]
    fn zero_weight_subnets_give_zero_jacobian() {
        let ds = tiny_dataset(150, 8);
        let mut model = train_emulator(&ds, &quick_config(), 8).unwrap();
        for s in &mut model.subnets {
            let dims = s.layer_dims().to_vec();
            let zeros: Vec<Mat> = dims
                .windows(2)
                .map(|w| Mat::zeros(w[1], w[0]))
                .collect();
            let biases: Vec<Vec<f64>> = dims.iter().skip(1).map(|&d| vec![0.0; d]).collect();
            *s = MlpModel::from_parameters(dims, zeros, biases).unwrap();
        }
        let state = AtmosphericState::new(0.7, 0.15, 1.3, 1.0).unwrap();
        let surf = SurfaceSpectrum::new(vec![0.2, 0.4, 0.6]).unwrap();
        let jac = model.jacobian(&state, &surf).unwrap();
        assert!(jac.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn evaluate_rejects_empty_split_and_is_order_invariant() {
        let ds = tiny_dataset(150, 9);
        let model = train_emulator(&ds, &quick_config(), 9).unwrap();
        let m1 = model.evaluate(&ds, Split::Test).unwrap();
        let m2 = model.evaluate(&ds, Split::Test).unwrap();
        assert_eq!(m1, m2);
        assert!(m1.overall_nmae >= 0.0);
        // overall is the mean of per-channel values.
        let mean = m1.per_channel_nmae.iter().sum::<f64>() / m1.per_channel_nmae.len() as f64;
        assert!((m1.overall_nmae - mean).abs() < 1e-15);

        let mut empty = ds.clone();
        for s in &mut empty.split {
            if *s == Split::Test {
                *s = Split::Train;
            }
        }
        assert!(model.evaluate(&empty, Split::Test).is_err());
    }

    #[test]
    fn save_load_round_trip_preserves_predictions_bitwise() {
        let ds = tiny_dataset(150, 10);
        let model = train_emulator(&ds, &quick_config(), 10).unwrap();
        let bytes = model.save();
        let back = EmulatorModel::load(&bytes).unwrap();
        assert_eq!(model, back);
        let state = AtmosphericState::new(0.66, 0.31, 0.9, 3.3).unwrap();
        let surf = SurfaceSpectrum::new(vec![0.12, 0.55, 0.81]).unwrap();
        let a = model.predict_spectrum(&state, &surf).unwrap();
        let b = back.predict_spectrum(&state, &surf).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn load_rejects_mismatched_channel_count() {
        let ds = tiny_dataset(150, 12);
        let model = train_emulator(&ds, &quick_config(), 12).unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&model.save()).unwrap();
        v["channels"].as_array_mut().unwrap().pop();
        assert!(EmulatorModel::load(&serde_json::to_vec(&v).unwrap()).is_err());
    }

    #[test]
    fn ablation_covers_channels_two_onwards() {
        let ds = tiny_dataset(150, 14);
        let mut cfg = quick_config();
        cfg.max_epochs = 8;
        cfg.tolerance = 0.0; // no early success: both arms run all epochs
        let (_, pairs) = ablation_cold_start(&ds, &cfg, 14).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].channel, 1);
        assert_eq!(pairs[1].channel, 2);
        for p in &pairs {
            assert_eq!(p.propagated.epochs_run, 8);
            assert_eq!(p.cold.epochs_run, 8);
        }
    }
}
