//! Document type classification with the convolutional network.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::raster::{resize, warp_perspective, Image, Quad};
use crate::tensornet::{argmax, cross_entropy, AdamState, Architecture, Network, Tensor};

/// Side of the square network input.
pub const INPUT_SIDE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum DocumentClass {
    PaperIdFront = 0,
    PaperIdBack = 1,
    ElectronicIdFront = 2,
    ElectronicIdBack = 3,
    DrivingLicenseFront = 4,
    DrivingLicenseBack = 5,
    HealthCardFront = 6,
    HealthCardBack = 7,
    Passport = 8,
}

impl DocumentClass {
    pub const COUNT: usize = 9;
    pub const ALL: [DocumentClass; 9] = [
        DocumentClass::PaperIdFront,
        DocumentClass::PaperIdBack,
        DocumentClass::ElectronicIdFront,
        DocumentClass::ElectronicIdBack,
        DocumentClass::DrivingLicenseFront,
        DocumentClass::DrivingLicenseBack,
        DocumentClass::HealthCardFront,
        DocumentClass::HealthCardBack,
        DocumentClass::Passport,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DocumentClass::PaperIdFront => "paper-id-front",
            DocumentClass::PaperIdBack => "paper-id-back",
            DocumentClass::ElectronicIdFront => "electronic-id-front",
            DocumentClass::ElectronicIdBack => "electronic-id-back",
            DocumentClass::DrivingLicenseFront => "driving-license-front",
            DocumentClass::DrivingLicenseBack => "driving-license-back",
            DocumentClass::HealthCardFront => "health-card-front",
            DocumentClass::HealthCardBack => "health-card-back",
            DocumentClass::Passport => "passport",
        }
    }
}

impl From<DocumentClass> for u8 {
    fn from(c: DocumentClass) -> u8 {
        c.code()
    }
}

impl TryFrom<u8> for DocumentClass {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        Self::from_code(v as usize).ok_or_else(|| format!("class code {v} out of range 0..9"))
    }
}

impl fmt::Display for DocumentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DocumentClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(code) = s.parse::<usize>() {
            if let Some(c) = Self::from_code(code) {
                return Ok(c);
            }
        }
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown document class {s:?}")))
    }
}

/// Network input for an image: channels divided by 255, resized to the
/// input side when needed.
pub fn image_tensor(img: &Image) -> Tensor<f32> {
    let scaled;
    let img = if img.width() == INPUT_SIDE && img.height() == INPUT_SIDE {
        img
    } else {
        scaled = resize(img, INPUT_SIDE, INPUT_SIDE);
        &scaled
    };
    let data = img.data().iter().map(|&v| v as f32 / 255.0).collect();
    Tensor::from_vec(&[INPUT_SIDE, INPUT_SIDE, 3], data).expect("input shape")
}

/// Rectifies the quad of `photo` to the square network input.
pub fn preprocess(photo: &Image, quad: &Quad) -> Result<Tensor<f32>> {
    Ok(image_tensor(&warp_perspective(photo, quad, INPUT_SIDE, INPUT_SIDE)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub learning_rate: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 239, batch_size: 32, seed: 0, shuffle: true, learning_rate: 0.001, exec: Exec::default() }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParam(format!("training config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_ce: f64,
    pub accuracy: f64,
}

/// Training history as CSV with header `epoch,mean_ce,accuracy`.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,mean_ce,accuracy\n");
    for h in history {
        out.push_str(&format!("{},{},{}\n", h.epoch, h.mean_ce, h.accuracy));
    }
    out
}

/// A labeled network input kept as 8-bit pixels until it is batched.
#[derive(Debug, Clone)]
pub struct Example {
    pub image: Image,
    pub class: DocumentClass,
}

/// Minibatch Adam training from a seeded initialization.
///
/// Per-epoch statistics are measured on the forward passes of that epoch,
/// before each batch's update. `on_epoch` sees every entry as it is made.
pub fn train(
    data: &[Example],
    cfg: &TrainConfig,
    arch: Architecture,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(Network<f32>, Vec<EpochStats>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.validate()?;
    if arch.classes != DocumentClass::COUNT {
        return Err(Error::UnsupportedConfig(format!("{} output classes", arch.classes)));
    }
    let mut net = Network::<f32>::new(arch, cfg.seed)?;
    let mut adam = AdamState::with_lr(net.params(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let (mut loss, mut correct) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let inputs = exec::map_slice(cfg.exec, chunk, |&i| image_tensor(&data[i].image));
            let batch: Vec<(&Tensor<f32>, usize)> =
                inputs.iter().zip(chunk).map(|(x, &i)| (x, data[i].class as usize)).collect();
            let r = net.batch_gradients(cfg.exec, &batch)?;
            adam.step(net.params_mut(), &r.grads)?;
            loss += r.loss_sum;
            correct += r.correct;
        }
        let stats = EpochStats {
            epoch,
            mean_ce: loss / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        };
        on_epoch(&stats);
        history.push(stats);
    }
    Ok((net, history))
}

/// Most probable class (lowest code on ties) and the probability vector.
pub fn classify(net: &Network<f32>, input: &Tensor<f32>) -> Result<(DocumentClass, Vec<f64>)> {
    let probs: Vec<f64> = net.predict(input)?.into_iter().map(f64::from).collect();
    let class = DocumentClass::from_code(argmax(&probs))
        .ok_or_else(|| Error::ShapeMismatch(format!("{} network outputs", probs.len())))?;
    Ok((class, probs))
}

/// Accuracy and mean cross-entropy over a labeled set.
pub fn evaluate_classifier(net: &Network<f32>, data: &[Example], exec: Exec) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows = exec::map_slice(exec, data, |ex| -> Result<(bool, f64)> {
        let (class, probs) = classify(net, &image_tensor(&ex.image))?;
        let mut onehot = [0.0; DocumentClass::COUNT];
        onehot[ex.class as usize] = 1.0;
        Ok((class == ex.class, cross_entropy(&probs, &onehot)?))
    });
    let (mut correct, mut loss) = (0usize, 0.0);
    for r in rows {
        let (hit, ce) = r?;
        correct += hit as usize;
        loss += ce;
    }
    Ok((correct as f64 / data.len() as f64, loss / data.len() as f64))
}
