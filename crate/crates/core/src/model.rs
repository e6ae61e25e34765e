//! The convolutional rule network.
//!
//! A base rule model (StackedOR -> AND -> OR) is slid over the padded
//! sequence as a convolution filter of length `window`; a final ConvOR layer
//! disjoins the filter outputs of all `max_len + window - 1` positions.
//!
//! Window and offset conventions: a sequence of length `N` is laid out on a
//! padded axis of `max_len + 2 (window - 1)` slots, real tokens right-aligned
//! before the trailing boundary padding. Offset `i` means "`i` steps before
//! the last observation". ConvOR input `w` is the window whose slot `j`
//! (0 = oldest) sits at offset `w - j`, so the newest slot is at
//! `w - (window - 1)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hard_concrete::HardConcreteParams;
use crate::sequence::{Schema, Sequence};
use crate::weights::BinaryWeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// All ConvOR weights trainable: rules anchored at absolute offsets.
    Local,
    /// ConvOR weights fixed to 1: pattern anywhere in the sequence.
    Global,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Local => "local",
            Mode::Global => "global",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Mode::Local),
            "global" => Ok(Mode::Global),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub schema: Schema,
    /// Convolution window length in time steps.
    pub window: usize,
    /// Width of the AND layer.
    pub hidden: usize,
    /// Longest supported sequence.
    pub max_len: usize,
    pub mode: Mode,
    #[serde(default)]
    pub hard_concrete: HardConcreteParams,
}

impl ModelConfig {
    /// Config with the hidden width set to twice the AND-layer input size.
    pub fn new(schema: Schema, window: usize, max_len: usize, mode: Mode) -> Result<Self> {
        let hidden = 2 * window * schema.vars();
        let cfg = Self {
            schema,
            window,
            hidden,
            max_len,
            mode,
            hard_concrete: HardConcreteParams::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.hidden < 1 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        if self.max_len < self.window {
            return Err(Error::Config(format!(
                "max_len {} must be at least the window length {}",
                self.max_len, self.window
            )));
        }
        if self.schema.vars() == 0 {
            return Err(Error::Config("schema needs at least one variable".into()));
        }
        self.hard_concrete.validate()
    }

    pub fn vars(&self) -> usize {
        self.schema.vars()
    }

    /// Number of StackedOR slots, i.e. AND-layer inputs.
    pub fn and_inputs(&self) -> usize {
        self.window * self.vars()
    }

    pub fn conv_width(&self) -> usize {
        self.max_len + self.window - 1
    }

    pub fn padded_len(&self) -> usize {
        self.max_len + 2 * (self.window - 1)
    }

    /// Padded-axis index of the oldest slot of window `w`.
    pub fn window_start(&self, w: usize) -> usize {
        self.max_len + self.window - 2 - w
    }

    /// Window position and variable of StackedOR slot `i`.
    pub fn slot_parts(&self, i: usize) -> (usize, usize) {
        (i / self.vars(), i % self.vars())
    }

    /// One-hot encode a sequence on the padded axis.
    pub fn encode(&self, seq: &Sequence) -> Result<EncodedSequence> {
        if seq.len() > self.max_len {
            return Err(invalid(format!(
                "sequence exceeds configured maximum: length {} > {}",
                seq.len(),
                self.max_len
            )));
        }
        if seq.is_empty() {
            return Err(invalid("cannot encode an empty sequence"));
        }
        seq.check_schema(&self.schema)?;
        let width = self.schema.onehot_width();
        let slots = self.padded_len();
        let mut data = vec![0.0; slots * width];
        let first = self.max_len + self.window - 1 - seq.len();
        for pos in 0..seq.len() {
            let p = first + pos;
            for var in 0..self.vars() {
                let col = self.schema.onehot_offset(var) + seq.value(pos, var) as usize;
                data[p * width + col] = 1.0;
            }
        }
        Ok(EncodedSequence { slots, width, data })
    }
}

/// Padded one-hot tensor: `slots x width`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub slots: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl EncodedSequence {
    pub fn slot(&self, p: usize) -> &[f64] {
        &self.data[p * self.width..(p + 1) * self.width]
    }

    pub fn is_padding(&self, p: usize) -> bool {
        self.slot(p).iter().all(|v| *v == 0.0)
    }
}

/// Concrete weight values (relaxed or binary) for one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightValues {
    /// One vector per StackedOR slot, length = that variable's alphabet size.
    pub stack: Vec<Vec<f64>>,
    /// `and_inputs x hidden`, row-major.
    pub and: Vec<f64>,
    pub or: Vec<f64>,
    pub conv: Vec<f64>,
}

impl WeightValues {
    pub(crate) fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let sizes = cfg.schema.sizes();
        if self.stack.len() != cfg.and_inputs() {
            return Err(invalid(format!(
                "expected {} stacked slots, got {}",
                cfg.and_inputs(),
                self.stack.len()
            )));
        }
        for (i, s) in self.stack.iter().enumerate() {
            let (_, var) = cfg.slot_parts(i);
            if s.len() != sizes[var] {
                return Err(invalid(format!(
                    "stacked slot {i} has width {}, alphabet size is {}",
                    s.len(),
                    sizes[var]
                )));
            }
        }
        if self.and.len() != cfg.and_inputs() * cfg.hidden {
            return Err(invalid("AND weight shape mismatch"));
        }
        if self.or.len() != cfg.hidden {
            return Err(invalid("OR weight shape mismatch"));
        }
        if self.conv.len() != cfg.conv_width() {
            return Err(invalid("ConvOR weight shape mismatch"));
        }
        Ok(())
    }
}

/// Intermediate values of one sequence's forward pass.
///
/// The `*_pre` fields are the arguments of the `min(., 1)` clamps; they are
/// what the backward pass gates on.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// `windows x and_inputs`: StackedOR dot products.
    pub stack_pre: Vec<f64>,
    /// `windows x and_inputs`: StackedOR outputs.
    pub x: Vec<f64>,
    /// `windows x hidden`: `W_and^T (1 - x)`.
    pub and_pre: Vec<f64>,
    /// `windows x hidden`: conjunction outputs.
    pub h: Vec<f64>,
    /// `windows`: `W_or . h`.
    pub or_pre: Vec<f64>,
    /// `windows`: base model output per window.
    pub o: Vec<f64>,
    pub conv_pre: f64,
    pub y: f64,
}

/// Run the network with explicit weight values.
pub(crate) fn forward_values(
    cfg: &ModelConfig,
    values: &WeightValues,
    enc: &EncodedSequence,
    mut trace: Option<&mut Trace>,
) -> f64 {
    let inputs = cfg.and_inputs();
    let hidden = cfg.hidden;
    let windows = cfg.conv_width();
    let offsets: Vec<usize> = (0..cfg.vars())
        .map(|v| cfg.schema.onehot_offset(v))
        .collect();
    if let Some(t) = trace.as_deref_mut() {
        t.stack_pre = vec![0.0; windows * inputs];
        t.x = vec![0.0; windows * inputs];
        t.and_pre = vec![0.0; windows * hidden];
        t.h = vec![0.0; windows * hidden];
        t.or_pre = vec![0.0; windows];
        t.o = vec![0.0; windows];
    }
    let mut x = vec![0.0; inputs];
    let mut acc = vec![0.0; hidden];
    let mut conv_pre = 0.0;
    for w in 0..windows {
        if values.conv[w] == 0.0 && trace.is_none() {
            continue;
        }
        let start = cfg.window_start(w);
        for (i, xi) in x.iter_mut().enumerate() {
            let (j, var) = cfg.slot_parts(i);
            let weights = &values.stack[i];
            let slot = enc.slot(start + j);
            let seg = &slot[offsets[var]..offsets[var] + weights.len()];
            let pre: f64 = weights.iter().zip(seg).map(|(a, b)| a * b).sum();
            *xi = pre.min(1.0);
            if let Some(t) = trace.as_deref_mut() {
                t.stack_pre[w * inputs + i] = pre;
                t.x[w * inputs + i] = *xi;
            }
        }
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            let neg = 1.0 - xi;
            if neg == 0.0 {
                continue;
            }
            for (a, &wij) in acc
                .iter_mut()
                .zip(&values.and[i * hidden..(i + 1) * hidden])
            {
                *a += wij * neg;
            }
        }
        let mut or_pre = 0.0;
        for (c, &a) in acc.iter().enumerate() {
            let h = 1.0 - a.min(1.0);
            or_pre += values.or[c] * h;
            if let Some(t) = trace.as_deref_mut() {
                t.and_pre[w * hidden + c] = a;
                t.h[w * hidden + c] = h;
            }
        }
        let o = or_pre.min(1.0);
        if let Some(t) = trace.as_deref_mut() {
            t.or_pre[w] = or_pre;
            t.o[w] = o;
        }
        conv_pre += values.conv[w] * o;
    }
    let y = conv_pre.min(1.0);
    if let Some(t) = trace {
        t.conv_pre = conv_pre;
        t.y = y;
    }
    y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cr2nModel {
    pub config: ModelConfig,
    /// One `n_k x 1` matrix per StackedOR slot.
    pub stack: Vec<BinaryWeightMatrix>,
    pub and: BinaryWeightMatrix,
    pub or: BinaryWeightMatrix,
    /// Trainable only in local mode; fixed to 1 in global mode.
    pub conv: BinaryWeightMatrix,
}

impl Cr2nModel {
    /// Xavier-uniform initialized model.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let sizes = config.schema.sizes();
        let stack = (0..config.and_inputs())
            .map(|i| BinaryWeightMatrix::xavier_uniform(sizes[config.slot_parts(i).1], 1, rng))
            .collect();
        let and = BinaryWeightMatrix::xavier_uniform(config.and_inputs(), config.hidden, rng);
        let or = BinaryWeightMatrix::xavier_uniform(config.hidden, 1, rng);
        let conv = match config.mode {
            Mode::Local => BinaryWeightMatrix::xavier_uniform(config.conv_width(), 1, rng),
            Mode::Global => BinaryWeightMatrix::zeros(config.conv_width(), 1),
        };
        Ok(Self {
            config,
            stack,
            and,
            or,
            conv,
        })
    }

    /// Model whose latent values are all zero (every weight binarizes to 1).
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let sizes = config.schema.sizes();
        Ok(Self {
            stack: (0..config.and_inputs())
                .map(|i| BinaryWeightMatrix::zeros(sizes[config.slot_parts(i).1], 1))
                .collect(),
            and: BinaryWeightMatrix::zeros(config.and_inputs(), config.hidden),
            or: BinaryWeightMatrix::zeros(config.hidden, 1),
            conv: BinaryWeightMatrix::zeros(config.conv_width(), 1),
            config,
        })
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Weight matrices updated by the optimizer, in a fixed order.
    pub fn trainable(&self) -> Vec<&BinaryWeightMatrix> {
        let mut v: Vec<&BinaryWeightMatrix> = self.stack.iter().collect();
        v.push(&self.and);
        v.push(&self.or);
        if self.config.mode == Mode::Local {
            v.push(&self.conv);
        }
        v
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut BinaryWeightMatrix> {
        let local = self.config.mode == Mode::Local;
        let mut v: Vec<&mut BinaryWeightMatrix> = self.stack.iter_mut().collect();
        v.push(&mut self.and);
        v.push(&mut self.or);
        if local {
            v.push(&mut self.conv);
        }
        v
    }

    pub fn binarize(&self) -> BinarizedModel {
        let p = &self.config.hard_concrete;
        let conv = match self.config.mode {
            Mode::Local => self.conv.binary(p),
            Mode::Global => vec![1.0; self.config.conv_width()],
        };
        BinarizedModel {
            config: self.config.clone(),
            values: WeightValues {
                stack: self.stack.iter().map(|m| m.binary(p)).collect(),
                and: self.and.binary(p),
                or: self.or.binary(p),
                conv,
            },
        }
    }

    /// Deterministic relaxed weights (median noise), masked.
    pub fn deterministic_values(&self) -> WeightValues {
        let p = &self.config.hard_concrete;
        let conv = match self.config.mode {
            Mode::Local => self.conv.deterministic(p),
            Mode::Global => vec![1.0; self.config.conv_width()],
        };
        WeightValues {
            stack: self.stack.iter().map(|m| m.deterministic(p)).collect(),
            and: self.and.deterministic(p),
            or: self.or.deterministic(p),
            conv,
        }
    }

    /// Eval-mode prediction in {0, 1}.
    pub fn predict(&self, seq: &Sequence) -> Result<f64> {
        self.binarize().predict(seq)
    }

    /// Fraction of trainable weights that evaluate to 0.
    pub fn sparsity(&self) -> f64 {
        let p = &self.config.hard_concrete;
        let (zeros, total) = self.trainable().iter().fold((0usize, 0usize), |(z, t), m| {
            let b = m.binary(p);
            (z + b.iter().filter(|v| **v == 0.0).count(), t + b.len())
        });
        zeros as f64 / total.max(1) as f64
    }
}

/// A model snapshot with strictly binary weights, used for evaluation and
/// rule extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarizedModel {
    pub config: ModelConfig,
    pub values: WeightValues,
}

impl BinarizedModel {
    /// Build from explicit weights; every entry must be exactly 0 or 1 and
    /// global-mode ConvOR weights must all be 1.
    pub fn from_values(config: ModelConfig, values: WeightValues) -> Result<Self> {
        config.validate()?;
        values.check_shapes(&config)?;
        let all = values
            .stack
            .iter()
            .flatten()
            .chain(&values.and)
            .chain(&values.or)
            .chain(&values.conv);
        if let Some(v) = all.into_iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::State(format!(
                "weights are not binarized: found value {v}"
            )));
        }
        if config.mode == Mode::Global && values.conv.iter().any(|v| *v != 1.0) {
            return Err(Error::State(
                "global mode requires every ConvOR weight to be 1".into(),
            ));
        }
        Ok(Self { config, values })
    }

    pub fn forward(&self, enc: &EncodedSequence) -> f64 {
        forward_values(&self.config, &self.values, enc, None)
    }

    pub fn predict(&self, seq: &Sequence) -> Result<f64> {
        Ok(self.forward(&self.config.encode(seq)?))
    }

    pub fn stack_selected(&self, slot: usize) -> impl Iterator<Item = u16> + '_ {
        self.values.stack[slot]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == 1.0)
            .map(|(i, _)| i as u16)
    }

    pub fn and_selected(&self, slot: usize, column: usize) -> bool {
        self.values.and[slot * self.config.hidden + column] == 1.0
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::layers;
    use crate::sequence::Alphabet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn letters_cfg(window: usize, max_len: usize, mode: Mode) -> ModelConfig {
        ModelConfig::new(
            Schema::single(Alphabet::letters('F')),
            window,
            max_len,
            mode,
        )
        .unwrap()
    }

    /// Base rule (B at t-2 and D at t-1) or (D at t-1 and C at t-0), window 3.
    pub(crate) fn bd_dc_values(cfg: &ModelConfig, conv: Vec<f64>) -> WeightValues {
        let n = 6;
        let one = |v: usize| {
            let mut s = vec![0.0; n];
            s[v] = 1.0;
            s
        };
        let stack = vec![one(1), one(3), one(2)];
        let mut and = vec![0.0; 3 * cfg.hidden];
        and[1] = 1.0;
        and[cfg.hidden + 1] = 1.0;
        and[cfg.hidden + 3] = 1.0;
        and[2 * cfg.hidden + 3] = 1.0;
        let mut or = vec![0.0; cfg.hidden];
        or[1] = 1.0;
        or[3] = 1.0;
        WeightValues {
            stack,
            and,
            or,
            conv,
        }
    }

    #[test]
    fn encode_layout() {
        let cfg = letters_cfg(3, 7, Mode::Local);
        assert_eq!(cfg.conv_width(), 9);
        let a = Alphabet::letters('F');
        let full = cfg
            .encode(&Sequence::parse("ABDACBD", &a).unwrap())
            .unwrap();
        assert_eq!(full.slots, 11);
        assert!(full.is_padding(0) && full.is_padding(1));
        assert!(!full.is_padding(2) && !full.is_padding(8));
        assert!(full.is_padding(9) && full.is_padding(10));
        let short = cfg.encode(&Sequence::parse("ABDA", &a).unwrap()).unwrap();
        let real: Vec<usize> = (0..short.slots).filter(|p| !short.is_padding(*p)).collect();
        // 2 boundary + 3 length padding slots on the left, 2 boundary on the right
        assert_eq!(real, vec![5, 6, 7, 8]);
        assert_eq!(short.slot(5)[0], 1.0);
        let long = Sequence::parse("ABDACBDA", &a).unwrap();
        assert!(cfg.encode(&long).is_err());
    }

    #[test]
    fn bd_dc_local() {
        let cfg = letters_cfg(3, 7, Mode::Local);
        let mut conv = vec![0.0; 9];
        // window whose slots sit at t-5, t-4, t-3
        conv[5] = 1.0;
        let m = BinarizedModel::from_values(
            cfg,
            bd_dc_values(&letters_cfg(3, 7, Mode::Local), conv),
        )
        .unwrap();
        let a = Alphabet::letters('F');
        assert_eq!(
            m.predict(&Sequence::parse("ABDACBD", &a).unwrap()).unwrap(),
            1.0
        );
        assert_eq!(
            m.predict(&Sequence::parse("AABDACD", &a).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn bd_dc_global() {
        let cfg = letters_cfg(3, 7, Mode::Global);
        let m = BinarizedModel::from_values(cfg.clone(), bd_dc_values(&cfg, vec![1.0; 9]))
            .unwrap();
        let a = Alphabet::letters('F');
        assert_eq!(
            m.predict(&Sequence::parse("CABDA", &a).unwrap()).unwrap(),
            1.0
        );
        assert_eq!(
            m.predict(&Sequence::parse("CADBA", &a).unwrap()).unwrap(),
            0.0
        );
        assert_eq!(
            m.predict(&Sequence::parse("ADC", &a).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn empty_disjunction_is_false() {
        let cfg = letters_cfg(3, 7, Mode::Local);
        let mut v = bd_dc_values(&cfg, vec![1.0; 9]);
        v.or.iter_mut().for_each(|w| *w = 0.0);
        let m = BinarizedModel::from_values(cfg, v).unwrap();
        for s in Sequence::enumerate_all(6, 3) {
            assert_eq!(m.predict(&s).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_non_binary_weights() {
        let cfg = letters_cfg(3, 7, Mode::Local);
        let mut v = bd_dc_values(&cfg, vec![0.0; 9]);
        v.or[0] = 0.5;
        assert!(matches!(
            BinarizedModel::from_values(cfg.clone(), v),
            Err(Error::State(_))
        ));
        let g = letters_cfg(3, 7, Mode::Global);
        let v = bd_dc_values(&g, vec![0.0; 9]);
        assert!(BinarizedModel::from_values(g, v).is_err());
    }

    #[test]
    fn config_validation() {
        let s = Schema::single(Alphabet::letters('C'));
        assert!(ModelConfig::new(s.clone(), 0, 5, Mode::Local).is_err());
        assert!(ModelConfig::new(s.clone(), 4, 3, Mode::Local).is_err());
        let c = ModelConfig::new(s, 3, 5, Mode::Local).unwrap();
        assert_eq!(c.hidden, 6);
    }

    #[test]
    fn forward_agrees_with_layer_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = letters_cfg(3, 6, Mode::Local);
        let model = Cr2nModel::new(cfg.clone(), &mut rng).unwrap();
        let values = model.deterministic_values();
        let a = Alphabet::letters('F');
        let seq = Sequence::parse("FABCE", &a).unwrap();
        let enc = cfg.encode(&seq).unwrap();
        let mut outputs = Vec::new();
        for w in 0..cfg.conv_width() {
            let start = cfg.window_start(w);
            let slots: Vec<&[f64]> = (0..3).map(|j| enc.slot(start + j)).collect();
            let x = layers::stacked_or_forward(&values.stack, &slots).unwrap();
            let h = layers::and_forward(&values.and, &x, cfg.hidden).unwrap();
            outputs.push(layers::or_forward(&values.or, &h).unwrap());
        }
        let expected = layers::or_forward(&values.conv, &outputs).unwrap();
        let got = forward_values(&cfg, &values, &enc, None);
        assert!((expected - got).abs() < 1e-12);
    }

    #[test]
    fn global_binarization_fixes_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = Cr2nModel::new(letters_cfg(2, 4, Mode::Global), &mut rng).unwrap();
        model.conv.loc.iter_mut().for_each(|l| *l = -9.0);
        assert!(model.binarize().values.conv.iter().all(|v| *v == 1.0));
        assert_eq!(model.trainable().len(), 2 + 2);
    }
}
