use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndgrad::{Graph, Tensor, Var};
use crate::rng;

use super::config::ModelConfig;

/// Parameter groups; freezing works at this granularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamGroup {
    Embeddings,
    WordEncoder,
    PostEncoder,
    ThreadDecoder,
    WordDecoder,
    AttnGamma,
    AttnBeta,
    AttnAlpha,
    StopHead,
    ThreadRep,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 10] = [
        ParamGroup::Embeddings,
        ParamGroup::WordEncoder,
        ParamGroup::PostEncoder,
        ParamGroup::ThreadDecoder,
        ParamGroup::WordDecoder,
        ParamGroup::AttnGamma,
        ParamGroup::AttnBeta,
        ParamGroup::AttnAlpha,
        ParamGroup::StopHead,
        ParamGroup::ThreadRep,
    ];

    /// Name prefix used by the group's tensors.
    pub fn prefix(self) -> &'static str {
        match self {
            ParamGroup::Embeddings => "embed",
            ParamGroup::WordEncoder => "enc_word",
            ParamGroup::PostEncoder => "enc_post",
            ParamGroup::ThreadDecoder => "dec_thread",
            ParamGroup::WordDecoder => "dec_word",
            ParamGroup::AttnGamma => "attn_gamma",
            ParamGroup::AttnBeta => "attn_beta",
            ParamGroup::AttnAlpha => "attn_alpha",
            ParamGroup::StopHead => "stop",
            ParamGroup::ThreadRep => "thread_rep",
        }
    }

    /// Groups held fixed when transferring to a new domain: everything except
    /// the word decoder and the three attention networks.
    pub fn default_frozen() -> BTreeSet<ParamGroup> {
        let trainable = [
            ParamGroup::WordDecoder,
            ParamGroup::AttnGamma,
            ParamGroup::AttnBeta,
            ParamGroup::AttnAlpha,
        ];
        Self::ALL.into_iter().filter(|g| !trainable.contains(g)).collect()
    }
}

impl fmt::Display for ParamGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.prefix())
    }
}

impl FromStr for ParamGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.prefix() == s)
            .ok_or_else(|| Error::Config(format!("unknown parameter group {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Init {
    Normal,
    Zeros,
    /// Zeros except the forget-gate block `[d, 2d)` set to 1.
    LstmBias(usize),
}

/// Name, group, shape and initializer of every model tensor.
fn layout(cfg: &ModelConfig) -> Vec<(String, ParamGroup, Vec<usize>, Init)> {
    let (v, e, d, a) = (cfg.vocab_size, cfg.embed_dim, cfg.hidden, cfg.attn_dim);
    let mut out = Vec::new();
    let mut add = |name: &str, group: ParamGroup, shape: Vec<usize>, init: Init| {
        out.push((format!("{}.{name}", group.prefix()), group, shape, init));
    };
    use ParamGroup::*;
    add("weight", Embeddings, vec![v, e], Init::Normal);
    for dir in ["fwd", "bwd"] {
        add(&format!("{dir}.w"), WordEncoder, vec![e + d, 4 * d], Init::Normal);
        add(&format!("{dir}.b"), WordEncoder, vec![4 * d], Init::LstmBias(d));
    }
    for dir in ["fwd", "bwd"] {
        add(&format!("{dir}.w"), PostEncoder, vec![2 * d + d, 4 * d], Init::Normal);
        add(&format!("{dir}.b"), PostEncoder, vec![4 * d], Init::LstmBias(d));
    }
    add("lstm.w", ThreadDecoder, vec![2 * d + d + d, 4 * d], Init::Normal);
    add("lstm.b", ThreadDecoder, vec![4 * d], Init::LstmBias(d));
    add("init_h", ThreadDecoder, vec![d], Init::Normal);
    add("init_c", ThreadDecoder, vec![d], Init::Normal);
    add("init_word", ThreadDecoder, vec![d], Init::Zeros);
    for group in [AttnGamma, AttnBeta, AttnAlpha] {
        add("key", group, vec![2 * d, a], Init::Normal);
        add("query", group, vec![d, a], Init::Normal);
        add("bias", group, vec![a], Init::Zeros);
        add("score", group, vec![a, 1], Init::Normal);
    }
    add("w", StopHead, vec![d, 1], Init::Normal);
    add("b", StopHead, vec![1], Init::Zeros);
    add("w1", ThreadRep, vec![d + 2 * d + d, d], Init::Normal);
    add("b1", ThreadRep, vec![d], Init::Zeros);
    add("w2", ThreadRep, vec![d, d], Init::Normal);
    add("b2", ThreadRep, vec![d], Init::Zeros);
    add("init_h.w", WordDecoder, vec![d, d], Init::Normal);
    add("init_h.b", WordDecoder, vec![d], Init::Zeros);
    add("init_c.w", WordDecoder, vec![d, d], Init::Normal);
    add("init_c.b", WordDecoder, vec![d], Init::Zeros);
    add("lstm.w", WordDecoder, vec![e + 2 * d + d + d, 4 * d], Init::Normal);
    add("lstm.b", WordDecoder, vec![4 * d], Init::LstmBias(d));
    add("out.w", WordDecoder, vec![d + 2 * d, v], Init::Normal);
    add("out.b", WordDecoder, vec![v], Init::Zeros);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub group: ParamGroup,
    pub tensor: Tensor,
}

/// Named model tensors plus the set of frozen groups.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters {
    entries: Vec<ParamEntry>,
    index: HashMap<String, usize>,
    frozen: BTreeSet<ParamGroup>,
}

impl Parameters {
    /// Expected `(name, group, shape)` for a config, in canonical order.
    pub fn expected_shapes(cfg: &ModelConfig) -> Vec<(String, ParamGroup, Vec<usize>)> {
        layout(cfg).into_iter().map(|(n, g, s, _)| (n, g, s)).collect()
    }

    /// Weights ~ N(0, init_std); biases zero with forget gates at +1;
    /// the initial previous-sentence state is zero.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let normal = Normal::new(0.0, cfg.init_std).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = rng::stream(seed, 0x696e_6974);
        let entries = layout(cfg)
            .into_iter()
            .map(|(name, group, shape, init)| {
                let n: usize = shape.iter().product();
                let data = match init {
                    Init::Normal => (0..n).map(|_| rng.sample(normal)).collect(),
                    Init::Zeros => vec![0.0; n],
                    Init::LstmBias(d) => (0..n).map(|i| if (d..2 * d).contains(&i) { 1.0 } else { 0.0 }).collect(),
                };
                ParamEntry {
                    name,
                    group,
                    tensor: Tensor::from_parts(shape, data),
                }
            })
            .collect();
        Ok(Self::from_entries(entries, BTreeSet::new()))
    }

    pub(crate) fn from_entries(entries: Vec<ParamEntry>, frozen: BTreeSet<ParamGroup>) -> Self {
        let index = entries.iter().enumerate().map(|(i, e)| (e.name.clone(), i)).collect();
        Self { entries, index, frozen }
    }

    /// Checks names and shapes against `cfg`.
    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        let expected = Self::expected_shapes(cfg);
        if expected.len() != self.entries.len() {
            return Err(Error::Data(format!(
                "expected {} parameter tensors, found {}",
                expected.len(),
                self.entries.len()
            )));
        }
        for (name, group, shape) in expected {
            let entry = self
                .get(&name)
                .ok_or_else(|| Error::Data(format!("missing parameter {name}")))?;
            if entry.group != group || entry.tensor.shape() != shape.as_slice() {
                return Err(Error::Data(format!(
                    "parameter {name}: shape {:?} does not match config shape {shape:?}",
                    entry.tensor.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ParamEntry] {
        &mut self.entries
    }

    pub fn get(&self, name: &str) -> Option<&ParamEntry> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut ParamEntry> {
        self.index.get(name).map(|&i| &mut self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.numel()).sum()
    }

    pub fn frozen(&self) -> &BTreeSet<ParamGroup> {
        &self.frozen
    }

    pub fn is_frozen(&self, group: ParamGroup) -> bool {
        self.frozen.contains(&group)
    }

    pub fn set_frozen(&mut self, frozen: BTreeSet<ParamGroup>) {
        self.frozen = frozen;
    }

    /// Places every tensor on `g`; frozen groups become constants.
    pub fn bind(&self, g: &mut Graph) -> Bound {
        let vars = self
            .entries
            .iter()
            .map(|e| g.leaf(e.tensor.clone(), !self.is_frozen(e.group)))
            .collect();
        Bound {
            vars,
            index: self.index.clone(),
        }
    }
}

impl Parameters {
    /// Wraps variables already placed on a graph, one per entry in order.
    pub fn bound_from(&self, vars: Vec<Var>) -> Result<Bound> {
        if vars.len() != self.entries.len() {
            return Err(Error::Contract(format!(
                "{} variables for {} parameter tensors",
                vars.len(),
                self.entries.len()
            )));
        }
        Ok(Bound {
            vars,
            index: self.index.clone(),
        })
    }

    /// `(name, tensor)` pairs in canonical order.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        self.entries.iter().map(|e| (e.name.clone(), e.tensor.clone())).collect()
    }
}

/// Graph variables for a bound [`Parameters`] set.
pub struct Bound {
    vars: Vec<Var>,
    index: HashMap<String, usize>,
}

impl Bound {
    /// Variable of tensor `name`. Panics on unknown names, which are a
    /// programming error inside the model.
    pub fn var(&self, name: &str) -> Var {
        self.vars[*self.index.get(name).unwrap_or_else(|| panic!("no parameter named {name}"))]
    }

    /// Variables in the same order as [`Parameters::entries`].
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}
