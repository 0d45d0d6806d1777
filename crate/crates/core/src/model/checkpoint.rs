//! Plain-text model checkpoints.
//!
//! ```text
//! medgnn-checkpoint 1
//! nodes <n>
//! input_features <f0>
//! conv_operator <variant>
//! activation_operator <variant>
//! layers <L>
//! layer relu <f_out> <f_in> <k_taps>                           (per layer)
//! layer <median|max> <f_out> <f_in> <k_taps> <hops> <shared|per_feature>
//! taps <f_out·f_in·k_taps values, index (f, g, k) row-major>
//! weights <activation coefficients, row-major>                 (median/max only)
//! readout <per_graph|per_node> <classes> <in_dim>
//! readout_weights <classes·in_dim values, row-major>
//! readout_bias <classes values>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Values are written with
//! 17 significant digits so a write/read cycle reproduces every parameter
//! bit for bit.

use std::fmt::Write as _;

use super::{Activation, GnnModel, LayerParams, ModelOperators, Readout, ReadoutKind};
use crate::error::{Error, Result};
use crate::filters::{ActivationWeights, ConvTaps, RankKind};
use crate::graph::{Graph, ShiftVariant};
use crate::harness::fmt_f64;

const MAGIC: &str = "medgnn-checkpoint";
const VERSION: &str = "1";

/// Parameters and operator choices of a model, detached from any graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nodes: usize,
    pub input_features: usize,
    pub conv_variant: ShiftVariant,
    pub activation_variant: ShiftVariant,
    pub layers: Vec<LayerParams>,
    pub readout: Readout,
}

impl Checkpoint {
    pub fn from_model(m: &GnnModel) -> Self {
        Checkpoint {
            nodes: m.n(),
            input_features: m.input_features(),
            conv_variant: m.operators().conv.variant(),
            activation_variant: m.operators().activation.variant(),
            layers: m.layers().to_vec(),
            readout: m.readout().clone(),
        }
    }

    /// Rebuilds the shift operators from `graph` and attaches the parameters.
    pub fn into_model(self, graph: &Graph) -> Result<GnnModel> {
        if graph.n() != self.nodes {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint is for {} nodes, graph has {}",
                self.nodes,
                graph.n()
            )));
        }
        let ops = ModelOperators::with_variants(graph, self.conv_variant, self.activation_variant)?;
        GnnModel::new(self.input_features, self.layers, self.readout, ops)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let values = |out: &mut String, key: &str, v: &[f64]| {
            out.push_str(key);
            for x in v {
                out.push(' ');
                out.push_str(&fmt_f64(*x));
            }
            out.push('\n');
        };
        let _ = writeln!(out, "{MAGIC} {VERSION}");
        let _ = writeln!(out, "nodes {}", self.nodes);
        let _ = writeln!(out, "input_features {}", self.input_features);
        let _ = writeln!(out, "conv_operator {}", self.conv_variant);
        let _ = writeln!(out, "activation_operator {}", self.activation_variant);
        let _ = writeln!(out, "layers {}", self.layers.len());
        for l in &self.layers {
            let t = &l.taps;
            match &l.activation {
                Activation::Relu => {
                    let _ = writeln!(out, "layer relu {} {} {}", t.f_out(), t.f_in(), t.k_taps());
                    values(&mut out, "taps", t.as_slice());
                }
                Activation::Local { kind, weights } => {
                    let sharing = if weights.is_shared() {
                        "shared"
                    } else {
                        "per_feature"
                    };
                    let _ = writeln!(
                        out,
                        "layer {kind} {} {} {} {} {sharing}",
                        t.f_out(),
                        t.f_in(),
                        t.k_taps(),
                        weights.max_hop()
                    );
                    values(&mut out, "taps", t.as_slice());
                    values(&mut out, "weights", weights.as_slice());
                }
            }
        }
        let r = &self.readout;
        let _ = writeln!(out, "readout {} {} {}", r.kind(), r.classes(), r.in_dim());
        values(&mut out, "readout_weights", r.weights());
        values(&mut out, "readout_bias", r.bias());
        out
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next meaningful line as (1-based number, key, remaining fields).
    fn next(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let key = fields.next().unwrap_or_default();
            if key != expected {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `{expected}`, found `{key}`"),
                });
            }
            return Ok((i + 1, fields.collect()));
        }
        Err(Error::Parse {
            line: 0,
            msg: format!("unexpected end of checkpoint, expected `{expected}`"),
        })
    }

    fn fields(&mut self, key: &str, count: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, fields) = self.next(key)?;
        if fields.len() != count {
            return Err(Error::Parse {
                line,
                msg: format!("`{key}` takes {count} fields, found {}", fields.len()),
            });
        }
        Ok((line, fields))
    }

    fn usize(&mut self, key: &str) -> Result<usize> {
        let (line, f) = self.fields(key, 1)?;
        parse_usize(f[0], line)
    }

    fn values(&mut self, key: &str) -> Result<(usize, Vec<f64>)> {
        let (line, fields) = self.next(key)?;
        let v = fields
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad number `{s}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((line, v))
    }
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad integer `{s}`"),
    })
}

fn at_line(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        e @ Error::Parse { .. } => e,
        other => Error::Parse {
            line,
            msg: other.to_string(),
        },
    }
}

/// Parses the text produced by [`Checkpoint::to_text`].
pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (line, f) = lines.fields(MAGIC, 1)?;
    if f[0] != VERSION {
        return Err(Error::Parse {
            line,
            msg: format!("unsupported checkpoint version `{}`", f[0]),
        });
    }
    let nodes = lines.usize("nodes")?;
    let input_features = lines.usize("input_features")?;
    let (line, f) = lines.fields("conv_operator", 1)?;
    let conv_variant: ShiftVariant = f[0].parse().map_err(at_line(line))?;
    let (line, f) = lines.fields("activation_operator", 1)?;
    let activation_variant: ShiftVariant = f[0].parse().map_err(at_line(line))?;
    let layer_count = lines.usize("layers")?;
    let mut layers = Vec::new();
    for _ in 0..layer_count {
        let (line, f) = lines.next("layer")?;
        let local = match f.first().copied() {
            Some("relu") => None,
            Some(k) => Some(k.parse::<RankKind>().map_err(at_line(line))?),
            None => {
                return Err(Error::Parse {
                    line,
                    msg: "missing layer kind".into(),
                })
            }
        };
        let expected = if local.is_some() { 6 } else { 4 };
        if f.len() != expected {
            return Err(Error::Parse {
                line,
                msg: format!("`layer` takes {expected} fields, found {}", f.len()),
            });
        }
        let f_out = parse_usize(f[1], line)?;
        let f_in = parse_usize(f[2], line)?;
        let k_taps = parse_usize(f[3], line)?;
        let (tline, taps) = lines.values("taps")?;
        let taps = ConvTaps::new(f_out, f_in, k_taps, taps).map_err(at_line(tline))?;
        let activation = match local {
            None => Activation::Relu,
            Some(kind) => {
                let hops = parse_usize(f[4], line)?;
                let shared = match f[5] {
                    "shared" => true,
                    "per_feature" => false,
                    other => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("expected `shared` or `per_feature`, found `{other}`"),
                        })
                    }
                };
                let (wline, w) = lines.values("weights")?;
                let weights =
                    ActivationWeights::new(hops, shared, f_out, w).map_err(at_line(wline))?;
                Activation::Local { kind, weights }
            }
        };
        layers.push(LayerParams { taps, activation });
    }
    let (line, f) = lines.fields("readout", 3)?;
    let kind: ReadoutKind = f[0].parse().map_err(at_line(line))?;
    let classes = parse_usize(f[1], line)?;
    let in_dim = parse_usize(f[2], line)?;
    let (_, weights) = lines.values("readout_weights")?;
    let (bline, bias) = lines.values("readout_bias")?;
    let readout = Readout::new(kind, classes, in_dim, weights, bias).map_err(at_line(bline))?;
    Ok(Checkpoint {
        nodes,
        input_features,
        conv_variant,
        activation_variant,
        layers,
        readout,
    })
}
