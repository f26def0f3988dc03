use super::{check_threshold, sigma_decode, GradedSpike, SdError, SdState};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

/// Row-major dense matrix, or CSR for convolution-shaped layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightMatrix {
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Sparse {
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    },
}

impl WeightMatrix {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        WeightMatrix::Dense { rows, cols, data }
    }

    /// Builds a CSR matrix from `(row, col, value)` triples in any order.
    pub fn sparse(rows: usize, cols: usize, mut triples: Vec<(usize, usize, f64)>) -> Self {
        triples.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &triples {
            row_ptr[r.min(rows - 1) + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        WeightMatrix::Sparse {
            rows,
            cols,
            row_ptr,
            col_idx: triples.iter().map(|t| t.1).collect(),
            values: triples.iter().map(|t| t.2).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            WeightMatrix::Dense { rows, .. } | WeightMatrix::Sparse { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            WeightMatrix::Dense { cols, .. } | WeightMatrix::Sparse { cols, .. } => *cols,
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            WeightMatrix::Dense { data, .. } => data,
            WeightMatrix::Sparse { values, .. } => values,
        }
    }

    /// `out = W x` (overwrites `out`).
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        match self {
            WeightMatrix::Dense { cols, data, .. } => {
                for (o, row) in out.iter_mut().zip(data.chunks_exact(*cols)) {
                    *o = row.iter().zip(x).map(|(w, v)| w * v).sum();
                }
            }
            WeightMatrix::Sparse {
                row_ptr, col_idx, values, ..
            } => {
                for (r, o) in out.iter_mut().enumerate() {
                    let span = row_ptr[r]..row_ptr[r + 1];
                    *o = col_idx[span.clone()].iter().zip(&values[span]).map(|(&c, w)| w * x[c]).sum();
                }
            }
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        match self {
            WeightMatrix::Dense { cols, data, .. } => data
                .chunks_exact(*cols)
                .map(|r| r.iter().map(|w| w.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            WeightMatrix::Sparse { row_ptr, values, .. } => row_ptr
                .windows(2)
                .map(|w| values[w[0]..w[1]].iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    fn triples(&self) -> Vec<(usize, usize, f64)> {
        match self {
            WeightMatrix::Dense { cols, data, .. } => data
                .iter()
                .enumerate()
                .map(|(i, &v)| (i / cols, i % cols, v))
                .collect(),
            WeightMatrix::Sparse {
                row_ptr, col_idx, values, ..
            } => (0..row_ptr.len() - 1)
                .flat_map(|r| (row_ptr[r]..row_ptr[r + 1]).map(move |k| (r, k)))
                .map(|(r, k)| (r, col_idx[k], values[k]))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: WeightMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: WeightMatrix, bias: Vec<f64>, activation: Activation) -> Self {
        Layer {
            weights,
            bias,
            activation,
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.resize(self.weights.rows(), 0.0);
        self.weights.mul_vec(x, out);
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o = self.activation.apply(*o + b);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
}

impl DenseNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self, SdError> {
        let net = DenseNet { layers };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), SdError> {
        if self.layers.is_empty() {
            return Err(SdError::BadLayer {
                layer: 0,
                reason: "network has no layers".into(),
            });
        }
        for (i, l) in self.layers.iter().enumerate() {
            let bad = |reason: String| SdError::BadLayer { layer: i, reason };
            if l.bias.len() != l.weights.rows() {
                return Err(bad(format!("bias has {} entries for {} rows", l.bias.len(), l.weights.rows())));
            }
            if let WeightMatrix::Dense { rows, cols, data } = &l.weights {
                if data.len() != rows * cols {
                    return Err(bad(format!("{} values for {rows}x{cols}", data.len())));
                }
            }
            if let WeightMatrix::Sparse {
                rows,
                cols,
                row_ptr,
                col_idx,
                values,
            } = &l.weights
            {
                if row_ptr.len() != rows + 1 || col_idx.len() != values.len() || col_idx.iter().any(|&c| c >= *cols) {
                    return Err(bad("malformed sparse matrix".into()));
                }
            }
            if l.weights.values().iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(bad("non-finite weight".into()));
            }
            if i > 0 && self.layers[i - 1].weights.rows() != l.weights.cols() {
                return Err(bad(format!(
                    "expects {} inputs, previous layer yields {}",
                    l.weights.cols(),
                    self.layers[i - 1].weights.rows()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.rows())
    }
}

/// Plain dense forward pass; the reference the spiking path is checked
/// against.
pub fn dense_forward(net: &DenseNet, x: &[f64]) -> Result<Vec<f64>, SdError> {
    if x.len() != net.input_dim() {
        return Err(SdError::SizeMismatch {
            expected: net.input_dim(),
            got: x.len(),
        });
    }
    let mut cur = x.to_vec();
    let mut next = Vec::new();
    for l in &net.layers {
        l.forward(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Column-major copy of a weight matrix, so one spike on input `i` touches
/// only the nonzeros of column `i`.
struct Columns {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Columns {
    fn new(w: &WeightMatrix) -> Self {
        let mut t: Vec<(usize, usize, f64)> = w.triples().into_iter().filter(|t| t.2 != 0.0).collect();
        t.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; w.cols() + 1];
        for &(_, c, _) in &t {
            col_ptr[c + 1] += 1;
        }
        for i in 0..w.cols() {
            col_ptr[i + 1] += col_ptr[i];
        }
        Columns {
            col_ptr,
            row_idx: t.iter().map(|e| e.0).collect(),
            values: t.iter().map(|e| e.2).collect(),
        }
    }

    fn add_column(&self, col: usize, value: f64, out: &mut [f64]) {
        for k in self.col_ptr[col]..self.col_ptr[col + 1] {
            out[self.row_idx[k]] += self.values[k] * value;
        }
    }
}

struct Boundary {
    encoder: SdState,
    decoded: Vec<f64>,
}

/// Stateful sigma-delta execution of a [`DenseNet`]. Each layer's
/// activations leave through a delta encoder; the consumer (next layer or
/// the caller) only ever sees the sigma-decoded reconstruction.
///
/// Downstream layers integrate incoming spikes into their pre-activation
/// (`W x̂ + b` is updated by `W[:, i] * d` per spike) so work scales with
/// spike traffic instead of input size.
pub struct SdRunner {
    net: DenseNet,
    threshold: f64,
    boundaries: Vec<Boundary>,
    /// Pre-activation of layers 1..n, maintained incrementally.
    pre: Vec<Vec<f64>>,
    columns: Vec<Columns>,
    spike_counts: Vec<u64>,
    scratch: Vec<f64>,
    spikes: Vec<GradedSpike>,
}

impl SdRunner {
    pub fn new(net: &DenseNet, threshold: f64) -> Result<Self, SdError> {
        net.validate()?;
        check_threshold(threshold)?;
        let boundaries = net
            .layers
            .iter()
            .map(|l| Boundary {
                encoder: SdState::new(l.weights.rows()),
                decoded: vec![0.0; l.weights.rows()],
            })
            .collect();
        // the decoded input of every downstream layer starts at zero
        let pre = net.layers.iter().skip(1).map(|l| l.bias.clone()).collect();
        let columns = net.layers.iter().skip(1).map(|l| Columns::new(&l.weights)).collect();
        Ok(SdRunner {
            net: net.clone(),
            threshold,
            boundaries,
            pre,
            columns,
            spike_counts: vec![0; net.layers.len()],
            scratch: Vec::new(),
            spikes: Vec::new(),
        })
    }

    /// Advances one time step and returns the decoded network output.
    pub fn step(&mut self, x: &[f64]) -> Result<&[f64], SdError> {
        if x.len() != self.net.input_dim() {
            return Err(SdError::SizeMismatch {
                expected: self.net.input_dim(),
                got: x.len(),
            });
        }
        for k in 0..self.net.layers.len() {
            let layer = &self.net.layers[k];
            if k == 0 {
                layer.forward(x, &mut self.scratch);
            } else {
                self.scratch.clear();
                self.scratch
                    .extend(self.pre[k - 1].iter().map(|&z| layer.activation.apply(z)));
            }
            self.spikes.clear();
            let b = &mut self.boundaries[k];
            b.encoder.encode_into(&self.scratch, self.threshold, &mut self.spikes)?;
            sigma_decode(&mut b.decoded, &self.spikes)?;
            self.spike_counts[k] += self.spikes.len() as u64;
            if let Some(cols) = self.columns.get(k) {
                let pre = &mut self.pre[k];
                for s in &self.spikes {
                    cols.add_column(s.address as usize, s.value, pre);
                }
            }
        }
        Ok(&self.boundaries.last().unwrap().decoded)
    }

    pub fn spike_counts(&self) -> &[u64] {
        &self.spike_counts
    }

    /// Decoded activations at each layer boundary.
    pub fn decoded(&self, layer: usize) -> &[f64] {
        &self.boundaries[layer].decoded
    }
}

// Text weight format, one network per file:
//
//   SDNET 1
//   LAYER dense <rows> <cols> <relu|identity>
//   <rows*cols weights, row-major, whitespace separated>
//   <rows biases>
//   LAYER sparse <rows> <cols> <relu|identity> <nnz>
//   <nnz lines "row col value">
//   <rows biases>
//
// Blank lines and `#` comments are ignored.

pub fn write_net(net: &DenseNet) -> String {
    let mut out = String::from("SDNET 1\n");
    for l in &net.layers {
        let (rows, cols, act) = (l.weights.rows(), l.weights.cols(), l.activation.name());
        match &l.weights {
            WeightMatrix::Dense { data, .. } => {
                let _ = writeln!(out, "LAYER dense {rows} {cols} {act}");
                for row in data.chunks_exact(cols.max(1)) {
                    out.push_str(&join(row));
                    out.push('\n');
                }
            }
            WeightMatrix::Sparse { .. } => {
                let t = l.weights.triples();
                let _ = writeln!(out, "LAYER sparse {rows} {cols} {act} {}", t.len());
                for (r, c, v) in t {
                    let _ = writeln!(out, "{r} {c} {v:?}");
                }
            }
        }
        out.push_str(&join(&l.bias));
        out.push('\n');
    }
    out
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn parse_net(text: &str) -> Result<DenseNet, SdError> {
    let mut tokens = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("");
            l.split_whitespace().map(move |t| (i + 1, t)).collect::<Vec<_>>()
        })
        .peekable();
    let err = |line: usize, reason: &str| SdError::Parse {
        line,
        reason: reason.to_string(),
    };
    let mut next = |what: &str| tokens.next().ok_or_else(|| err(0, &format!("unexpected end of file, wanted {what}")));
    let (l, magic) = next("magic")?;
    let (_, version) = next("version")?;
    if magic != "SDNET" || version != "1" {
        return Err(err(l, "expected header `SDNET 1`"));
    }
    fn num<T: std::str::FromStr>((line, tok): (usize, &str)) -> Result<T, SdError> {
        tok.parse().map_err(|_| SdError::Parse {
            line,
            reason: format!("bad number `{tok}`"),
        })
    }
    let mut layers = Vec::new();
    while let Ok((line, kw)) = next("LAYER") {
        if kw != "LAYER" {
            return Err(err(line, &format!("expected LAYER, found `{kw}`")));
        }
        let (_, kind) = next("layer kind")?;
        let rows: usize = num(next("rows")?)?;
        let cols: usize = num(next("cols")?)?;
        let (al, act) = next("activation")?;
        let activation = match act {
            "relu" => Activation::Relu,
            "identity" => Activation::Identity,
            _ => return Err(err(al, &format!("unknown activation `{act}`"))),
        };
        if rows == 0 || cols == 0 {
            return Err(err(line, "empty layer"));
        }
        let weights = match kind {
            "dense" => {
                let data = (0..rows * cols).map(|_| num(next("weight")?)).collect::<Result<Vec<f64>, _>>()?;
                WeightMatrix::dense(rows, cols, data)
            }
            "sparse" => {
                let nnz: usize = num(next("nnz")?)?;
                let mut triples = Vec::with_capacity(nnz);
                for _ in 0..nnz {
                    let tok = next("row")?;
                    let r: usize = num(tok)?;
                    let c: usize = num(next("col")?)?;
                    let v: f64 = num(next("value")?)?;
                    if r >= rows || c >= cols {
                        return Err(err(tok.0, "sparse entry outside matrix"));
                    }
                    triples.push((r, c, v));
                }
                WeightMatrix::sparse(rows, cols, triples)
            }
            _ => return Err(err(line, &format!("unknown layer kind `{kind}`"))),
        };
        let bias = (0..rows).map(|_| num(next("bias")?)).collect::<Result<Vec<f64>, _>>()?;
        layers.push(Layer::new(weights, bias, activation));
    }
    DenseNet::new(layers)
}

pub fn load_net(path: impl AsRef<Path>) -> Result<DenseNet, SdError> {
    let text = std::fs::read_to_string(path).map_err(|e| SdError::Io(e.to_string()))?;
    parse_net(&text)
}

pub fn save_net(path: impl AsRef<Path>, net: &DenseNet) -> Result<(), SdError> {
    std::fs::write(path, write_net(net)).map_err(|e| SdError::Io(e.to_string()))
}
