use super::layers::{check_cols, layer_norm, relu, softmax_rows, Linear};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Bias-free multi-head attention projections, each `d x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub q: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub o: DMatrix<f64>,
}

impl AttentionWeights {
    pub fn zeros(d: usize) -> Self {
        let z = DMatrix::zeros(d, d);
        Self {
            q: z.clone(),
            k: z.clone(),
            v: z.clone(),
            o: z,
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        for (name, m) in [("q", &self.q), ("k", &self.k), ("v", &self.v), ("o", &self.o)] {
            if m.shape() != (d, d) {
                return Err(Error::InvalidInput(format!("attention {name} has shape {:?}, expected ({d}, {d})", m.shape())));
            }
        }
        Ok(())
    }
}

/// Position-wise feed-forward `ReLU(x W1 + b1) W2 + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    pub l1: Linear,
    pub l2: Linear,
}

impl FeedForward {
    pub fn zeros(d: usize, hidden: usize) -> Self {
        Self {
            l1: Linear::zeros(d, hidden),
            l2: Linear::zeros(hidden, d),
        }
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.l2.forward(&relu(self.l1.forward(x)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub self_attn: AttentionWeights,
    pub cross_attn: AttentionWeights,
    pub ffn: FeedForward,
}

impl EncoderLayer {
    pub fn zeros(d: usize, hidden: usize) -> Self {
        Self {
            self_attn: AttentionWeights::zeros(d),
            cross_attn: AttentionWeights::zeros(d),
            ffn: FeedForward::zeros(d, hidden),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        self.self_attn.check(d)?;
        self.cross_attn.check(d)?;
        let (l1, l2) = (&self.ffn.l1, &self.ffn.l2);
        if l1.input_dim() != d || l2.output_dim() != d || l1.output_dim() != l2.input_dim() {
            return Err(Error::InvalidInput("feed-forward shapes inconsistent with model width".into()));
        }
        Ok(())
    }
}

/// Scaled dot-product attention of `queries` over `context`, split into `heads` column groups.
pub fn multi_head_attention(
    queries: &DMatrix<f64>,
    context: &DMatrix<f64>,
    w: &AttentionWeights,
    heads: usize,
) -> Result<DMatrix<f64>> {
    let d = w.q.nrows();
    w.check(d)?;
    check_cols(queries, d, "attention queries")?;
    check_cols(context, d, "attention context")?;
    if heads == 0 || !d.is_multiple_of(heads) {
        return Err(Error::InvalidInput(format!("{heads} heads do not divide width {d}")));
    }
    let dh = d / heads;
    let q = queries * &w.q;
    let k = context * &w.k;
    let v = context * &w.v;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut concat = DMatrix::zeros(queries.nrows(), d);
    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let qh = q.columns(cols.start, dh);
        let kh = k.columns(cols.start, dh);
        let vh = v.columns(cols.start, dh);
        let attn = softmax_rows(&((qh * kh.transpose()) * scale));
        concat.columns_mut(cols.start, dh).copy_from(&(attn * vh));
    }
    Ok(concat * &w.o)
}

/// One encoder layer: residual self-attention on each cloud, residual
/// cross-attention (each cloud attends to the other's self-attended
/// features), then a residual feed-forward, each followed by layer norm.
pub fn encoder_layer_forward(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    layer: &EncoderLayer,
    heads: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let x1 = layer_norm(&(x + multi_head_attention(x, x, &layer.self_attn, heads)?));
    let y1 = layer_norm(&(y + multi_head_attention(y, y, &layer.self_attn, heads)?));
    let x2 = layer_norm(&(&x1 + multi_head_attention(&x1, &y1, &layer.cross_attn, heads)?));
    let y2 = layer_norm(&(&y1 + multi_head_attention(&y1, &x1, &layer.cross_attn, heads)?));
    let x3 = layer_norm(&(&x2 + layer.ffn.forward(&x2)?));
    let y3 = layer_norm(&(&y2 + layer.ffn.forward(&y2)?));
    Ok((x3, y3))
}

/// Adds the positional encodings to the projected keypoint features and runs every layer.
pub fn cross_encoder_forward(
    fx: &DMatrix<f64>,
    fy: &DMatrix<f64>,
    enc_x: &DMatrix<f64>,
    enc_y: &DMatrix<f64>,
    layers: &[EncoderLayer],
    heads: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if fx.shape() != enc_x.shape() || fy.shape() != enc_y.shape() {
        return Err(Error::InvalidInput("features and encodings differ in shape".into()));
    }
    let (mut x, mut y) = (fx + enc_x, fy + enc_y);
    for layer in layers {
        layer.validate(x.ncols())?;
        (x, y) = encoder_layer_forward(&x, &y, layer, heads)?;
    }
    Ok((x, y))
}
