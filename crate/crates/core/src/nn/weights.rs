use super::encoder::{cross_encoder_forward, AttentionWeights, EncoderLayer, FeedForward};
use super::encoding::positional_encoding;
use super::heads::{coordinate_mlp, overlap_head, point_to_node_decode, DenseConditioned};
use super::layers::Linear;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::tensor::Tensor;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::collections::BTreeMap;

/// Every learned tensor of the matching network.
///
/// Tensor names: `proj.w` (`D x d`, optional `proj.b`), per layer `L`
/// `encL.self.{q,k,v,o}`, `encL.cross.{q,k,v,o}`, `encL.ffn.{w1,b1,w2,b2}`,
/// then `overlap.w3` (`d x 1`), `overlap.b3`, optional `overlap.dense.{w,b}`
/// and `dec.{w1,b1,w2,b2}` with `w1` of shape `(d + 3) x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub heads: usize,
    pub proj: Linear,
    pub layers: Vec<EncoderLayer>,
    pub overlap_w3: DVector<f64>,
    pub overlap_b3: f64,
    /// Refinement of dense overlap scores; identity pass-through when absent.
    pub overlap_dense: Option<(DVector<f64>, f64)>,
    pub dec1: Linear,
    pub dec2: Linear,
}

fn get<'a>(t: &'a BTreeMap<String, Tensor>, name: &str) -> Result<&'a Tensor> {
    t.get(name)
        .ok_or_else(|| Error::Schema(format!("weight tensor {name} missing")))
}

fn matrix(t: &BTreeMap<String, Tensor>, name: &str, shape: (usize, usize)) -> Result<DMatrix<f64>> {
    let m = get(t, name)?.to_matrix()?;
    if m.shape() != shape {
        return Err(Error::Schema(format!("{name} has shape {:?}, expected {shape:?}", m.shape())));
    }
    Ok(m)
}

fn vector(t: &BTreeMap<String, Tensor>, name: &str, len: usize) -> Result<DVector<f64>> {
    let x = get(t, name)?;
    if x.data.len() != len {
        return Err(Error::Schema(format!("{name} has {} values, expected {len}", x.data.len())));
    }
    Ok(DVector::from_iterator(len, x.data.iter().map(|&v| v as f64)))
}

fn put_matrix(out: &mut BTreeMap<String, Tensor>, name: String, m: &DMatrix<f64>) {
    out.insert(name, Tensor::from_matrix(m));
}

fn put_vector(out: &mut BTreeMap<String, Tensor>, name: String, v: &DVector<f64>) {
    out.insert(
        name,
        Tensor {
            shape: vec![v.len()],
            data: v.iter().map(|&x| x as f32).collect(),
        },
    );
}

impl NetworkWeights {
    pub fn input_dim(&self) -> usize {
        self.proj.input_dim()
    }

    pub fn width(&self) -> usize {
        self.proj.output_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.width();
        if !d.is_multiple_of(6) || self.heads == 0 || !d.is_multiple_of(self.heads) {
            return Err(Error::Schema(format!("width {d} with {} heads is not usable", self.heads)));
        }
        for l in &self.layers {
            l.validate(d)?;
        }
        if self.overlap_w3.len() != d
            || self.dec1.input_dim() != d + 3
            || self.dec1.output_dim() != self.dec2.input_dim()
            || self.dec2.output_dim() != 3
            || self.overlap_dense.as_ref().is_some_and(|(w, _)| w.len() != d)
        {
            return Err(Error::Schema("head shapes inconsistent with model width".into()));
        }
        Ok(())
    }

    pub fn from_tensors(t: &BTreeMap<String, Tensor>, heads: usize) -> Result<Self> {
        let pw = get(t, "proj.w")?.to_matrix()?;
        let d = pw.ncols();
        let pb = if t.contains_key("proj.b") {
            vector(t, "proj.b", d)?
        } else {
            DVector::zeros(d)
        };
        let mut layers = Vec::new();
        while t.contains_key(&format!("enc{}.self.q", layers.len())) {
            let p = format!("enc{}", layers.len());
            let attn = |kind: &str| -> Result<AttentionWeights> {
                Ok(AttentionWeights {
                    q: matrix(t, &format!("{p}.{kind}.q"), (d, d))?,
                    k: matrix(t, &format!("{p}.{kind}.k"), (d, d))?,
                    v: matrix(t, &format!("{p}.{kind}.v"), (d, d))?,
                    o: matrix(t, &format!("{p}.{kind}.o"), (d, d))?,
                })
            };
            let w1 = get(t, &format!("{p}.ffn.w1"))?.to_matrix()?;
            let hidden = w1.ncols();
            if w1.nrows() != d {
                return Err(Error::Schema(format!("{p}.ffn.w1 must have {d} rows")));
            }
            layers.push(EncoderLayer {
                self_attn: attn("self")?,
                cross_attn: attn("cross")?,
                ffn: FeedForward {
                    l1: Linear::new(w1, vector(t, &format!("{p}.ffn.b1"), hidden)?)?,
                    l2: Linear::new(
                        matrix(t, &format!("{p}.ffn.w2"), (hidden, d))?,
                        vector(t, &format!("{p}.ffn.b2"), d)?,
                    )?,
                },
            });
        }
        let overlap_dense = if t.contains_key("overlap.dense.w") {
            Some((vector(t, "overlap.dense.w", d)?, vector(t, "overlap.dense.b", 1)?[0]))
        } else {
            None
        };
        let dw1 = get(t, "dec.w1")?.to_matrix()?;
        let hidden = dw1.ncols();
        if dw1.nrows() != d + 3 {
            return Err(Error::Schema(format!("dec.w1 must have {} rows", d + 3)));
        }
        let w = Self {
            heads,
            proj: Linear::new(pw, pb)?,
            layers,
            overlap_w3: vector(t, "overlap.w3", d)?,
            overlap_b3: vector(t, "overlap.b3", 1)?[0],
            overlap_dense,
            dec1: Linear::new(dw1, vector(t, "dec.b1", hidden)?)?,
            dec2: Linear::new(matrix(t, "dec.w2", (hidden, 3))?, vector(t, "dec.b2", 3)?)?,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn to_tensors(&self) -> BTreeMap<String, Tensor> {
        let mut out = BTreeMap::new();
        put_matrix(&mut out, "proj.w".into(), &self.proj.w);
        put_vector(&mut out, "proj.b".into(), &self.proj.b);
        for (i, l) in self.layers.iter().enumerate() {
            for (kind, a) in [("self", &l.self_attn), ("cross", &l.cross_attn)] {
                for (n, m) in [("q", &a.q), ("k", &a.k), ("v", &a.v), ("o", &a.o)] {
                    put_matrix(&mut out, format!("enc{i}.{kind}.{n}"), m);
                }
            }
            put_matrix(&mut out, format!("enc{i}.ffn.w1"), &l.ffn.l1.w);
            put_vector(&mut out, format!("enc{i}.ffn.b1"), &l.ffn.l1.b);
            put_matrix(&mut out, format!("enc{i}.ffn.w2"), &l.ffn.l2.w);
            put_vector(&mut out, format!("enc{i}.ffn.b2"), &l.ffn.l2.b);
        }
        put_vector(&mut out, "overlap.w3".into(), &self.overlap_w3);
        put_vector(&mut out, "overlap.b3".into(), &DVector::from_element(1, self.overlap_b3));
        if let Some((w, b)) = &self.overlap_dense {
            put_vector(&mut out, "overlap.dense.w".into(), w);
            put_vector(&mut out, "overlap.dense.b".into(), &DVector::from_element(1, *b));
        }
        put_matrix(&mut out, "dec.w1".into(), &self.dec1.w);
        put_vector(&mut out, "dec.b1".into(), &self.dec1.b);
        put_matrix(&mut out, "dec.w2".into(), &self.dec2.w);
        put_vector(&mut out, "dec.b2".into(), &self.dec2.b);
        out
    }

    /// Uniform Glorot-style initialization; untrained, for plumbing and benchmarks.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, input: usize, d: usize, heads: usize, depth: usize) -> Self {
        let mut mat = |r: usize, c: usize| {
            let a = (6.0 / (r + c) as f64).sqrt();
            DMatrix::from_fn(r, c, |_, _| rng.random_range(-a..a))
        };
        let proj = Linear::new(mat(input, d), DVector::zeros(d)).unwrap();
        let layers = (0..depth)
            .map(|_| EncoderLayer {
                self_attn: AttentionWeights {
                    q: mat(d, d),
                    k: mat(d, d),
                    v: mat(d, d),
                    o: mat(d, d),
                },
                cross_attn: AttentionWeights {
                    q: mat(d, d),
                    k: mat(d, d),
                    v: mat(d, d),
                    o: mat(d, d),
                },
                ffn: FeedForward {
                    l1: Linear::new(mat(d, 2 * d), DVector::zeros(2 * d)).unwrap(),
                    l2: Linear::new(mat(2 * d, d), DVector::zeros(d)).unwrap(),
                },
            })
            .collect();
        let overlap_w3 = mat(d, 1).column(0).into_owned();
        let dense = mat(d, 1).column(0).into_owned();
        Self {
            heads,
            proj,
            layers,
            overlap_w3,
            overlap_b3: 0.0,
            overlap_dense: Some((dense, 0.0)),
            dec1: Linear::new(mat(d + 3, d), DVector::zeros(d)).unwrap(),
            dec2: Linear::new(mat(d, 3), DVector::zeros(3)).unwrap(),
        }
    }
}

/// One cloud's inputs: dense points, keypoints and per-keypoint backbone features.
#[derive(Debug, Clone, Copy)]
pub struct CloudInput<'a> {
    pub dense: &'a [Vec3],
    pub keypoints: &'a [Vec3],
    pub features: &'a DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudOutput {
    /// Conditioned keypoint features.
    pub key_features: DMatrix<f64>,
    pub key_scores: Vec<f64>,
    pub dense: DenseConditioned,
    /// Dense overlap scores after refinement.
    pub scores: Vec<f64>,
    pub coordinates: DMatrix<f64>,
}

/// Projection, positional encoding, cross encoder, overlap head, decoder and coordinate head.
pub fn network_forward(w: &NetworkWeights, x: CloudInput, y: CloudInput) -> Result<(CloudOutput, CloudOutput)> {
    w.validate()?;
    let d = w.width();
    let fx = w.proj.forward(x.features)?;
    let fy = w.proj.forward(y.features)?;
    let ex = positional_encoding(x.keypoints, d)?;
    let ey = positional_encoding(y.keypoints, d)?;
    let (cx, cy) = cross_encoder_forward(&fx, &fy, &ex, &ey, &w.layers, w.heads)?;
    let finish = |input: CloudInput, c: DMatrix<f64>| -> Result<CloudOutput> {
        let key_scores = overlap_head(&c, &w.overlap_w3, w.overlap_b3)?;
        let dense = point_to_node_decode(input.dense, input.keypoints, &c, &key_scores)?;
        let scores = match &w.overlap_dense {
            Some((wd, bd)) => overlap_head(&dense.features, wd, *bd)?,
            None => dense.scores.clone(),
        };
        let coordinates = coordinate_mlp(&dense.augmented, &w.dec1, &w.dec2)?;
        Ok(CloudOutput {
            key_features: c,
            key_scores,
            dense,
            scores,
            coordinates,
        })
    };
    Ok((finish(x, cx)?, finish(y, cy)?))
}
