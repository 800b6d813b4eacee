//! Fully connected Q-network with rectifier hidden layers, its gradient for
//! a single selected output, RMSProp, and a binary weight format.
//!
//! Weights of a layer are stored `in x out` row-major so that a single
//! sample's forward pass is a sequence of contiguous axpy operations.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::{Float, NumCast};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SWQN";
const FORMAT_VERSION: u32 = 1;

/// Floating-point element type of a network.
pub trait Scalar:
    Float + LinalgScalar + ScalarOperand + std::fmt::Debug + Send + Sync + 'static
{
    const BYTES: usize;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const BYTES: usize = 4;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

impl Scalar for f64 {
    const BYTES: usize = 8;
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

fn cast<A: NumCast, B: NumCast>(x: A) -> B {
    NumCast::from(x).expect("finite numeric cast")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<F> {
    /// `in x out`.
    pub w: Array2<F>,
    pub b: Array1<F>,
}

impl<F: Scalar> Layer<F> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            w: Array2::zeros((inputs, outputs)),
            b: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }
}

/// Layer sizes of the Q-network: observation, `hidden` layers of width
/// `actions`, output of width `actions`.
pub fn q_network_sizes(obs_len: usize, actions: usize, hidden: usize) -> Vec<usize> {
    let mut sizes = vec![obs_len];
    sizes.extend(std::iter::repeat_n(actions, hidden));
    sizes.push(actions);
    sizes
}

/// Multilayer perceptron; rectifier on every layer but the last. Also used
/// as the container for gradients and optimizer state of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    pub layers: Vec<Layer<F>>,
}

/// Intermediate values of a batched forward pass.
struct Trace<F> {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Array2<F>>,
    output: Array2<F>,
}

impl<F: Scalar> Mlp<F> {
    pub fn zeros(sizes: &[usize]) -> Self {
        Mlp {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// Weights drawn from N(0, 1/fan_in), biases zero.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let std = 1.0 / (layer.inputs() as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            layer.w.iter_mut().for_each(|x| *x = cast(normal.sample(rng)));
        }
        net
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(|l| l.outputs()));
        s
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs())
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Visits every parameter in a fixed order: per layer, weights
    /// row-major then biases.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut F> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &F> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(l.b.iter()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|x| x.is_finite())
    }

    pub fn cast<G: Scalar>(&self) -> Mlp<G> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: l.w.mapv(cast),
                    b: l.b.mapv(cast),
                })
                .collect(),
        }
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_len() {
            return Err(Error::Shape {
                expected: self.input_len(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Q-values of one observation.
    pub fn forward(&self, x: &[F]) -> Result<Vec<F>> {
        self.check_input(x.len())?;
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut next = layer.b.to_vec();
            for (i, &xi) in current.iter().enumerate() {
                if xi == F::zero() {
                    continue;
                }
                let row = layer.w.row(i);
                let row = row.as_slice().expect("standard layout");
                for (y, &w) in next.iter_mut().zip(row) {
                    *y = *y + xi * w;
                }
            }
            if idx != last {
                next.iter_mut().for_each(|v| *v = v.max(F::zero()));
            }
            current = next;
        }
        Ok(current)
    }

    /// Q-values of a batch of observations, one per row.
    pub fn forward_batch(&self, x: ArrayView2<F>) -> Result<Array2<F>> {
        self.check_input(x.ncols())?;
        Ok(self.trace(x).output)
    }

    fn trace(&self, x: ArrayView2<F>) -> Trace<F> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.w);
            for mut row in z.rows_mut() {
                row.zip_mut_with(&layer.b, |v, &b| *v = *v + b);
            }
            if idx != last {
                z.mapv_inplace(|v| v.max(F::zero()));
            }
            inputs.push(current);
            current = z;
        }
        Trace {
            inputs,
            output: current,
        }
    }

    /// Gradient of `1/B * sum_b 1/2 (y_b - Q(x_b, a_b))^2`; only the
    /// selected output of each sample carries error. Returns the gradient
    /// and the mean squared residual before any update.
    pub fn batch_gradient(
        &self,
        x: ArrayView2<F>,
        actions: &[usize],
        targets: &[F],
    ) -> Result<(Mlp<F>, F)> {
        self.check_input(x.ncols())?;
        let batch = x.nrows();
        if actions.len() != batch || targets.len() != batch {
            return Err(Error::Shape {
                expected: batch,
                actual: actions.len().min(targets.len()),
            });
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= self.output_len()) {
            return Err(Error::ActionOutOfRange {
                index: a,
                count: self.output_len(),
            });
        }
        let trace = self.trace(x);
        let scale = F::one() / cast::<usize, F>(batch.max(1));
        let mut loss = F::zero();
        let deltas: Vec<F> = (0..batch)
            .map(|b| {
                let r = targets[b] - trace.output[[b, actions[b]]];
                loss = loss + r * r;
                -r * scale
            })
            .collect();
        loss = loss * scale;

        let mut grads = Mlp::zeros(&self.sizes());
        let last = self.layers.len() - 1;

        // Output layer: one nonzero error per row.
        let out_layer = &self.layers[last];
        let a_prev = &trace.inputs[last];
        {
            let g = &mut grads.layers[last];
            for b in 0..batch {
                let d = deltas[b];
                let a = actions[b];
                g.b[a] = g.b[a] + d;
                let mut col = g.w.column_mut(a);
                col.scaled_add(d, &a_prev.row(b));
            }
        }
        if last == 0 {
            return Ok((grads, loss));
        }
        let mut dz = Array2::<F>::zeros((batch, out_layer.inputs()));
        for b in 0..batch {
            let mut row = dz.row_mut(b);
            row.scaled_add(deltas[b], &out_layer.w.column(actions[b]));
        }

        for idx in (0..last).rev() {
            // Rectifier derivative: the layer's output is the next input.
            Zip::from(&mut dz)
                .and(&trace.inputs[idx + 1])
                .for_each(|d, &a| {
                    if a <= F::zero() {
                        *d = F::zero();
                    }
                });
            let g = &mut grads.layers[idx];
            g.w = trace.inputs[idx].t().dot(&dz);
            g.b = dz.sum_axis(Axis(0));
            if idx > 0 {
                dz = dz.dot(&self.layers[idx].w.t());
            }
        }
        Ok((grads, loss))
    }

    /// Gradient of `1/2 (y - Q(x, a))^2` for one sample.
    pub fn backward(&self, x: &[F], action: usize, target: F) -> Result<Mlp<F>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        self.batch_gradient(view, &[action], &[target]).map(|(g, _)| g)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + self.num_params() * F::BYTES);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(F::BYTES as u32).to_le_bytes());
        buf.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            buf.extend_from_slice(&(l.inputs() as u32).to_le_bytes());
            buf.extend_from_slice(&(l.outputs() as u32).to_le_bytes());
            l.w.iter().for_each(|&x| x.write_le(&mut buf));
            l.b.iter().for_each(|&x| x.write_le(&mut buf));
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let mut cursor = ByteCursor { bytes: &bytes, pos: 0 };
        if cursor.take(4)? != MAGIC {
            return Err(Error::WeightFormat("bad magic".into()));
        }
        let version = cursor.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::WeightFormat(format!("unsupported version {version}")));
        }
        let width = cursor.u32()? as usize;
        if width != 4 && width != 8 {
            return Err(Error::WeightFormat(format!("unsupported scalar width {width}")));
        }
        let count = cursor.u32()? as usize;
        if count == 0 {
            return Err(Error::WeightFormat("no layers".into()));
        }
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let inputs = cursor.u32()? as usize;
            let outputs = cursor.u32()? as usize;
            if let Some(prev) = layers.last().map(|l: &Layer<F>| l.outputs()) {
                if prev != inputs {
                    return Err(Error::WeightFormat("inconsistent layer sizes".into()));
                }
            }
            let mut read = |n: usize| -> Result<Vec<F>> {
                let raw = cursor.take(n * width)?;
                Ok(raw
                    .chunks_exact(width)
                    .map(|c| {
                        if width == 4 {
                            cast(f32::read_le(c))
                        } else {
                            cast(f64::read_le(c))
                        }
                    })
                    .collect())
            };
            let w = read(inputs * outputs)?;
            let b = read(outputs)?;
            layers.push(Layer {
                w: Array2::from_shape_vec((inputs, outputs), w).expect("sized"),
                b: Array1::from(b),
            });
        }
        if cursor.pos != bytes.len() {
            return Err(Error::WeightFormat("trailing bytes".into()));
        }
        Ok(Mlp { layers })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::WeightFormat("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

// Plain slice loops vectorize where a three-way Zip does not; the Zip only
// runs if some array is not in standard layout.
fn rmsprop_apply<F: Scalar, D: ndarray::Dimension>(
    p: &mut ndarray::Array<F, D>,
    acc: &mut ndarray::Array<F, D>,
    g: &ndarray::Array<F, D>,
    update: impl Fn(&mut F, &mut F, F),
) {
    if let (Some(ps), Some(accs), Some(gs)) = (p.as_slice_mut(), acc.as_slice_mut(), g.as_slice()) {
        for ((p, acc), &g) in ps.iter_mut().zip(accs).zip(gs) {
            update(p, acc, g);
        }
    } else {
        Zip::from(p).and(acc).and(g).for_each(|p, acc, &g| update(p, acc, g));
    }
}

/// RMSProp with a per-parameter mean-square accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp<F> {
    pub learning_rate: F,
    pub decay: F,
    pub epsilon: F,
    pub accumulator: Mlp<F>,
}

impl<F: Scalar> RmsProp<F> {
    pub fn new(sizes: &[usize], learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        RmsProp {
            learning_rate: cast(learning_rate),
            decay: cast(decay),
            epsilon: cast(epsilon),
            accumulator: Mlp::zeros(sizes),
        }
    }

    pub fn step(&mut self, params: &mut Mlp<F>, grads: &Mlp<F>) {
        let (lr, decay, eps) = (self.learning_rate, self.decay, self.epsilon);
        let keep = F::one() - decay;
        let update = |p: &mut F, acc: &mut F, g: F| {
            *acc = decay * *acc + keep * g * g;
            *p = *p - lr * g / (acc.sqrt() + eps);
        };
        for ((p, acc), g) in params
            .layers
            .iter_mut()
            .zip(&mut self.accumulator.layers)
            .zip(&grads.layers)
        {
            rmsprop_apply(&mut p.w, &mut acc.w, &g.w, update);
            rmsprop_apply(&mut p.b, &mut acc.b, &g.b, update);
        }
    }
}
