use rand::Rng;

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Fully connected network: rectifier hidden layers, linear output. All
/// parameters live in one flat vector; layer `l` stores its weights
/// row-major as `fan_in x fan_out`, followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    slots: Vec<Slot>,
}

/// Activations kept from a batched forward pass for the backward pass.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    batch: usize,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

fn layout(sizes: &[usize]) -> (Vec<Slot>, usize) {
    let mut slots = Vec::with_capacity(sizes.len().saturating_sub(1));
    let mut at = 0;
    for pair in sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        slots.push(Slot {
            w: at,
            b: at + fan_in * fan_out,
            fan_in,
            fan_out,
        });
        at += fan_in * fan_out + fan_out;
    }
    (slots, at)
}

/// `c = a * b + beta * c` for row-major `a` (m x k) and `b` (k x n), with
/// explicit strides so transposed views need no copy.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= (m - 1) * rsa + (k - 1) * csa + 1);
    debug_assert!(b.len() >= (k - 1) * rsb + (n - 1) * csb + 1);
    debug_assert!(c.len() >= m * n);
    // SAFETY: the asserted extents bound every index the kernel touches,
    // and `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Fan-in scaled uniform initialization (He), zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for s in net.slots.clone() {
            let bound = (6.0 / s.fan_in as f64).sqrt();
            for w in &mut net.params[s.w..s.b] {
                *w = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output layers");
        assert!(sizes.iter().all(|&s| s > 0), "layer widths must be positive");
        let (slots, n) = layout(sizes);
        Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
            slots,
        }
    }

    /// Rebuilds a network from its widths and flat parameters.
    pub fn from_parts(sizes: &[usize], params: Vec<f64>) -> Result<Self, LearnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(LearnError::Snapshot(format!("bad layer widths {sizes:?}")));
        }
        let (slots, n) = layout(sizes);
        if params.len() != n {
            return Err(LearnError::Snapshot(format!(
                "expected {n} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params,
            slots,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn copy_from(&mut self, other: &Mlp) {
        assert_eq!(self.sizes, other.sizes, "shape mismatch");
        self.params.copy_from_slice(&other.params);
    }

    /// Q-values for one state.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>, LearnError> {
        if state.len() != self.input_dim() {
            return Err(LearnError::DimensionMismatch {
                expected: self.input_dim(),
                got: state.len(),
            });
        }
        let mut ws = Workspace::default();
        Ok(self.forward_batch(state, 1, &mut ws).to_vec())
    }

    /// Forward pass over `batch` row-major inputs; returns the `batch x out`
    /// outputs, which stay valid in `ws` for [`Mlp::backward`].
    pub fn forward_batch<'w>(&self, x: &[f64], batch: usize, ws: &'w mut Workspace) -> &'w [f64] {
        assert_eq!(x.len(), batch * self.input_dim(), "input size mismatch");
        ws.batch = batch;
        ws.acts.resize_with(self.sizes.len(), Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(x);
        let last = self.slots.len() - 1;
        for (l, s) in self.slots.iter().enumerate() {
            let (before, after) = ws.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            out.clear();
            out.resize(batch * s.fan_out, 0.0);
            let bias = &self.params[s.b..s.b + s.fan_out];
            for row in out.chunks_exact_mut(s.fan_out) {
                row.copy_from_slice(bias);
            }
            gemm(
                batch,
                s.fan_in,
                s.fan_out,
                input,
                (s.fan_in, 1),
                &self.params[s.w..s.b],
                (s.fan_out, 1),
                1.0,
                out,
            );
            if l != last {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        &ws.acts[self.slots.len()]
    }

    /// Accumulates into `grad` the gradient of `sum(d_out .* output)` for the
    /// batch last passed through [`Mlp::forward_batch`] with `ws`.
    pub fn backward(&self, ws: &mut Workspace, d_out: &[f64], grad: &mut [f64]) {
        let batch = ws.batch;
        assert_eq!(d_out.len(), batch * self.output_dim());
        assert_eq!(grad.len(), self.params.len());
        ws.delta.clear();
        ws.delta.extend_from_slice(d_out);
        for l in (0..self.slots.len()).rev() {
            let s = self.slots[l];
            let input = &ws.acts[l];
            // dW += input^T * delta
            gemm(
                s.fan_in,
                batch,
                s.fan_out,
                input,
                (1, s.fan_in),
                &ws.delta,
                (s.fan_out, 1),
                1.0,
                &mut grad[s.w..s.b],
            );
            let gb = &mut grad[s.b..s.b + s.fan_out];
            for row in ws.delta.chunks_exact(s.fan_out) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev = (delta * W^T) .* relu'(input)
            ws.delta_prev.clear();
            ws.delta_prev.resize(batch * s.fan_in, 0.0);
            gemm(
                batch,
                s.fan_out,
                s.fan_in,
                &ws.delta,
                (s.fan_out, 1),
                &self.params[s.w..s.b],
                (1, s.fan_out),
                0.0,
                &mut ws.delta_prev,
            );
            for (d, a) in ws.delta_prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }

    /// Index of the largest output; ties go to the lowest index.
    pub fn argmax(values: &[f64]) -> usize {
        let mut best = 0;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = i;
            }
        }
        best
    }
}
