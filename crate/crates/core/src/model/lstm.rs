//! Peephole LSTM cell used by both recurrent channels.
//!
//! Gate equations (element-wise sigma/tanh, diagonal peepholes `p_*`):
//!
//! ```text
//! i = sigma(W_i x + U_i h_prev + p_i . c_prev + b_i)
//! f = sigma(W_f x + U_f h_prev + p_f . c_prev + b_f)
//! g = tanh (W_c x + U_c h_prev + b_c)
//! c = f . c_prev + i . g
//! o = sigma(W_o x + U_o h_prev + p_o . c + b_o)
//! h = o . tanh(c)
//! ```
//!
//! The backward pass is exact, including both peephole paths (`c_prev` into
//! the input/forget gates, `c` into the output gate).

use serde::{Deserialize, Serialize};

use crate::linalg::Mat;
use crate::{Error, Result};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// All learnable tensors of one LSTM: per gate a D-input matrix, an H-state
/// matrix, a diagonal peephole (cell candidate has none), and a bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub w_i: Mat,
    pub u_i: Mat,
    pub p_i: Vec<f64>,
    pub b_i: Vec<f64>,
    pub w_f: Mat,
    pub u_f: Mat,
    pub p_f: Vec<f64>,
    pub b_f: Vec<f64>,
    pub w_c: Mat,
    pub u_c: Mat,
    pub b_c: Vec<f64>,
    pub w_o: Mat,
    pub u_o: Mat,
    pub p_o: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || Mat::zeros(hidden_dim, input_dim);
        let u = || Mat::zeros(hidden_dim, hidden_dim);
        let v = || vec![0.0; hidden_dim];
        LstmParams {
            w_i: w(),
            u_i: u(),
            p_i: v(),
            b_i: v(),
            w_f: w(),
            u_f: u(),
            p_f: v(),
            b_f: v(),
            w_c: w(),
            u_c: u(),
            b_c: v(),
            w_o: w(),
            u_o: u(),
            p_o: v(),
            b_o: v(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_i.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_i.rows()
    }

    /// All tensors in a fixed order, as flat slices.
    pub fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.w_i.data(),
            self.u_i.data(),
            &self.p_i,
            &self.b_i,
            self.w_f.data(),
            self.u_f.data(),
            &self.p_f,
            &self.b_f,
            self.w_c.data(),
            self.u_c.data(),
            &self.b_c,
            self.w_o.data(),
            self.u_o.data(),
            &self.p_o,
            &self.b_o,
        ]
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_i.data_mut(),
            self.u_i.data_mut(),
            &mut self.p_i,
            &mut self.b_i,
            self.w_f.data_mut(),
            self.u_f.data_mut(),
            &mut self.p_f,
            &mut self.b_f,
            self.w_c.data_mut(),
            self.u_c.data_mut(),
            &mut self.b_c,
            self.w_o.data_mut(),
            self.u_o.data_mut(),
            &mut self.p_o,
            &mut self.b_o,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_dim();
        let d = self.input_dim();
        let mats = [
            (&self.w_i, h, d),
            (&self.u_i, h, h),
            (&self.w_f, h, d),
            (&self.u_f, h, h),
            (&self.w_c, h, d),
            (&self.u_c, h, h),
            (&self.w_o, h, d),
            (&self.u_o, h, h),
        ];
        for (m, r, c) in mats {
            if m.rows() != r || m.cols() != c {
                return Err(Error::Shape(format!(
                    "lstm tensor is {}x{}, expected {r}x{c}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        for v in [&self.p_i, &self.b_i, &self.p_f, &self.b_f, &self.b_c, &self.p_o, &self.b_o] {
            if v.len() != h {
                return Err(Error::Shape(format!("lstm vector has {} entries, expected {h}", v.len())));
            }
        }
        if self.slices().iter().any(|s| s.iter().any(|x| !x.is_finite())) {
            return Err(Error::Data("lstm parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Cached activations of one step, enough for an exact backward pass.
#[derive(Clone, Debug)]
pub struct LstmStep {
    pub x: Vec<f64>,
    pub hidden_prev: Vec<f64>,
    pub cell_prev: Vec<f64>,
    pub gate_in: Vec<f64>,
    pub gate_forget: Vec<f64>,
    pub candidate: Vec<f64>,
    pub gate_out: Vec<f64>,
    pub cell: Vec<f64>,
    pub tanh_cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// One forward step. `h_prev`/`c_prev` are the previous hidden and cell
/// state (zeros at the sequence start).
pub fn lstm_step(
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<LstmStep> {
    let h = params.hidden_dim();
    if x.len() != params.input_dim() || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::Shape(format!(
            "lstm_step got x={}, h={}, c={}; expected x={}, h={h}, c={h}",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            params.input_dim()
        )));
    }

    let pre = |w: &Mat, u: &Mat, p: Option<&[f64]>, pv: &[f64], b: &[f64]| -> Vec<f64> {
        let mut a = b.to_vec();
        w.matvec_add(x, &mut a);
        u.matvec_add(h_prev, &mut a);
        if let Some(peep) = p {
            for k in 0..h {
                a[k] += peep[k] * pv[k];
            }
        }
        a
    };

    let gate_in: Vec<f64> =
        pre(&params.w_i, &params.u_i, Some(&params.p_i), c_prev, &params.b_i)
            .into_iter()
            .map(sigmoid)
            .collect();
    let gate_forget: Vec<f64> =
        pre(&params.w_f, &params.u_f, Some(&params.p_f), c_prev, &params.b_f)
            .into_iter()
            .map(sigmoid)
            .collect();
    let candidate: Vec<f64> = pre(&params.w_c, &params.u_c, None, c_prev, &params.b_c)
        .into_iter()
        .map(f64::tanh)
        .collect();

    let mut cell = vec![0.0; h];
    for k in 0..h {
        cell[k] = gate_forget[k] * c_prev[k] + gate_in[k] * candidate[k];
    }

    let gate_out: Vec<f64> = pre(&params.w_o, &params.u_o, Some(&params.p_o), &cell, &params.b_o)
        .into_iter()
        .map(sigmoid)
        .collect();

    let tanh_cell: Vec<f64> = cell.iter().map(|v| v.tanh()).collect();
    let mut hidden = vec![0.0; h];
    for k in 0..h {
        hidden[k] = gate_out[k] * tanh_cell[k];
    }

    Ok(LstmStep {
        x: x.to_vec(),
        hidden_prev: h_prev.to_vec(),
        cell_prev: c_prev.to_vec(),
        gate_in,
        gate_forget,
        candidate,
        gate_out,
        cell,
        tanh_cell,
        hidden,
    })
}

/// Backward through one step. `d_hidden`/`d_cell` are the gradients flowing
/// into this step's outputs; parameter gradients accumulate into `grads`.
/// Returns `(d_x, d_hidden_prev, d_cell_prev)`.
pub fn lstm_backward(
    params: &LstmParams,
    step: &LstmStep,
    d_hidden: &[f64],
    d_cell: &[f64],
    grads: &mut LstmParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = params.hidden_dim();
    let d = params.input_dim();

    let mut da_o = vec![0.0; h];
    for k in 0..h {
        let do_k = d_hidden[k] * step.tanh_cell[k];
        da_o[k] = do_k * step.gate_out[k] * (1.0 - step.gate_out[k]);
    }

    // Cell gradient: through h = o . tanh(c), the carried d_cell, and the
    // output-gate peephole on c.
    let mut dc = vec![0.0; h];
    for k in 0..h {
        dc[k] = d_hidden[k] * step.gate_out[k] * (1.0 - step.tanh_cell[k] * step.tanh_cell[k])
            + d_cell[k]
            + params.p_o[k] * da_o[k];
    }

    let mut da_i = vec![0.0; h];
    let mut da_f = vec![0.0; h];
    let mut da_g = vec![0.0; h];
    for k in 0..h {
        let di = dc[k] * step.candidate[k];
        da_i[k] = di * step.gate_in[k] * (1.0 - step.gate_in[k]);
        let df = dc[k] * step.cell_prev[k];
        da_f[k] = df * step.gate_forget[k] * (1.0 - step.gate_forget[k]);
        let dg = dc[k] * step.gate_in[k];
        da_g[k] = dg * (1.0 - step.candidate[k] * step.candidate[k]);
    }

    grads.w_i.add_outer(&da_i, &step.x);
    grads.u_i.add_outer(&da_i, &step.hidden_prev);
    grads.w_f.add_outer(&da_f, &step.x);
    grads.u_f.add_outer(&da_f, &step.hidden_prev);
    grads.w_c.add_outer(&da_g, &step.x);
    grads.u_c.add_outer(&da_g, &step.hidden_prev);
    grads.w_o.add_outer(&da_o, &step.x);
    grads.u_o.add_outer(&da_o, &step.hidden_prev);
    for k in 0..h {
        grads.p_i[k] += da_i[k] * step.cell_prev[k];
        grads.p_f[k] += da_f[k] * step.cell_prev[k];
        grads.p_o[k] += da_o[k] * step.cell[k];
        grads.b_i[k] += da_i[k];
        grads.b_f[k] += da_f[k];
        grads.b_c[k] += da_g[k];
        grads.b_o[k] += da_o[k];
    }

    let mut dx = vec![0.0; d];
    params.w_i.tr_matvec_add(&da_i, &mut dx);
    params.w_f.tr_matvec_add(&da_f, &mut dx);
    params.w_c.tr_matvec_add(&da_g, &mut dx);
    params.w_o.tr_matvec_add(&da_o, &mut dx);

    let mut dh_prev = vec![0.0; h];
    params.u_i.tr_matvec_add(&da_i, &mut dh_prev);
    params.u_f.tr_matvec_add(&da_f, &mut dh_prev);
    params.u_c.tr_matvec_add(&da_g, &mut dh_prev);
    params.u_o.tr_matvec_add(&da_o, &mut dh_prev);

    let mut dc_prev = vec![0.0; h];
    for k in 0..h {
        dc_prev[k] = dc[k] * step.gate_forget[k] + params.p_i[k] * da_i[k] + params.p_f[k] * da_f[k];
    }

    (dx, dh_prev, dc_prev)
}

/// Runs a whole input sequence from zero state, returning per-step caches.
pub fn lstm_run(params: &LstmParams, inputs: &[Vec<f64>]) -> Result<Vec<LstmStep>> {
    let h = params.hidden_dim();
    let mut steps = Vec::with_capacity(inputs.len());
    let mut hidden = vec![0.0; h];
    let mut cell = vec![0.0; h];
    for x in inputs {
        let step = lstm_step(params, x, &hidden, &cell)?;
        hidden = step.hidden.clone();
        cell = step.cell.clone();
        steps.push(step);
    }
    Ok(steps)
}

/// Backward over a whole sequence: `d_hidden[i]` is the external gradient on
/// step i's hidden state. Returns the gradient on each step's input.
pub fn lstm_run_backward(
    params: &LstmParams,
    steps: &[LstmStep],
    d_hidden: &[Vec<f64>],
    grads: &mut LstmParams,
) -> Vec<Vec<f64>> {
    debug_assert_eq!(steps.len(), d_hidden.len());
    let h = params.hidden_dim();
    let mut dxs = vec![Vec::new(); steps.len()];
    let mut dh_chain = vec![0.0; h];
    let mut dc_chain = vec![0.0; h];
    for i in (0..steps.len()).rev() {
        let mut dh = d_hidden[i].clone();
        for k in 0..h {
            dh[k] += dh_chain[k];
        }
        let (dx, dh_prev, dc_prev) = lstm_backward(params, &steps[i], &dh, &dc_chain, grads);
        dxs[i] = dx;
        dh_chain = dh_prev;
        dc_chain = dc_prev;
    }
    dxs
}
