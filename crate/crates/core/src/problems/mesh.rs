use crate::{Error, Result};

/// Uniform time mesh `t_n = t0 + n * dt` with `dt = (t_end - t0) / slices`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    t0: f64,
    t_end: f64,
    slices: usize,
    dt: f64,
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(t0: f64, t_end: f64, slices: usize) -> Result<Self> {
        if slices == 0 {
            return Err(Error::InvalidProblem(
                "mesh needs at least one slice".into(),
            ));
        }
        if !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::NonFinite("mesh endpoints"));
        }
        if t_end <= t0 {
            return Err(Error::InvalidProblem(format!(
                "mesh end {t_end} must exceed start {t0}"
            )));
        }
        let dt = (t_end - t0) / slices as f64;
        let mut nodes: Vec<f64> = (0..=slices).map(|n| t0 + n as f64 * dt).collect();
        // pinned, not accumulated
        nodes[slices] = t_end;
        Ok(Self {
            t0,
            t_end,
            slices,
            dt,
            nodes,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of time slices `N`.
    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}
