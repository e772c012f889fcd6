use std::fmt;
use std::sync::Arc;

use crate::measures::{DiscreteMeasure, Grid1D};
use crate::{Error, Result};

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One piece of a piecewise-defined map, kept as human-readable metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPiece {
    pub lo: f64,
    pub hi: f64,
    pub formula: String,
}

/// A transport map on an interval of the real line.
#[derive(Clone)]
pub struct Map1D {
    name: String,
    domain: (f64, f64),
    eval: Evaluator,
    pieces: Vec<MapPiece>,
    notes: Vec<String>,
}

impl fmt::Debug for Map1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Map1D")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("pieces", &self.pieces)
            .field("notes", &self.notes)
            .finish()
    }
}

impl Map1D {
    pub fn new<F>(name: impl Into<String>, domain: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), domain, eval: Arc::new(f), pieces: Vec::new(), notes: Vec::new() }
    }

    pub fn identity(domain: (f64, f64)) -> Self {
        Self::new("identity", domain, |x| x).with_piece(domain.0, domain.1, "x")
    }

    pub fn with_piece(mut self, lo: f64, hi: f64, formula: impl Into<String>) -> Self {
        self.pieces.push(MapPiece { lo, hi, formula: formula.into() });
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn pieces(&self) -> &[MapPiece] {
        &self.pieces
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Map1D) -> Map1D {
        let (outer_f, inner_f) = (self.eval.clone(), inner.eval.clone());
        Map1D {
            name: format!("{} o {}", self.name, inner.name),
            domain: inner.domain,
            eval: Arc::new(move |x| outer_f(inner_f(x))),
            pieces: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// The `k`-fold iterate; `k = 0` is the identity.
    pub fn iterate(&self, k: usize) -> Map1D {
        let f = self.eval.clone();
        Map1D {
            name: if k == 1 { self.name.clone() } else { format!("{}^{k}", self.name) },
            domain: self.domain,
            eval: Arc::new(move |mut x| {
                for _ in 0..k {
                    x = f(x);
                }
                x
            }),
            pieces: if k == 1 { self.pieces.clone() } else { Vec::new() },
            notes: self.notes.clone(),
        }
    }

    /// `x, T(x), ..., T^{len-1}(x)`.
    pub fn orbit(&self, x: f64, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let mut y = x;
        for _ in 0..len {
            out.push(y);
            y = self.eval(y);
        }
        out
    }

    /// Image cell of every cell center.
    pub fn cell_map(&self, from: &Grid1D, to: &Grid1D) -> Vec<usize> {
        from.centers().iter().map(|&x| to.cell_of(self.eval(x))).collect()
    }

    /// Histogram of the image of `measure` on `target`. Each cell's mass is
    /// spread uniformly over the cell and represented by
    /// `samples_per_cell` evenly spaced points. Images outside the target
    /// interval are clamped into its end cells.
    pub fn pushforward(&self, measure: &DiscreteMeasure, target: &Grid1D, samples_per_cell: usize) -> Result<DiscreteMeasure> {
        if samples_per_cell == 0 {
            return Err(Error::InvalidArgument("samples_per_cell must be positive".into()));
        }
        let grid = measure.grid();
        let h = grid.width() / samples_per_cell as f64;
        let mut out = vec![0.0; target.len()];
        for (j, &w) in measure.weights().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let left = grid.lo() + j as f64 * grid.width();
            let share = w / samples_per_cell as f64;
            for s in 0..samples_per_cell {
                let y = self.eval(left + (s as f64 + 0.5) * h);
                if !y.is_finite() {
                    return Err(Error::InvalidArgument(format!("map {} produced {y}", self.name)));
                }
                out[target.cell_of(y)] += share;
            }
        }
        DiscreteMeasure::new(target.clone(), out)
    }

    /// Total variation between the pushforward of `base` and `target`.
    pub fn pushforward_tv(&self, base: &DiscreteMeasure, target: &DiscreteMeasure, samples_per_cell: usize) -> Result<f64> {
        let pushed = self.pushforward(base, target.grid(), samples_per_cell)?;
        Ok(pushed.total_variation(target))
    }
}
