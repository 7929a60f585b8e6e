/// Value, gradient and Hessian of a scalar function at one point.
///
/// `hess` is stored dense and row-major (`dim * dim`); every write goes
/// through [`Jet2::set_hess`], which mirrors the entry, so the matrix is
/// symmetric bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn zero(dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            value,
            ..Self::zero(dim)
        }
    }

    /// The coordinate function `x_axis` evaluated at `value`.
    pub fn variable(dim: usize, axis: usize, value: f64) -> Self {
        let mut jet = Self::constant(dim, value);
        jet.grad[axis] = 1.0;
        jet
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    #[inline]
    pub fn set_hess(&mut self, i: usize, j: usize, v: f64) {
        let d = self.dim();
        self.hess[i * d + j] = v;
        self.hess[j * d + i] = v;
    }

    pub fn add(&self, other: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + other.value,
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 {
            value: s * self.value,
            grad: self.grad.iter().map(|g| s * g).collect(),
            hess: self.hess.iter().map(|h| s * h).collect(),
        }
    }

    /// Product rule through second order.
    pub fn mul(&self, other: &Jet2) -> Jet2 {
        let d = self.dim();
        let mut out = Jet2::constant(d, self.value * other.value);
        for i in 0..d {
            out.grad[i] = self.grad[i] * other.value + self.value * other.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let v = self.hess(i, j) * other.value
                    + self.grad[i] * other.grad[j]
                    + self.grad[j] * other.grad[i]
                    + self.value * other.hess(i, j);
                out.set_hess(i, j, v);
            }
        }
        out
    }

    /// Chain rule for `f(self)` given `f`, `f'`, `f''` at `self.value`.
    pub fn compose(&self, f: f64, df: f64, d2f: f64) -> Jet2 {
        let d = self.dim();
        let mut out = Jet2::constant(d, f);
        for i in 0..d {
            out.grad[i] = df * self.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                out.set_hess(i, j, d2f * self.grad[i] * self.grad[j] + df * self.hess(i, j));
            }
        }
        out
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    /// Largest `|h_ij - h_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.hess(i, j) - self.hess(j, i)).abs());
            }
        }
        worst
    }
}

/// Which Hessian entries a jet computation carries.
///
/// Every first derivative is always present. Diagonal entries only need the
/// first derivatives of their own axis, so restricting the pair list is a
/// pure cost saving: the entries that are carried are exact either way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetShape {
    dim: usize,
    pairs: Vec<(usize, usize)>,
}

impl JetShape {
    pub fn full(dim: usize) -> Self {
        let pairs = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
        Self { dim, pairs }
    }

    /// Shape carrying only the listed `(i, j)` Hessian entries (order-free).
    pub fn with_pairs(dim: usize, pairs: &[(usize, usize)]) -> Self {
        let mut pairs: Vec<_> = pairs
            .iter()
            .map(|&(i, j)| (i.min(j), i.max(j)))
            .filter(|&(_, j)| j < dim)
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        Self { dim, pairs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Channels per point: value, `dim` first derivatives, carried pairs.
    pub fn channels(&self) -> usize {
        1 + self.dim + self.pairs.len()
    }

    pub(crate) fn write_channels(&self, jet: &Jet2, out: &mut [f64]) {
        out[0] = jet.value;
        out[1..=self.dim].copy_from_slice(&jet.grad);
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            out[1 + self.dim + p] = jet.hess(i, j);
        }
    }

    /// Inverse of `write_channels`; entries outside the shape are zero.
    pub(crate) fn read_channels(&self, channels: &[f64], jet: &mut Jet2) {
        jet.value = channels[0];
        jet.grad.copy_from_slice(&channels[1..=self.dim]);
        jet.hess.iter_mut().for_each(|h| *h = 0.0);
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            jet.set_hess(i, j, channels[1 + self.dim + p]);
        }
    }

    /// Adjoint read: a symmetric cotangent with off-diagonal mass split
    /// across `(i, j)` and `(j, i)` folds back onto one carried channel.
    pub(crate) fn read_adjoint(&self, jet: &Jet2, out: &mut [f64]) {
        out[0] = jet.value;
        out[1..=self.dim].copy_from_slice(&jet.grad);
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            out[1 + self.dim + p] = if i == j {
                jet.hess(i, i)
            } else {
                jet.hess[i * self.dim + j] + jet.hess[j * self.dim + i]
            };
        }
    }
}
