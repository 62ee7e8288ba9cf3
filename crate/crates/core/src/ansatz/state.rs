use ndarray::{s, Array1, Array2, ArrayView2, ArrayViewMut2};

use crate::C64;

/// Mode counts of the two baths. Each physical mode has a real and a tilde
/// partner, so the total displacement width is `K = 2 (N_l + N_r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModeLayout {
    pub n_left: usize,
    pub n_right: usize,
}

/// One of the four displacement blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    /// Left real modes `f`.
    F,
    /// Left tilde modes `f̃`.
    FTilde,
    /// Right real modes `g`.
    G,
    /// Right tilde modes `g̃`.
    GTilde,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::F, Block::FTilde, Block::G, Block::GTilde];

    pub fn is_tilde(self) -> bool {
        matches!(self, Block::FTilde | Block::GTilde)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::F => "f",
            Block::FTilde => "f_tilde",
            Block::G => "g",
            Block::GTilde => "g_tilde",
        }
    }

    pub fn from_name(name: &str) -> Option<Block> {
        Block::ALL.into_iter().find(|b| b.name() == name)
    }
}

impl ModeLayout {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        Self { n_left, n_right }
    }

    /// Total number of (real + tilde) modes.
    pub fn total(&self) -> usize {
        2 * (self.n_left + self.n_right)
    }

    /// Column range of a block on the flattened mode axis.
    pub fn range(&self, block: Block) -> std::ops::Range<usize> {
        let (l, r) = (self.n_left, self.n_right);
        match block {
            Block::F => 0..l,
            Block::FTilde => l..2 * l,
            Block::G => 2 * l..2 * l + r,
            Block::GTilde => 2 * l + r..2 * l + 2 * r,
        }
    }

    /// Block that owns flattened mode `k`.
    pub fn block_of(&self, k: usize) -> Block {
        Block::ALL.into_iter().find(|&b| self.range(b).contains(&k)).expect("mode index out of range")
    }
}

/// Variational parameters at one instant.
///
/// Displacements are stored contiguously as an `M × K` array `z` whose
/// column blocks are `f, f̃, g, g̃`; block views are available through
/// [`MD2State::block`].
#[derive(Clone, Debug, PartialEq)]
pub struct MD2State {
    pub a: Array1<C64>,
    pub b: Array1<C64>,
    pub z: Array2<C64>,
    pub layout: ModeLayout,
    pub time: f64,
}

impl MD2State {
    /// All-zero state of multiplicity `m`.
    pub fn zeros(m: usize, layout: ModeLayout) -> Self {
        Self {
            a: Array1::zeros(m),
            b: Array1::zeros(m),
            z: Array2::zeros((m, layout.total())),
            layout,
            time: 0.0,
        }
    }

    /// Multiplicity `M`.
    pub fn multiplicity(&self) -> usize {
        self.a.len()
    }

    /// Number of independent complex parameters `2M + M·K`.
    pub fn parameter_count(&self) -> usize {
        let m = self.multiplicity();
        2 * m + m * self.layout.total()
    }

    pub fn block(&self, block: Block) -> ArrayView2<'_, C64> {
        self.z.slice(s![.., self.layout.range(block)])
    }

    pub fn block_mut(&mut self, block: Block) -> ArrayViewMut2<'_, C64> {
        let r = self.layout.range(block);
        self.z.slice_mut(s![.., r])
    }

    pub fn f(&self) -> ArrayView2<'_, C64> {
        self.block(Block::F)
    }

    pub fn f_tilde(&self) -> ArrayView2<'_, C64> {
        self.block(Block::FTilde)
    }

    pub fn g(&self) -> ArrayView2<'_, C64> {
        self.block(Block::G)
    }

    pub fn g_tilde(&self) -> ArrayView2<'_, C64> {
        self.block(Block::GTilde)
    }

    /// Spinor of configuration `i` as `[A_i, B_i]`.
    pub fn spinor(&self, i: usize) -> [C64; 2] {
        [self.a[i], self.b[i]]
    }

    /// True when every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(self.b.iter()).chain(self.z.iter()).all(|v| v.re.is_finite() && v.im.is_finite())
            && self.time.is_finite()
    }

    /// Multiplies all amplitudes by `c` (displacements are untouched).
    pub fn scale_amplitudes(&mut self, c: C64) {
        self.a.mapv_inplace(|v| v * c);
        self.b.mapv_inplace(|v| v * c);
    }

    /// Largest displacement modulus within a block.
    pub fn max_displacement(&self, block: Block) -> f64 {
        self.block(block).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
