use crate::spin::Couplings;

/// A classical Zeeman configuration: one spin-1/2 state per site.
///
/// Spin 0 is the electron; nucleus `k` is spin `k + 1`. `true` means up
/// (m = +1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    spins: Vec<bool>,
    /// Σ_s A_s m_s over all nuclei.
    hyperfine_sum: f64,
}

impl Configuration {
    pub fn from_spins(spins: Vec<bool>, c: &Couplings) -> Self {
        Self::new(spins, c.a())
    }

    /// `a` holds the secular hyperfine constant of each nucleus.
    pub fn new(spins: Vec<bool>, a: &[f64]) -> Self {
        assert_eq!(spins.len(), a.len() + 1, "one state per spin expected");
        let mut conf = Self {
            spins,
            hyperfine_sum: 0.0,
        };
        conf.resync(a);
        conf
    }

    /// Basis index in the product basis: electron is the most significant
    /// factor and spin-up is the first state of each factor.
    pub fn basis_index(&self) -> usize {
        self.spins
            .iter()
            .fold(0usize, |acc, &up| (acc << 1) | usize::from(!up))
    }

    pub fn from_basis_index(index: usize, c: &Couplings) -> Self {
        let n = c.n_nuclei() + 1;
        let spins = (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 0).collect();
        Self::from_spins(spins, c)
    }

    pub fn n_spins(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[bool] {
        &self.spins
    }

    pub fn electron_up(&self) -> bool {
        self.spins[0]
    }

    pub fn nucleus_up(&self, k: usize) -> bool {
        self.spins[k + 1]
    }

    /// m_S = ±1/2.
    pub fn electron_m(&self) -> f64 {
        half(self.spins[0])
    }

    /// m_k = ±1/2.
    pub fn nucleus_m(&self, k: usize) -> f64 {
        half(self.spins[k + 1])
    }

    pub fn hyperfine_sum(&self) -> f64 {
        self.hyperfine_sum
    }

    /// Total magnetization Σ m over all spins.
    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&s| half(s)).sum()
    }

    pub fn flip_electron(&mut self) {
        self.spins[0] = !self.spins[0];
    }

    /// Flips nucleus `k`, whose secular hyperfine constant is `a_k`.
    pub fn flip_nucleus(&mut self, k: usize, a_k: f64) {
        let before = half(self.spins[k + 1]);
        self.spins[k + 1] = !self.spins[k + 1];
        self.hyperfine_sum -= 2.0 * a_k * before;
    }

    /// Recomputes the cached hyperfine sum from scratch.
    pub fn resync(&mut self, a: &[f64]) {
        self.hyperfine_sum = a
            .iter()
            .zip(&self.spins[1..])
            .map(|(a, &up)| a * half(up))
            .sum();
    }

    /// Antiparallel test used for flip-flop applicability.
    pub fn antiparallel(&self, spin_a: usize, spin_b: usize) -> bool {
        self.spins[spin_a] != self.spins[spin_b]
    }
}

fn half(up: bool) -> f64 {
    if up {
        0.5
    } else {
        -0.5
    }
}
