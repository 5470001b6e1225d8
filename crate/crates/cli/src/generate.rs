//! Seeded random scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::scenario::{MatrixData, Scenario};

/// Largest holdings row sum produced by the generator.
pub const MAX_HOLDING: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChargeMode {
    /// One rate `α = β = γ` drawn from `(0, 1]`.
    Equal,
    /// `α = β = γ` fixed.
    Fixed(f64),
    /// Three independent draws from `(0, 1]`.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOptions {
    pub n: usize,
    /// Probability that a given off-diagonal debt is present.
    pub density: f64,
    /// Cash is scaled by `1 - shock`.
    pub shock: f64,
    /// Upper end of the holdings row sums; 0 disables cross-holdings.
    pub max_holding: f64,
    pub charges: ChargeMode,
}

impl GenOptions {
    pub fn new(n: usize, density: f64, shock: f64) -> Self {
        Self {
            n,
            density,
            shock,
            max_holding: MAX_HOLDING,
            charges: ChargeMode::Equal,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CliError::Argument("n must be at least 1".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(CliError::Argument(format!(
                "density must lie in (0, 1], got {}",
                self.density
            )));
        }
        if !(0.0..=1.0).contains(&self.shock) {
            return Err(CliError::Argument(format!(
                "shock must lie in [0, 1], got {}",
                self.shock
            )));
        }
        if !(0.0..=MAX_HOLDING).contains(&self.max_holding) {
            return Err(CliError::Argument(format!(
                "holdings row sums must stay in [0, {MAX_HOLDING}], got {}",
                self.max_holding
            )));
        }
        if let ChargeMode::Fixed(rate) = self.charges {
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::Argument(format!(
                    "charge rate must lie in [0, 1], got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform on `(0, 1]`.
fn rate(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Debts uniform on `[0, 10]` with Bernoulli(`density`) sparsity and zero
/// diagonal, holdings rows drawn uniform and rescaled to a row sum drawn
/// from `[0, max_holding]`, cash uniform on `[0, 5]` times `1 - shock`.
/// The same seed always gives the same scenario.
pub fn gen_random_network(seed: u64, opts: &GenOptions) -> Result<Scenario> {
    opts.check()?;
    let n = opts.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (alpha, beta, gamma) = match opts.charges {
        ChargeMode::Equal => {
            let r = rate(&mut rng);
            (r, r, r)
        }
        ChargeMode::Fixed(r) => (r, r, r),
        ChargeMode::Independent => (rate(&mut rng), rate(&mut rng), rate(&mut rng)),
    };

    let mut liabilities = vec![vec![0.0; n]; n];
    for (i, row) in liabilities.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j && rng.gen_bool(opts.density) {
                *cell = rng.gen_range(0.0..=10.0);
            }
        }
    }

    let mut holdings = vec![vec![0.0; n]; n];
    if opts.max_holding > 0.0 {
        for (i, row) in holdings.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if i != j && rng.gen_bool(opts.density) {
                    *cell = rng.gen::<f64>();
                }
            }
            let sum: f64 = row.iter().sum();
            let target = rng.gen_range(0.0..=opts.max_holding);
            if sum > 0.0 {
                for cell in row.iter_mut() {
                    *cell *= target / sum;
                }
            }
        }
    }

    let cash = (0..n)
        .map(|_| rng.gen_range(0.0..=5.0) * (1.0 - opts.shock))
        .collect();

    Ok(Scenario {
        name: Some(format!("random-{seed}")),
        description: Some(format!(
            "n={n} density={} shock={}",
            opts.density, opts.shock
        )),
        seed: Some(seed),
        n,
        alpha,
        beta,
        gamma,
        cash,
        liabilities: MatrixData::Dense(liabilities),
        holdings: MatrixData::Dense(holdings),
    })
}
