use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Paths per batch. Batches, not workers, own the random streams, so a
/// result depends only on the seed and never on the thread count.
pub const BATCH_SIZE: usize = 4096;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for (`seed`, `tag`, `batch`). `tag` separates the
/// different simulations run from one user seed.
pub fn stream(seed: u64, tag: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(tag.wrapping_add(1))));
    rng.set_stream(batch);
    rng
}

/// Runs `job(batch_index, batch_len, rng)` over all batches covering
/// `paths`, on at most `workers` threads, and returns the per-batch results
/// in batch order.
pub fn run_batches<A, F>(paths: usize, seed: u64, tag: u64, workers: usize, job: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize, usize, &mut ChaCha8Rng) -> A + Sync,
{
    let batches = paths.div_ceil(BATCH_SIZE);
    let one = |b: usize| {
        let len = BATCH_SIZE.min(paths - b * BATCH_SIZE);
        let mut rng = stream(seed, tag, b as u64);
        job(b, len, &mut rng)
    };
    if workers <= 1 || batches <= 1 {
        return (0..batches).map(one).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..batches).into_par_iter().map(one).collect()),
        Err(_) => (0..batches).map(one).collect(),
    }
}

/// Running sums for `width` per-path outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl Moments {
    pub fn new(width: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; width],
            sum_sq: vec![0.0; width],
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.n += 1;
        for (k, v) in row.iter().enumerate() {
            self.sum[k] += v;
            self.sum_sq[k] += v * v;
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.sum[k] / self.n as f64
    }

    pub fn variance(&self, k: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum[k] / n;
        ((self.sum_sq[k] - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self, k: usize) -> f64 {
        (self.variance(k) / self.n as f64).sqrt()
    }
}

/// Simulates `paths` paths, each writing `width` outputs through `path`,
/// and reduces them in a fixed order.
pub fn run_paths<F>(
    paths: usize,
    seed: u64,
    tag: u64,
    workers: usize,
    width: usize,
    path: F,
) -> Moments
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let parts = run_batches(paths, seed, tag, workers, |_, len, rng| {
        let mut m = Moments::new(width);
        let mut row = vec![0.0; width];
        for _ in 0..len {
            row.iter_mut().for_each(|v| *v = 0.0);
            path(rng, &mut row);
            m.push(&row);
        }
        m
    });
    let mut total = Moments::new(width);
    for p in &parts {
        total.merge(p);
    }
    total
}
