/// Nesterov dual averaging of the log step size towards a target acceptance
/// statistic.
#[derive(Debug, Clone)]
pub struct DualAverage {
    log_step: f64,
    log_step_avg: f64,
    hbar: f64,
    mu: f64,
    count: u64,
    k: f64,
    t0: f64,
    gamma: f64,
}

impl DualAverage {
    pub fn new(initial_step: f64) -> Self {
        DualAverage {
            log_step: initial_step.ln(),
            log_step_avg: initial_step.ln(),
            hbar: 0.0,
            mu: (10.0 * initial_step).ln(),
            count: 1,
            k: 0.75,
            t0: 10.0,
            gamma: 0.05,
        }
    }

    pub fn advance(&mut self, accept_stat: f64, target: f64) {
        let w = 1.0 / (self.count as f64 + self.t0);
        self.hbar = (1.0 - w) * self.hbar + w * (target - accept_stat);
        self.log_step = self.mu - self.hbar * (self.count as f64).sqrt() / self.gamma;
        let mk = (self.count as f64).powf(-self.k);
        self.log_step_avg = mk * self.log_step + (1.0 - mk) * self.log_step_avg;
        self.count += 1;
    }

    pub fn step(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn adapted_step(&self) -> f64 {
        self.log_step_avg.exp()
    }
}

/// Welford accumulator for the diagonal of the inverse metric.
#[derive(Debug, Clone)]
pub struct VarianceWindow {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VarianceWindow {
    pub fn new(dim: usize) -> Self {
        VarianceWindow {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    /// Regularized variance estimate, shrunk towards `1e-3`.
    pub fn estimate(&self) -> Option<Vec<f64>> {
        if self.n < 3 {
            return None;
        }
        let n = self.n as f64;
        Some(
            self.m2
                .iter()
                .map(|s| {
                    let var = s / (n - 1.0);
                    (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
                })
                .collect(),
        )
    }

    pub fn reset(&mut self) {
        let dim = self.mean.len();
        *self = VarianceWindow::new(dim);
    }
}

/// Warmup phases: an initial fast interval for step size only, slow
/// windows of doubling length that also estimate the metric, and a final
/// fast interval.
#[derive(Debug, Clone)]
pub struct WarmupSchedule {
    init_buffer: usize,
    term_buffer: usize,
    window_ends: Vec<usize>,
}

impl WarmupSchedule {
    pub fn new(warmup: usize) -> Self {
        let (init_buffer, term_buffer, base) = if warmup >= 150 {
            (75, 50, 25)
        } else {
            let i = (warmup as f64 * 0.15) as usize;
            let t = (warmup as f64 * 0.1) as usize;
            (i, t, (warmup - i - t).max(1))
        };
        let slow_end = warmup.saturating_sub(term_buffer);
        let mut window_ends = Vec::new();
        let mut start = init_buffer;
        let mut size = base;
        while start < slow_end {
            let mut end = start + size;
            // Fold a too-short final window into its predecessor.
            if end + 2 * size > slow_end {
                end = slow_end;
            }
            window_ends.push(end);
            start = end;
            size *= 2;
        }
        WarmupSchedule {
            init_buffer,
            term_buffer,
            window_ends,
        }
    }

    pub fn in_slow_phase(&self, iter: usize) -> bool {
        iter >= self.init_buffer && self.window_ends.last().is_some_and(|&e| iter < e)
    }

    /// True when `iter` is the last iteration of a slow window.
    pub fn window_closes(&self, iter: usize) -> bool {
        self.window_ends.contains(&(iter + 1))
    }

    pub fn term_buffer(&self) -> usize {
        self.term_buffer
    }
}
