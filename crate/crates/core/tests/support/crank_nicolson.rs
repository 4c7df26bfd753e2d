//! Crank-Nicolson reference solver for i psi_t = -psi_xx + V psi on [0, L]
//! with psi(0) = psi(L) = 0. The shell is a top-hat of area lambda / a one
//! cell wide, centred on the node at x = a; an absorbing layer near L removes
//! the escaped wave. Four backward-Euler half steps start the run so the
//! kink of the initial state does not leave undamped grid-scale modes.

use num_complex::Complex64;

/// LU factors of 1 + i theta dt H for the tridiagonal H.
struct Factor {
    theta: f64,
    dt: f64,
    c_prime: Vec<Complex64>,
    denom: Vec<Complex64>,
    e: Complex64,
}

impl Factor {
    fn new(diag: &[Complex64], off: Complex64, theta: f64, dt: f64) -> Self {
        let n = diag.len();
        let i = Complex64::i();
        let e = i * theta * dt * off;
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let b = 1.0 + i * theta * dt * diag[j];
            denom[j] = if j == 0 { b } else { b - e * c_prime[j - 1] };
            c_prime[j] = e / denom[j];
        }
        Self {
            theta,
            dt,
            c_prime,
            denom,
            e,
        }
    }
}

pub struct CrankNicolson {
    pub h: f64,
    pub dt: f64,
    pub time: f64,
    psi: Vec<Complex64>,
    diag: Vec<Complex64>,
    off: Complex64,
    cn: Factor,
    euler: Factor,
    started: bool,
}

impl CrankNicolson {
    /// Interior nodes x_j = j h, j = 1..n; `psi0` sampled there.
    pub fn new(
        lambda: f64,
        a: f64,
        length: f64,
        h: f64,
        dt: f64,
        absorber: f64,
        psi0: impl Fn(f64) -> f64,
    ) -> Self {
        let n = (length / h).round() as usize - 1;
        let i = Complex64::i();
        let width = h;
        let start = length - absorber;
        let diag: Vec<Complex64> = (1..=n)
            .map(|j| {
                let x = j as f64 * h;
                // top-hat of area lambda/a, sampled by cell overlap
                let overlap = ((x + h / 2.0).min(a + width / 2.0)
                    - (x - h / 2.0).max(a - width / 2.0))
                .max(0.0);
                let mut v = Complex64::new(lambda / a / width * overlap / h, 0.0);
                if x > start {
                    let s = (x - start) / absorber;
                    v -= i * 200.0 * s * s;
                }
                2.0 / (h * h) + v
            })
            .collect();
        let off = Complex64::new(-1.0 / (h * h), 0.0);
        let cn = Factor::new(&diag, off, 0.5, dt);
        let euler = Factor::new(&diag, off, 1.0, 0.5 * dt);
        let psi = (1..=n)
            .map(|j| Complex64::new(psi0(j as f64 * h), 0.0))
            .collect();
        Self {
            h,
            dt,
            time: 0.0,
            psi,
            diag,
            off,
            cn,
            euler,
            started: false,
        }
    }

    fn apply(&mut self, which: bool) {
        let f = if which { &self.euler } else { &self.cn };
        let n = self.psi.len();
        let hd = Complex64::i() * (1.0 - f.theta) * f.dt;
        let p = &self.psi;
        let zero = Complex64::new(0.0, 0.0);
        let mut d = vec![zero; n];
        for j in 0..n {
            let left = if j > 0 { p[j - 1] } else { zero };
            let right = if j + 1 < n { p[j + 1] } else { zero };
            d[j] = p[j] - hd * (self.diag[j] * p[j] + self.off * (left + right));
        }
        d[0] /= f.denom[0];
        for j in 1..n {
            d[j] = (d[j] - f.e * d[j - 1]) / f.denom[j];
        }
        for j in (0..n - 1).rev() {
            let next = d[j + 1];
            d[j] -= f.c_prime[j] * next;
        }
        self.psi = d;
    }

    /// One step of size dt (the first two are four Euler half steps).
    pub fn step(&mut self) {
        if !self.started {
            for _ in 0..4 {
                self.apply(true);
            }
            self.started = true;
            self.time += 2.0 * self.dt;
            return;
        }
        self.apply(false);
        self.time += self.dt;
    }

    /// Steps until `t`, which should be a multiple of dt.
    pub fn advance_to(&mut self, t: f64) {
        while self.time < t - 0.5 * self.dt {
            self.step();
        }
    }

    /// psi at x = j h.
    pub fn at_node(&self, j: usize) -> Complex64 {
        if j == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.psi[j - 1]
        }
    }
}
