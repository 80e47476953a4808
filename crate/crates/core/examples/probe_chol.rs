use nalgebra::{Cholesky, DMatrix};
use std::time::Instant;

fn main() {
    let n = 72;
    let g = DMatrix::<f64>::from_fn(n, n, |i, j| ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5);
    let a = &g * g.transpose() + DMatrix::identity(n, n) * (n as f64);
    // Cholesky cost
    let t0 = Instant::now();
    let reps = 2000;
    let mut acc = 0.0;
    for _ in 0..reps {
        let chol = Cholesky::new(a.clone()).unwrap();
        acc += chol.l()[(n - 1, n - 1)];
    }
    println!("chol n=72: {:.1} us each (acc {acc:.3})", t0.elapsed().as_secs_f64() * 1e6 / reps as f64);
    // matrix scale-copy cost
    let t0 = Instant::now();
    for _ in 0..reps {
        let h = a.map(|v| 2.0 * v);
        acc += h[(0, 0)];
    }
    println!("map n=72: {:.1} us each", t0.elapsed().as_secs_f64() * 1e6 / reps as f64);
    // matvec
    let x = nalgebra::DVector::<f64>::from_element(n, 1.0);
    let t0 = Instant::now();
    for _ in 0..(reps * 10) {
        let y = &a * &x;
        acc += y[0];
    }
    println!("matvec n=72: {:.2} us each (acc {acc:.1})", t0.elapsed().as_secs_f64() * 1e6 / (reps * 10) as f64);
}
