use hdx_core::gf::FieldSpec;
use hdx_core::walks::{self, LambdaOptions, WalkRestriction};
use std::time::Instant;

fn main() {
    let f16 = FieldSpec::new(4).unwrap();
    let t0 = Instant::now();
    let w = walks::matrix_walk_updown(&f16, 2, WalkRestriction::None).unwrap();
    println!("build: {:?} states={} upper={}", t0.elapsed(), w.states.len(), w.upper.len());
    let t1 = Instant::now();
    let mut x = vec![1.0f64; w.op.n];
    let mut y = vec![0.0f64; w.op.n];
    let mut s = Vec::new();
    for _ in 0..10 {
        w.op.apply(&x, &mut y, &mut s);
        std::mem::swap(&mut x, &mut y);
    }
    println!("10 applies: {:?}", t1.elapsed());
    let t2 = Instant::now();
    let opts = LambdaOptions::default();
    let rep = walks::lambda(&w.op, &opts).unwrap();
    println!("lambda: {:?} -> {} iters={} resid={:.2e}", t2.elapsed(), rep.lambda, rep.iterations, rep.residual);
}
