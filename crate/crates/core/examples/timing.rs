use halfflow::flow::*;
use halfflow::grid::GridHalfLine;
use std::time::Instant;

fn main() {
    let mut params = FlowParams::new(1.0, 0.4, 0.8, 20.0).unwrap();
    params.steps = 128;
    let grid = GridHalfLine::default_for_mass(1.0).unwrap();
    let options = FlowOptions { snapshot_lambdas: vec![1.0], ..Default::default() };
    let t0 = Instant::now();
    let run = integrate_flow(&params, &grid, &options).unwrap();
    println!("integrate_flow (steps=128, grid=141, L0=20): {:.2?}", t0.elapsed());
    let t0 = Instant::now();
    let mut p2 = params.clone();
    p2.lambda0 = 160.0;
    p2.steps = 192;
    let _ = integrate_flow(&p2, &grid, &options).unwrap();
    println!("integrate_flow (steps=192, L0=160): {:.2?}", t0.elapsed());
    let _ = run;
}
