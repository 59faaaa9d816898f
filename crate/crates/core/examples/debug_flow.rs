use halfflow::flow::*;
use halfflow::grid::GridHalfLine;
use halfflow::heatkernel::halfline_kernel;
use halfflow::quad::adaptive_gk;

fn main() {
    let mut params = FlowParams::new(1.0, 0.4, 0.8, 20.0).unwrap();
    params.steps = 64;
    let grid = GridHalfLine::new(12.0, 10, 1.3).unwrap();
    let options = FlowOptions { snapshot_lambdas: vec![1.0], ..Default::default() };
    let run = integrate_flow(&params, &grid, &options).unwrap();
    let state = run.state_at(1.0).unwrap();
    println!("state lambda = {}", state.lambda);
    let a1 = state.kernel(1, 2).unwrap().terms[0].smooth.raw();
    let kind = params.boundary();
    for iz in [0usize, 20, 40] {
        let z = grid.nodes[iz];
        let (want, _) = adaptive_gk(
            |lp| {
                0.5 * params.coupling
                    * cdot_momentum_trace(params.m, lp)
                    * halfline_kernel(1.0 / (lp * lp), z, z, kind).unwrap()
            },
            params.lambda_min,
            state.lambda,
            1e-16,
            1e-12,
        ).unwrap();
        println!("a1[{iz}] = {:+.12e}  oracle = {:+.12e}  rel = {:.3e}",
            a1[iz], want, ((a1[iz]-want)/want).abs());
    }
    // halving comparison by hand
    let mut p2 = params.clone();
    p2.steps = 128;
    let run2 = integrate_flow(&p2, &grid, &options).unwrap();
    for (s1, s2) in run.states.iter().zip(&run2.states) {
        println!("state pair lambdas: {} vs {}", s1.lambda, s2.lambda);
        for (key, k1) in &s1.kernels {
            let k2 = &s2.kernels[key];
            for (ti, (t1, t2)) in k1.terms.iter().zip(&k2.terms).enumerate() {
                let r1 = t1.smooth.raw();
                let r2 = t2.smooth.raw();
                let scale = r2.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
                let mut dev = 0.0f64;
                for (a, b) in r1.iter().zip(r2) { dev = dev.max((a - b).abs() / scale); }
                if dev > 1e-9 {
                    println!("  ({},{}) term {} dev {:.3e} scale {:.3e}", key.0, key.1, ti, dev, scale);
                }
            }
        }
    }
}
