use plexpand::bench::{reproduce_tables, RotationConfig};
use plexpand::newton::NewtonOptions;

fn main() {
    for noise in [false, true] {
        let t = reproduce_tables(&RotationConfig::with_noise(noise), &NewtonOptions::default());
        println!("noise = {noise}");
        print!("{}", t.to_markdown());
        println!("tangent: {} steps, {}; secant: {} steps, {}", t.tangent.steps(), t.tangent.status, t.secant.steps(), t.secant.status);
    }
}
