//! Wall time and bond dimensions of a short TDVP run at N = 12.
//! `cargo run --release --example mps_timing`

use nuspin::exact::EvolutionParams;
use nuspin::model::{parse_flavors, Basis, SystemSpec};
use nuspin::mps::{evolve_mps, MpsState, TdvpSettings};

fn main() {
    let spec = SystemSpec::with_defaults(parse_flavors("mmmeeeeeeeee").unwrap()).unwrap();
    let params = EvolutionParams { dt: 0.05, t_final: 1.0, snapshot_every: 5, ..Default::default() };
    let start = std::time::Instant::now();
    let init = MpsState::from_product(&spec, 64).unwrap();
    evolve_mps(init, &spec, &params, Basis::Flavor, &TdvpSettings::default(), |step, t, mps| {
        println!("step {step:>3}  t {t:.2}  bonds {:?}  {:.2?}", mps.bond_dims(), start.elapsed());
        Ok(())
    })
    .unwrap();
}
