//! Entanglements per second of a physical path over a coherence-time sweep.
//!
//! ```text
//! cargo run -p qswap --example estimate_throughput --release
//! ```

use qswap::estimator::{
    estimate_path_throughput, link_rates, round_trip_time, HardwareProfile, PhysicalLink, TimingParams,
};
use qswap::{Error, EvalMode};

fn main() -> qswap::Result<()> {
    let hw = HardwareProfile::default();
    let links = vec![
        PhysicalLink::new(40.0, 6),
        PhysicalLink::new(25.0, 6),
        PhysicalLink::new(55.0, 6),
        PhysicalLink::new(30.0, 6),
    ];
    for (i, link) in links.iter().enumerate() {
        let (a, r) = link_rates(link, &hw);
        println!("link {}: {:>5} km  {:>9.1} attempts/s  success {:.4}", i + 1, link.length_km, a, r);
    }
    println!("round trip {:.2} ms\n", round_trip_time(&links, &hw) * 1e3);

    println!("{:>10} {:>10} {:>12}  order", "coherence", "slot", "ent/s");
    for t in [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1] {
        let timing = TimingParams::with_coherence(t)?;
        match estimate_path_throughput(&links, &[0.5; 3], &hw, &timing, EvalMode::Hybrid { epsilon: 1e-5 }) {
            Ok(est) => println!("{:>8} ms {:>7.2} ms {:>12.2}  {}", t * 1e3, est.slot_s * 1e3, est.ent_per_s, est.order),
            Err(Error::SlotNonpositive { slot_s }) => {
                println!("{:>8} ms  slot {:.2} ms: coherence shorter than the round trip", t * 1e3, slot_s * 1e3)
            }
            Err(e) => return Err(e),
        }
    }

    // Measured rates bypass the hardware model entirely.
    let measured = [PhysicalLink::measured(10.0, 1000.0, 0.004), PhysicalLink::measured(10.0, 3000.0, 0.03)];
    let est = estimate_path_throughput(&measured, &[0.5], &hw, &TimingParams::with_coherence(0.02)?, EvalMode::Exact)?;
    println!("\nmeasured two-link path: slot {} s, {:.4} ent/s", est.slot_s, est.ent_per_s);
    Ok(())
}
