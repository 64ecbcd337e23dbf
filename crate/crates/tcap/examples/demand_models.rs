//! Energy-request distribution math: CDF, inverse CDF, and the quantile
//! integral E whose differences give the expected energy carried by a
//! population segment.
//!
//! Run with: cargo run --example demand_models

use tcap::demand::DemandDistribution;

fn main() {
    let uniform = DemandDistribution::uniform(0.0, 80.0).unwrap();
    // A fleet that mostly needs small top-ups but occasionally a full
    // charge: 80% of requests below 20 kWh.
    let skewed =
        DemandDistribution::piecewise_cdf(vec![(0.0, 0.0), (20.0, 0.8), (80.0, 1.0)]).unwrap();

    for (name, d) in [("uniform[0,80]", &uniform), ("skewed top-up", &skewed)] {
        println!("{name}: mean = {:.2} kWh", d.mean());
        println!("  t      G^-1(t)   E(t)");
        for t in [0.1, 0.25, 0.5, 0.8, 0.95, 1.0] {
            println!(
                "  {t:<6} {:>7.2} {:>7.2}",
                d.inverse_cdf(t).unwrap(),
                d.quantile_integral(t).unwrap()
            );
        }
        // expected energy of the top decile vs the bottom half
        println!(
            "  top decile carries {:.1} kWh/vehicle-share, bottom half {:.1}\n",
            d.segment_mean_energy(0.9, 1.0).unwrap(),
            d.segment_mean_energy(0.0, 0.5).unwrap()
        );
    }
}
