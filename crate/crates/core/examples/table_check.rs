//! Reduced-scale run that prints the averaged rejection percentages next to
//! the reference values the acceptance suite checks against.
//!
//! ```sh
//! cargo run --release -p srtail --example table_check [seed] [rounds]
//! ```

use srtail::inference::RowTag;
use srtail::mcsim::{run_simulation, Sidedness, SimConfig};
use srtail::Format;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let rounds: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let config = SimConfig {
        rounds,
        master_seed: seed,
        ..SimConfig::default()
    };
    let t0 = std::time::Instant::now();
    let report = run_simulation(&config).unwrap();
    let dt = t0.elapsed();

    let reference = [
        (RowTag::R, Format::Bn, 5.241, 5.168),
        (RowTag::R, Format::Lr, 5.241, 5.168),
        (RowTag::Rbar, Format::Bn, 4.807, 4.575),
        (RowTag::Rbar, Format::Lr, 4.807, 4.575),
        (RowTag::UBn, Format::Bn, 5.046, 4.760),
        (RowTag::UBn, Format::Lr, 5.046, 4.760),
        (RowTag::USev, Format::Bn, 5.018, 4.882),
        (RowTag::USev, Format::Lr, 5.017, 4.881),
        (RowTag::TMatch, Format::Bn, 4.615, 4.312),
        (RowTag::TMatch, Format::Lr, 4.613, 4.308),
        (RowTag::TUnif, Format::Bn, 11.017, 6.828),
        (RowTag::TUnif, Format::Lr, 11.274, 6.943),
        (RowTag::TbarMatch, Format::Bn, 4.883, 4.411),
        (RowTag::TbarMatch, Format::Lr, 4.878, 4.403),
        (RowTag::TbarUnif, Format::Bn, 11.723, 7.249),
        (RowTag::TbarUnif, Format::Lr, 12.190, 7.510),
    ];
    println!(
        "seed={seed} rounds={rounds} reps={} elapsed={dt:?}",
        config.reps_per_round
    );
    println!(
        "{:<12}{:<4}{:>9}{:>9}{:>8}{:>9}{:>9}{:>8}",
        "row", "fmt", "one", "ref", "dev", "two", "ref", "dev"
    );
    for (row, format, ref_one, ref_two) in reference {
        let one = report.averages[&(row, format, Sidedness::One)];
        let two = report.averages[&(row, format, Sidedness::Two)];
        println!(
            "{:<12}{:<4}{:>9.3}{:>9.3}{:>8.3}{:>9.3}{:>9.3}{:>8.3}",
            row.as_str(),
            format.as_str(),
            one,
            ref_one,
            one - ref_one,
            two,
            ref_two,
            two - ref_two
        );
    }
    println!(
        "fallback_total={} singularity_total={}",
        report.fallback_total, report.singularity_total
    );
    for (key, se) in &report.std_errors {
        if key.1 == Format::Bn && key.2 == Sidedness::One {
            println!("SE {:?} {:.4}", key.0, se);
        }
    }
}
