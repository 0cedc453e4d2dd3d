//! Scales the grid-following setpoints of the desk case and tracks the
//! Jacobian norm at each solution.

use hpf::cli::{sweep_rows, sweep_table};
use hpf::study::build_desk;

fn main() -> hpf::Result<()> {
    let factors = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0];
    let rows = sweep_rows(&build_desk(), &factors)?;
    print!("{}", sweep_table(&rows));
    Ok(())
}
