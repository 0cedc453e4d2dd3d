//! Builds the harmonic hybrid matrix of the desk network and shows the
//! grid-sorted to resource-sorted permutation.

use hpf::study::{build_desk, hybrid_matrix};

fn main() -> hpf::Result<()> {
    let case = build_desk();
    let topo = case.topology()?;
    let h = hybrid_matrix(&topo, case.harmonics(), case.bases.impedance())?;
    println!("forming nodes {:?}, following nodes {:?}", topo.forming, topo.following);
    println!("H_SS {}x{}, H_RR {}x{}", h.resource.ss.nrows(), h.resource.ss.ncols(), h.resource.rr.nrows(), h.resource.rr.ncols());
    let p = &h.permutations.p_r;
    for j in 0..6 {
        println!("grid-sorted index {j} -> resource-sorted {}", p.dest(j));
    }
    Ok(())
}
