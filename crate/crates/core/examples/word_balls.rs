//! Word-metric balls on the Cayley graph of Z² and on a thinner subgroup,
//! their growth, and the boundary defect of box windows.

use std::collections::BTreeMap;

use amenpois::group::{GroupSpec, MetricGroup};

fn main() -> amenpois::Result<()> {
    let z2 = MetricGroup::standard_lattice(2)?;
    let shells = z2.shell_table(8)?;
    println!("Z² word metric, |B_r| for r = 0..=8: {:?}", shells.ball_sizes);
    println!("shell sizes: {:?}", shells.shell_sizes);

    // the subgroup generated by (2, 0) and (1, 1)
    let spec = GroupSpec::FinGen {
        rank: 2,
        generators: BTreeMap::from([("a".into(), vec![2, 0]), ("b".into(), vec![1, 1])]),
    };
    let sub = MetricGroup::from_spec(&spec)?;
    let e = sub.element_from_word("a a b")?;
    println!("a·a·b = {:?}, word length {}", e.as_vector().unwrap(), sub.distance(&sub.identity(), &e)?);
    println!("its balls: {:?}", sub.shell_table(5)?.ball_sizes);

    let grid = MetricGroup::grid(2)?;
    for n in [5, 10, 20, 40] {
        println!("box n = {n:>2}: |A_n B_2 \\ A_n| / |A_n| = {:.4}", grid.boundary_defect(n, 2)?);
    }
    Ok(())
}
