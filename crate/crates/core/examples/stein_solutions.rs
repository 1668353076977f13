//! Solves the Stein equation for a few indicator test functions and
//! compares the solution's size with the analytic constants H0 and H1.

use amenpois::compound_poisson::{h_bounds_analytic, stein_solve, IndicatorSet, ParamVector};

fn main() -> amenpois::Result<()> {
    let cases = [
        (vec![2.0], IndicatorSet::at_most(1)),
        (vec![1.0, 0.25], IndicatorSet::finite([0, 3, 4])),
        (vec![0.5, 0.2, 0.1, 0.05], IndicatorSet::finite([2])),
    ];
    println!("{:<28} {:>10} {:>10} {:>10} {:>10}", "λ", "sup|f|", "H0", "sup|Δf|", "H1");
    for (rates, h) in cases {
        let lambda = ParamVector::new(rates.clone())?;
        let sol = stein_solve(&lambda, &h, 60)?;
        let hb = h_bounds_analytic(&lambda);
        println!(
            "{:<28} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            format!("{rates:?}"),
            sol.sup_abs(),
            hb.h0,
            sol.sup_abs_diff(),
            hb.h1
        );
    }
    Ok(())
}
