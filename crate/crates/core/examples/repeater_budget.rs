//! Phase budget of a 1000 km repeater chain and the fidelity it implies.

use fiberphase::repeater::{
    budget_per_segment, chain_sigma, fidelity_from_sigma, monte_carlo_fidelity, predict_visibility,
    RepeaterChain,
};

fn main() -> fiberphase::Result<()> {
    let budget = budget_per_segment(1000.0, 8, 0.9, 36.5)?;
    println!(
        "1000 km, 8 links, F = 0.9: total sigma {:.4} rad, per link {:.4} rad",
        budget.total_sigma, budget.per_link_sigma
    );
    println!(
        "a 36.5 km segment may carry sigma {:.4} rad, i.e. a mean phase change of {:.4} rad",
        budget.per_segment_sigma_limit, budget.per_segment_dphi_limit
    );

    let chain = RepeaterChain::from_diffusion(vec![125.0; 8], 8e-4);
    let sigma = chain_sigma(&chain)?;
    let mc = monte_carlo_fidelity(sigma, 1_000_000, 3)?;
    println!(
        "with D = 8e-4 rad^2/km: chain sigma {sigma:.3} rad, F = {:.4} (Monte Carlo {:.4} +/- {:.4})",
        fidelity_from_sigma(sigma)?,
        mc.fidelity,
        mc.std_error
    );
    println!(
        "single 250 km link: V = {:.4}",
        predict_visibility(8e-4, 250.0)?
    );
    Ok(())
}
