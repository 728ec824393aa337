use clap::Subcommand;

use smoothcd::solvers::{contraction_c1, doubling_schedule, growth_constant_fb, growth_constant_me, growth_constant_ns, restart_period};

use crate::CliResult;

/// Reads `e^X` as `exp(X)`, anything else as a float.
fn parse_real(s: &str) -> Result<f64, String> {
    if let Some(x) = s.strip_prefix("e^") {
        return x.parse::<f64>().map(f64::exp).map_err(|e| e.to_string());
    }
    s.parse::<f64>().map_err(|e| e.to_string())
}

#[derive(Subcommand, Debug)]
pub enum ConstantsCmd {
    /// Restart period guaranteeing a contraction factor per round.
    RestartPeriod {
        /// Number of blocks
        #[arg(long)]
        blocks: usize,
        /// Growth exponent in [1, 2]
        #[arg(long)]
        q: f64,
        /// Growth constant of the surrogate
        #[arg(long)]
        kappa: f64,
        /// Contraction factor in (0, 1]; `e^X` is accepted
        #[arg(long, value_parser = parse_real)]
        contraction: f64,
        /// Initial gap bound (unused when q = 2)
        #[arg(long, default_value_t = 0.0)]
        delta0: f64,
    },
    /// Growth constant inherited by a smoothing.
    Growth {
        /// Smoothing: moreau, fb or ns
        #[arg(long)]
        smoothing: String,
        /// Growth exponent of the original objective in [1, 2]
        #[arg(long)]
        q: f64,
        /// Growth constant of the original objective
        #[arg(long)]
        kappa: f64,
        /// Smoothing parameter (moreau, fb)
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Lipschitz constant of the smooth part (fb)
        #[arg(long, default_value_t = 1.0)]
        lipschitz: f64,
        /// Largest block Lipschitz constant (fb, ns)
        #[arg(long, default_value_t = 1.0)]
        l_max: f64,
        /// Level-set radius, needed when q < 2
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Expected per-step contraction of the Lyapunov function.
    C1 {
        /// Growth constant of the surrogate
        #[arg(long)]
        kappa: f64,
        /// Growth exponent in [1, 2]
        #[arg(long)]
        q: f64,
        /// Number of blocks
        #[arg(long)]
        blocks: usize,
        /// Initial gap bound (unused when q = 2)
        #[arg(long, default_value_t = 0.0)]
        delta0: f64,
    },
    /// First periods of the doubling schedule.
    Doubling {
        /// Base period
        #[arg(long)]
        k0: u64,
        /// Number of rounds
        #[arg(long, default_value_t = 8)]
        count: usize,
    },
}

pub fn run(cmd: ConstantsCmd) -> CliResult<()> {
    match cmd {
        ConstantsCmd::RestartPeriod { blocks, q, kappa, contraction, delta0 } => {
            println!("{}", restart_period(blocks, q, kappa, contraction, delta0)?);
        }
        ConstantsCmd::Growth { smoothing, q, kappa, gamma, lipschitz, l_max, radius } => {
            let v = match smoothing.as_str() {
                "moreau" => growth_constant_me(q, kappa, gamma, radius)?,
                "fb" => growth_constant_fb(q, kappa, gamma, lipschitz, l_max, radius)?,
                "ns" => growth_constant_ns(q, kappa, l_max, radius)?,
                other => {
                    return Err(crate::CliError::Usage(format!(
                        "no growth constant for smoothing {other:?}; valid choices are moreau, fb, ns"
                    )))
                }
            };
            println!("{v}");
        }
        ConstantsCmd::C1 { kappa, q, blocks, delta0 } => {
            println!("{}", contraction_c1(kappa, q, blocks, delta0)?);
        }
        ConstantsCmd::Doubling { k0, count } => {
            if k0 == 0 {
                return Err(crate::CliError::Usage("k0 must be at least 1".into()));
            }
            let s: Vec<String> = doubling_schedule(k0, count).iter().map(u64::to_string).collect();
            println!("{}", s.join(" "));
        }
    }
    Ok(())
}
