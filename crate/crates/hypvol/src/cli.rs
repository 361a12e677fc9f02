// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line parsing and dispatch.
//!
//! Everything runs on the main thread, one subcommand per process.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Ctx};
use crate::config::{default_out_dir, Overrides};
use crate::error::{CliError, EXIT_NUMERICAL, EXIT_OK};

/// Numerical toolkit for hyperbolic 3-manifolds.
#[derive(Debug, Parser)]
#[command(name = "hypvol", version, about)]
pub struct Cli {
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Sample grid, comma separated (an ε grid, or `v` nodes for
    /// `uniformize` and `hj-solve`).
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// Tolerance of the numerical check.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, default_value_os_t = default_out_dir())]
    pub out: PathBuf,
    /// Seed of randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Smallest ε of a geometric grid.
    #[arg(long = "eps-min")]
    pub eps_min: Option<f64>,
    /// Largest ε of a geometric grid.
    #[arg(long)]
    pub eps0: Option<f64>,
    /// Cutoff scale of the sweep.
    #[arg(long)]
    pub delta: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid.clone(),
            tol: self.tol,
            seed: self.seed,
            eps_min: self.eps_min,
            eps0: self.eps0,
            delta: self.delta,
        }
    }
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a Schottky group is adapted to its circles.
    GroupValidate {
        /// Spec file with a [group] section.
        spec: PathBuf,
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
    /// Fit the finite part of volume samples.
    Volr {
        /// Spec file with a [volr] section.
        spec: PathBuf,
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
    /// Compare the direct variation of the renormalized volume with the
    /// closed form.
    Variation {
        /// Spec file with a [variation] section.
        spec: PathBuf,
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
    /// Renormalized volume along a degenerating family.
    Sweep {
        /// Spec file with a [family] section.
        spec: PathBuf,
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
    /// Hyperbolic conformal factor on a collar.
    Uniformize {
        /// Spec file with a [uniformize] section.
        spec: PathBuf,
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
    /// Geodesic defining function on the cusp model.
    HjSolve {
        /// Spec file with an [hj] section.
        spec: PathBuf,
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance criteria.
    ModelCheck {
        /// Optional spec file with a [check] section.
        spec: Option<PathBuf>,
        /// Criteria to run (1-8); default 1, 2, 4, 8.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        criteria: Vec<u8>,
        /// Shared flags.
        #[command(flatten)]
        common: Common,
    },
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: &Cli) -> u8 {
    match dispatch(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NUMERICAL,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let (spec, common) = match &cli.command {
        Command::GroupValidate { spec, common }
        | Command::Volr { spec, common }
        | Command::Variation { spec, common }
        | Command::Sweep { spec, common }
        | Command::Uniformize { spec, common }
        | Command::HjSolve { spec, common } => (Some(spec.as_path()), common),
        Command::ModelCheck { spec, common, .. } => (spec.as_deref(), common),
    };
    let overrides = common.overrides();
    overrides.validate()?;
    let ctx = Ctx { spec, overrides: &overrides, out: &common.out };
    match &cli.command {
        Command::GroupValidate { .. } => commands::group_validate(&ctx),
        Command::Volr { .. } => commands::volr(&ctx),
        Command::Variation { .. } => commands::variation(&ctx),
        Command::Sweep { .. } => commands::sweep(&ctx),
        Command::Uniformize { .. } => commands::uniformize(&ctx),
        Command::HjSolve { .. } => commands::hj_solve(&ctx),
        Command::ModelCheck { criteria, .. } => commands::model_check(&ctx, criteria),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_flag_takes_a_comma_list() {
        let cli = Cli::try_parse_from(["hypvol", "sweep", "f.toml", "--grid", "0.1,0.05", "--delta", "0.2"]).unwrap();
        let Command::Sweep { common, .. } = cli.command else { panic!() };
        assert_eq!(common.grid, Some(vec![0.1, 0.05]));
        assert_eq!(common.delta, Some(0.2));
        assert!(Cli::try_parse_from(["hypvol", "sweep", "f.toml", "--grid", "0.1,x"]).is_err());
        assert!(Cli::try_parse_from(["hypvol", "volr"]).is_err());
    }
}
