//! Flags that pick the system under study: an RC ladder, a process model or
//! the bare delay term.

use std::f64::consts::FRAC_PI_2;

use clap::{ArgGroup, Args};
use fopfdd::fdd::fdd_frequency_response;
use fopfdd::ladder::{build_ladder, ladder_freq_response, LadderSpec, LadderStateSpace};
use fopfdd::models::{Family, ModelParams};
use fopfdd::{Arithmetic, FddParams, SeriesConfig};
use serde_json::{json, Value};

use crate::failure::{CliResult, Failure};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("system").required(true).args(["ladder", "r", "model"])))]
pub struct SystemArgs {
    /// Uniform ladder with N unit stages.
    #[arg(long, value_name = "N")]
    pub ladder: Option<usize>,
    /// Stage resistances, comma separated (use with --c).
    #[arg(long = "r", value_delimiter = ',', num_args = 1.., requires = "c")]
    pub r: Option<Vec<f64>>,
    /// Stage capacitances, comma separated (use with --r).
    #[arg(long = "c", value_delimiter = ',', num_args = 1.., requires = "r")]
    pub c: Option<Vec<f64>>,
    /// Model family (fopdt, fo2pdt, fopfdd or h1, h2, h3), or `fdd` for the
    /// bare delay term.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "K", default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
}

pub enum System {
    Ladder(LadderSpec, LadderStateSpace),
    Model(ModelParams),
    Fdd(FddParams),
}

pub fn ladder_spec(n: Option<usize>, r: &Option<Vec<f64>>, c: &Option<Vec<f64>>) -> CliResult<LadderSpec> {
    Ok(match (n, r, c) {
        (Some(n), _, _) => LadderSpec::uniform(n)?,
        (None, Some(r), Some(c)) => LadderSpec::new(r.clone(), c.clone())?,
        _ => return Err(Failure::usage("--ladder", "give a stage count or both --r and --c")),
    })
}

impl SystemArgs {
    pub fn resolve(&self) -> CliResult<System> {
        let Some(name) = &self.model else {
            let spec = ladder_spec(self.ladder, &self.r, &self.c)?;
            let ss = build_ladder(&spec);
            return Ok(System::Ladder(spec, ss));
        };
        let alpha = |what: &str| {
            self.alpha
                .ok_or_else(|| Failure::usage("--alpha", format!("required for {what}")))
        };
        if name.eq_ignore_ascii_case("fdd") {
            return Ok(System::Fdd(FddParams::new(self.l, alpha("fdd")?)?));
        }
        let family: Family = name.parse().map_err(|e| match e {
            fopfdd::Error::InvalidParameter { reason, .. } => Failure::usage("--model", reason),
            other => other.into(),
        })?;
        let m = match family {
            Family::Fopdt => ModelParams::fopdt(self.k, self.tau, self.l)?,
            Family::Fo2pdt => ModelParams::fo2pdt(self.k, self.tau, self.l, alpha("fo2pdt")?)?,
            Family::Fopfdd => ModelParams::fopfdd(self.k, self.tau, self.l, alpha("fopfdd")?)?,
        };
        Ok(System::Model(m))
    }
}

impl System {
    /// Magnitude in dB and continuous phase in radians.
    pub fn bode(&self, omegas: &[f64]) -> CliResult<(Vec<f64>, Vec<f64>)> {
        let db = 20.0 / std::f64::consts::LN_10;
        Ok(match self {
            System::Ladder(_, ss) => {
                let fr = ladder_freq_response(ss, omegas)?;
                (fr.magnitudes_db(), fr.unwrapped_phase())
            }
            System::Model(m) => omegas
                .iter()
                .map(|&w| {
                    let (ln_m, phase) = m.log_response(w);
                    (db * ln_m, phase)
                })
                .unzip(),
            System::Fdd(p) => omegas
                .iter()
                .map(|&w| {
                    let x = (p.l() * w).powf(p.alpha());
                    (db * fdd_frequency_response(*p, w).norm().ln(), -x * (p.alpha() * FRAC_PI_2).sin())
                })
                .unzip(),
        })
    }

    pub fn describe(&self) -> Value {
        match self {
            System::Ladder(spec, _) => json!({
                "kind": "ladder",
                "resistances": spec.resistances(),
                "capacitances": spec.capacitances(),
            }),
            System::Model(m) => json!({ "kind": "model", "params": m }),
            System::Fdd(p) => json!({ "kind": "fdd", "L": p.l(), "alpha": p.alpha() }),
        }
    }
}

/// Series truncation flags.
#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Highest series index N.
    #[arg(long = "n-terms", default_value_t = 200)]
    pub n_terms: usize,
    /// Samples up to the last one above this magnitude are discarded (P).
    #[arg(long = "peak-threshold", default_value_t = 10.0)]
    pub peak_threshold: f64,
    /// Distance from an integer below which a term index is skipped.
    #[arg(long = "integer-tol", default_value_t = 1e-9)]
    pub integer_tol: f64,
    /// Sum the series in multiple precision.
    #[cfg(feature = "mpfr")]
    #[arg(long)]
    pub extended: bool,
    /// Significant digits for --extended.
    #[arg(long = "precision-digits", default_value_t = 200)]
    pub precision_digits: u32,
}

impl SeriesArgs {
    pub fn config(&self) -> CliResult<SeriesConfig> {
        #[cfg(feature = "mpfr")]
        let arithmetic = if self.extended { Arithmetic::Extended } else { Arithmetic::LogDomain };
        #[cfg(not(feature = "mpfr"))]
        let arithmetic = Arithmetic::LogDomain;
        let c = SeriesConfig {
            n_terms: self.n_terms,
            peak_threshold: self.peak_threshold,
            integer_tol: self.integer_tol,
            precision_digits: self.precision_digits,
            arithmetic,
        };
        c.validate()?;
        Ok(c)
    }
}
