//! One runner per subcommand. Each appends check records to a [`Session`]
//! and writes its CSV artifacts as it goes.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use stablelp::density::stable_density;
use stablelp::extension::ExtensionField;
use stablelp::fixtures::Fixture;
use stablelp::functionals::Functionals;
use stablelp::grid::GridFunction;
use stablelp::mc::{
    exit_law_check, green_identity_check, harnack_sample, martingale_check, run_paths, HarnackBoxes, McConfig,
};
use stablelp::multiplier::{certify, KernelSpec, Verdict};
use stablelp::report::{write_grid_csv, write_json, CheckRecord, CheckStatus, SuiteReport};
use stablelp::suite::{run_criterion, SuiteOptions, CRITERIA};
use stablelp::GridSpec;

use crate::config::{RunConfig, Subcommand};

/// Records and artifacts of one run.
pub struct Session {
    pub config: RunConfig,
    records: Vec<CheckRecord>,
    dir_ready: bool,
    /// Print each record as it is added.
    pub echo: bool,
}

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

fn file_tag(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

impl Session {
    pub fn new(config: RunConfig) -> Self {
        Self { config, records: Vec::new(), dir_ready: false, echo: true }
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let dir = &self.config.output_dir;
        if !self.dir_ready {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            self.dir_ready = true;
        }
        Ok(dir.join(name))
    }

    fn csv(&mut self, name: &str, f: &GridFunction) -> Result<()> {
        let path = self.path(name)?;
        write_grid_csv(&path, f).with_context(|| format!("writing {}", path.display()))
    }

    fn push(&mut self, record: CheckRecord) {
        if self.echo {
            println!("{}", record.summary());
        }
        self.records.push(record);
    }

    fn record(&mut self, name: String, status: CheckStatus, value: Value, tolerance: &str, clock: Instant) {
        self.push(CheckRecord {
            name,
            status,
            value,
            tolerance: tolerance.into(),
            runtime_s: clock.elapsed().as_secs_f64(),
            notes: Vec::new(),
        });
    }

    /// Add a failing record for an error that stopped the run.
    pub fn abort(&mut self, error: &anyhow::Error) {
        self.push(CheckRecord {
            name: "error".into(),
            status: CheckStatus::Fail,
            value: Value::Null,
            tolerance: String::new(),
            runtime_s: 0.0,
            notes: vec![format!("{error:#}")],
        });
    }

    /// Write `<subcommand>.json` and `<subcommand>.config`.
    pub fn finish(&mut self) -> Result<SuiteReport> {
        let report = SuiteReport::new(self.config.hash(), self.records.clone());
        let stem = self.config.subcommand.as_str();
        let path = self.path(&format!("{stem}.json"))?;
        write_json(&path, &report).with_context(|| format!("writing {}", path.display()))?;
        let path = self.path(&format!("{stem}.config"))?;
        fs::write(&path, self.config.canonical_text()).with_context(|| format!("writing {}", path.display()))?;
        Ok(report)
    }
}

pub fn run(session: &mut Session) -> Result<()> {
    match session.config.subcommand {
        Subcommand::Density => density(session),
        Subcommand::Extend => extend(session),
        Subcommand::Lp => lp(session),
        Subcommand::Multiplier => multiplier(session),
        Subcommand::Mc => mc(session),
        Subcommand::Suite => suite(session),
    }
}

fn density(session: &mut Session) -> Result<()> {
    let c = session.config.clone();
    let clock = Instant::now();
    let table = stable_density(&c.params, c.s, &c.grid)?;
    session.csv("density.csv", &table.values)?;
    let mass = table.mass();
    let valid = table.validate();
    let mut value = json!({ "mass": mass, "monotonicity_defect": table.monotonicity_defect() });
    if c.grid.dim == 1 {
        value["p_at_0"] = json!(table.values.value_at_x(0.0));
    }
    let tol = "valid density: mass 1 +- 1e-5, nonnegative, radially decreasing";
    session.record("density".into(), status(valid.is_ok()), value, tol, clock);
    if let Err(e) = valid {
        session.records.last_mut().expect("just pushed").notes.push(e.to_string());
    }
    Ok(())
}

fn extend(session: &mut Session) -> Result<()> {
    let c = session.config.clone();
    for fx in &c.fixtures {
        let f = fx.sample(c.grid)?;
        let bound = f.sup_norm().max(f.tail.abs());
        let field = ExtensionField::new(f, c.params, c.time_grid.clone())?;
        for &t in &c.times {
            let clock = Instant::now();
            let slice = field.slice(t)?;
            session.csv(&format!("extend_{}_t{}.csv", file_tag(&fx.to_string()), t), &slice.values)?;
            let sup = slice.values.sup_norm();
            session.record(
                format!("extend_{fx}_t{t}"),
                status(sup <= bound * (1.0 + 1e-9) + 1e-12),
                json!({ "t": t, "sup": sup, "input_sup": bound }),
                "sup |Q_t f| <= sup |f|",
                clock,
            );
        }
    }
    Ok(())
}

fn lp(session: &mut Session) -> Result<()> {
    let c = session.config.clone();
    for fx in &c.fixtures {
        let f = fx.sample(c.grid)?;
        let e = Functionals::new(&f, c.params, c.time_grid.clone())?.with_p_norms(&c.ps);
        for &name in &c.functionals {
            let clock = Instant::now();
            let r = e.evaluate(name, c.lambda)?;
            session.csv(&format!("lp_{}_{name}.csv", file_tag(&fx.to_string())), &r.values)?;
            let ok = r.values.values.iter().all(|v| v.is_finite() && *v >= 0.0);
            session.record(
                format!("lp_{fx}_{name}"),
                status(ok),
                serde_json::to_value(&r)?,
                "values finite and nonnegative",
                clock,
            );
        }
    }
    Ok(())
}

fn multiplier(session: &mut Session) -> Result<()> {
    let c = session.config.clone();
    let mut kernels: Vec<KernelSpec> =
        c.kernels.iter().map(|k| KernelSpec::builtin(k, &c.params)).collect::<Result<_, _>>()?;
    if let Some(path) = &c.kernel_file {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "file".into());
        kernels.push(KernelSpec::read_csv(name, c.kernel_symmetry, BufReader::new(file))?);
    }
    for kernel in &kernels {
        let clock = Instant::now();
        let report = certify(kernel, &c.params, c.lambda, &c.grid, &c.fixtures, &c.ps)?;
        if let Some(decay) = &report.decay {
            session.csv(&format!("multiplier_{}_decay.csv", file_tag(&kernel.name)), &decay.values)?;
        }
        let st = match report.verdict {
            Verdict::Certified => CheckStatus::Pass,
            Verdict::Violated => CheckStatus::Fail,
            Verdict::Inconclusive => CheckStatus::Logged,
        };
        session.record(
            format!("multiplier_{}", kernel.name),
            st,
            serde_json::to_value(&report)?,
            "certified: cancelation < 1e-6, finite growth constants, decay bound holds",
            clock,
        );
    }
    Ok(())
}

fn mc(session: &mut Session) -> Result<()> {
    let c = session.config.clone();
    let config = McConfig::new(c.n_paths, c.dt, c.seed, c.workers)?;
    for check in &c.checks {
        let clock = Instant::now();
        let (ok, value, tol) = match check.as_str() {
            "exit_law" => {
                let r = exit_law_check(&c.params, &config, c.a)?;
                (r.passes(), serde_json::to_value(&r)?, "KS < 1.63/sqrt(n); |corr| < 3/sqrt(n); censored < 1%")
            }
            "green" => {
                let unit = |s: f64| if s > 0.0 && s <= 1.0 { 1.0 } else { 0.0 };
                let r = green_identity_check(&unit, (0.0, 1.0), c.a, &config)?;
                (r.within(), serde_json::to_value(&r)?, "|mc - exact| <= 3 SE + |bias|")
            }
            "martingale" => {
                let f = Fixture::Gauss.sample(c.grid)?;
                let r = martingale_check(&f, &c.params, (0.0, c.a), &[0.1, 0.5, 2.0], &config)?;
                (r.passes(), serde_json::to_value(&r)?, "within 3 SE at s = 0.1, 0.5, 2")
            }
            "harnack" => {
                let fixtures =
                    vec![Fixture::Constant(1.0), Fixture::Gauss, Fixture::Translated(Box::new(Fixture::Gauss), 5.0)];
                let spec = GridSpec::new(16.0, 1.0 / 32.0)?;
                let r = harnack_sample(&c.params, &fixtures, spec, &HarnackBoxes::new(20.0)?, 9)?;
                let ok = r.rows.iter().all(|row| row.ratio.is_finite()) && r.max_drift < 0.05;
                (ok, serde_json::to_value(&r)?, "ratios finite; drift < 5%")
            }
            other => anyhow::bail!("unknown check `{other}`"),
        };
        session.record(format!("mc_{check}"), status(ok), value, tol, clock);
    }
    if c.raw {
        let paths = run_paths(&c.params, &config, (0.0, c.a), &[])?;
        let path = session.path("mc_paths.csv")?;
        let mut w = BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(w, "t0,y_at_t0,censored")?;
        for p in &paths {
            writeln!(w, "{},{},{}", p.t0, p.y_at_t0, p.censored as u8)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn suite(session: &mut Session) -> Result<()> {
    let c = session.config.clone();
    let opts = SuiteOptions { alpha: c.params.alpha, quick: c.quick, seed: c.seed, workers: c.workers };
    for k in 1..=CRITERIA.len() {
        let record = run_criterion(k, &opts)?;
        session.push(record);
    }
    Ok(())
}
