//! The `xychain` command-line front end.
//!
//! Every command builds a [`Table`] (or, for `encode`, an encoding JSON
//! document) that is rendered in grid order, so output does not depend on
//! the worker count. Progress goes to standard error.

mod parse;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Parser, ValueEnum};

use crate::chain::{ChainSpec, EncodingState};
use crate::encodings::{encoding_distance, make_psi_k, make_xi_k, optimal_encoding, XiParameters};
use crate::error::{Error, Result};
use crate::fidelity::{average_fidelity, fidelity_xi, field_decomposition, Variant};
use crate::optimizer::{find_peak, sweep, EncodingFidelity, FnObjective, PeakResult, TimeObjective, TopSingularValue};
pub use parse::{parse_grid, parse_list, parse_real, parse_window, MAX_POINTS};
pub use table::{Cell, OutputFormat, Table};

/// ħ in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// k_B in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Lowest Δ_r accepted before a comparison row is treated as a failure.
pub const DOMINANCE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    /// Ψ_k peak fidelities and arrival times
    Table1,
    /// optimal-encoding comparison rows
    Table2,
    /// Ψ_k peak fidelity against chain length
    Scaling,
    /// ξ_k fidelity against the magnetic field
    FieldSweep,
    /// ξ_k fidelity against the polar angle
    ThetaSweep,
    /// θ-averaged ξ_k fidelity at the optimal field
    Avg,
    /// peak search for a single encoding
    Peak,
    /// write an encoding as JSON
    Encode,
    /// convert a dimensionless time to seconds
    PhysTime,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Table1 => "table1",
            CommandKind::Table2 => "table2",
            CommandKind::Scaling => "scaling",
            CommandKind::FieldSweep => "field-sweep",
            CommandKind::ThetaSweep => "theta-sweep",
            CommandKind::Avg => "avg",
            CommandKind::Peak => "peak",
            CommandKind::Encode => "encode",
            CommandKind::PhysTime => "phys-time",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "xychain",
    version,
    about = "State-transfer fidelities of encoded qubits on XY spin chains"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: CommandKind,
    /// Chain lengths: comma list, items may be lo:hi:step
    #[arg(long)]
    pub n: Option<String>,
    /// Encoding family sizes (comma list)
    #[arg(long)]
    pub k: Option<String>,
    /// Sender/receiver region sizes (comma list)
    #[arg(long)]
    pub r: Option<String>,
    /// Polar angle of ξ_k; accepts multiples of pi such as 0.5pi
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Azimuthal angle of ξ_k
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Magnetic field in units of J
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Evaluation time in units of ħ/J, or "peak"
    #[arg(long)]
    pub t: Option<String>,
    /// Peak-search window lo:hi (default 0:N)
    #[arg(long)]
    pub window: Option<String>,
    /// Sweep grid lo:hi:step
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// eq6, eq8 or both
    #[arg(long)]
    pub variant: Option<String>,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Encoding for peak/encode: psi, xi, optimal or file
    #[arg(long)]
    pub encoding: Option<String>,
    /// Encoding JSON file (implies --encoding file)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Coupling in kelvin for phys-time
    #[arg(long = "j-kelvin")]
    pub j_kelvin: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EncodingSelector {
    Psi,
    Xi,
    Optimal,
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimePolicy {
    Fixed(f64),
    /// The peak of the reference objective: Ψ_k for ξ_k sweeps, σ₁ for
    /// optimal encodings.
    Peak,
}

/// Validated, defaulted settings for one command.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub sizes: Vec<usize>,
    pub ks: Vec<usize>,
    pub regions: Vec<usize>,
    pub theta: Option<f64>,
    pub phi: f64,
    pub field: f64,
    pub time: TimePolicy,
    pub window: Option<(f64, f64)>,
    pub grid: Vec<f64>,
    pub variants: Vec<Variant>,
    pub variant_label: String,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
    pub encoding: EncodingSelector,
    pub j_kelvin: f64,
    /// Parameters as given (or defaulted), for the metadata line.
    pub meta: Vec<(String, String)>,
}

fn require<'a>(value: &'a Option<String>, flag: &'static str, command: CommandKind) -> Result<&'a str> {
    value
        .as_deref()
        .ok_or_else(|| Error::invalid(flag, format!("required by {}", command.name())))
}

fn single(values: &[usize], flag: &'static str) -> Result<usize> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::invalid(flag, "expects a single value for this command")),
    }
}

impl RunConfig {
    pub fn from_args(args: &Args) -> Result<Self> {
        use CommandKind::*;
        let cmd = args.command;
        let mut meta = Vec::new();
        let mut record = |key: &str, value: &str| meta.push((key.to_string(), value.to_string()));

        let encoding = match (args.input.as_ref(), args.encoding.as_deref()) {
            (Some(path), None | Some("file")) => EncodingSelector::File(path.clone()),
            (Some(_), Some(other)) => {
                return Err(Error::invalid("encoding", format!("{other} conflicts with --input")))
            }
            (None, None | Some("psi")) => EncodingSelector::Psi,
            (None, Some("xi")) => EncodingSelector::Xi,
            (None, Some("optimal")) => EncodingSelector::Optimal,
            (None, Some("file")) => return Err(Error::invalid("input", "required by --encoding file")),
            (None, Some(other)) => {
                return Err(Error::invalid(
                    "encoding",
                    format!("{other:?} (expected psi, xi, optimal or file)"),
                ))
            }
        };
        let uses_encoding = matches!(cmd, Peak | Encode);
        if uses_encoding {
            let label = match &encoding {
                EncodingSelector::Psi => "psi".to_string(),
                EncodingSelector::Xi => "xi".to_string(),
                EncodingSelector::Optimal => "optimal".to_string(),
                EncodingSelector::File(p) => format!("file:{}", p.display()),
            };
            record("encoding", &label);
        }
        let from_file = uses_encoding && matches!(encoding, EncodingSelector::File(_));

        let size_default = match cmd {
            Table1 => Some("100:600:100"),
            Table2 => Some("100:500:100,3000"),
            _ => None,
        };
        let needs_sizes = !matches!(cmd, PhysTime) && !from_file;
        let sizes = match (args.n.as_deref(), size_default) {
            (Some(text), _) => parse_list(text)?,
            (None, Some(text)) => parse_list(text)?,
            (None, None) if needs_sizes => return Err(Error::invalid("n", format!("required by {}", cmd.name()))),
            (None, None) => Vec::new(),
        };
        if needs_sizes || args.n.is_some() {
            record("n", args.n.as_deref().or(size_default).unwrap_or_default());
        }

        let needs_k = matches!(cmd, Table1 | Scaling | FieldSweep | ThetaSweep | Avg)
            || (uses_encoding && matches!(encoding, EncodingSelector::Psi | EncodingSelector::Xi));
        let k_default = match cmd {
            Table1 => Some("2,3,4,5"),
            Scaling => Some("2,3,4,6,11"),
            _ => None,
        };
        let ks = if needs_k {
            let text = match args.k.as_deref().or(k_default) {
                Some(text) => text,
                None => require(&args.k, "k", cmd)?,
            };
            record("k", text);
            parse_list(text)?
        } else {
            Vec::new()
        };

        let needs_r = matches!(cmd, Table2) || (uses_encoding && encoding == EncodingSelector::Optimal);
        let regions = if needs_r {
            let text = match args.r.as_deref().or(if cmd == Table2 { Some("3,5,7,9") } else { None }) {
                Some(text) => text,
                None => require(&args.r, "r", cmd)?,
            };
            record("r", text);
            parse_list(text)?
        } else {
            Vec::new()
        };

        let uses_xi = matches!(cmd, FieldSweep) || (uses_encoding && encoding == EncodingSelector::Xi);
        let theta = if uses_xi {
            let text = require(&args.theta, "theta", cmd)?;
            record("theta", text);
            Some(parse_real(text)?)
        } else {
            None
        };
        let uses_phi = uses_xi || cmd == ThetaSweep;
        let phi = match (&args.phi, uses_phi) {
            (Some(text), true) => {
                record("phi", text);
                parse_real(text)?
            }
            _ => 0.0,
        };
        let uses_field = matches!(cmd, ThetaSweep) || (cmd == Peak && matches!(encoding, EncodingSelector::Xi));
        let field = match (&args.h, uses_field) {
            (Some(text), true) => {
                record("h", text);
                parse_real(text)?
            }
            (None, true) => {
                record("h", "0");
                0.0
            }
            _ => 0.0,
        };

        let uses_time = matches!(cmd, FieldSweep | ThetaSweep | Avg | PhysTime)
            || (cmd == Encode && encoding == EncodingSelector::Optimal);
        let time = if uses_time {
            let text = match (args.t.as_deref(), cmd) {
                (Some(text), _) => text,
                (None, PhysTime) => require(&args.t, "t", cmd)?,
                (None, _) => "peak",
            };
            record("t", text);
            if text == "peak" {
                if cmd == PhysTime {
                    return Err(Error::invalid("t", "phys-time needs a numeric time"));
                }
                TimePolicy::Peak
            } else {
                TimePolicy::Fixed(parse_real(text)?)
            }
        } else {
            TimePolicy::Peak
        };

        let searches_peak = matches!(cmd, Table1 | Table2 | Scaling | Peak)
            || (uses_time && time == TimePolicy::Peak && cmd != PhysTime);
        let window = match (&args.window, searches_peak) {
            (Some(text), true) => {
                record("window", text);
                Some(parse_window(text)?)
            }
            (None, true) => {
                record("window", "0:N");
                None
            }
            _ => None,
        };

        let grid = match cmd {
            FieldSweep => {
                let text = require(&args.grid, "grid", cmd)?;
                record("grid", text);
                parse_grid(text)?
            }
            ThetaSweep => {
                let text = args.grid.as_deref().unwrap_or("0:pi:0.015625pi");
                record("grid", text);
                let grid = parse_grid(text)?;
                if let Some(bad) = grid.iter().find(|th| !(0.0..=std::f64::consts::PI).contains(*th)) {
                    return Err(Error::invalid("grid", format!("theta {bad} outside [0, pi]")));
                }
                grid
            }
            _ => Vec::new(),
        };

        let default_variant = if matches!(cmd, Avg | FieldSweep) { "eq8" } else { "eq6" };
        let variant_label = args.variant.clone().unwrap_or_else(|| default_variant.to_string());
        let variants = match variant_label.as_str() {
            "both" => vec![Variant::Overlap, Variant::DoubledTail],
            other => vec![other.parse::<Variant>()?],
        };
        meta.insert(0, ("variant".to_string(), variant_label.clone()));

        let j_kelvin = match (&args.j_kelvin, cmd) {
            (Some(text), PhysTime) => {
                meta.push(("j_kelvin".to_string(), text.clone()));
                parse_real(text)?
            }
            (None, PhysTime) => {
                meta.push(("j_kelvin".to_string(), "4.1".to_string()));
                4.1
            }
            _ => 0.0,
        };

        if args.workers == Some(0) {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        if cmd == Encode {
            single(&sizes, "n")?;
            if needs_k {
                single(&ks, "k")?;
            }
            if needs_r {
                single(&regions, "r")?;
            }
        }

        Ok(Self {
            command: cmd,
            sizes,
            ks,
            regions,
            theta,
            phi,
            field,
            time,
            window,
            grid,
            variants,
            variant_label,
            out: args.out.clone(),
            format: match args.format {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            },
            workers: args.workers,
            encoding,
            j_kelvin,
            meta,
        })
    }

    fn window_for(&self, n: usize) -> (f64, f64) {
        self.window.unwrap_or((0.0, n as f64))
    }

    fn table(&self, columns: Vec<&'static str>) -> Table {
        let mut table = Table::new(self.command.name(), columns);
        for (k, v) in &self.meta {
            table.meta(k, v.as_str());
        }
        table
    }
}

/// One row of the optimal-encoding comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    pub r: usize,
    /// Peak σ₁ over the window.
    pub fidelity: f64,
    /// Peak σ₁ minus the peak Ψ_{(r+1)/2} fidelity (NaN for even r).
    pub delta: f64,
    /// Distance between the optimal encoding at `t0` and Ψ_{(r+1)/2}
    /// (NaN for even r).
    pub distance: f64,
    pub t0: f64,
}

fn unmodulated(n: usize) -> Result<ChainSpec> {
    ChainSpec::new(n, 1.0, 0.0)
}

/// Peak of the Ψ_k transfer fidelity on a chain of `n` sites.
pub fn psi_peak(n: usize, k: usize, window: (f64, f64)) -> Result<PeakResult> {
    let chain = unmodulated(n)?;
    let psi = make_psi_k(&chain, k)?;
    find_peak(&EncodingFidelity::new(&chain, &psi)?, window)
}

/// Peak σ₁ for region size `r` against the best Ψ_k with 2k − 1 = r.
pub fn comparison_row(n: usize, r: usize, window: (f64, f64)) -> Result<ComparisonRow> {
    let chain = unmodulated(n)?;
    let sigma = TopSingularValue::new(&chain, r)?;
    let peak = find_peak(&sigma, window)?;
    let (mut t0, mut fidelity) = (peak.t0, peak.fidelity);
    if r.is_multiple_of(2) {
        return Ok(ComparisonRow {
            n,
            r,
            fidelity,
            delta: f64::NAN,
            distance: f64::NAN,
            t0,
        });
    }
    let psi = make_psi_k(&chain, r.div_ceil(2))?;
    let psi_best = find_peak(&EncodingFidelity::new(&chain, &psi)?, window)?;
    // σ₁ bounds the Ψ fidelity pointwise; keep that true of the peaks too
    let at_psi = sigma.value(psi_best.t0);
    if at_psi > fidelity + crate::optimizer::TIE_TOLERANCE {
        t0 = psi_best.t0;
        fidelity = at_psi;
    }
    let delta = fidelity - psi_best.fidelity;
    if delta < -DOMINANCE_TOLERANCE {
        return Err(Error::Numerical(format!(
            "optimal encoding below Ψ at N={n}, r={r}: Δ = {delta:e}"
        )));
    }
    let opt = optimal_encoding(&chain, r, t0)?;
    let distance = encoding_distance(&opt, &psi)?;
    Ok(ComparisonRow {
        n,
        r,
        fidelity,
        delta,
        distance,
        t0,
    })
}

/// t0 in units of ħ/J converted to seconds for a coupling given in kelvin.
pub fn to_physical_time(t0: f64, j_kelvin: f64) -> Result<f64> {
    if !(j_kelvin > 0.0 && j_kelvin.is_finite()) {
        return Err(Error::invalid("j_kelvin", format!("must be positive, got {j_kelvin}")));
    }
    if !t0.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    Ok(t0 * HBAR / (BOLTZMANN * j_kelvin))
}

/// Output of a command: a table, or a raw document such as encoding JSON.
#[derive(Clone, Debug)]
pub enum Output {
    Table(Table),
    Document(String),
}

impl Output {
    pub fn render(&self, format: OutputFormat) -> String {
        match self {
            Output::Table(t) => t.render(format),
            Output::Document(text) => text.clone(),
        }
    }
}

fn sweep_with_progress<P, R, F>(label: &str, grid: &[P], f: F) -> Result<Vec<R>>
where
    P: std::fmt::Debug + Sync,
    R: Send,
    F: Fn(&P) -> Result<R> + Sync,
{
    let total = grid.len();
    let every = (total / 20).max(1);
    let done = AtomicUsize::new(0);
    sweep(grid, |p| {
        let out = f(p);
        let d = done.fetch_add(1, Ordering::Relaxed) + 1;
        if d.is_multiple_of(every) || d == total {
            eprintln!("{label}: {d}/{total}");
        }
        out
    })
}

fn cartesian(outer: &[usize], inner: &[usize]) -> Vec<(usize, usize)> {
    outer.iter().flat_map(|&a| inner.iter().map(move |&b| (a, b))).collect()
}

impl RunConfig {
    fn time_for(&self, n: usize, k: usize) -> Result<f64> {
        match self.time {
            TimePolicy::Fixed(t) => Ok(t),
            TimePolicy::Peak => Ok(psi_peak(n, k, self.window_for(n))?.t0),
        }
    }

    fn psi_table(&self, value_column: &'static str) -> Result<Table> {
        let cells = cartesian(&self.ks, &self.sizes);
        let peaks = sweep_with_progress(self.command.name(), &cells, |&(k, n)| {
            psi_peak(n, k, self.window_for(n))
        })?;
        let mut table = self.table(vec!["N", "k", value_column, "t0", "variant"]);
        for (&(k, n), peak) in cells.iter().zip(&peaks) {
            for v in &self.variants {
                table.push(vec![
                    n.into(),
                    k.into(),
                    peak.fidelity.into(),
                    peak.t0.into(),
                    v.label().into(),
                ]);
            }
        }
        Ok(table)
    }

    fn table2(&self) -> Result<Table> {
        if self.regions.iter().any(|r| r % 2 == 0) {
            eprintln!("table2: warning: even r has no Ψ_k counterpart; Delta_r and d_r are reported as nan");
        }
        let cells = cartesian(&self.regions, &self.sizes);
        let rows = sweep_with_progress("table2", &cells, |&(r, n)| comparison_row(n, r, self.window_for(n)))?;
        let mut table = self.table(vec!["N", "r", "F_r", "Delta_r", "d_r", "t0", "variant"]);
        for row in rows {
            for v in &self.variants {
                table.push(vec![
                    row.n.into(),
                    row.r.into(),
                    row.fidelity.into(),
                    row.delta.into(),
                    row.distance.into(),
                    row.t0.into(),
                    v.label().into(),
                ]);
            }
        }
        Ok(table)
    }

    fn field_sweep(&self) -> Result<Table> {
        let theta = self.theta.expect("validated");
        let pairs = cartesian(&self.sizes, &self.ks);
        let times = sweep_with_progress("field-sweep peaks", &pairs, |&(n, k)| self.time_for(n, k))?;
        let points: Vec<(usize, usize, f64, f64)> = pairs
            .iter()
            .zip(&times)
            .flat_map(|(&(n, k), &t)| self.grid.iter().map(move |&h| (n, k, t, h)))
            .collect();
        let values = sweep_with_progress("field-sweep", &points, |&(n, k, t, h)| {
            let chain = ChainSpec::new(n, 1.0, h)?;
            let params = XiParameters::new(theta, self.phi, k)?;
            self.variants
                .iter()
                .map(|&v| Ok(fidelity_xi(&chain, &params, t, v)?.fidelity))
                .collect::<Result<Vec<f64>>>()
        })?;
        let mut table = self.table(vec!["N", "k", "theta", "t", "h", "F", "variant"]);
        for (&(n, k, t, h), fs) in points.iter().zip(&values) {
            for (v, &f) in self.variants.iter().zip(fs) {
                table.push(vec![
                    n.into(),
                    k.into(),
                    theta.into(),
                    t.into(),
                    h.into(),
                    f.into(),
                    v.label().into(),
                ]);
            }
        }
        Ok(table)
    }

    fn theta_sweep(&self) -> Result<Table> {
        let pairs = cartesian(&self.sizes, &self.ks);
        let times = sweep_with_progress("theta-sweep peaks", &pairs, |&(n, k)| self.time_for(n, k))?;
        let points: Vec<(usize, usize, f64, f64)> = pairs
            .iter()
            .zip(&times)
            .flat_map(|(&(n, k), &t)| self.grid.iter().map(move |&th| (n, k, t, th)))
            .collect();
        let values = sweep_with_progress("theta-sweep", &points, |&(n, k, t, theta)| {
            let chain = ChainSpec::new(n, 1.0, self.field)?;
            let params = XiParameters::new(theta, self.phi, k)?;
            self.variants
                .iter()
                .map(|&v| Ok(fidelity_xi(&chain, &params, t, v)?.fidelity))
                .collect::<Result<Vec<f64>>>()
        })?;
        let mut table = self.table(vec!["N", "k", "t", "h", "theta", "F", "variant"]);
        for (&(n, k, t, theta), fs) in points.iter().zip(&values) {
            for (v, &f) in self.variants.iter().zip(fs) {
                table.push(vec![
                    n.into(),
                    k.into(),
                    t.into(),
                    self.field.into(),
                    theta.into(),
                    f.into(),
                    v.label().into(),
                ]);
            }
        }
        Ok(table)
    }

    fn avg(&self) -> Result<Table> {
        let pairs = cartesian(&self.sizes, &self.ks);
        let values = sweep_with_progress("avg", &pairs, |&(n, k)| {
            let t = self.time_for(n, k)?;
            let decomp = field_decomposition(&unmodulated(n)?, k, t)?;
            let avgs = self
                .variants
                .iter()
                .map(|&v| average_fidelity(decomp.l().norm(), decomp.tail(), k, v))
                .collect::<Result<Vec<f64>>>()?;
            Ok((t, avgs))
        })?;
        let mut table = self.table(vec!["N", "k", "t0", "F_avg", "variant"]);
        for (&(n, k), (t, avgs)) in pairs.iter().zip(&values) {
            for (v, &f) in self.variants.iter().zip(avgs) {
                table.push(vec![n.into(), k.into(), (*t).into(), f.into(), v.label().into()]);
            }
        }
        Ok(table)
    }

    fn load_encoding(path: &PathBuf) -> Result<EncodingState> {
        EncodingState::from_json(&std::fs::read_to_string(path)?)
    }

    fn peak(&self) -> Result<Table> {
        let mut table = self.table(vec!["N", "encoding", "size", "t0", "F", "variant"]);
        let mut emit = |n: usize, label: &str, size: usize, peak: &PeakResult, v: Variant| {
            table.push(vec![
                n.into(),
                label.into(),
                size.into(),
                peak.t0.into(),
                peak.fidelity.into(),
                v.label().into(),
            ]);
        };
        match &self.encoding {
            EncodingSelector::Psi => {
                let cells = cartesian(&self.ks, &self.sizes);
                let peaks = sweep_with_progress("peak", &cells, |&(k, n)| psi_peak(n, k, self.window_for(n)))?;
                for (&(k, n), peak) in cells.iter().zip(&peaks) {
                    for &v in &self.variants {
                        emit(n, "psi", k, peak, v);
                    }
                }
            }
            EncodingSelector::Optimal => {
                let cells = cartesian(&self.regions, &self.sizes);
                let peaks = sweep_with_progress("peak", &cells, |&(r, n)| {
                    find_peak(&TopSingularValue::new(&unmodulated(n)?, r)?, self.window_for(n))
                })?;
                for (&(r, n), peak) in cells.iter().zip(&peaks) {
                    for &v in &self.variants {
                        emit(n, "optimal", r, peak, v);
                    }
                }
            }
            EncodingSelector::Xi => {
                let theta = self.theta.expect("validated");
                let cells: Vec<(usize, usize, Variant)> = cartesian(&self.ks, &self.sizes)
                    .into_iter()
                    .flat_map(|(k, n)| self.variants.iter().map(move |&v| (k, n, v)))
                    .collect();
                let peaks = sweep_with_progress("peak", &cells, |&(k, n, v)| {
                    let chain = ChainSpec::new(n, 1.0, self.field)?;
                    let params = XiParameters::new(theta, self.phi, k)?;
                    make_xi_k(&chain, &params)?;
                    let objective = FnObjective(|t: f64| {
                        fidelity_xi(&chain, &params, t, v)
                            .map(|r| r.fidelity)
                            .unwrap_or(f64::NAN)
                    });
                    find_peak(&objective, self.window_for(n))
                })?;
                for (&(k, n, v), peak) in cells.iter().zip(&peaks) {
                    emit(n, "xi", k, peak, v);
                }
            }
            EncodingSelector::File(path) => {
                let enc = Self::load_encoding(path)?;
                let n = enc.n_sites();
                if !self.sizes.is_empty() && self.sizes != [n] {
                    return Err(Error::invalid("n", format!("encoding file is for N = {n}")));
                }
                let chain = ChainSpec::new(n, 1.0, self.field)?;
                let peak = find_peak(&EncodingFidelity::new(&chain, &enc)?, self.window_for(n))?;
                for &v in &self.variants {
                    emit(n, "file", enc.region_size(), &peak, v);
                }
            }
        }
        Ok(table)
    }

    fn encode(&self) -> Result<String> {
        let enc = match &self.encoding {
            EncodingSelector::File(path) => Self::load_encoding(path)?,
            selector => {
                let n = self.sizes[0];
                let chain = unmodulated(n)?;
                match selector {
                    EncodingSelector::Psi => make_psi_k(&chain, self.ks[0])?,
                    EncodingSelector::Xi => make_xi_k(
                        &chain,
                        &XiParameters::new(self.theta.expect("validated"), self.phi, self.ks[0])?,
                    )?,
                    EncodingSelector::Optimal => {
                        let r = self.regions[0];
                        let t = match self.time {
                            TimePolicy::Fixed(t) => t,
                            TimePolicy::Peak => find_peak(&TopSingularValue::new(&chain, r)?, self.window_for(n))?.t0,
                        };
                        eprintln!("encode: optimal encoding for r={r} at t={t}");
                        optimal_encoding(&chain, r, t)?.to_encoding_state(n)?
                    }
                    EncodingSelector::File(_) => unreachable!(),
                }
            }
        };
        Ok(enc.to_json() + "\n")
    }

    fn phys_time(&self) -> Result<Table> {
        let TimePolicy::Fixed(t) = self.time else {
            return Err(Error::invalid("t", "phys-time needs a numeric time"));
        };
        let seconds = to_physical_time(t, self.j_kelvin)?;
        eprintln!(
            "phys-time: t·ħ/(k_B·J) does not reproduce the 1.12 μs quoted for J = 4.1 K and t0 = 51.75; \
             the conversion behind that figure is unknown"
        );
        let mut table = self.table(vec!["t0", "J_kelvin", "seconds", "variant"]);
        table.push(vec![
            t.into(),
            self.j_kelvin.into(),
            seconds.into(),
            self.variant_label.as_str().into(),
        ]);
        Ok(table)
    }
}

/// Runs a validated command. Must be called inside the worker pool that
/// should execute it.
pub fn run(config: &RunConfig) -> Result<Output> {
    use CommandKind::*;
    Ok(match config.command {
        Table1 => Output::Table(config.psi_table("F")?),
        Scaling => Output::Table(config.psi_table("F_max")?),
        Table2 => Output::Table(config.table2()?),
        FieldSweep => Output::Table(config.field_sweep()?),
        ThetaSweep => Output::Table(config.theta_sweep()?),
        Avg => Output::Table(config.avg()?),
        Peak => Output::Table(config.peak()?),
        Encode => Output::Document(config.encode()?),
        PhysTime => Output::Table(config.phys_time()?),
    })
}

fn execute(args: &Args) -> Result<()> {
    let config = RunConfig::from_args(args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let text = pool.install(|| run(&config))?.render(config.format);
    match &config.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("xychain: error: {e}");
            e.exit_code()
        }
    }
}
