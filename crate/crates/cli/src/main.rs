//! `finverify`: batch driver for DRC, extraction, LVS and PEX.
//!
//! Exit codes: 0 clean / MATCH / success, 1 violations or MISMATCH,
//! 2 usage or I/O errors.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use finverify::density::{density_report, DensityReport};
use finverify::drc::{run_drc_with, DrcReport};
use finverify::layout::{flatten_with, load_layout, render_svg, FlatLayout};
use finverify::netex::{extract, lvs_compare, read_netlist, ExtractOptions, Extraction, LvsResult, Verdict};
use finverify::pex::{annotate_netlist, extract_parasitics, path_delay, CapModel, DelayMode, Parasitics, PexReport};
use finverify::{load_tech, TechDb, Workers};

use config::{Config, Resolved};

#[derive(Parser, Debug)]
#[command(name = "finverify", version, about = "Physical verification for a 15 nm FinFET process")]
struct Cli {
    /// TOML file supplying defaults for the subcommand flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Design rule check
    Drc(Common),
    /// Connectivity and device extraction; writes a SPICE netlist
    Extract(Common),
    /// Compare the extracted netlist against a schematic
    Lvs(Common),
    /// Parasitic extraction and annotated netlist
    Pex(Common),
    /// Whole pipeline plus area bookkeeping in one report
    Report(Common),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Technology file (default: $FINVERIFY_TECH, else the built-in deck)
    #[arg(long, env = "FINVERIFY_TECH")]
    pub tech: Option<PathBuf>,
    /// Layout library (JSON)
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Top cell (default: the library's declared or only root)
    #[arg(long)]
    pub top: Option<String>,
    /// Reference SPICE netlist for lvs and report
    #[arg(long)]
    pub schematic: Option<PathBuf>,
    /// plate | sakurai | sakurai+coupling
    #[arg(long)]
    pub model: Option<String>,
    /// Worker threads; 0 means all cores
    #[arg(long)]
    pub workers: Option<usize>,
    /// JSON report path
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// SVG rendering of the layout with violation markers
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// SPICE output path
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Second layout for the density ratio (report only)
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Input and output nets for the delay summary, `IN,OUT`
    #[arg(long, value_delimiter = ',')]
    pub path: Option<Vec<String>>,
}

/// Failure classes, mapped to exit codes.
enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

/// The error chain, skipping causes whose text the parent already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn run(cli: Cli) -> Result<Outcome> {
    let (name, common) = match cli.command {
        Command::Drc(c) => ("drc", c),
        Command::Extract(c) => ("extract", c),
        Command::Lvs(c) => ("lvs", c),
        Command::Pex(c) => ("pex", c),
        Command::Report(c) => ("report", c),
    };
    let file = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let cfg = file.merge(common, cli.config.as_deref());
    let ctx = Context_::load(&cfg)?;
    match name {
        "drc" => drc(&ctx, &cfg),
        "extract" => extract_cmd(&ctx, &cfg),
        "lvs" => lvs(&ctx, &cfg),
        "pex" => pex(&ctx, &cfg),
        _ => report(&ctx, &cfg),
    }
}

/// Loaded inputs shared by every subcommand.
struct Context_ {
    tech: TechDb,
    top: String,
    flat: FlatLayout,
    workers: Workers,
}

impl Context_ {
    fn load(cfg: &Resolved) -> Result<Self> {
        let tech = match &cfg.tech {
            Some(p) => load_tech(p).with_context(|| format!("loading tech {}", p.display()))?,
            None => TechDb::builtin(),
        };
        let layout = cfg.layout.as_ref().ok_or_else(|| anyhow!("--layout is required"))?;
        let lib = load_layout(layout, &tech).with_context(|| format!("loading layout {}", layout.display()))?;
        let top = match &cfg.top {
            Some(t) => {
                lib.cell(t).ok_or_else(|| anyhow!("top cell {t:?} not found in {}", layout.display()))?;
                t.clone()
            }
            None => lib.top_cell()?.to_string(),
        };
        let workers = match cfg.workers {
            None | Some(0) => Workers::available(),
            Some(n) => Workers::new(n),
        };
        let flat = flatten_with(&lib, &top, workers)?;
        log::info!("{top}: {} shapes after flattening, {} worker(s)", flat.shape_count(), workers.get());
        Ok(Context_ { tech, top, flat, workers })
    }

    fn extract(&self) -> Result<Extraction> {
        let opts = ExtractOptions { allow_shorts: true, workers: self.workers };
        Ok(extract(&self.flat, &self.tech, &self.top, opts)?)
    }

    fn drc(&self) -> DrcReport {
        run_drc_with(&self.flat, &self.tech, self.workers)
    }

    fn pex(&self, x: &Extraction, model: CapModel) -> Parasitics {
        extract_parasitics(&self.flat, &self.tech, x, model, self.workers)
    }
}

fn model_of(cfg: &Resolved) -> Result<CapModel> {
    cfg.model.as_deref().map_or(Ok(CapModel::default()), |m| m.parse().map_err(|e: String| anyhow!(e)))
}

fn short_notes(x: &Extraction) -> Vec<String> {
    x.connectivity.shorts.iter().map(|g| format!("short between pin labels {}", g.join(", "))).collect()
}

fn drc(ctx: &Context_, cfg: &Resolved) -> Result<Outcome> {
    let rep = ctx.drc();
    output::write_opt(cfg.report.as_deref(), &rep.to_json())?;
    if let Some(p) = &cfg.svg {
        output::write_atomic(p, &render_svg(&ctx.flat, &rep.violations, &ctx.tech))?;
    }
    println!("{}: {} rule(s) checked, {} violation(s)", ctx.top, rep.rules_checked, rep.violations.len());
    for v in &rep.violations {
        let l = &v.location;
        println!("  {} [{}, {}, {}, {}] {}", v.rule_id, l.lo.x, l.lo.y, l.hi.x, l.hi.y, v.message);
    }
    Ok(if rep.is_clean() { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct DeviceRow {
    name: String,
    model: &'static str,
    d: String,
    g: String,
    s: String,
    b: String,
    nfin: u32,
    l_nm: i64,
    ad_nm2: i64,
    as_nm2: i64,
    pd_nm: i64,
    ps_nm: i64,
}

#[derive(Serialize)]
struct ExtractReport {
    cell: String,
    ports: Vec<String>,
    nets: Vec<String>,
    devices: Vec<DeviceRow>,
    shorts: Vec<Vec<String>>,
}

fn extract_report(x: &Extraction) -> ExtractReport {
    let n = &x.netlist;
    ExtractReport {
        cell: n.name.clone(),
        ports: n.ports.clone(),
        nets: n.declared_nets.clone(),
        devices: n
            .devices
            .iter()
            .map(|d| {
                let g = d.geometry.unwrap_or_default();
                DeviceRow {
                    name: d.name.clone(),
                    model: d.kind.model(),
                    d: d.d.clone(),
                    g: d.g.clone(),
                    s: d.s.clone(),
                    b: d.b.clone(),
                    nfin: d.nfin,
                    l_nm: d.l,
                    ad_nm2: g.ad,
                    as_nm2: g.as_,
                    pd_nm: g.pd,
                    ps_nm: g.ps,
                }
            })
            .collect(),
        shorts: x.connectivity.shorts.clone(),
    }
}

fn extract_cmd(ctx: &Context_, cfg: &Resolved) -> Result<Outcome> {
    let x = ctx.extract()?;
    output::write_opt(cfg.netlist.as_deref(), &x.netlist.to_spice())?;
    output::write_opt(cfg.report.as_deref(), &output::json(&extract_report(&x)))?;
    println!("{}: {} device(s), {} net(s)", ctx.top, x.devices.len(), x.connectivity.nets.len());
    let notes = short_notes(&x);
    for n in &notes {
        eprintln!("warning: {n}");
    }
    Ok(if notes.is_empty() { Outcome::Pass } else { Outcome::Fail })
}

fn lvs_result(ctx: &Context_, x: &Extraction, schematic: &Path) -> Result<LvsResult> {
    let sch = read_netlist(schematic).with_context(|| format!("reading schematic {}", schematic.display()))?;
    let mut res = lvs_compare(&x.netlist, &sch);
    let notes = short_notes(x);
    if !notes.is_empty() {
        res.verdict = Verdict::Mismatch;
        let mut d = notes;
        d.append(&mut res.diagnostics);
        res.diagnostics = d;
    }
    let _ = ctx;
    Ok(res)
}

fn lvs(ctx: &Context_, cfg: &Resolved) -> Result<Outcome> {
    let schematic = cfg.schematic.as_ref().ok_or_else(|| anyhow!("--schematic is required for lvs"))?;
    let x = ctx.extract()?;
    let res = lvs_result(ctx, &x, schematic)?;
    output::write_opt(cfg.netlist.as_deref(), &x.netlist.to_spice())?;
    output::write_opt(cfg.report.as_deref(), &res.to_json())?;
    println!("{}: {}", ctx.top, if res.is_match() { "MATCH" } else { "MISMATCH" });
    for d in &res.diagnostics {
        println!("  {d}");
    }
    Ok(if res.is_match() { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct DelaySummary {
    input: String,
    output: String,
    none_s: f64,
    device_s: f64,
    extracted_s: f64,
}

#[derive(Serialize)]
struct PexOut<'a> {
    #[serde(flatten)]
    report: &'a PexReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    delay: Option<&'a DelaySummary>,
}

fn delay_summary(ctx: &Context_, x: &Extraction, p: &Parasitics, path: &[String]) -> Result<DelaySummary> {
    let [i, o] = path else { return Err(anyhow!("--path takes exactly two nets, IN,OUT")) };
    let total = |m: DelayMode| -> Result<f64> { Ok(path_delay(x, &ctx.tech, Some(p), i, o, m)?.total_s) };
    Ok(DelaySummary {
        input: i.clone(),
        output: o.clone(),
        none_s: total(DelayMode::None)?,
        device_s: total(DelayMode::DeviceGeometry)?,
        extracted_s: total(DelayMode::Extracted)?,
    })
}

fn pex(ctx: &Context_, cfg: &Resolved) -> Result<Outcome> {
    let model = model_of(cfg)?;
    let x = ctx.extract()?;
    let p = ctx.pex(&x, model);
    let rep = p.report();
    let delay = cfg.path.as_deref().map(|path| delay_summary(ctx, &x, &p, path)).transpose()?;
    if let Some(path) = &cfg.netlist {
        let annotated = annotate_netlist(&x.netlist, &p.elements, &p.graph.terminals)?;
        output::write_atomic(path, &annotated.to_spice())?;
    }
    output::write_opt(cfg.report.as_deref(), &output::json(&PexOut { report: &rep, delay: delay.as_ref() }))?;
    println!("{}: {} parasitic element(s), model {}", ctx.top, rep.elements, cfg.model.as_deref().unwrap_or("sakurai+coupling"));
    for (net, v) in &rep.nets {
        println!("  {net}: C_ground {:.3} aF, C_coupling {:.3} aF, R {:.3} ohm", v.c_ground_af, v.c_coupling_af, v.r_total_ohm);
    }
    if let Some(d) = &delay {
        println!(
            "  delay {} -> {}: {:.3} ps intrinsic, {:.3} ps with junctions, {:.3} ps extracted",
            d.input,
            d.output,
            d.none_s * 1e12,
            d.device_s * 1e12,
            d.extracted_s * 1e12
        );
    }
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct FullReport {
    cell: String,
    drc: DrcReport,
    extract: ExtractReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    lvs: Option<LvsResult>,
    pex: PexReport,
    density: DensityReport,
}

fn report(ctx: &Context_, cfg: &Resolved) -> Result<Outcome> {
    let drc = ctx.drc();
    let x = ctx.extract()?;
    let lvs = cfg.schematic.as_ref().map(|s| lvs_result(ctx, &x, s)).transpose()?;
    let p = ctx.pex(&x, model_of(cfg)?);
    let reference = match &cfg.reference {
        Some(path) => {
            let lib = load_layout(path, &ctx.tech).with_context(|| format!("loading reference {}", path.display()))?;
            let top = lib.top_cell()?.to_string();
            Some(flatten_with(&lib, &top, ctx.workers)?)
        }
        None => None,
    };
    let density = density_report(&ctx.flat, reference.as_ref());
    if let Some(p) = &cfg.svg {
        output::write_atomic(p, &render_svg(&ctx.flat, &drc.violations, &ctx.tech))?;
    }
    if let Some(path) = &cfg.netlist {
        let annotated = annotate_netlist(&x.netlist, &p.elements, &p.graph.terminals)?;
        output::write_atomic(path, &annotated.to_spice())?;
    }
    let ok = drc.is_clean() && lvs.as_ref().is_none_or(|l| l.is_match());
    println!("{}: DRC {} violation(s), {} device(s)", ctx.top, drc.violations.len(), x.devices.len());
    if let Some(l) = &lvs {
        println!("  LVS {}", if l.is_match() { "MATCH" } else { "MISMATCH" });
    }
    if let Some(r) = density.area_ratio {
        println!("  area ratio vs reference {r:.4}");
    }
    let full = FullReport { cell: ctx.top.clone(), drc, extract: extract_report(&x), lvs, pex: p.report(), density };
    output::write_opt(cfg.report.as_deref(), &output::json(&full))?;
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}
