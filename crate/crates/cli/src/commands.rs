use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use genepat::classifier::DEFAULT_WINDOW_LEN;
use genepat::ptmap::{center_curves, centers_to_csv, points_to_csv, read_points_csv};
use genepat::synthgen::{generate_unchecked, generate_with};
use genepat::trace::{read_trace_file, write_binary, write_text, TraceFormat};
use genepat::*;

use crate::{
    AdviseArgs, ClassifyArgs, Cli, Command, GenArgs, Global, HotspotsArgs, MetricsArgs, PtmapArgs, RenderArgs, ReportArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    let kv = match &cli.global.config {
        Some(path) => KvConfig::load(path).map_err(|e| with_path(path, e))?,
        None => KvConfig::new(),
    };
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => gen(a, g, &kv),
        Command::Classify(a) => classify(a, g, &kv),
        Command::Simulate(a) => {
            let t = load_trace(&a.trace)?;
            emit(g, simulate(&t, &HierarchyConfig::from_kv(&kv)?)?.to_csv().as_bytes())
        }
        Command::Metrics(a) => metrics(a, g, &kv),
        Command::Ptmap(a) => ptmap(a, g, &kv),
        Command::Advise(a) => advise(a, g),
        Command::Render(a) => render(a, g),
        Command::Hotspots(a) => hotspots(a, g),
        Command::Report(a) => report(a, g, &kv),
    }
}

fn param(msg: impl Into<String>) -> Error {
    Error::Param(msg.into())
}

fn emit(g: &Global, bytes: &[u8]) -> Result<()> {
    match &g.out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(|e| with_path(path, e.into()))
}

/// Read and validate a trace; invalid records are an input-format error.
fn load_trace(path: &Path) -> Result<Trace> {
    let t = read_trace_file(path).map_err(|e| with_path(path, e))?;
    let report = validate_trace(&t);
    if let Some(v) = report.violations.first() {
        let line = v.index.map_or(0, |i| i + 1);
        return Err(Error::Format {
            line,
            msg: format!("{}: {v}", path.display()),
        });
    }
    Ok(t)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(path, e.into()))
}

fn window_len(flag: Option<usize>, kv: &KvConfig) -> Result<usize> {
    Ok(match flag {
        Some(w) => w,
        None => kv.get("window_len")?.unwrap_or(DEFAULT_WINDOW_LEN),
    })
}

fn gen_spec(label: PatternLabel, a: &GenArgs, g: &Global, kv: &KvConfig) -> Result<GenSpec> {
    let mut spec = GenSpec::from_kv(kv, Some(label))?;
    let set = |slot: &mut u64, v: Option<u64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut spec.stride, a.stride);
    set(&mut spec.period, a.period);
    set(&mut spec.n_outer, a.n_outer);
    set(&mut spec.footprint, a.footprint);
    set(&mut spec.elem_count, a.elem_count);
    set(&mut spec.base_addr, a.base_addr);
    set(&mut spec.seed, g.seed);
    if let Some(size) = a.size {
        spec.size = size;
    }
    if let Some(op) = &a.op_mix {
        spec.op_mix = op.parse()?;
    }
    Ok(spec)
}

fn parse_mix_arg(raw: &str) -> Result<Vec<(PatternLabel, f64)>> {
    raw.split(',')
        .map(|part| {
            let (l, w) = part
                .split_once('=')
                .ok_or_else(|| param(format!("mix part {part:?} is not LABEL=FRACTION")))?;
            let w: f64 = w.trim().parse().map_err(|_| param(format!("bad fraction in {part:?}")))?;
            Ok((l.trim().parse()?, w))
        })
        .collect()
}

fn gen(a: &GenArgs, g: &Global, kv: &KvConfig) -> Result<()> {
    let ccfg = ClassifierConfig::from_kv(kv)?;
    let make = |label| -> Result<Trace> {
        let spec = gen_spec(label, a, g, kv)?;
        if a.unchecked {
            generate_unchecked(&spec)
        } else {
            generate_with(&spec, &ccfg)
        }
    };
    let trace = if let Some(mix) = &a.mix {
        let parts = parse_mix_arg(mix)?
            .into_iter()
            .map(|(l, w)| {
                let spec = gen_spec(l, a, g, kv)?;
                if !a.unchecked {
                    spec.validate(&ccfg)?;
                }
                Ok((spec, w))
            })
            .collect::<Result<Vec<_>>>()?;
        generate_mix(&parts, a.total)?
    } else {
        let label = match a.pattern {
            Some(l) => l,
            None => kv.get("pattern")?.ok_or_else(|| param("gen needs --pattern or --mix"))?,
        };
        make(label)?
    };
    let mut bytes = Vec::new();
    match g.format {
        TraceFormat::Text => write_text(&trace, &mut bytes)?,
        TraceFormat::Binary => write_binary(&trace, &mut bytes)?,
    }
    emit(g, &bytes)
}

fn classify_csv(d: &Decomposition) -> String {
    let mut out = String::from("window_start,window_len,label,slope,period_class\n");
    for w in &d.windows {
        let _ = writeln!(out, "{},{},{},{:.3},{}", w.start, w.len, w.label, w.features.slope_k, w.features.periodic.as_str());
    }
    let _ = writeln!(out, "MIX:{}", d.mix.to_csv_row());
    out
}

fn classify(a: &ClassifyArgs, g: &Global, kv: &KvConfig) -> Result<()> {
    let t = load_trace(&a.trace)?;
    let d = decompose_trace(&t, &ClassifierConfig::from_kv(kv)?, window_len(a.window, kv)?)?;
    emit(g, classify_csv(&d).as_bytes())
}

fn metrics(a: &MetricsArgs, g: &Global, kv: &KvConfig) -> Result<()> {
    let counters = match (&a.counters, &a.trace) {
        (Some(path), _) => SimCounters::from_csv(open(path)?)?,
        (None, Some(trace)) => simulate(&load_trace(trace)?, &HierarchyConfig::from_kv(kv)?)?,
        (None, None) => return Err(param("metrics needs a trace or --counters")),
    };
    let opts = MetricOptions {
        prefetch_ratio_demand_only: a.demand_only,
    };
    emit(g, derive_metrics_with(&counters, opts).to_csv().as_bytes())
}

fn curves_csv(curves: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::from("suite,l3_apc,ral\n");
    for (suite, pts) in curves {
        for (apc, ral) in pts {
            let _ = writeln!(out, "{suite},{apc:.6e},{ral:.6e}");
        }
    }
    out
}

/// Centres, ordering, curves and the plot for a set of points, as
/// `(file name, contents)` pairs.
fn ptmap_outputs(points: &[PtMapPoint], cfg: &PtMapConfig, curve_points: usize) -> Result<Vec<(&'static str, String)>> {
    let centers = suite_centers(points)?;
    let order = order_suites(&centers, cfg)?;
    let curves = center_curves(&centers, curve_points, cfg)?;
    let spec = RenderSpec {
        title: "PT-MAP".into(),
        ..Default::default()
    };
    Ok(vec![
        ("centers.csv", centers_to_csv(&centers, cfg)?),
        ("order.txt", order.join("\n") + "\n"),
        ("curves.csv", curves_csv(&curves)),
        ("ptmap.svg", render_ptmap(points, &centers, &curves, &spec)?),
    ])
}

fn write_dir(dir: &Path, files: &[(impl AsRef<Path>, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn ptmap(a: &PtmapArgs, g: &Global, kv: &KvConfig) -> Result<()> {
    let cfg = PtMapConfig::from_kv(kv)?;
    let points = read_points_csv(open(&a.points)?, &cfg)?;
    let outputs = ptmap_outputs(&points, &cfg, a.curve_points)?;
    match &g.out {
        Some(dir) => write_dir(dir, &outputs),
        None => {
            let order = &outputs[1].1;
            let text = format!("{}ORDER:{}\n", outputs[0].1, order.trim_end().replace('\n', ","));
            emit(g, text.as_bytes())
        }
    }
}

fn advise(a: &AdviseArgs, g: &Global) -> Result<()> {
    let mix = PatternMix::parse(&read_file(&a.mix)?)?;
    let advice = recommend(&mix)?;
    let text = match (a.csv, a.text) {
        (true, _) => advice.to_csv(),
        (_, true) => advice.to_text(),
        _ => format!("{}\n{}", advice.to_csv(), advice.to_text()),
    };
    emit(g, text.as_bytes())
}

fn render(a: &RenderArgs, g: &Global) -> Result<()> {
    let t = load_trace(&a.trace)?;
    let spec = RenderSpec {
        width: a.width,
        height: a.height,
        max_points: a.max_points,
        log_axes: a.log,
        title: a.title.clone().unwrap_or_else(|| a.trace.display().to_string()),
    };
    emit(g, render_pattern_figure(&t, &spec)?.as_bytes())
}

fn hotspots(a: &HotspotsArgs, g: &Global) -> Result<()> {
    let mut profile = ProgramProfile::parse(open(&a.profile)?)?;
    if let Some(d) = a.delta {
        profile.threshold_pct = d;
    }
    let mut out = String::from("segment_id,importance\n");
    for (id, imp) in select_hotspots(&profile)? {
        let _ = writeln!(out, "{id},{imp:.6}");
    }
    emit(g, out.as_bytes())
}

struct ReportEntry {
    name: String,
    suite: String,
    decomposition: Decomposition,
    counters: SimCounters,
    metrics: MetricSet,
    advice: Advice,
    figure: String,
}

fn split_input(raw: &str) -> (String, PathBuf) {
    match raw.split_once('=') {
        Some((suite, path)) if !suite.is_empty() && !suite.contains(['/', '\\']) => (suite.to_string(), PathBuf::from(path)),
        _ => ("default".to_string(), PathBuf::from(raw)),
    }
}

/// File stems, made unique by appending the input position on collision.
fn unique_names(paths: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = paths
        .iter()
        .map(|p| p.file_stem().map_or_else(|| "trace".to_string(), |s| s.to_string_lossy().into_owned()))
        .collect();
    stems
        .iter()
        .enumerate()
        .map(|(i, s)| if stems.iter().filter(|o| *o == s).count() > 1 { format!("{s}-{i}") } else { s.clone() })
        .collect()
}

fn report(a: &ReportArgs, g: &Global, kv: &KvConfig) -> Result<()> {
    let dir = g.out.as_ref().ok_or_else(|| param("report needs --out <directory>"))?;
    let ccfg = ClassifierConfig::from_kv(kv)?;
    let hcfg = HierarchyConfig::from_kv(kv)?;
    let pcfg = PtMapConfig::from_kv(kv)?;
    let wl = window_len(a.window, kv)?;
    let inputs: Vec<(String, PathBuf)> = a.inputs.iter().map(|s| split_input(s)).collect();
    let names = unique_names(&inputs.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>());

    let entries = inputs
        .par_iter()
        .zip(names.par_iter())
        .map(|((suite, path), name)| {
            let t = load_trace(path)?;
            let decomposition = decompose_trace(&t, &ccfg, wl)?;
            let counters = simulate(&t, &hcfg)?;
            let metrics = derive_metrics(&counters);
            let advice = recommend(&decomposition.mix)?;
            let spec = RenderSpec {
                title: format!("{name} ({suite})"),
                ..Default::default()
            };
            let figure = render_pattern_figure(&t, &spec)?;
            Ok(ReportEntry {
                name: name.clone(),
                suite: suite.clone(),
                decomposition,
                counters,
                metrics,
                advice,
                figure,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut files: Vec<(String, String)> = Vec::new();
    let mut summary = String::from("trace,suite,dominant,P1,P2,P3,P4,P5,P6,ral,l3_apc,prefetch_request_ratio\n");
    let mut points = Vec::new();
    let mut by_suite: BTreeMap<&str, Vec<PatternMix>> = BTreeMap::new();
    for e in &entries {
        files.push((format!("{}.classify.csv", e.name), classify_csv(&e.decomposition)));
        files.push((format!("{}.counters.csv", e.name), e.counters.to_csv()));
        files.push((format!("{}.metrics.csv", e.name), e.metrics.to_csv()));
        files.push((format!("{}.advice.csv", e.name), e.advice.to_csv()));
        files.push((format!("{}.svg", e.name), e.figure.clone()));
        let mix = &e.decomposition.mix;
        let _ = writeln!(
            summary,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            e.name,
            e.suite,
            mix.dominant(),
            mix.to_csv_row(),
            e.metrics.ral,
            e.metrics.l3_apc,
            e.metrics.prefetch_request_ratio
        );
        points.push(PtMapPoint::new(e.name.as_str(), e.suite.as_str(), e.metrics.l3_apc, e.metrics.ral, pcfg.epsilon)?);
        by_suite.entry(&e.suite).or_default().push(*mix);
    }
    let mut suites = String::from("suite,P1,P2,P3,P4,P5,P6\n");
    for (suite, mixes) in &by_suite {
        let _ = writeln!(suites, "{suite},{}", aggregate_suite(mixes)?.to_csv_row());
    }
    files.push(("summary.csv".into(), summary));
    files.push(("suites.csv".into(), suites));
    files.push(("points.csv".into(), points_to_csv(&points)));
    files.extend(ptmap_outputs(&points, &pcfg, 64)?.into_iter().map(|(n, b)| (n.to_string(), b)));
    write_dir(dir, &files)
}
