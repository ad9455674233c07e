//! Pipeline commands behind the `hodgeflow` binary.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use hodgeflow::cluster::{
    self, adjusted_mutual_information, geo_kmeans, harmonic_cluster, harmonic_signal_edges,
    system_pair_clusters, EdgeClustering, KMeansOptions, ProviderGeo,
};
use hodgeflow::complex::{antisymmetrize, build_clique_complex, ComplexSummary, EdgeFlow, FlowNetwork, NodeOrder, OrientedComplex};
use hodgeflow::hodge::{decompose, harmonic_basis, DecomposeOptions, HarmonicOptions, HodgeDecomposition, Mode};
use hodgeflow::ingest::{
    self, assemble_networks, geocode, AssemblyReport, GeoHit, GeocodeCache, GeocodeFailure, Geocoder,
    ProviderRecord, RegionResolver, RegionScope, TaxonomyFilter,
};
use hodgeflow::metrics::{self, metrics_table, region_metrics, RegionMetrics};
use hodgeflow::regress::{self, fit_ols, format_table, wald_flow_test, ModelSpec, Panel};
use hodgeflow::synth::{synthetic_dataset, DatasetConfig};

/// Environment variable naming the geocode cache file.
pub const CACHE_ENV: &str = "HODGEFLOW_CACHE";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub edges: Option<PathBuf>,
    pub providers: Option<PathBuf>,
    pub crosswalk: Option<PathBuf>,
    pub panel: Option<PathBuf>,
    pub scope: RegionScope,
    pub mode: Mode,
    pub k: usize,
    pub seed: u64,
    pub tol_eigen: f64,
    pub tol_solve: f64,
    pub out: PathBuf,
    pub jobs: usize,
    /// Geocode cache; taken from [`CACHE_ENV`] by the binary.
    pub cache: Option<PathBuf>,
    pub taxonomy_allow: Vec<String>,
    pub taxonomy_deny: Vec<String>,
}

impl RunConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            edges: None,
            providers: None,
            crosswalk: None,
            panel: None,
            scope: RegionScope::Hsa,
            mode: Mode::Normalized,
            k: cluster::DEFAULT_K,
            seed: 0,
            tol_eigen: 1e-8,
            tol_solve: 1e-10,
            out: out.into(),
            jobs: 1,
            cache: None,
            taxonomy_allow: Vec::new(),
            taxonomy_deny: Vec::new(),
        }
    }

    /// Reject missing inputs and non-positive tolerances.
    pub fn validate(&self) -> Result<()> {
        for p in [&self.edges, &self.providers, &self.crosswalk, &self.panel].into_iter().flatten() {
            if !p.exists() {
                bail!("input file not found: {}", p.display());
            }
        }
        if !(self.tol_eigen > 0.0) || !(self.tol_solve > 0.0) {
            bail!("tolerances must be positive");
        }
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        Ok(())
    }

    fn require<'a>(&self, p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        p.as_deref().with_context(|| format!("--{flag} is required for this command"))
    }
}

/// Output directory that records a digest of every file written.
struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &RunConfig, extra: serde_json::Value, warnings: &[String]) -> Result<Manifest> {
        let config = serde_json::to_value(ManifestConfig::new(cfg)?)?;
        let config_hash = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        let manifest = Manifest {
            tool: "hodgeflow",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            config_hash,
            conventions: conventions(),
            outputs: std::mem::take(&mut self.files),
            details: extra,
            warnings: warnings.to_vec(),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let name = format!("{command}.manifest.json");
        fs::write(self.dir.join(&name), text)?;
        Ok(manifest)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub conventions: BTreeMap<&'static str, &'static str>,
    /// Output file (relative to the output directory) to SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub details: serde_json::Value,
    pub warnings: Vec<String>,
}

/// Configuration as recorded in the manifest: inputs by file name and digest,
/// so the same inputs hash identically wherever they live.
#[derive(Debug, Serialize)]
struct ManifestConfig {
    inputs: BTreeMap<&'static str, InputDigest>,
    scope: &'static str,
    mode: &'static str,
    k: usize,
    seed: u64,
    tol_eigen: f64,
    tol_solve: f64,
    taxonomy_allow: Vec<String>,
    taxonomy_deny: Vec<String>,
}

#[derive(Debug, Serialize)]
struct InputDigest {
    name: String,
    sha256: String,
}

impl ManifestConfig {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let mut inputs = BTreeMap::new();
        for (role, p) in [
            ("edges", &cfg.edges),
            ("providers", &cfg.providers),
            ("crosswalk", &cfg.crosswalk),
            ("panel", &cfg.panel),
        ] {
            if let Some(p) = p {
                let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                inputs.insert(
                    role,
                    InputDigest {
                        name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                        sha256: sha256_hex(&bytes),
                    },
                );
            }
        }
        Ok(Self {
            inputs,
            scope: cfg.scope.as_str(),
            mode: cfg.mode.as_str(),
            k: cfg.k,
            seed: cfg.seed,
            tol_eigen: cfg.tol_eigen,
            tol_solve: cfg.tol_solve,
            taxonomy_allow: cfg.taxonomy_allow.clone(),
            taxonomy_deny: cfg.taxonomy_deny.clone(),
        })
    }
}

fn conventions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("ami_normalizer", "arithmetic mean of entropies; hypergeometric expected MI"),
        ("summary_sd", "population"),
        ("regression_se", "cluster-robust on region, CR1 (G/(G-1))((N-1)/(N-K))"),
        ("wald_reference", "F(3, G-1)"),
        (
            "harmonic_clustering",
            "absolute-cosine spectral clustering of unit harmonic rows (stand-in for elastic-net subspace clustering)",
        ),
        ("edge_orientation", "lexicographic node id order"),
        ("cross_region_edges", "dropped and counted"),
    ])
}

/// Geocoder that never finds anything; only the cache can resolve addresses.
struct CacheOnly;

impl Geocoder for CacheOnly {
    fn lookup(&mut self, _address: &str) -> std::result::Result<GeoHit, GeocodeFailure> {
        Err(GeocodeFailure::NotFound)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestSummary {
    pub rejected_edge_rows: Vec<String>,
    pub rejected_provider_rows: Vec<String>,
    pub assembly: AssemblyReport,
    pub uncoded_providers: usize,
}

struct Loaded {
    networks: Vec<FlowNetwork>,
    providers: Vec<ProviderRecord>,
    summary: IngestSummary,
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn load(cfg: &RunConfig) -> Result<Loaded> {
    cfg.validate()?;
    let edges_path = cfg.require(&cfg.edges, "edges")?;
    let providers_path = cfg.require(&cfg.providers, "providers")?;
    let edges = ingest::parse_edges(open(edges_path)?).with_context(|| format!("parsing {}", edges_path.display()))?;
    let providers =
        ingest::parse_providers(open(providers_path)?).with_context(|| format!("parsing {}", providers_path.display()))?;
    let crosswalk = match &cfg.crosswalk {
        Some(p) => ingest::parse_crosswalk(open(p)?).with_context(|| format!("parsing {}", p.display()))?.records,
        None => Vec::new(),
    };
    let mut records = providers.records;
    let mut uncoded = records.iter().filter(|p| p.coordinates().is_none()).count();
    if let Some(cache_path) = &cfg.cache {
        let mut cache = GeocodeCache::open(cache_path)?;
        let report = geocode(&mut records, &mut CacheOnly, &mut cache)?;
        uncoded = report.uncoded.len();
    }
    let filter = TaxonomyFilter {
        allow: cfg.taxonomy_allow.iter().cloned().collect(),
        deny: cfg.taxonomy_deny.iter().cloned().collect(),
    };
    let assembly = assemble_networks(&edges.records, &records, &RegionResolver::new(&crosswalk), cfg.scope, &filter)?;
    let row_report = |r: &ingest::RowError| format!("line {}: {}", r.line, r.message);
    Ok(Loaded {
        networks: assembly.networks,
        providers: records,
        summary: IngestSummary {
            rejected_edge_rows: edges.rejected.iter().map(row_report).collect(),
            rejected_provider_rows: providers.rejected.iter().map(row_report).collect(),
            assembly: assembly.report,
            uncoded_providers: uncoded,
        },
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?)
}

/// File-name-safe form of a region id.
fn file_stem(region: &str, year: i32) -> String {
    let safe: String = region
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{safe}__{year}")
}

struct Decomposed {
    network: FlowNetwork,
    complex: OrientedComplex,
    summary: ComplexSummary,
    flow: EdgeFlow<f64>,
    decomposition: HodgeDecomposition<f64>,
    metrics: RegionMetrics,
}

fn complex_of(network: &FlowNetwork) -> Result<(OrientedComplex, EdgeFlow<f64>)> {
    let (support, flow) = antisymmetrize::<f64>(network, &NodeOrder::Lexicographic)?;
    Ok((build_clique_complex(&support)?, flow))
}

fn decompose_network(network: &FlowNetwork, cfg: &RunConfig) -> Result<Decomposed> {
    let (complex, flow) = complex_of(network)?;
    let summary = ComplexSummary::new(&complex, None)?;
    let mut opts = DecomposeOptions::new(cfg.mode);
    opts.solver_tolerance = cfg.tol_solve;
    let decomposition = decompose(&flow, &complex, &opts)
        .with_context(|| format!("decomposing {} {}", network.region(), network.year()))?;
    let metrics = region_metrics(&decomposition, &flow, network.region(), network.year())?;
    Ok(Decomposed {
        network: network.clone(),
        complex,
        summary,
        flow,
        decomposition,
        metrics,
    })
}

/// Decompose every non-empty network; empty ones are skipped with a warning.
fn decompose_all(loaded: &Loaded, cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Vec<Decomposed>> {
    let (empty, work): (Vec<&FlowNetwork>, Vec<&FlowNetwork>) =
        loaded.networks.iter().partition(|n| n.arc_count() == 0);
    for n in empty {
        warnings.push(format!("{} {}: empty network skipped", n.region(), n.year()));
    }
    pool(cfg.jobs)?.install(|| work.par_iter().map(|n| decompose_network(n, cfg)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CommandReport {
    pub manifest: Manifest,
}

fn summary_csv(rows: &[&Decomposed]) -> String {
    let mut s = String::from("region,year,n0,n1,n2,beta0,beta1\n");
    for d in rows {
        let c = &d.summary;
        s += &format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(d.network.region()),
            d.network.year(),
            c.n0,
            c.n1,
            c.n2,
            c.betti.beta0,
            c.betti.beta1
        );
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn decomposition_csv(d: &Decomposed) -> String {
    let mut s = String::from("edge,from_id,to_id,f,g,r,h\n");
    let dec = &d.decomposition;
    for e in 0..d.complex.n1() {
        let (a, b) = d.complex.edge_endpoints(e);
        s += &format!(
            "{e},{},{},{},{},{},{}\n",
            csv_field(a),
            csv_field(b),
            d.flow[e],
            dec.gradient[e],
            dec.curl[e],
            dec.harmonic[e]
        );
    }
    s
}

fn metrics_csv(rows: &[RegionMetrics]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    metrics::write_region_metrics(&mut buf, rows)?;
    Ok(buf)
}

/// Per region×year complex summary, per-edge decomposition and flow metrics.
pub fn cmd_decompose(cfg: &RunConfig) -> Result<CommandReport> {
    let loaded = load(cfg)?;
    let mut warnings = Vec::new();
    let done = decompose_all(&loaded, cfg, &mut warnings)?;
    let mut out = Outputs::new(&cfg.out)?;
    let refs: Vec<&Decomposed> = done.iter().collect();
    out.write("complex_summary.csv", summary_csv(&refs).as_bytes())?;
    for d in &done {
        let name = format!("decomposition/{}.csv", file_stem(d.network.region(), d.network.year()));
        out.write(&name, decomposition_csv(d).as_bytes())?;
    }
    let rows: Vec<RegionMetrics> = done.iter().map(|d| d.metrics.clone()).collect();
    out.write("region_metrics.csv", &metrics_csv(&rows)?)?;
    let details = serde_json::json!({ "ingest": loaded.summary, "networks": done.len() });
    Ok(CommandReport {
        manifest: out.finish("decompose", cfg, details, &warnings)?,
    })
}

/// Region metrics plus grouped summaries and histograms. `groups` maps
/// region ids to summary groups; unmapped regions fall in `all`.
pub fn cmd_metrics(cfg: &RunConfig, groups: Option<&Path>, bin_width: f64) -> Result<CommandReport> {
    let loaded = load(cfg)?;
    let mut warnings = Vec::new();
    let done = decompose_all(&loaded, cfg, &mut warnings)?;
    let mut out = Outputs::new(&cfg.out)?;
    let rows: Vec<RegionMetrics> = done.iter().map(|d| d.metrics.clone()).collect();
    out.write("region_metrics.csv", &metrics_csv(&rows)?)?;
    if rows.is_empty() {
        warnings.push("no non-empty networks; summaries omitted".into());
    } else {
        let map = match groups {
            Some(p) => metrics::parse_region_groups(open(p)?)?,
            None => BTreeMap::new(),
        };
        let table = metrics_table(&rows, |r| map.get(&r.region).cloned().unwrap_or_else(|| "all".into()), bin_width)?;
        let mut buf = Vec::new();
        table.write_summary(&mut buf)?;
        out.write("metrics_summary.csv", &buf)?;
        let mut buf = Vec::new();
        table.write_histograms(&mut buf)?;
        out.write("metrics_histogram.csv", &buf)?;
    }
    let details = serde_json::json!({ "ingest": loaded.summary, "bin_width": bin_width });
    Ok(CommandReport {
        manifest: out.finish("metrics", cfg, details, &warnings)?,
    })
}

#[derive(Debug, Clone, Serialize)]
struct AmiRow {
    region: String,
    year: i32,
    method_a: String,
    method_b: String,
    common_edges: usize,
    ami: f64,
}

struct Clustered {
    stem: String,
    complex: OrientedComplex,
    clusterings: Vec<EdgeClustering>,
    ami: Vec<AmiRow>,
    notes: Vec<String>,
}

fn cluster_network(network: &FlowNetwork, geo: &HashMap<String, ProviderGeo>, cfg: &RunConfig) -> Result<Clustered> {
    let tag = format!("{} {}", network.region(), network.year());
    let (complex, _) = complex_of(network)?;
    let mut notes = Vec::new();
    let mut clusterings = Vec::new();

    let mut hopts = HarmonicOptions::new(cfg.mode);
    hopts.eigen_tolerance = cfg.tol_eigen;
    hopts.seed = cfg.seed;
    let basis = harmonic_basis(&complex, &hopts).with_context(|| format!("harmonic basis for {tag}"))?;
    if let Some(w) = &basis.warning {
        notes.push(format!("{tag}: {w}"));
    }
    if basis.dim() == 0 {
        notes.push(format!("{tag}: beta1 = 0, harmonic clustering skipped (no harmonic structure to cluster)"));
    } else {
        let k = cfg.k.min(harmonic_signal_edges(&basis));
        if k < cfg.k {
            notes.push(format!("{tag}: harmonic k reduced from {} to {k} edges with harmonic signal", cfg.k));
        }
        clusterings.push(harmonic_cluster(&basis, k, cfg.seed)?);
    }

    let covered = (0..complex.n1())
        .filter(|&e| {
            let (a, b) = complex.edge_endpoints(e);
            geo.contains_key(a) && geo.contains_key(b)
        })
        .count();
    if covered == 0 {
        notes.push(format!("{tag}: no geocoded edges, geographic clustering skipped"));
    } else {
        let k = cfg.k.min(covered);
        if k < cfg.k {
            notes.push(format!("{tag}: geographic k reduced from {} to {k} geocoded edges", cfg.k));
        }
        let (c, cov, _) = geo_kmeans(&complex, geo, &KMeansOptions::new(k, cfg.seed))?;
        if !cov.excluded.is_empty() {
            notes.push(format!("{tag}: {} edges without coordinates excluded from geographic clustering", cov.excluded.len()));
        }
        clusterings.push(c);
    }

    let (sys, cov) = system_pair_clusters(&complex, geo);
    if !cov.excluded.is_empty() {
        notes.push(format!("{tag}: {} edges without system ids excluded from system-pair clustering", cov.excluded.len()));
    }
    if !sys.is_empty() {
        clusterings.push(sys);
    }

    let mut ami = Vec::new();
    for i in 0..clusterings.len() {
        for j in (i + 1)..clusterings.len() {
            match adjusted_mutual_information(&clusterings[i], &clusterings[j]) {
                Ok(r) => ami.push(AmiRow {
                    region: network.region().to_string(),
                    year: network.year(),
                    method_a: r.method_a,
                    method_b: r.method_b,
                    common_edges: r.common_edges,
                    ami: r.ami,
                }),
                Err(e) => notes.push(format!(
                    "{tag}: AMI {} vs {} not computed: {e}",
                    clusterings[i].method.as_str(),
                    clusterings[j].method.as_str()
                )),
            }
        }
    }
    Ok(Clustered {
        stem: file_stem(network.region(), network.year()),
        complex,
        clusterings,
        ami,
        notes,
    })
}

fn geo_table(providers: &[ProviderRecord]) -> HashMap<String, ProviderGeo> {
    providers
        .iter()
        .filter_map(|p| {
            let (lat, lon) = p.coordinates()?;
            let g = ProviderGeo::new(p.id.clone(), lat, lon, p.system_id.clone()).ok()?;
            Some((p.id.clone(), g))
        })
        .collect()
}

/// Harmonic, geographic and system-pair clusterings with pairwise AMI.
pub fn cmd_cluster(cfg: &RunConfig) -> Result<CommandReport> {
    let loaded = load(cfg)?;
    let geo = geo_table(&loaded.providers);
    let mut warnings = Vec::new();
    let work: Vec<&FlowNetwork> = loaded
        .networks
        .iter()
        .filter(|n| {
            let empty = n.arc_count() == 0;
            if empty {
                warnings.push(format!("{} {}: empty network skipped", n.region(), n.year()));
            }
            !empty
        })
        .collect();
    let done: Vec<Clustered> =
        pool(cfg.jobs)?.install(|| work.par_iter().map(|n| cluster_network(n, &geo, cfg)).collect::<Result<_>>())?;
    let mut out = Outputs::new(&cfg.out)?;
    let mut ami = String::from("region,year,method_a,method_b,common_edges,ami\n");
    for c in &done {
        let refs: Vec<&EdgeClustering> = c.clusterings.iter().collect();
        let mut buf = Vec::new();
        cluster::write_clusterings(&mut buf, &c.complex, &refs)?;
        out.write(&format!("clusters/{}.csv", c.stem), &buf)?;
        for r in &c.ami {
            ami += &format!(
                "{},{},{},{},{},{}\n",
                csv_field(&r.region),
                r.year,
                r.method_a,
                r.method_b,
                r.common_edges,
                r.ami
            );
        }
        warnings.extend(c.notes.iter().cloned());
    }
    out.write("ami.csv", ami.as_bytes())?;
    let details = serde_json::json!({ "ingest": loaded.summary, "networks": done.len() });
    Ok(CommandReport {
        manifest: out.finish("cluster", cfg, details, &warnings)?,
    })
}

/// Which panel columns enter the regressions.
#[derive(Debug, Clone, Default)]
pub struct RegressSpec {
    /// Outcome columns; empty means every column that is neither a flow
    /// measure nor a control.
    pub outcomes: Vec<String>,
    pub controls: Vec<String>,
}

/// One model per outcome; a failing model is reported in its column and the
/// others still run.
pub fn cmd_regress(cfg: &RunConfig, spec: &RegressSpec) -> Result<CommandReport> {
    cfg.validate()?;
    let path = cfg.require(&cfg.panel, "panel")?;
    let panel = Panel::parse(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let flows = regress::FLOW_COLUMNS.iter().all(|c| panel.has_column(c));
    let outcomes: Vec<String> = if spec.outcomes.is_empty() {
        panel
            .columns
            .iter()
            .filter(|c| !regress::FLOW_COLUMNS.contains(&c.as_str()) && !spec.controls.contains(c))
            .cloned()
            .collect()
    } else {
        spec.outcomes.clone()
    };
    if outcomes.is_empty() {
        bail!("panel has no outcome columns");
    }
    let mut warnings = Vec::new();
    if !flows {
        warnings.push("panel lacks g_bar/h_bar/r_bar; Wald block omitted".into());
    }
    let columns: Vec<regress::ModelColumn> = outcomes
        .iter()
        .map(|o| {
            let ms = ModelSpec {
                outcome: o.clone(),
                controls: spec.controls.clone(),
                flows,
                ..Default::default()
            };
            let fit = panel.rows_for(&ms).and_then(|rows| fit_ols(&rows, &ms));
            (o.clone(), fit.map_err(|e| e.to_string()))
        })
        .collect();
    let mut json = Vec::new();
    for (name, m) in &columns {
        match m {
            Ok(r) => json.push(serde_json::json!({
                "outcome": name,
                "result": r,
                "wald": wald_flow_test(r).ok(),
            })),
            Err(e) => {
                warnings.push(format!("model {name} failed: {e}"));
                json.push(serde_json::json!({ "outcome": name, "error": e }));
            }
        }
    }
    let mut out = Outputs::new(&cfg.out)?;
    out.write("regression_table.txt", format_table(&columns).as_bytes())?;
    out.write("regression.json", (serde_json::to_string_pretty(&json)? + "\n").as_bytes())?;
    Ok(CommandReport {
        manifest: out.finish("regress", cfg, serde_json::json!({ "models": columns.len() }), &warnings)?,
    })
}

/// Synthetic provider table and edge list in the ingest formats.
pub fn cmd_synth(cfg: &RunConfig, dataset: &DatasetConfig) -> Result<CommandReport> {
    let (providers, edges) = synthetic_dataset(dataset)?;
    let mut out = Outputs::new(&cfg.out)?;
    let mut buf = Vec::new();
    ingest::write_providers(&mut buf, &providers)?;
    out.write("providers.csv", &buf)?;
    let mut buf = Vec::new();
    ingest::write_edges(&mut buf, &edges)?;
    out.write("edges.csv", &buf)?;
    let details = serde_json::json!({
        "regions": dataset.regions,
        "providers_per_region": dataset.providers_per_region,
        "edge_probability": dataset.edge_probability,
        "years": dataset.years,
        "systems_per_region": dataset.systems_per_region,
        "dataset_seed": dataset.seed,
    });
    Ok(CommandReport {
        manifest: out.finish("synth", cfg, details, &[])?,
    })
}

/// AMI between two cluster tables matched on unordered endpoint pairs.
pub fn cmd_ami(cfg: &RunConfig, a: &Path, method_a: Option<&str>, b: &Path, method_b: Option<&str>) -> Result<CommandReport> {
    let la = cluster::read_labels(open(a)?, method_a).with_context(|| format!("reading {}", a.display()))?;
    let lb = cluster::read_labels(open(b)?, method_b).with_context(|| format!("reading {}", b.display()))?;
    let (n, ami) = cluster::ami_keyed(&la, &lb)?;
    let mut out = Outputs::new(&cfg.out)?;
    let name = |p: &Path, m: Option<&str>| {
        let f = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        m.map_or(f.clone(), |m| format!("{f}:{m}"))
    };
    let text = format!(
        "method_a,method_b,common_edges,ami\n{},{},{n},{ami}\n",
        csv_field(&name(a, method_a)),
        csv_field(&name(b, method_b))
    );
    out.write("ami.csv", text.as_bytes())?;
    Ok(CommandReport {
        manifest: out.finish("ami", cfg, serde_json::json!({ "common_edges": n, "ami": ami }), &[])?,
    })
}

/// Machine-readable error report for a failed command.
pub fn error_report(command: &str, err: &anyhow::Error) -> String {
    let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
    serde_json::json!({ "command": command, "error": err.to_string(), "causes": chain }).to_string()
}
