//! Edge, provider and crosswalk files; per region×year network assembly;
//! geocoding through a pluggable lookup with a file-backed cache.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::complex::FlowNetwork;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from_id: String,
    pub to_id: String,
    pub weight: f64,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRecord {
    pub id: String,
    pub address: String,
    pub region_id: Option<String>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub system_id: Option<String>,
    pub taxonomy: String,
    /// `1`/`individual` or `2`/`organization`.
    pub entity_type: String,
}

impl ProviderRecord {
    pub fn is_organization(&self) -> bool {
        matches!(
            self.entity_type.trim().to_ascii_lowercase().as_str(),
            "2" | "organization" | "organisation" | "organizational"
        )
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        Some((self.lat?, self.lon?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosswalkRecord {
    pub zip_or_fips: String,
    pub region_id: String,
    pub scope: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionScope {
    #[default]
    Hsa,
    Metro,
    State,
}

impl RegionScope {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionScope::Hsa => "hsa",
            RegionScope::Metro => "metro",
            RegionScope::State => "state",
        }
    }
}

impl std::str::FromStr for RegionScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hsa" => Ok(RegionScope::Hsa),
            "metro" => Ok(RegionScope::Metro),
            "state" => Ok(RegionScope::State),
            other => Err(Error::InvalidArgument(format!("unknown region scope `{other}`"))),
        }
    }
}

/// A data row that failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line in the input, header is line 1.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<R> {
    pub records: Vec<R>,
    pub rejected: Vec<RowError>,
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord) -> Self {
        Self {
            index: headers
                .iter()
                .enumerate()
                .map(|(i, h)| (h.trim().to_ascii_lowercase(), i))
                .collect(),
        }
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn field(rec: &csv::StringRecord, idx: usize) -> &str {
    rec.get(idx).unwrap_or("")
}

fn opt_field(rec: &csv::StringRecord, idx: Option<usize>) -> Option<String> {
    idx.map(|i| field(rec, i))
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

/// Parse an edge list with header `from_id,to_id,weight,year`.
pub fn parse_edges<R: Read>(input: R) -> Result<Parsed<EdgeRecord>> {
    let mut rdr = reader(input);
    let cols = Columns::new(rdr.headers()?);
    let (from, to, weight, year) = (
        cols.require("from_id")?,
        cols.require("to_id")?,
        cols.require("weight")?,
        cols.require("year")?,
    );
    let mut out = Parsed {
        records: Vec::new(),
        rejected: Vec::new(),
    };
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        match edge_row(&row, from, to, weight, year) {
            Ok(r) => out.records.push(r),
            Err(message) => out.rejected.push(RowError { line, message }),
        }
    }
    Ok(out)
}

fn edge_row(
    row: &csv::StringRecord,
    from: usize,
    to: usize,
    weight: usize,
    year: usize,
) -> std::result::Result<EdgeRecord, String> {
    let from_id = field(row, from);
    let to_id = field(row, to);
    if from_id.is_empty() || to_id.is_empty() {
        return Err("empty node id".into());
    }
    let w: f64 = field(row, weight)
        .parse()
        .map_err(|_| format!("weight `{}` is not a number", field(row, weight)))?;
    if !w.is_finite() || w < 0.0 {
        return Err(format!("weight {w} is negative or not finite"));
    }
    let y: i32 = field(row, year)
        .parse()
        .map_err(|_| format!("year `{}` is not an integer", field(row, year)))?;
    Ok(EdgeRecord {
        from_id: from_id.to_string(),
        to_id: to_id.to_string(),
        weight: w,
        year: y,
    })
}

/// Parse a provider table with header
/// `id,address,region_id,lat,lon,system_id,taxonomy,entity_type`; only `id`
/// is required.
pub fn parse_providers<R: Read>(input: R) -> Result<Parsed<ProviderRecord>> {
    let mut rdr = reader(input);
    let cols = Columns::new(rdr.headers()?);
    let id = cols.require("id")?;
    let address = cols.optional("address");
    let region = cols.optional("region_id");
    let lat = cols.optional("lat");
    let lon = cols.optional("lon");
    let system = cols.optional("system_id");
    let taxonomy = cols.optional("taxonomy");
    let entity = cols.optional("entity_type");
    let mut out = Parsed {
        records: Vec::new(),
        rejected: Vec::new(),
    };
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let pid = field(&row, id);
        if pid.is_empty() {
            out.rejected.push(RowError {
                line,
                message: "empty provider id".into(),
            });
            continue;
        }
        let coord = |idx: Option<usize>, limit: f64, name: &str| -> std::result::Result<Option<f64>, String> {
            match opt_field(&row, idx) {
                None => Ok(None),
                Some(s) => {
                    let v: f64 = s.parse().map_err(|_| format!("{name} `{s}` is not a number"))?;
                    if v.abs() > limit {
                        Err(format!("{name} {v} out of range"))
                    } else {
                        Ok(Some(v))
                    }
                }
            }
        };
        let parsed = coord(lat, 90.0, "lat").and_then(|la| Ok((la, coord(lon, 180.0, "lon")?)));
        let (la, lo) = match parsed {
            Ok(v) => v,
            Err(message) => {
                out.rejected.push(RowError { line, message });
                continue;
            }
        };
        out.records.push(ProviderRecord {
            id: pid.to_string(),
            address: opt_field(&row, address).unwrap_or_default(),
            region_id: opt_field(&row, region),
            lat: la,
            lon: lo,
            system_id: opt_field(&row, system),
            taxonomy: opt_field(&row, taxonomy).unwrap_or_default(),
            entity_type: opt_field(&row, entity).unwrap_or_else(|| "1".into()),
        });
    }
    Ok(out)
}

/// Parse a crosswalk with header `zip_or_fips,region_id,scope`.
pub fn parse_crosswalk<R: Read>(input: R) -> Result<Parsed<CrosswalkRecord>> {
    let mut rdr = reader(input);
    let cols = Columns::new(rdr.headers()?);
    let (key, region, scope) = (
        cols.require("zip_or_fips")?,
        cols.require("region_id")?,
        cols.require("scope")?,
    );
    let mut out = Parsed {
        records: Vec::new(),
        rejected: Vec::new(),
    };
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let rec = CrosswalkRecord {
            zip_or_fips: field(&row, key).to_string(),
            region_id: field(&row, region).to_string(),
            scope: field(&row, scope).to_ascii_lowercase(),
        };
        if rec.zip_or_fips.is_empty() || rec.region_id.is_empty() || rec.scope.parse::<RegionScope>().is_err() {
            out.rejected.push(RowError {
                line,
                message: "incomplete crosswalk row or unknown scope".into(),
            });
        } else {
            out.records.push(rec);
        }
    }
    Ok(out)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

pub fn write_edges<W: Write>(out: W, records: &[EdgeRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["from_id", "to_id", "weight", "year"])?;
    for r in records {
        w.write_record([&r.from_id, &r.to_id, &r.weight.to_string(), &r.year.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_providers<W: Write>(out: W, records: &[ProviderRecord]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["id", "address", "region_id", "lat", "lon", "system_id", "taxonomy", "entity_type"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.id.as_str(),
            &r.address,
            r.region_id.as_deref().unwrap_or(""),
            &opt(r.lat),
            &opt(r.lon),
            r.system_id.as_deref().unwrap_or(""),
            &r.taxonomy,
            &r.entity_type,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Maps a provider to its region at one scope.
///
/// Without a crosswalk the provider's own `region_id` is used. With one, the
/// provider's `region_id` is looked up as a key first, then a trailing
/// five-digit ZIP in its address.
#[derive(Debug, Clone, Default)]
pub struct RegionResolver {
    table: HashMap<(String, RegionScope), String>,
}

impl RegionResolver {
    pub fn new(crosswalk: &[CrosswalkRecord]) -> Self {
        let mut table = HashMap::new();
        for r in crosswalk {
            if let Ok(scope) = r.scope.parse() {
                table.insert((r.zip_or_fips.clone(), scope), r.region_id.clone());
            }
        }
        Self { table }
    }

    pub fn resolve(&self, provider: &ProviderRecord, scope: RegionScope) -> Option<String> {
        if self.table.is_empty() {
            return provider.region_id.clone();
        }
        let by_key = provider
            .region_id
            .as_ref()
            .and_then(|k| self.table.get(&(k.clone(), scope)));
        by_key
            .or_else(|| trailing_zip(&provider.address).and_then(|z| self.table.get(&(z, scope))))
            .cloned()
    }
}

fn trailing_zip(address: &str) -> Option<String> {
    let digits: String = address
        .trim_end()
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    (digits.len() == 5).then(|| digits.chars().rev().collect())
}

/// Taxonomy allow/deny list; an empty allow list admits every code.
#[derive(Debug, Clone, Default)]
pub struct TaxonomyFilter {
    pub allow: BTreeSet<String>,
    pub deny: BTreeSet<String>,
}

impl TaxonomyFilter {
    pub fn admits(&self, taxonomy: &str) -> bool {
        (self.allow.is_empty() || self.allow.contains(taxonomy)) && !self.deny.contains(taxonomy)
    }
}

/// Exact accounting of every input edge row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AssemblyReport {
    pub input_rows: usize,
    pub retained: usize,
    pub cross_region: usize,
    pub unknown_endpoint: usize,
    /// Organizational, excluded taxonomy, or no region at this scope.
    pub filtered_provider: usize,
    pub self_arcs: usize,
}

impl AssemblyReport {
    pub fn balanced(&self) -> bool {
        self.input_rows
            == self.retained + self.cross_region + self.unknown_endpoint + self.filtered_provider + self.self_arcs
    }
}

#[derive(Debug, Clone)]
pub struct Assembly {
    /// Sorted by (region, year).
    pub networks: Vec<FlowNetwork>,
    pub report: AssemblyReport,
}

/// Group edges into per region×year networks.
///
/// A network is emitted for every region with at least one eligible provider
/// and every year present in `edges`, even when it ends up with no arcs.
pub fn assemble_networks(
    edges: &[EdgeRecord],
    providers: &[ProviderRecord],
    resolver: &RegionResolver,
    scope: RegionScope,
    filter: &TaxonomyFilter,
) -> Result<Assembly> {
    enum Status {
        Eligible(String),
        Filtered,
    }
    let status: HashMap<&str, Status> = providers
        .iter()
        .map(|p| {
            let s = if p.is_organization() || !filter.admits(&p.taxonomy) {
                Status::Filtered
            } else {
                match resolver.resolve(p, scope) {
                    Some(r) => Status::Eligible(r),
                    None => Status::Filtered,
                }
            };
            (p.id.as_str(), s)
        })
        .collect();

    let regions: BTreeSet<&str> = status
        .values()
        .filter_map(|s| match s {
            Status::Eligible(r) => Some(r.as_str()),
            Status::Filtered => None,
        })
        .collect();
    let years: BTreeSet<i32> = edges.iter().map(|e| e.year).collect();
    let mut arcs: BTreeMap<(String, i32), Vec<(String, String, f64)>> = BTreeMap::new();
    for &r in &regions {
        for &y in &years {
            arcs.insert((r.to_string(), y), Vec::new());
        }
    }

    let mut report = AssemblyReport {
        input_rows: edges.len(),
        ..Default::default()
    };
    for e in edges {
        let (a, b) = match (status.get(e.from_id.as_str()), status.get(e.to_id.as_str())) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                report.unknown_endpoint += 1;
                continue;
            }
        };
        let (ra, rb) = match (a, b) {
            (Status::Eligible(ra), Status::Eligible(rb)) => (ra, rb),
            _ => {
                report.filtered_provider += 1;
                continue;
            }
        };
        if ra != rb {
            report.cross_region += 1;
            continue;
        }
        if e.from_id == e.to_id {
            report.self_arcs += 1;
            continue;
        }
        report.retained += 1;
        arcs.get_mut(&(ra.clone(), e.year))
            .expect("region and year registered")
            .push((e.from_id.clone(), e.to_id.clone(), e.weight));
    }
    let networks = arcs
        .into_iter()
        .map(|((region, year), arcs)| FlowNetwork::new(region, year, arcs))
        .collect::<Result<Vec<_>>>()?;
    Ok(Assembly { networks, report })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoHit {
    pub lat: f64,
    pub lon: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeocodeFailure {
    /// The service answered but could not place the address.
    NotFound,
    Transport { retries: u32, message: String },
}

/// Address lookup service.
pub trait Geocoder {
    fn lookup(&mut self, address: &str) -> std::result::Result<GeoHit, GeocodeFailure>;
}

/// Offline geocoder answering from a fixed table; counts calls.
#[derive(Debug, Clone, Default)]
pub struct StubGeocoder {
    pub table: HashMap<String, GeoHit>,
    pub calls: usize,
}

impl StubGeocoder {
    pub fn new<I: IntoIterator<Item = (String, (f64, f64))>>(entries: I) -> Self {
        Self {
            table: entries
                .into_iter()
                .map(|(a, (lat, lon))| {
                    (
                        a,
                        GeoHit {
                            lat,
                            lon,
                            confidence: 1.0,
                        },
                    )
                })
                .collect(),
            calls: 0,
        }
    }
}

impl Geocoder for StubGeocoder {
    fn lookup(&mut self, address: &str) -> std::result::Result<GeoHit, GeocodeFailure> {
        self.calls += 1;
        self.table.get(address).copied().ok_or(GeocodeFailure::NotFound)
    }
}

/// Append-only `address,lat,lon,confidence` cache file.
#[derive(Debug, Clone)]
pub struct GeocodeCache {
    path: PathBuf,
    entries: BTreeMap<String, GeoHit>,
}

impl GeocodeCache {
    /// Load `path`, or start empty when it does not exist yet.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .from_path(&path)?;
            for row in rdr.records() {
                let row = row?;
                let num = |i: usize| -> Result<f64> {
                    field(&row, i).parse().map_err(|_| {
                        Error::InvalidArgument(format!("corrupt geocode cache row `{:?}`", row))
                    })
                };
                entries.insert(
                    field(&row, 0).to_string(),
                    GeoHit {
                        lat: num(1)?,
                        lon: num(2)?,
                        confidence: num(3)?,
                    },
                );
            }
        }
        Ok(Self { path, entries })
    }

    pub fn get(&self, address: &str) -> Option<GeoHit> {
        self.entries.get(address).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, GeoHit)> {
        self.entries.iter().map(|(a, h)| (a.as_str(), *h))
    }

    /// Record a hit in memory and append it to the file.
    pub fn insert(&mut self, address: &str, hit: GeoHit) -> Result<()> {
        let file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let mut w = csv_writer(file);
        w.write_record([
            address,
            &hit.lat.to_string(),
            &hit.lon.to_string(),
            &hit.confidence.to_string(),
        ])?;
        w.flush()?;
        self.entries.insert(address.to_string(), hit);
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeocodeReport {
    pub already_coded: usize,
    pub cache_hits: usize,
    pub lookups: usize,
    pub resolved: usize,
    /// Ids left without coordinates.
    pub uncoded: Vec<String>,
}

/// Fill missing coordinates, consulting the cache before the geocoder.
pub fn geocode<G: Geocoder>(
    providers: &mut [ProviderRecord],
    geocoder: &mut G,
    cache: &mut GeocodeCache,
) -> Result<GeocodeReport> {
    let mut report = GeocodeReport::default();
    for p in providers.iter_mut() {
        if p.coordinates().is_some() {
            report.already_coded += 1;
            continue;
        }
        let hit = if p.address.is_empty() {
            None
        } else if let Some(hit) = cache.get(&p.address) {
            report.cache_hits += 1;
            Some(hit)
        } else {
            report.lookups += 1;
            match geocoder.lookup(&p.address) {
                Ok(hit) => {
                    cache.insert(&p.address, hit)?;
                    report.resolved += 1;
                    Some(hit)
                }
                Err(GeocodeFailure::NotFound) => None,
                Err(GeocodeFailure::Transport { retries, message }) => {
                    return Err(Error::Geocode {
                        address: p.address.clone(),
                        retries,
                        message,
                    })
                }
            }
        };
        match hit {
            Some(h) => {
                p.lat = Some(h.lat);
                p.lon = Some(h.lon);
            }
            None => report.uncoded.push(p.id.clone()),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provider(id: &str, region: &str) -> ProviderRecord {
        ProviderRecord {
            id: id.into(),
            address: String::new(),
            region_id: Some(region.into()),
            lat: None,
            lon: None,
            system_id: None,
            taxonomy: "207Q00000X".into(),
            entity_type: "1".into(),
        }
    }

    fn edge(a: &str, b: &str, w: f64) -> EdgeRecord {
        EdgeRecord {
            from_id: a.into(),
            to_id: b.into(),
            weight: w,
            year: 2017,
        }
    }

    fn assemble(edges: &[EdgeRecord], providers: &[ProviderRecord]) -> Assembly {
        assemble_networks(
            edges,
            providers,
            &RegionResolver::default(),
            RegionScope::Hsa,
            &TaxonomyFilter::default(),
        )
        .unwrap()
    }

    #[test]
    fn one_edge_row() {
        let p = parse_edges("from_id,to_id,weight,year\na,b,12,2017\n".as_bytes()).unwrap();
        assert_eq!(p.records, vec![edge("a", "b", 12.0)]);
        assert!(p.rejected.is_empty());
    }

    #[test]
    fn negative_weight_rejected_with_line() {
        let p = parse_edges("from_id,to_id,weight,year\na,b,1,2017\na,c,-3,2017\n".as_bytes()).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.rejected.len(), 1);
        assert_eq!(p.rejected[0].line, 3);
    }

    #[test]
    fn header_only_and_missing_column() {
        assert!(parse_edges("from_id,to_id,weight,year\n".as_bytes()).unwrap().records.is_empty());
        match parse_edges("from_id,to_id,year\n".as_bytes()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "weight"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quoted_fields() {
        let p = parse_providers(
            "id,address,region_id,lat,lon,system_id,taxonomy,entity_type\n\"x\",\"1 Main St, Town\",H1,44.9,-93.2,,207Q00000X,1\n"
                .as_bytes(),
        )
        .unwrap();
        assert_eq!(p.records[0].address, "1 Main St, Town");
        assert_eq!(p.records[0].system_id, None);
        assert_eq!(p.records[0].coordinates(), Some((44.9, -93.2)));
    }

    #[test]
    fn same_region_edge_kept() {
        let a = assemble(&[edge("a", "b", 3.0)], &[provider("a", "H1"), provider("b", "H1")]);
        assert_eq!(a.networks.len(), 1);
        assert_eq!(a.networks[0].arc_count(), 1);
        assert_eq!(a.report.retained, 1);
    }

    #[test]
    fn cross_region_edge_dropped() {
        let a = assemble(&[edge("a", "b", 3.0)], &[provider("a", "H1"), provider("b", "H2")]);
        assert_eq!(a.report.cross_region, 1);
        assert_eq!(a.networks.len(), 2);
        assert!(a.networks.iter().all(|n| n.arc_count() == 0));
    }

    #[test]
    fn organizations_and_unknowns_dropped() {
        let mut org = provider("b", "H1");
        org.entity_type = "2".into();
        let edges = [edge("a", "b", 3.0), edge("a", "zz", 1.0), edge("a", "a", 2.0), edge("a", "c", 1.0)];
        let a = assemble(&edges, &[provider("a", "H1"), org, provider("c", "H1")]);
        let r = &a.report;
        assert_eq!((r.filtered_provider, r.unknown_endpoint, r.self_arcs, r.retained), (1, 1, 1, 1));
        assert!(r.balanced());
    }

    #[test]
    fn taxonomy_deny_list() {
        let mut rad = provider("b", "H1");
        rad.taxonomy = "2085R0202X".into();
        let filter = TaxonomyFilter {
            deny: ["2085R0202X".to_string()].into(),
            ..Default::default()
        };
        let a = assemble_networks(
            &[edge("a", "b", 1.0)],
            &[provider("a", "H1"), rad],
            &RegionResolver::default(),
            RegionScope::Hsa,
            &filter,
        )
        .unwrap();
        assert_eq!(a.report.filtered_provider, 1);
    }

    #[test]
    fn crosswalk_scopes() {
        let cw = parse_crosswalk("zip_or_fips,region_id,scope\nH1,MSP,metro\n55401,MN,state\n".as_bytes()).unwrap();
        let res = RegionResolver::new(&cw.records);
        let mut p = provider("a", "H1");
        p.address = "1 Main St, Minneapolis MN 55401".into();
        assert_eq!(res.resolve(&p, RegionScope::Metro).as_deref(), Some("MSP"));
        assert_eq!(res.resolve(&p, RegionScope::State).as_deref(), Some("MN"));
        assert_eq!(res.resolve(&p, RegionScope::Hsa), None);
    }

    #[test]
    fn stub_and_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.csv");
        let mut cache = GeocodeCache::open(&path).unwrap();
        let mut stub = StubGeocoder::new([("X St".to_string(), (44.98, -93.27))]);
        let mut ps = vec![provider("a", "H1"), provider("b", "H1")];
        ps[0].address = "X St".into();
        ps[1].address = "Nowhere".into();
        let rep = geocode(&mut ps, &mut stub, &mut cache).unwrap();
        assert_eq!(ps[0].coordinates(), Some((44.98, -93.27)));
        assert_eq!(rep.uncoded, vec!["b".to_string()]);

        let mut reloaded = GeocodeCache::open(&path).unwrap();
        assert_eq!(reloaded.get("X St").unwrap().lat, 44.98);
        let mut again = vec![provider("c", "H1")];
        again[0].address = "X St".into();
        let before = stub.calls;
        let rep = geocode(&mut again, &mut stub, &mut reloaded).unwrap();
        assert_eq!(rep.cache_hits, 1);
        assert_eq!(stub.calls, before);
    }

    #[test]
    fn transport_error_surfaces() {
        struct Down;
        impl Geocoder for Down {
            fn lookup(&mut self, _: &str) -> std::result::Result<GeoHit, GeocodeFailure> {
                Err(GeocodeFailure::Transport {
                    retries: 3,
                    message: "timeout".into(),
                })
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let mut cache = GeocodeCache::open(dir.path().join("c.csv")).unwrap();
        let mut ps = vec![provider("a", "H1")];
        ps[0].address = "Y St".into();
        assert!(matches!(
            geocode(&mut ps, &mut Down, &mut cache),
            Err(Error::Geocode { retries: 3, .. })
        ));
    }

    #[test]
    fn writers_round_trip() {
        let edges = vec![edge("a", "b", 2.5)];
        let mut buf = Vec::new();
        write_edges(&mut buf, &edges).unwrap();
        assert_eq!(parse_edges(buf.as_slice()).unwrap().records, edges);
        let mut p = provider("a", "H1");
        p.lat = Some(1.5);
        p.lon = Some(-2.0);
        p.address = "1 A St, B".into();
        let mut buf = Vec::new();
        write_providers(&mut buf, std::slice::from_ref(&p)).unwrap();
        assert_eq!(parse_providers(buf.as_slice()).unwrap().records, vec![p]);
    }
}
