use hodgeflow::complex::{antisymmetrize, build_clique_complex, NodeOrder};
use hodgeflow::hodge::{decompose, DecomposeOptions, HarmonicOptions, Mode};
use hodgeflow::ingest::{
    assemble_networks, geocode, parse_crosswalk, parse_edges, parse_providers, write_edges, write_providers,
    GeocodeCache, ProviderRecord, RegionResolver, RegionScope, StubGeocoder, TaxonomyFilter,
};
use hodgeflow::synth::{flow_to_edge_records, plant, random_support, random_vector, synthetic_dataset, DatasetConfig};

fn provider(id: &str, region: &str) -> ProviderRecord {
    ProviderRecord {
        id: id.into(),
        address: format!("{id} Main St 5540{}", id.len() % 10),
        region_id: Some(region.into()),
        lat: None,
        lon: None,
        system_id: None,
        taxonomy: "207R00000X".into(),
        entity_type: "1".into(),
    }
}

#[test]
fn planted_flow_survives_csv_round_trip() {
    let complex = build_clique_complex(&random_support(9, 0.5, 12).unwrap()).unwrap();
    let beta1 = hodgeflow::hodge::harmonic_basis::<f64>(&complex, &HarmonicOptions::new(Mode::Normalized))
        .unwrap()
        .dim();
    let coeffs = random_vector::<f64>(beta1, 3);
    let planted = plant(
        &complex,
        &random_vector::<f64>(complex.n0(), 1),
        &random_vector::<f64>(complex.n2(), 2),
        (beta1 > 0).then_some(&coeffs[..]),
        Mode::Normalized,
    )
    .unwrap();
    let records = flow_to_edge_records(&complex, &planted.flow, 2017).unwrap();
    let providers: Vec<ProviderRecord> = complex.node_ids().iter().map(|id| provider(id, "R1")).collect();

    let mut buf = Vec::new();
    write_edges(&mut buf, &records).unwrap();
    let edges = parse_edges(buf.as_slice()).unwrap();
    assert!(edges.rejected.is_empty());
    let mut buf = Vec::new();
    write_providers(&mut buf, &providers).unwrap();
    let parsed = parse_providers(buf.as_slice()).unwrap();
    assert_eq!(parsed.records, providers);

    let assembly = assemble_networks(
        &edges.records,
        &parsed.records,
        &RegionResolver::default(),
        RegionScope::Hsa,
        &TaxonomyFilter::default(),
    )
    .unwrap();
    assert!(assembly.report.balanced());
    assert_eq!(assembly.networks.len(), 1);
    let (support, flow) = antisymmetrize::<f64>(&assembly.networks[0], &NodeOrder::Lexicographic).unwrap();
    let rebuilt = build_clique_complex(&support).unwrap();
    assert_eq!(rebuilt.edges(), complex.edges());
    let d = decompose(&flow, &rebuilt, &DecomposeOptions::new(Mode::Normalized)).unwrap();
    for e in 0..complex.n1() {
        assert!((d.gradient[e] - planted.gradient[e]).abs() <= 1e-9);
        assert!((d.curl[e] - planted.curl[e]).abs() <= 1e-9);
        assert!((d.harmonic[e] - planted.harmonic[e]).abs() <= 1e-9);
    }
}

#[test]
fn every_edge_row_is_accounted_for() {
    let cfg = DatasetConfig { regions: 3, years: vec![2016, 2017], ..Default::default() };
    let (mut providers, mut edges) = synthetic_dataset(&cfg).unwrap();
    providers[0].entity_type = "2".into();
    providers[1].taxonomy = "DENIED".into();
    edges.push(hodgeflow::ingest::EdgeRecord { from_id: "ghost".into(), to_id: providers[2].id.clone(), weight: 1.0, year: 2016 });
    edges.push(hodgeflow::ingest::EdgeRecord {
        from_id: providers[3].id.clone(),
        to_id: providers.last().unwrap().id.clone(),
        weight: 2.0,
        year: 2017,
    });
    let filter = TaxonomyFilter { deny: ["DENIED".to_string()].into(), ..Default::default() };
    let a = assemble_networks(&edges, &providers, &RegionResolver::default(), RegionScope::Hsa, &filter).unwrap();
    assert!(a.report.balanced());
    assert_eq!(a.report.unknown_endpoint, 1);
    assert!(a.report.cross_region >= 1);
    assert!(a.report.filtered_provider >= 1);
    assert_eq!(a.networks.len(), 6);
    let keys: Vec<(String, i32)> = a.networks.iter().map(|n| (n.region().to_string(), n.year())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn crosswalk_resolves_by_key_then_zip() {
    let crosswalk = parse_crosswalk("zip_or_fips,region_id,scope\n27053,MSP,metro\n55401,HSA-24,hsa\n".as_bytes())
        .unwrap()
        .records;
    let resolver = RegionResolver::new(&crosswalk);
    let mut p = provider("a", "27053");
    p.address = "1 Nicollet Mall Minneapolis MN 55401".into();
    assert_eq!(resolver.resolve(&p, RegionScope::Metro).as_deref(), Some("MSP"));
    assert_eq!(resolver.resolve(&p, RegionScope::Hsa).as_deref(), Some("HSA-24"));
    assert_eq!(resolver.resolve(&p, RegionScope::State), None);
}

#[test]
fn geocode_cache_persists_across_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("geocode.csv");
    let mut providers = vec![provider("a", "R"), provider("b", "R")];
    providers[1].address = "nowhere".into();
    let mut stub = StubGeocoder::new([(providers[0].address.clone(), (44.9, -93.2))]);
    let mut cache = GeocodeCache::open(&path).unwrap();
    let first = geocode(&mut providers.clone(), &mut stub, &mut cache).unwrap();
    assert_eq!((first.lookups, first.resolved, first.uncoded.len()), (2, 1, 1));

    let mut reopened = GeocodeCache::open(&path).unwrap();
    let mut empty = StubGeocoder::default();
    let second = geocode(&mut providers, &mut empty, &mut reopened).unwrap();
    assert_eq!(second.cache_hits, 1);
    assert_eq!(providers[0].coordinates(), Some((44.9, -93.2)));
}
