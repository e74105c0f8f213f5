use mammocad::classifiers::{ClassifierConfig, Family};
use mammocad::dataio::{balance_dataset, generate_phantom_dataset, load_image, DatasetManifest, LabeledSample, PhantomConfig};
use mammocad::evaluation::{compare_reports, emit_report, expected_runs, load_report, run_protocol, ReportFormat};
use mammocad::features::{extract, load_features, save_features, ExtractorId, FeatureMatrix, SpectrumElement};
use mammocad::wavelets::WaveletFamily;

fn extract_all(manifest: &DatasetManifest, id: ExtractorId) -> FeatureMatrix {
    let rows = manifest
        .entries
        .iter()
        .map(|e| {
            let img = load_image(&manifest.resolve(e)).unwrap();
            LabeledSample::real(extract(&img, id).unwrap().values, e.label)
        })
        .collect();
    FeatureMatrix::new(id, rows).unwrap()
}

#[test]
fn phantoms_to_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PhantomConfig { normals: 6, benign: 6, malignant: 6, size: 64, seed: 3 };
    generate_phantom_dataset(&cfg, tmp.path()).unwrap();
    let manifest = DatasetManifest::load(&tmp.path().join("manifest.csv")).unwrap();
    assert_eq!(manifest.entries.len(), 18);

    let wz = extract_all(&manifest, ExtractorId::WaveletZernike { family: WaveletFamily::Symlet8 });
    let sp = extract_all(&manifest, ExtractorId::Spectrum { element: SpectrumElement::Square });
    assert_eq!(wz.dims(), 416);
    assert_eq!(sp.dims(), 7);

    let path = tmp.path().join("wz.csv");
    save_features(&wz, &path).unwrap();
    let back = load_features(&path).unwrap();
    assert_eq!(back.len(), wz.len());
    for (a, b) in back.rows.iter().zip(&wz.rows) {
        assert_eq!(a.features, b.features);
        assert_eq!(a.label, b.label);
    }

    let knn = ClassifierConfig::from_names(Family::Knn, "euclidean").unwrap();
    let mut reports = Vec::new();
    for (i, m) in [&wz, &sp].into_iter().enumerate() {
        let report = run_protocol(m, &knn, 2).unwrap();
        assert_eq!(report.runs.len(), expected_runs(Family::Knn, 2, 10));
        let file = tmp.path().join(format!("r{i}.json"));
        emit_report(&report, &file, ReportFormat::Json).unwrap();
        reports.push(load_report(&file).unwrap());
    }
    let cmp = compare_reports(&reports).unwrap();
    assert_eq!(cmp.tests.len(), 1);
    assert!((0.0..=1.0).contains(&cmp.tests[0].test.p_value));
}

#[test]
fn balancing_equalises_class_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PhantomConfig { normals: 8, benign: 3, malignant: 5, size: 64, seed: 1 };
    generate_phantom_dataset(&cfg, tmp.path()).unwrap();
    let manifest = DatasetManifest::load(&tmp.path().join("manifest.csv")).unwrap();
    let sp = extract_all(&manifest, ExtractorId::Spectrum { element: SpectrumElement::Cross });
    let balanced = balance_dataset(&sp.rows, 1).unwrap();
    assert_eq!(balanced.len(), 24);
    let synthetic = balanced.iter().filter(|r| r.synthetic).count();
    assert_eq!(synthetic, 8);
}
