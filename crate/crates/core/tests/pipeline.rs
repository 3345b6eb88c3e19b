use std::path::{Path, PathBuf};

use pollsense::artifacts;
use pollsense::evaluation::loocv;
use pollsense::pipeline::{run_pipeline, ConfigLayer, OUTPUT_FILES};
use pollsense::synthetic::{planted_dataset, SyntheticConfig};
use pollsense::Party;

fn fixture_layer(out: &Path) -> ConfigLayer {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixture");
    let mut layer = ConfigLayer::from_file(dir.join("config.toml")).unwrap();
    layer.output_dir = Some(out.to_path_buf());
    layer
}

#[test]
fn fixture_run_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let mut layer = fixture_layer(dir);
        layer.permutations = Some(40);
        run_pipeline(&layer.resolve().unwrap()).unwrap();
    }
    for f in OUTPUT_FILES {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn fixture_series_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let run = run_pipeline(&fixture_layer(tmp.path()).resolve().unwrap()).unwrap();
    let back = artifacts::load_series(tmp.path().join("series.csv")).unwrap();
    for p in Party::ALL {
        assert_eq!(back[p], run.series.series[p].values);
    }
    let w = artifacts::load_weights(tmp.path().join("weights.csv")).unwrap();
    assert_eq!(w, run.weights);
}

#[test]
fn plot_rows_follow_residuals() {
    let data = planted_dataset(&SyntheticConfig::default()).unwrap();
    let report = loocv(&data).unwrap();
    let rows = artifacts::plot_rows(&report);
    assert_eq!(rows.len(), 204);
    for (i, chunk) in rows.chunks(3).enumerate() {
        let r = &report.residuals[i];
        assert_eq!(r.instance, i);
        for (row, p) in chunk.iter().zip(Party::ALL) {
            assert_eq!(row.instance, i + 1);
            assert_eq!(row.party, p);
            assert_eq!(row.target, r.target[p.index()]);
            assert_eq!(row.inferred, r.inferred.get(p));
        }
    }

    let mut buf = Vec::new();
    artifacts::write_plot_data(&mut buf, &report).unwrap();
    let back = artifacts::read_plot_data(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
}
