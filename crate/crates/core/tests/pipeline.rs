use std::fs;
use std::path::Path;

use fbmb::config::{PipelineConfig, SourceKind};
use fbmb::io::{read_image, DType};
use fbmb::pipeline::{cache_model, report, run, sha256_hex, Manifest, Stage, MANIFEST};

fn small(dir: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.geometry.nx = 32;
    c.geometry.ny = 32;
    c.geometry.pixel_size = 0.3e-3;
    c.geometry.detectors = 48;
    c.geometry.array_radius = 12e-3;
    c.geometry.n_samples = 512;
    c.solver.max_iters = 15;
    c.output.dir = dir.to_path_buf();
    c
}

fn files(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn compare_run_writes_a_complete_hashed_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let out = run(&small(&dir), Stage::Compare).unwrap();
    let m = Manifest::read(&dir).unwrap();
    assert_eq!(m, out.manifest);
    let mut listed: Vec<String> = m.artifacts.keys().cloned().collect();
    listed.push(MANIFEST.into());
    listed.sort();
    assert_eq!(files(&dir), listed);
    for (rel, digest) in &m.artifacts {
        assert_eq!(&sha256_hex(&fs::read(dir.join(rel)).unwrap()), digest, "{rel}");
    }
    for name in ["mb", "fbmb2", "butterworth2", "swt2"] {
        assert!(m.artifacts.contains_key(&format!("{name}/composite.png")), "{name}");
        assert!(out.comparison.as_ref().unwrap().report.get(name).is_some());
    }
    assert!(m.artifacts.contains_key("fbmb2/component_2.img"));
    assert!(m.artifacts.contains_key("swt2/trajectory_band_2.csv"));
    assert!(m.resolved.lambda > 0.0);
    assert_eq!(m.resolved.mu, vec![0.5, 0.5]);
    assert_eq!(m.config.output.dir, Path::new("."));
    let text = report(&dir).unwrap();
    assert!(text.contains("fbmb2") && text.contains("residual"));
    assert_eq!(text.lines().next().unwrap(), fs::read_to_string(dir.join("metrics.txt")).unwrap().lines().next().unwrap());
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&small(&a), Stage::Compare).unwrap();
    run(&small(&b), Stage::Compare).unwrap();
    assert_eq!(files(&a), files(&b));
    for rel in files(&a) {
        assert_eq!(fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap(), "{rel}");
    }
}

#[test]
fn rerun_replaces_the_previous_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let mut c = small(&dir);
    run(&c, Stage::Compare).unwrap();
    c.solver.methods = vec!["mb".parse().unwrap()];
    c.metrics.spectra = false;
    run(&c, Stage::Reconstruct).unwrap();
    assert!(!dir.join("fbmb2").exists());
    assert!(!dir.join("metrics.csv").exists());
    assert!(dir.join("mb/composite.img").is_file());
}

#[test]
fn empty_phantom_succeeds_with_warnings() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("empty");
    let mut c = small(&dir);
    c.source.kind = SourceKind::Empty;
    let out = run(&c, Stage::Compare).unwrap();
    for r in &out.results {
        assert!(r.set.components.iter().all(|x| x.values().iter().all(|&v| v == 0.0)));
    }
    let rep = &out.comparison.unwrap().report;
    assert!(rep.rows.iter().all(|r| r.normalized_residual.is_none()));
    assert!(!out.manifest.warnings.is_empty());
    assert!(fs::read_to_string(dir.join("metrics.csv")).unwrap().contains("mb,,"));
}

#[test]
fn failures_leave_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.sino");
    fs::write(&bad, b"not a sinogram").unwrap();
    let dir = tmp.path().join("out");
    let mut c = small(&dir);
    c.source.kind = SourceKind::File;
    c.source.path = Some(bad);
    assert!(run(&c, Stage::Reconstruct).is_err());
    assert!(!dir.exists());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);

    let busy = tmp.path().join("busy");
    fs::create_dir(&busy).unwrap();
    fs::write(busy.join("notes.txt"), "keep").unwrap();
    assert!(run(&small(&busy), Stage::Simulate).is_err());
    assert_eq!(fs::read_to_string(busy.join("notes.txt")).unwrap(), "keep");
}

#[test]
fn simulated_file_reconstructs_like_the_phantom_run() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let mut c = small(&sim);
    c.output.dtype = DType::F64;
    c.solver.methods = vec!["mb".parse().unwrap(), "fbmb".parse().unwrap()];
    let direct = run(&c, Stage::Compare).unwrap();

    let mut f = c.clone();
    f.output.dir = tmp.path().join("file");
    f.source.kind = SourceKind::File;
    f.source.path = Some(sim.join("sinogram.sino"));
    f.source.prefilter = false;
    let from_file = run(&f, Stage::Reconstruct).unwrap();
    for (a, b) in direct.results.iter().zip(&from_file.results) {
        assert_eq!(a.set.components, b.set.components);
    }
    let img = read_image(&tmp.path().join("file/fbmb2/component_1.img")).unwrap();
    assert_eq!(&img, &direct.results[1].set.components[0]);
}

#[test]
fn cached_model_is_reused() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("model.bin");
    let mut c = small(&tmp.path().join("run"));
    let summary = cache_model(&c, &cache).unwrap();
    assert!(summary.nnz > 0);
    c.output.model_cache = Some(cache.clone());
    c.solver.methods = vec!["mb".parse().unwrap()];
    let cached = run(&c, Stage::Reconstruct).unwrap();
    assert_eq!(cached.manifest.resolved.model.geometry_hash, summary.geometry_hash);
    c.output.model_cache = None;
    let fresh = run(&c, Stage::Reconstruct).unwrap();
    assert_eq!(cached.results[0].set.components, fresh.results[0].set.components);
}
