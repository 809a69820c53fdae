//! Acceptance checks. Prints one `PASS`/`FAIL`/`SKIP` line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use editboard::registry::{backend_dir, LoadedBackends, RegistryConfig};
use editboard::suite::load_frames;
use editboard_core::alignment::{matching_rate, pearson, Choice, ComparisonVote};
use editboard_core::backends::{BackendDescriptor, BackendError, BackendKind, EmbeddingVector};
use editboard_core::embedding_metrics::{background_consistency, execution, subject_consistency, temporal_consistency};
use editboard_core::fidelity::{ff_alpha, ff_beta, ff_dispatch, semantic_score, FidelityError};
use editboard_core::mock::MockBackend;
use editboard_core::warp::backward_warp;
use editboard_core::{
    synth, CoarseToFineFlow, Direction, FidelityVariant, FlowField, FrameSequence, ImageTextEmbedder,
    MetricConfig, PromptPair, RgbImage,
};
use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const SIZE: usize = 64;
const FRAMES: usize = 6;

fn identity_suite() -> Check {
    let start = Instant::now();
    let flow = CoarseToFineFlow::default();
    let config = MetricConfig::default();
    let videos = [
        ("static", synth::static_video(1, SIZE, SIZE, FRAMES)),
        ("slow pan", synth::pan(2, SIZE, SIZE, FRAMES, 0.5, 0.0)),
        ("fast pan", synth::pan(3, SIZE, SIZE, FRAMES, 6.0, 2.0)),
        ("rotating", synth::rotating(4, SIZE, SIZE, FRAMES, 0.02)),
        ("noise", synth::noise_video(5, SIZE, SIZE, FRAMES)),
    ];
    let masks = synth::box_masks(SIZE, SIZE, FRAMES, 0.4);
    let mut alpha_runs = 0;
    for (name, v) in &videos {
        let sem = semantic_score(v, v, &masks).map_err(err)?;
        ensure(sem.value == 0.0, format!("{name}: semantic {}", sem.value))?;
        let beta = ff_beta(&flow, v, v, config.epsilon_flow).map_err(err)?;
        ensure(beta.value <= 1e-6, format!("{name}: ff_beta {}", beta.value))?;
        match ff_alpha(&flow, v, v, config.theta) {
            Ok(a) => {
                ensure(a.value <= config.theta, format!("{name}: ff_alpha {}", a.value))?;
                alpha_runs += 1;
            }
            Err(FidelityError::AlphaInapplicable(_)) => {}
            Err(e) => return Err(format!("{name}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("5 videos, ff_alpha applicable on {alpha_runs}, {:.2}s", elapsed.as_secs_f64()))
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| std::array::from_fn(|_| rng.next_u32() as u8))
}

fn warp_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let w = 4 + (rng.next_u32() % 29) as usize;
        let h = 4 + (rng.next_u32() % 29) as usize;
        let img = random_image(&mut rng, w, h);
        let dx = (rng.next_u32() % 13) as i64 - 6;
        let dy = (rng.next_u32() % 13) as i64 - 6;
        let r = backward_warp(&img, &FlowField::uniform(w, h, dx as f32, dy as f32)).map_err(err)?;
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = (x as i64 + dx, y as i64 + dy);
                let inside = sx >= 0 && sy >= 0 && sx < w as i64 && sy < h as i64;
                ensure(r.in_bounds.get(x, y) == inside, format!("case {case}: bounds flag at ({x},{y})"))?;
                if inside {
                    let want = img.pixel(sx as usize, sy as usize).map(f64::from);
                    ensure(r.warped.pixel(x, y) == want, format!("case {case}: pixel ({x},{y})"))?;
                }
            }
        }
    }

    let mut worst = 0.0f64;
    for case in 0..100 {
        let (w, h) = (12, 9);
        let img = random_image(&mut rng, w, h);
        let mut u = Vec::with_capacity(w * h);
        let mut v = Vec::with_capacity(w * h);
        for _ in 0..w * h {
            u.push(((rng.next_u32() % 20_000) as f32 - 10_000.0) / 2_500.0);
            v.push(((rng.next_u32() % 20_000) as f32 - 10_000.0) / 2_500.0);
        }
        let field = FlowField::new(w, h, u.clone(), v.clone()).map_err(err)?;
        let r = backward_warp(&img, &field).map_err(err)?;
        for y in 0..h {
            for x in 0..w {
                let sx = x as f64 + u[y * w + x] as f64;
                let sy = y as f64 + v[y * w + x] as f64;
                let inside = sx >= 0.0 && sy >= 0.0 && sx <= (w - 1) as f64 && sy <= (h - 1) as f64;
                ensure(r.in_bounds.get(x, y) == inside, format!("fractional case {case}: bounds flag"))?;
                if !inside {
                    continue;
                }
                let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
                let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
                let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                let got = r.warped.pixel(x, y);
                for c in 0..3 {
                    let p = |px: usize, py: usize| img.pixel(px, py)[c] as f64;
                    let want = p(x0, y0) * (1.0 - fx) * (1.0 - fy)
                        + p(x1, y0) * fx * (1.0 - fy)
                        + p(x0, y1) * (1.0 - fx) * fy
                        + p(x1, y1) * fx * fy;
                    worst = worst.max((got[c] - want).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-9, format!("fractional max error {worst:e}"))?;
    Ok(format!("100 integer cases bit-exact, 100 fractional cases max error {worst:.1e}"))
}

fn flicker_monotonicity() -> Check {
    let flow = CoarseToFineFlow::default();
    let original = synth::static_video(7, SIZE, SIZE, FRAMES);
    let mut values = Vec::new();
    for amp in [5u8, 15, 30] {
        let edited = synth::add_noise(&original, amp, 99);
        values.push(ff_alpha(&flow, &original, &edited, MetricConfig::default().theta).map_err(err)?.value);
    }
    let shown = format!("{:.2} < {:.2} < {:.2}", values[0], values[1], values[2]);
    for w in values.windows(2) {
        ensure(w[1] > w[0] && w[1] - w[0] >= 2.0, format!("not separated: {shown}"))?;
    }
    Ok(shown)
}

fn dispatch() -> Check {
    let flow = CoarseToFineFlow::default();
    let config = MetricConfig::default();
    let slow = synth::pan(11, SIZE, SIZE, FRAMES, 0.5, 0.25);
    // at 40 px per frame at most 24 of 64 columns stay in bounds, below σ
    // even for a perfect flow
    let fast = synth::pan(12, SIZE, SIZE, FRAMES, 40.0, 0.0);
    let rs = ff_dispatch(&flow, &slow, &synth::add_noise(&slow, 3, 1), &config).map_err(err)?;
    let rf = ff_dispatch(&flow, &fast, &synth::add_noise(&fast, 3, 1), &config).map_err(err)?;
    let fs = rs.mean_valid_fraction().ok_or("slow clip recorded no valid fractions")?;
    let ff = rf.mean_valid_fraction().ok_or("fast clip recorded no valid fractions")?;
    ensure(rs.valid_fractions.len() == FRAMES - 1 && rf.valid_fractions.len() == FRAMES - 1, "fraction count")?;
    ensure(rs.variant_used == FidelityVariant::FfAlpha, format!("slow clip used {:?}", rs.variant_used))?;
    ensure(rf.variant_used == FidelityVariant::FfBeta, format!("fast clip used {:?}", rf.variant_used))?;
    ensure(fs >= config.sigma && ff < config.sigma, format!("fractions slow {fs:.3} fast {ff:.3}"))?;
    Ok(format!("slow -> FF_ALPHA (valid {fs:.3}), fast -> FF_BETA (valid {ff:.3})"))
}

fn beta_direction() -> Check {
    let flow = CoarseToFineFlow::default();
    let eps = MetricConfig::default().epsilon_flow;
    let original = synth::pan(21, SIZE, SIZE, FRAMES, 1.5, 0.0);
    let orthogonal = synth::pan(21, SIZE, SIZE, FRAMES, 0.0, 1.5);
    let opposite = synth::pan(21, SIZE, SIZE, FRAMES, -1.5, 0.0);
    let o = ff_beta(&flow, &original, &orthogonal, eps).map_err(err)?.value;
    let p = ff_beta(&flow, &original, &opposite, eps).map_err(err)?.value;
    let shown = format!("orthogonal {o:.4}, opposite {p:.4}");
    ensure((o - 1.0).abs() <= 0.1 && (p - 2.0).abs() <= 0.1, shown.clone())?;
    Ok(shown)
}

/// Embeds frames by their top-left red value and prompts by name.
struct Scripted {
    images: BTreeMap<u8, Vec<f64>>,
    texts: BTreeMap<&'static str, Vec<f64>>,
}

impl Scripted {
    fn descriptor() -> BackendDescriptor {
        BackendDescriptor {
            kind: BackendKind::JointImageText,
            model_id: "scripted".into(),
            version: "1".into(),
            deterministic: true,
        }
    }
}

impl ImageTextEmbedder for Scripted {
    fn descriptor(&self) -> BackendDescriptor {
        Self::descriptor()
    }

    fn embed_image(&self, frame: &RgbImage) -> Result<EmbeddingVector, BackendError> {
        let key = frame.pixel(0, 0)[0];
        EmbeddingVector::normalized(self.images.get(&key).cloned().ok_or(BackendError::Degenerate)?)
    }

    fn embed_text(&self, prompt: &str) -> Result<EmbeddingVector, BackendError> {
        EmbeddingVector::normalized(self.texts.get(prompt).cloned().ok_or(BackendError::EmptyPrompt)?)
    }
}

fn keyed_frames(keys: &[u8]) -> FrameSequence {
    FrameSequence::new(keys.iter().map(|&k| RgbImage::filled(8, 8, [k, 0, 0])).collect()).unwrap()
}

fn scripted_mock() -> Check {
    let embedder = Scripted {
        images: BTreeMap::from([
            (1, vec![0.2, 1.0, 0.0]),
            (2, vec![0.1, 0.9, 0.3]),
            (3, vec![0.0, 1.0, 0.5]),
            (4, vec![1.0, 0.3, 0.0]),
        ]),
        texts: BTreeMap::from([("source", vec![1.0, 0.0, 0.0]), ("target", vec![0.0, 1.0, 0.0])]),
    };
    let prompts = PromptPair::new("source", "target").map_err(err)?;
    let ex = execution(&keyed_frames(&[1, 2, 3, 4]), &prompts, &embedder).map_err(err)?;
    ensure(ex.success_rate == 0.75, format!("success rate {}", ex.success_rate))?;

    let a = EmbeddingVector::normalized(vec![1.0, 0.0, 0.0]).map_err(err)?;
    let b = EmbeddingVector::normalized(vec![0.0, 1.0, 0.0]).map_err(err)?;
    let orth = temporal_consistency(&[a.clone(), a, b], true).map_err(err)?;
    ensure(orth == 0.5, format!("orthogonal consistency {orth}"))?;

    let mock = MockBackend::default();
    let same = FrameSequence::new(vec![synth::Texture::new(5).render(32, 32, 0.0, 0.0); 5]).map_err(err)?;
    let sc = subject_consistency(&same, &mock, true).map_err(err)?;
    let bc = background_consistency(&same, &mock, true).map_err(err)?;
    ensure(sc == 1.0 && bc == 1.0, format!("identical frames: subject {sc}, background {bc}"))?;
    Ok("success 0.75, orthogonal 0.5, identical 1.0/1.0".into())
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_editboard"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .map_err(err)?;
    ensure(
        o.status.success(),
        format!("editboard {} failed: {}", args[0], String::from_utf8_lossy(&o.stderr)),
    )
}

fn run_outputs(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    out.insert("transcript.json".to_string(), fs::read(dir.join("transcript.json")).map_err(err)?);
    for e in fs::read_dir(dir.join("cases")).map_err(err)? {
        let p = e.map_err(err)?.path();
        out.insert(format!("cases/{}", p.file_name().unwrap().to_string_lossy()), fs::read(&p).map_err(err)?);
    }
    Ok(out)
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let d = tempfile::tempdir().map_err(err)?;
    let s = |p: &Path| p.to_string_lossy().into_owned();
    let suite = d.path().join("suite");
    run_cli(&["synth", "--out", &s(&suite)])?;
    let manifest = suite.join("manifest.json");
    let mut reference: Option<BTreeMap<String, Vec<u8>>> = None;
    let mut runs = 0;
    for workers in ["1", "4"] {
        for rep in 0..3 {
            let out = d.path().join(format!("out-{workers}-{rep}"));
            run_cli(&["evaluate", "--manifest", &s(&manifest), "--out", &s(&out), "--mock-backends", "--workers", workers])?;
            let files = run_outputs(&out)?;
            ensure(files.len() == 9, format!("expected 8 case files, got {}", files.len() - 1))?;
            match &reference {
                None => reference = Some(files),
                Some(r) => ensure(*r == files, format!("outputs differ at workers={workers} run={rep}"))?,
            }
            runs += 1;
        }
    }
    let out = d.path().join("out-1-0");
    run_cli(&["report", "--results", &s(&out), "--format", "csv"])?;
    let csv = fs::read_to_string(out.join("transcript.csv")).map_err(err)?;
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    ensure(
        rows[0]
            == [
                "Tasks", "FF-α", "FF-β", "Semantic Score", "Success Rate", "CLIP Similarity", "Subject Consistency",
                "Background Consistency", "Aesthetic Quality", "Imaging Quality",
            ],
        format!("header {:?}", rows[0]),
    )?;
    let tasks: Vec<&str> = rows[1..].iter().map(|r| r[0]).collect();
    ensure(tasks == ["SOSA", "SE", "SOMA", "MOA"], format!("rows {tasks:?}"))?;
    ensure(rows[1][3].parse::<f64>().is_ok(), "SOSA semantic score missing")?;
    ensure(rows[2..].iter().all(|r| r[3] == "-"), "non-SOSA semantic score not '-'")?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), format!("took {elapsed:?}"))?;
    Ok(format!("{runs} runs byte-identical, CSV layout ok, {:.1}s", elapsed.as_secs_f64()))
}

fn alignment_math() -> Check {
    let vote = |id: &str, choice| ComparisonVote {
        comparison_id: id.into(),
        annotator_id: "h".into(),
        choice,
        timestamp_ms: 0,
    };
    let values = BTreeMap::from([
        ("c1".to_string(), (1.0, 2.0)),
        ("c2".to_string(), (5.0, 3.0)),
        ("c3".to_string(), (4.0, 4.05)),
        ("c4".to_string(), (4.0, 4.5)),
        ("c5".to_string(), (7.0, 7.0)),
    ]);
    // lower is better: c1 -> A, c2 -> B, c3 within delta, c4 outside delta,
    // c5 tie so only INDISTINGUISHABLE can match
    let votes = [
        vote("c1", Choice::A),
        vote("c2", Choice::A),
        vote("c3", Choice::Indistinguishable),
        vote("c4", Choice::Indistinguishable),
        vote("c5", Choice::B),
        vote("c5", Choice::Indistinguishable),
        vote("c2", Choice::B),
        vote("c1", Choice::B),
    ];
    let m = matching_rate(&votes, &values, Direction::LowerBetter, 0.1).map_err(err)?;
    ensure(m.matches == 4 && m.votes == 8 && m.rate == 50.0, format!("lower-better {m:?}"))?;
    let h = matching_rate(&votes, &values, Direction::HigherBetter, 0.1).map_err(err)?;
    ensure(h.matches == 4 && h.rate == 50.0, format!("higher-better {h:?}"))?;
    let wide = matching_rate(&votes, &values, Direction::LowerBetter, 1.0).map_err(err)?;
    ensure(wide.matches == 5 && wide.rate == 62.5, format!("wide delta {wide:?}"))?;

    let x: Vec<f64> = (0..10).map(f64::from).collect();
    let up: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -v).collect();
    let r1 = pearson(&x, &up).map_err(err)?;
    let r2 = pearson(&x, &down).map_err(err)?;
    let r3 = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).map_err(err)?;
    ensure(r1 == 1.0 && r2 == -1.0, format!("pearson {r1} {r2}"))?;
    ensure((r3 - 0.5).abs() <= 1e-12, format!("pearson {r3}"))?;
    Ok(format!("4/8, 4/8, 5/8 as counted; r = {r1}, {r2}, {r3}"))
}

fn plausibility() -> Outcome {
    let Some(dir) = backend_dir(None) else {
        return Outcome::Skip("no backend directory configured".into());
    };
    let cfg = match RegistryConfig::read(&dir) {
        Ok(c) => c,
        Err(e) => return Outcome::Skip(format!("backend registry unreadable: {e}")),
    };
    let backends = match LoadedBackends::from_config(&cfg) {
        Ok(b) => b,
        Err(e) => return Outcome::Skip(format!("backends unavailable: {e}")),
    };
    let clip_dir = std::env::var_os("EDITBOARD_PLAUSIBILITY_CLIP").map(std::path::PathBuf::from);
    let Some(clip_dir) = clip_dir else {
        return Outcome::Skip("EDITBOARD_PLAUSIBILITY_CLIP not set".into());
    };
    let b = backends.as_backends();
    let (Some(embedder), Some(vision)) = (b.joint_image_text, b.vision_features) else {
        return Outcome::Skip("embedding backends not configured".into());
    };
    let check = || -> Check {
        let edited = load_frames(&clip_dir.join("edited")).map_err(err)?;
        let prompt = fs::read_to_string(clip_dir.join("target_prompt.txt")).map_err(err)?;
        let clip = editboard_core::embedding_metrics::clip_similarity(&edited, prompt.trim(), embedder).map_err(err)?;
        let sc = subject_consistency(&edited, vision, true).map_err(err)?;
        let bc = background_consistency(&edited, embedder, true).map_err(err)?;
        let shown = format!("clip {clip:.3}, subject {sc:.3}, background {bc:.3}");
        ensure((0.15..=0.45).contains(&clip), shown.clone())?;
        ensure((0.85..=1.0).contains(&sc) && (0.85..=1.0).contains(&bc), shown.clone())?;
        Ok(shown)
    };
    match check() {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn main() {
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("identity suite", Box::new(|| wrap(identity_suite()))),
        ("warp oracle", Box::new(|| wrap(warp_oracle()))),
        ("FF-α flicker monotonicity", Box::new(|| wrap(flicker_monotonicity()))),
        ("dispatch correctness", Box::new(|| wrap(dispatch()))),
        ("FF-β directional sensitivity", Box::new(|| wrap(beta_direction()))),
        ("scripted mock exactness", Box::new(|| wrap(scripted_mock()))),
        ("end-to-end determinism", Box::new(|| wrap(end_to_end()))),
        ("alignment math", Box::new(|| wrap(alignment_math()))),
        ("plausibility with real backends", Box::new(plausibility)),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Outcome::Pass(d) => println!("PASS  {name}: {d}"),
            Outcome::Skip(d) => println!("SKIP  {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criterion(s) failed");
        std::process::exit(1);
    }
}

fn wrap(r: Check) -> Outcome {
    match r {
        Ok(d) => Outcome::Pass(d),
        Err(d) => Outcome::Fail(d),
    }
}
