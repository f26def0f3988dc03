use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurotheremin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_then_track() {
    let dir = tempfile::tempdir().unwrap();
    let evt = dir.path().join("wave.evt");
    let out = ok(&["synth", "--seed", "4", "--out", p(&evt), "--duration-ms", "500"]);
    assert!(out.contains("events"));
    let bytes = std::fs::read(&evt).unwrap();
    assert_eq!(&bytes[..4], b"EVT1");

    let csv = dir.path().join("hands.csv");
    let pgm = dir.path().join("overlay.pgm");
    ok(&["track", "--input", p(&evt), "--out", p(&csv), "--overlay", p(&pgm)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() > 40);
    assert!(lines.iter().any(|l| l.contains(",pitch_hand,")));
    assert!(lines.iter().any(|l| l.contains(",volume_hand,")));
    assert!(lines.iter().all(|l| l.split(',').count() == 5));
    assert!(std::fs::read(&pgm).unwrap().starts_with(b"P5"));

    // same seed, same file
    let again = dir.path().join("again.evt");
    ok(&["synth", "--seed", "4", "--out", p(&again), "--duration-ms", "500"]);
    assert_eq!(std::fs::read(&again).unwrap(), bytes);
}

#[test]
fn simulation_commands_require_a_seed() {
    for args in [vec!["show"], vec!["synth", "--out", "x.evt"], vec!["proto", "bench"]] {
        let out = bin(&args);
        assert!(!out.status.success());
        assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"), "{args:?}");
    }
}

#[test]
fn show_report_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("walk.txt");
    std::fs::write(&scenario, "AT 0 INTENT start_conversation\nAT 50 INTENT ask_duet\nAT 1000 INTENT done\n").unwrap();
    let config = dir.path().join("sim.json");
    std::fs::write(&config, r#"{"noise_fraction": 0.1, "channel": {"loss_p": 0.02, "bitflip_p": 0.0, "delay_base_us": 200, "delay_jitter_us": 0, "reorder_window": 0, "seed": 1}}"#).unwrap();
    let report = dir.path().join("run.json");
    let text = ok(&[
        "show", "--seed", "9", "--config", p(&config), "--scenario", p(&scenario), "--report", p(&report),
    ]);
    assert!(text.contains("duet pitch error"));
    assert!(text.contains("rtf"));

    let kv = ok(&["report", p(&report), "--kv"]);
    assert!(kv.contains("seed=9\n"));
    assert!(kv.contains("noise_events="));
    assert!(kv.contains("final_state=Conversing"));
    let again = ok(&["show", "--seed", "9", "--config", p(&config), "--scenario", p(&scenario), "--kv"]);
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| !l.starts_with("wall_s=") && !l.starts_with("rtf=") && !l.starts_with("sub_real_time="))
            .map(String::from)
            .collect()
    };
    assert_eq!(strip(&kv), strip(&again));
}

#[test]
fn show_rejects_bad_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.txt");
    std::fs::write(&scenario, "AT 0 INTENT dance\n").unwrap();
    let out = bin(&["show", "--seed", "1", "--scenario", p(&scenario)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn proto_commands() {
    let table = ok(&["proto", "bench", "--seed", "2"]);
    assert!(table.contains("RAW"));
    assert!(table.contains("8.22"));
    assert!(table.contains("30.00"));

    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("frame.bin");
    let fuzz = ok(&["proto", "fuzz", "--records", "100", "--write", p(&frame)]);
    assert!(fuzz.contains("flips 6576 detected 6576 accepted 0"), "{fuzz}");
    let dump = ok(&["proto", "dump", p(&frame)]);
    assert!(dump.contains("valid: seq 1"));

    let mut bytes = std::fs::read(&frame).unwrap();
    bytes[30] ^= 4;
    std::fs::write(&frame, &bytes).unwrap();
    assert!(ok(&["proto", "dump", p(&frame)]).contains("invalid"));
}

#[test]
fn power_examples() {
    assert_eq!(ok(&["power"]).trim(), "power ratio: 5.42");
    assert_eq!(ok(&["power", "--board-w", "48"]).trim(), "power ratio: 13.54");
    assert_eq!(ok(&["power", "--board-w", "650", "--boards", "1"]).trim(), "power ratio: 10.00");
    assert!(!bin(&["power", "--boards", "0"]).status.success());
}
