use std::collections::BTreeMap;
use std::path::Path;

use testgen_core::config::{Overrides, RunConfig};
use testgen_core::llm::transcript::{read_transcript, transcript_digest, write_transcript};
use testgen_core::llm::TranscriptRecord;
use testgen_core::runner::{execute, verify_replay, RUN_FILE, TRANSCRIPT_FILE};

use crate::common::{demo_dir, Verdict};

const FLIPS: usize = 300;

fn tree(dir: &Path) -> anyhow::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry?;
        if entry.file_type().is_file() {
            let rel = entry.path().strip_prefix(dir)?.to_string_lossy().into_owned();
            out.insert(rel, std::fs::read(entry.path())?);
        }
    }
    Ok(out)
}

fn copy_tree(from: &Path, to: &Path) -> anyhow::Result<()> {
    for (rel, bytes) in tree(from)? {
        let target = to.join(rel);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(target, bytes)?;
    }
    Ok(())
}

fn patch_digest(run_dir: &Path) -> anyhow::Result<()> {
    let digest = transcript_digest(&run_dir.join(TRANSCRIPT_FILE))?;
    let path = run_dir.join(RUN_FILE);
    let mut run: serde_json::Value = serde_json::from_slice(&std::fs::read(&path)?)?;
    run["transcript_sha256"] = serde_json::Value::String(digest);
    std::fs::write(&path, serde_json::to_vec_pretty(&run)?)?;
    Ok(())
}

/// Rewrites the last counted reply of some session and re-seals the digest,
/// so only re-execution can notice.
fn consistent_tamper(
    run_dir: &Path,
    edit: impl Fn(&mut TranscriptRecord) -> bool,
) -> anyhow::Result<bool> {
    let path = run_dir.join(TRANSCRIPT_FILE);
    let mut records = read_transcript(&path)?;
    let last_of_session = |i: usize| {
        !records[i + 1..]
            .iter()
            .any(|later| later.session_id == records[i].session_id)
    };
    let Some(i) = (0..records.len())
        .find(|&i| records[i].counted && records[i].response_text.contains("@Test") && last_of_session(i))
    else {
        return Ok(false);
    };
    let r = &mut records[i];
    if !edit(r) {
        return Ok(false);
    }
    write_transcript(&path, &records)?;
    patch_digest(run_dir)?;
    Ok(true)
}

pub fn check() -> anyhow::Result<Verdict> {
    let scratch = tempfile::tempdir()?;
    let run = |name: &str| -> anyhow::Result<std::path::PathBuf> {
        let config = RunConfig::load(
            Some(&demo_dir().join("testgen.toml")),
            Overrides {
                output_dir: Some(scratch.path().join(name)),
                ..Overrides::default()
            },
        )?;
        Ok(execute(&config, None)?.dir)
    };
    let first = run("first")?;
    let second = run("second")?;
    let identical_runs = tree(&first)? == tree(&second)?;
    let clean = verify_replay(&first)?;

    let transcript = first.join(TRANSCRIPT_FILE);
    let original = std::fs::read(&transcript)?;
    let mut detected = 0;
    let positions: Vec<usize> = (0..FLIPS)
        .map(|i| i * (original.len() - 1) / (FLIPS - 1))
        .collect();
    for &pos in &positions {
        let mut bytes = original.clone();
        bytes[pos] ^= 0x20;
        std::fs::write(&transcript, &bytes)?;
        if !verify_replay(&first)?.is_empty() {
            detected += 1;
        }
    }
    std::fs::write(&transcript, &original)?;
    let restored = verify_replay(&first)?.is_empty();

    let reply_dir = scratch.path().join("reply_tamper");
    copy_tree(&first, &reply_dir)?;
    let reply_edited = consistent_tamper(&reply_dir, |r| {
        let before = r.response_text.clone();
        r.response_text = before.replacen("class ", "// reviewed\nclass ", 1);
        r.response_text != before
    })?;
    let reply_caught = verify_replay(&reply_dir)?;

    let prompt_dir = scratch.path().join("prompt_tamper");
    copy_tree(&first, &prompt_dir)?;
    let prompt_edited = consistent_tamper(&prompt_dir, |r| match r.request_messages.first_mut() {
        Some(m) => {
            m.content.push_str("\n// edited");
            true
        }
        None => false,
    })?;
    let prompt_caught = verify_replay(&prompt_dir)?;

    let pass = identical_runs
        && clean.is_empty()
        && detected == positions.len()
        && restored
        && reply_edited
        && reply_caught.iter().any(|d| d.path != TRANSCRIPT_FILE)
        && prompt_edited
        && !prompt_caught.is_empty();
    let mut detail = format!(
        "two runs identical: {identical_runs}; verify: {} divergences; {detected}/{} byte flips detected; resealed reply edit caught at {}; resealed prompt edit caught at {}",
        clean.len(),
        positions.len(),
        reply_caught
            .iter()
            .map(|d| d.path.as_str())
            .find(|p| *p != TRANSCRIPT_FILE)
            .unwrap_or("nothing"),
        prompt_caught.first().map_or("nothing", |d| d.path.as_str()),
    );
    if let Some(d) = clean.first() {
        detail.push_str(&format!("; unexpected divergence in {}: {}", d.path, d.detail));
    }
    Ok(Verdict::new(pass, detail))
}
