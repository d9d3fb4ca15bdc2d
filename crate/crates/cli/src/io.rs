//! Loading episode sets and their floor plans.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fpnav_core::dataset::Episode;
use fpnav_core::eval::PlanContext;
use fpnav_core::geometry::FloorPlan;

use crate::ops::Result;

pub struct Loaded {
    pub episodes: Vec<Episode>,
    /// Plan context per episode, shared between episodes on one plan.
    pub plans: Vec<Arc<PlanContext>>,
    /// Distinct plans in load order.
    pub pool: Vec<Arc<PlanContext>>,
}

pub fn load_floorplan(path: &Path) -> Result<FloorPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(FloorPlan::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn resolve(reference: &str, base: &Path) -> PathBuf {
    let p = PathBuf::from(reference);
    if p.is_absolute() || p.exists() {
        p
    } else {
        base.join(p)
    }
}

/// Episodes from a directory of `*.json` files (sorted by name) or from a
/// line-delimited JSON file. Plan references resolve against the working
/// directory first, then against the episode file's directory.
pub fn load_episodes(source: &Path) -> Result<Loaded> {
    let mut raw: Vec<(Episode, PathBuf)> = Vec::new();
    if source.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(source)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().and_then(|e| e.to_str()) == Some("json"))
            .collect();
        files.sort();
        for f in files {
            let text = std::fs::read_to_string(&f)?;
            let e = Episode::parse(&text).map_err(|e| format!("{}: {e}", f.display()))?;
            raw.push((e, source.to_path_buf()));
        }
    } else {
        let text = std::fs::read_to_string(source).map_err(|e| format!("{}: {e}", source.display()))?;
        let base = source.parent().unwrap_or(Path::new(".")).to_path_buf();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let e = Episode::parse(line).map_err(|e| format!("{} line {}: {e}", source.display(), i + 1))?;
            raw.push((e, base.clone()));
        }
    }
    if raw.is_empty() {
        return Err(format!("no episodes found in {}", source.display()).into());
    }
    let mut cache: BTreeMap<PathBuf, Arc<PlanContext>> = BTreeMap::new();
    let mut pool = Vec::new();
    let mut episodes = Vec::new();
    let mut plans = Vec::new();
    for (e, base) in raw {
        let path = resolve(&e.floorplan, &base);
        let key = path.canonicalize().unwrap_or(path.clone());
        let ctx = match cache.get(&key) {
            Some(c) => Arc::clone(c),
            None => {
                let ctx = Arc::new(PlanContext::new(load_floorplan(&path)?));
                cache.insert(key, Arc::clone(&ctx));
                pool.push(Arc::clone(&ctx));
                ctx
            }
        };
        let noisy = e.noise.is_some_and(|n| !n.is_noiseless());
        let checked = if noisy { e.validate() } else { e.validate_on(ctx.world()) };
        checked.map_err(|err| format!("episode {}: {err}", e.episode_id))?;
        episodes.push(e);
        plans.push(ctx);
    }
    Ok(Loaded {
        episodes,
        plans,
        pool,
    })
}

/// Floor plans from a directory of documents.
pub fn load_plan_dir(dir: &Path) -> Result<Vec<Arc<PlanContext>>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| Ok(Arc::new(PlanContext::new(load_floorplan(f)?))))
        .collect()
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
