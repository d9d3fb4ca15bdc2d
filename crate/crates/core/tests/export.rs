//! Dataset export layouts on disk.

mod common;

use std::sync::Arc;

use fpnav_core::dataset::{export_dataset, EpisodeContext, ExportConfig, ExportLayout, Manifest};
use fpnav_core::render::RasterConfig;

fn contexts() -> Vec<EpisodeContext> {
    let s = common::suite(1, 2);
    s.episodes
        .into_iter()
        .map(|e| EpisodeContext::new(e, Arc::clone(s.plans[0].world())).unwrap())
        .collect()
}

fn small() -> ExportConfig {
    ExportConfig {
        raster: RasterConfig {
            pixels_per_meter: 8.0,
            ..RasterConfig::default()
        },
        ..ExportConfig::default()
    }
}

#[test]
fn layouts_reference_the_expected_frames() {
    let ctxs = contexts();
    for layout in ExportLayout::ALL {
        let dir = tempfile::tempdir().unwrap();
        let manifest = export_dataset(&ctxs, layout, dir.path(), &small()).unwrap();
        let on_disk: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(on_disk, manifest);
        assert_eq!(manifest.records.len(), ctxs.len());
        for (rec, ctx) in manifest.records.iter().zip(&ctxs) {
            let n = ctx.frame_count();
            assert_eq!(n, ctx.episode.gt_actions.len());
            let (frames, obs, plan, single) = match layout {
                ExportLayout::DualView => (n, 0, 0, false),
                ExportLayout::Interleaved => (2 * n, 0, 0, false),
                ExportLayout::DualStream => (0, n, n, false),
                ExportLayout::StaticSeparate => (0, n, 0, true),
            };
            assert_eq!(rec.frames.len(), frames, "{layout}");
            assert_eq!(rec.obs_frames.len(), obs, "{layout}");
            assert_eq!(rec.plan_frames.len(), plan, "{layout}");
            assert_eq!(rec.plan.is_some(), single, "{layout}");
            for f in rec.all_frames() {
                let bytes = std::fs::read(dir.path().join(f)).unwrap();
                assert_eq!(&bytes[..4], b"\x89PNG", "{f}");
            }
        }
    }
}

#[test]
fn dual_view_frames_are_observation_beside_plan() {
    let ctxs = contexts();
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let manifest = export_dataset(&ctxs[..1], ExportLayout::DualView, dir.path(), &cfg).unwrap();
    let stream = export_dataset(&ctxs[..1], ExportLayout::DualStream, dir.path(), &cfg).unwrap();
    let rec = &manifest.records[0];
    let srec = &stream.records[0];
    for (k, f) in rec.frames.iter().enumerate() {
        let frame = image::open(dir.path().join(f)).unwrap();
        let plan = image::open(dir.path().join(&srec.plan_frames[k])).unwrap();
        let obs = image::open(dir.path().join(&srec.obs_frames[k])).unwrap();
        assert_eq!(frame.height(), plan.height());
        let scaled = (obs.width() as f64 * plan.height() as f64 / obs.height() as f64).round() as u32;
        assert!((frame.width() as i64 - (scaled + plan.width()) as i64).abs() <= 1);
    }
}

#[test]
fn layout_names_round_trip() {
    for layout in ExportLayout::ALL {
        assert_eq!(layout.as_str().parse::<ExportLayout>().unwrap(), layout);
    }
    assert!("mosaic".parse::<ExportLayout>().is_err());
}
