use qdart_core::diversity::{fit_reduction, Descriptor, FeatureVector};
use qdart_core::draw::{develop, to_svg, Canvas, Rendering};
use qdart_core::genome::{random_genotype, GeneRanges, Genotype};
use qdart_core::image::GrayImage;
use qdart_core::metrics::{batch_metrics, compute_metrics};

const CANVAS: Canvas = Canvas::new(256, 192);

fn drawings(count: usize) -> Vec<(Genotype, Rendering)> {
    (0..).map(random_genotype).filter_map(|g| develop(&g, &GeneRanges::default(), CANVAS).ok().map(|r| (g, r))).take(count).collect()
}

fn parse_polylines(svg: &str) -> Vec<Vec<[f64; 2]>> {
    svg.split("points=\"")
        .skip(1)
        .map(|rest| {
            rest.split('"')
                .next()
                .unwrap()
                .split_whitespace()
                .map(|pair| {
                    let (x, y) = pair.split_once(',').unwrap();
                    [x.parse().unwrap(), y.parse().unwrap()]
                })
                .collect()
        })
        .collect()
}

#[test]
fn svg_round_trips_every_vertex() {
    for (_, r) in drawings(3) {
        let svg = String::from_utf8(to_svg(&r.phenotype)).unwrap();
        let parsed = parse_polylines(&svg);
        let drawn = &r.phenotype.paths;
        assert_eq!(parsed.len(), drawn.len());
        for (got, want) in parsed.iter().zip(drawn) {
            assert_eq!(got.len(), want.points.len());
            for (a, b) in got.iter().zip(&want.points) {
                assert!((a[0] - b[0]).abs() <= 1e-3 && (a[1] - b[1]).abs() <= 1e-3, "{a:?} vs {b:?}");
            }
        }
    }
}

#[test]
fn rendering_is_reproducible() {
    let (g, first) = drawings(1).pop().unwrap();
    let again = develop(&g, &GeneRanges::default(), CANVAS).unwrap();
    assert_eq!(first.raster, again.raster);
    assert_eq!(to_svg(&first.phenotype), to_svg(&again.phenotype));
}

fn shifted(img: &GrayImage, dx: u32) -> GrayImage {
    let mut out = GrayImage::filled(img.width(), img.height(), 1.0);
    for y in 0..img.height() {
        for x in dx..img.width() {
            out.set(x, y, img.get(x - dx, y));
        }
    }
    out
}

#[test]
fn one_pixel_translation_is_small_next_to_a_different_drawing() {
    let d = Descriptor::default();
    let set: Vec<GrayImage> =
        (0..).map(random_genotype).filter_map(|g| develop(&g, &GeneRanges::default(), d.canvas).ok()).map(|r| r.raster).take(21).collect();
    for k in 0..20 {
        let f = d.describe(&set[k]).unwrap();
        let own = f.distance(&d.describe(&shifted(&set[k], 1)).unwrap());
        let other = f.distance(&d.describe(&set[k + 1]).unwrap());
        assert!(own < 0.2 * other, "sample {k}: shift {own:.4}, other drawing {other:.4}");
    }
}

#[test]
fn fitted_map_and_embeddings_are_reproducible() {
    let d = Descriptor { canvas: CANVAS };
    let features: Vec<FeatureVector> = drawings(12).iter().map(|(_, r)| d.describe(&r.raster).unwrap()).collect();
    let a = fit_reduction(&features, 8).unwrap();
    let b = fit_reduction(&features, 8).unwrap();
    assert_eq!(a, b);
    for f in &features {
        let p = a.embed(f).unwrap();
        assert_eq!(p, b.embed(f).unwrap());
        let c = a.quantize(p);
        assert!(c.i < 8 && c.j < 8);
    }
}

#[test]
fn batch_metrics_matches_single_image_and_skips_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(batch_metrics(dir.path()).unwrap().rows.is_empty());

    let set = drawings(2);
    for (k, (_, r)) in set.iter().enumerate() {
        r.raster.save(&dir.path().join(format!("d{k}.png"))).unwrap();
    }
    std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();

    let table = batch_metrics(dir.path()).unwrap();
    assert_eq!(table.rows.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>(), ["d0", "d1"]);
    assert_eq!(table.failures.len(), 1);
    assert!(table.failures[0].0.ends_with("broken.png"));
    for (k, (_, r)) in set.iter().enumerate() {
        let reloaded = GrayImage::load(&dir.path().join(format!("d{k}.png"))).unwrap();
        assert_eq!(table.rows[k].1, compute_metrics(&reloaded).unwrap());
        // 8-bit storage is the only difference from the in-memory raster.
        assert!((compute_metrics(&r.raster).unwrap().mean - table.rows[k].1.mean).abs() < 1.0 / 255.0);
    }
}

#[test]
fn missing_corpus_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(batch_metrics(&dir.path().join("nope")).is_err());
}
