//! Pipeline stages. Each stage reads a corpus and hands its artifacts to an
//! [`ArtifactWriter`]; `run_all` chains them and rolls back on failure.

use std::path::PathBuf;

use anyhow::Context;
use eigencorpus::corrnet::{
    bridges_and_components, centralities, component_layout, remove_isolates, threshold_graph,
    total_correlation, CentralityRecord,
};
use eigencorpus::eigen::{build_channel_matrix, decompose, eigenimage, EigenDecomposition};
use eigencorpus::ingest::{encode_ect, generate_synthetic_corpus, list_images, load_corpus};
use eigencorpus::pixstats::{bound_images, mean_image, variance_image};
use eigencorpus::render::{
    colormap_plane, compose_rgb, encode_jpeg, encode_png, format_f64, montage, render_graph,
    variance_chart_data, variance_table_csv, ColorRamp, JPEG_QUALITY,
};
use eigencorpus::{Channel, CorpusTensor, Plane};
use image::RgbImage;

use crate::artifacts::{ArtifactWriter, ManifestEntry};
use crate::config::RunConfig;
use crate::error::UsageError;

/// Thumbnails per montage row.
pub const MONTAGE_COLUMNS: usize = 5;
/// Side of the network drawing in pixels.
pub const NETWORK_SIZE: u32 = 800;
/// File name of the tensor written by `ingest`.
pub const CORPUS_NAME: &str = "corpus.ect";

/// Where the images come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// A tensor previously written by `ingest`.
    Corpus(PathBuf),
    /// Generated test corpus.
    Synthetic { count: usize, seed: u64 },
    /// Every JPEG/PNG in a directory, sorted by file name.
    Directory(PathBuf),
    /// Image files in the given order.
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: CorpusTensor,
    /// Human-readable origin of each image, in corpus order.
    pub sources: Vec<String>,
}

/// Optional extra outputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutputOptions {
    /// Also write JPEG renders next to the PNGs.
    pub jpeg: bool,
    /// Also write unclamped statistic planes as `ECT1` tensors.
    pub raw: bool,
}

/// Decodes and crops the inputs. Tensors are used as stored.
pub fn load(source: &InputSource, crop_size: usize) -> anyhow::Result<LoadedCorpus> {
    let from_files = |paths: Vec<PathBuf>| -> anyhow::Result<LoadedCorpus> {
        if paths.len() < 2 {
            return Err(UsageError(format!("need at least 2 images, got {}", paths.len())).into());
        }
        let corpus = load_corpus(&paths, crop_size)?;
        let sources = paths.iter().map(|p| p.display().to_string()).collect();
        Ok(LoadedCorpus { corpus, sources })
    };
    match source {
        InputSource::Corpus(path) => {
            let corpus = CorpusTensor::read_ect(path)?;
            let sources = (0..corpus.len())
                .map(|i| format!("{}#{}", path.display(), i + 1))
                .collect();
            Ok(LoadedCorpus { corpus, sources })
        }
        InputSource::Synthetic { count, seed } => {
            let corpus = generate_synthetic_corpus(*count, crop_size, *seed)?;
            let sources = (0..*count)
                .map(|i| format!("synthetic:{seed}:{}", i + 1))
                .collect();
            Ok(LoadedCorpus { corpus, sources })
        }
        InputSource::Directory(dir) => {
            let paths = list_images(dir)?;
            from_files(paths).with_context(|| format!("loading images from {}", dir.display()))
        }
        InputSource::Files(paths) => from_files(paths.clone()),
    }
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> anyhow::Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn write_render(
    out: &mut ArtifactWriter,
    stem: &str,
    img: &RgbImage,
    options: &OutputOptions,
    producer: &str,
) -> anyhow::Result<()> {
    out.write(&format!("{stem}.png"), &encode_png(img)?, producer)?;
    if options.jpeg {
        out.write(
            &format!("{stem}.jpg"),
            &encode_jpeg(img, JPEG_QUALITY)?,
            producer,
        )?;
    }
    Ok(())
}

fn planes_to_ect(planes: &[Plane; 3]) -> Vec<u8> {
    let [r, g, b] = planes;
    let data: Vec<f64> = r
        .as_slice()
        .iter()
        .zip(g.as_slice())
        .zip(b.as_slice())
        .flat_map(|((&r, &g), &b)| [r, g, b])
        .collect();
    encode_ect(1, r.height(), r.width(), &data)
}

/// `corpus.ect` and `images.csv`.
pub fn ingest_stage(input: &LoadedCorpus, out: &mut ArtifactWriter) -> anyhow::Result<()> {
    out.write(CORPUS_NAME, &input.corpus.to_ect_bytes(), "ingest")?;
    images_table(input, out, "ingest")
}

fn images_table(
    input: &LoadedCorpus,
    out: &mut ArtifactWriter,
    producer: &str,
) -> anyhow::Result<()> {
    let rows = input
        .corpus
        .image_ids()
        .iter()
        .zip(&input.sources)
        .map(|(id, src)| [id.to_string(), src.clone()]);
    out.write(
        "images.csv",
        &csv_bytes(&["image_id", "source"], rows)?,
        producer,
    )
}

/// `montage.png` and `images.csv`.
pub fn montage_stage(
    input: &LoadedCorpus,
    options: &OutputOptions,
    out: &mut ArtifactWriter,
) -> anyhow::Result<()> {
    images_table(input, out, "montage")?;
    let img = montage(&input.corpus, MONTAGE_COLUMNS)?;
    write_render(out, "montage", &img, options, "montage")
}

/// `mean`, `lower` and `upper` renders (plus raw planes on request).
pub fn stats_stage(
    corpus: &CorpusTensor,
    config: &RunConfig,
    options: &OutputOptions,
    out: &mut ArtifactWriter,
) -> anyhow::Result<()> {
    let mean = mean_image(corpus);
    let var = variance_image(corpus, &mean, config.divisor)?;
    let (lower, upper) = bound_images(&mean, &var, config.scale, config.spread_mode)?;
    for (stem, planes) in [
        ("mean", &mean.planes),
        ("lower", &lower.planes),
        ("upper", &upper.planes),
    ] {
        write_render(out, stem, &compose_rgb(planes)?, options, "stats")?;
    }
    if options.raw {
        for (stem, planes) in [
            ("mean", &mean.planes),
            ("variance", &var.planes),
            ("lower", &lower.planes),
            ("upper", &upper.planes),
        ] {
            out.write(&format!("{stem}.ect"), &planes_to_ect(planes), "stats")?;
        }
    }
    Ok(())
}

/// Eigenimage renders for the leading components of each channel, the
/// variance table, the cumulative chart series and the loadings.
pub fn eigen_stage(
    corpus: &CorpusTensor,
    config: &RunConfig,
    options: &OutputOptions,
    out: &mut ArtifactWriter,
) -> anyhow::Result<Vec<EigenDecomposition>> {
    if config.components > corpus.len() {
        return Err(UsageError(format!(
            "components is {} but the corpus has only {} images",
            config.components,
            corpus.len()
        ))
        .into());
    }
    let channels = [Channel::Red, Channel::Green, Channel::Blue, Channel::Gray];
    let decomps = channels
        .iter()
        .map(|&c| decompose(&build_channel_matrix(corpus, c)))
        .collect::<Result<Vec<_>, _>>()?;
    for d in &decomps {
        let ramp = ColorRamp::for_channel(d.channel);
        for k in 1..=config.components {
            let img = colormap_plane(&eigenimage(d, k)?, &ramp);
            write_render(
                out,
                &format!("eigen_{}_{k}", d.channel),
                &img,
                options,
                "eigen",
            )?;
        }
    }
    out.write(
        "variance.csv",
        variance_table_csv(&decomps)?.as_bytes(),
        "eigen",
    )?;
    out.write(
        "cumulative.csv",
        variance_chart_data(&decomps)?.as_bytes(),
        "eigen",
    )?;
    let ids = corpus.image_ids();
    let rows = decomps.iter().flat_map(|d| {
        (0..d.components()).flat_map(move |j| {
            d.loading_column(j).iter().zip(ids).map(move |(v, id)| {
                [
                    d.channel.to_string(),
                    (j + 1).to_string(),
                    id.to_string(),
                    format_f64(*v),
                ]
            })
        })
    });
    out.write(
        "loadings.csv",
        &csv_bytes(&["channel", "component", "image_id", "loading"], rows)?,
        "eigen",
    )?;
    Ok(decomps)
}

/// What the network stage found, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSummary {
    pub edges: usize,
    pub isolates: Vec<u32>,
    pub bridges: Vec<(u32, u32)>,
    pub centrality: Vec<CentralityRecord>,
}

/// Total-correlation matrix, thresholded network, centralities of the
/// non-isolated images, isolates, bridges, components and a drawing of the
/// non-isolated part.
pub fn network_stage(
    corpus: &CorpusTensor,
    config: &RunConfig,
    options: &OutputOptions,
    out: &mut ArtifactWriter,
) -> anyhow::Result<NetworkSummary> {
    let totcor = total_correlation(corpus)?;
    let graph = threshold_graph(&totcor, config.threshold)?;
    let (core, isolates) = remove_isolates(&graph);
    let centrality = centralities(&core);
    let report = bridges_and_components(&graph);
    let ids = totcor.image_ids();
    let n = totcor.len();

    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    let rows = pairs.map(|(i, j)| {
        [
            ids[i].to_string(),
            ids[j].to_string(),
            format_f64(totcor.get(i, j)),
        ]
    });
    out.write(
        "totcor.csv",
        &csv_bytes(&["i", "j", "totcor"], rows)?,
        "network",
    )?;

    let rows = graph.edges().into_iter().map(|(a, b)| {
        let (i, j) = (graph.vertices()[a], graph.vertices()[b]);
        [i.to_string(), j.to_string(), format_f64(totcor.get(a, b))]
    });
    out.write(
        "edges.csv",
        &csv_bytes(&["i", "j", "totcor"], rows)?,
        "network",
    )?;

    let rows = centrality.iter().map(|r| {
        [
            r.image_id.to_string(),
            r.degree.to_string(),
            format_f64(r.betweenness),
            format_f64(r.closeness),
        ]
    });
    out.write(
        "centrality.csv",
        &csv_bytes(&["image_id", "degree", "betweenness", "closeness"], rows)?,
        "network",
    )?;

    let rows = isolates.iter().map(|id| [id.to_string()]);
    out.write("isolates.csv", &csv_bytes(&["image_id"], rows)?, "network")?;

    let rows = report
        .bridges
        .iter()
        .map(|(a, b)| [a.to_string(), b.to_string()]);
    out.write("bridges.csv", &csv_bytes(&["i", "j"], rows)?, "network")?;

    let rows = report
        .components
        .iter()
        .enumerate()
        .flat_map(|(k, members)| {
            members
                .iter()
                .map(move |id| [(k + 1).to_string(), id.to_string()])
        });
    out.write(
        "components.csv",
        &csv_bytes(&["component", "image_id"], rows)?,
        "network",
    )?;

    // isolates would only be pushed to the frame edge; they are listed instead
    let coords = component_layout(&core, config.seed);
    let img = render_graph(&core, &coords, Some(corpus), NETWORK_SIZE)?;
    write_render(out, "network", &img, options, "network")?;

    Ok(NetworkSummary {
        edges: graph.edge_count(),
        isolates,
        bridges: report.bridges,
        centrality,
    })
}

/// Runs `stage` against a fresh writer on `config.out_dir`; writes the
/// manifest on success and removes every partial artifact on failure.
pub fn with_writer<T>(
    config: &RunConfig,
    stage: impl FnOnce(&mut ArtifactWriter) -> anyhow::Result<T>,
) -> anyhow::Result<(T, Vec<ManifestEntry>)> {
    let mut out = ArtifactWriter::create(&config.out_dir)?;
    match stage(&mut out) {
        Ok(value) => Ok((value, out.finish()?)),
        Err(e) => {
            out.abort();
            Err(e)
        }
    }
}

/// Everything `run_all` produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub images: usize,
    pub network: NetworkSummary,
    pub manifest: Vec<ManifestEntry>,
}

/// ingest → pixstats → eigen → corrnet → render, into one directory.
pub fn run_all(
    config: &RunConfig,
    source: &InputSource,
    options: &OutputOptions,
) -> anyhow::Result<RunReport> {
    config.validate()?;
    let ((images, network), manifest) = with_writer(config, |out| {
        let input = load(source, config.crop_size)?;
        montage_stage(&input, options, out).context("montage")?;
        stats_stage(&input.corpus, config, options, out).context("pixel statistics")?;
        eigen_stage(&input.corpus, config, options, out).context("eigen decomposition")?;
        let network = network_stage(&input.corpus, config, options, out).context("network")?;
        Ok((input.corpus.len(), network))
    })?;
    Ok(RunReport {
        images,
        network,
        manifest,
    })
}
