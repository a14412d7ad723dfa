//! Full pipeline through the library: generate a synthetic corpus with
//! planted bursts, label accounts by snowballing from the generated seeds,
//! detect topics, and check the planted term sets against the clusters.

use std::collections::BTreeSet;

use termburst::pipeline::{
    run_classify, run_detect, run_synth, PipelineConfig, RunLog, SynthConfig,
};

fn main() -> termburst::Result<()> {
    let root = std::env::temp_dir().join("termburst-example-e2e");
    let synth_dir = root.join("synth");
    let mut log = RunLog::create(&synth_dir)?;
    let synth = run_synth(
        &SynthConfig { docs: 20_000, topics: 6, days: 21, seed: 11, out: synth_dir.clone() },
        &mut log,
    )?;
    log.finish()?;
    println!("generated {} documents with {} planted topics", synth.doc_count, synth.truth.topics.len());

    let classify_dir = root.join("classify");
    let mut log = RunLog::create(&classify_dir)?;
    let classified = run_classify(
        &PipelineConfig {
            input: Some(synth.corpus.clone()),
            seeds: Some(synth.seeds.clone()),
            out: classify_dir.clone(),
            ..PipelineConfig::default()
        },
        &mut log,
    )?;
    log.finish()?;
    println!("labeled {} accounts in {} fit passes", classified.labeled, classified.fit_passes);

    let detect_dir = root.join("detect");
    let mut log = RunLog::create(&detect_dir)?;
    let detected = run_detect(
        &PipelineConfig {
            input: Some(synth.corpus.clone()),
            labels: Some(classified.labels.clone()),
            granularities: vec![1, 3],
            out: detect_dir.clone(),
            ..PipelineConfig::default()
        },
        &mut log,
    )?;
    log.finish()?;
    println!("{} clusters -> {}", detected.cluster_count, detected.clusters.display());

    let mut reader = csv::Reader::from_path(&detected.clusters).expect("read clusters.csv");
    let headers = reader.headers().expect("clusters.csv header").clone();
    let terms_col = headers.iter().position(|h| h == "terms").expect("terms column");
    let clusters: Vec<BTreeSet<String>> = reader
        .records()
        .map(|record| {
            record.expect("clusters.csv row")[terms_col]
                .split(';')
                .map(str::to_string)
                .collect()
        })
        .collect();

    for (index, topic) in synth.truth.topics.iter().enumerate() {
        let planted: BTreeSet<String> = topic.terms.iter().cloned().collect();
        let best = clusters
            .iter()
            .map(|c| {
                planted.intersection(c).count() as f64 / planted.union(c).count() as f64
            })
            .fold(0.0, f64::max);
        println!(
            "topic {index} ({}, days {}..{}): best Jaccard {best:.2}",
            topic.user_class,
            topic.start_day,
            topic.start_day + topic.len_days
        );
    }
    Ok(())
}
