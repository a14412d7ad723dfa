//! Turn thresholded adjacency into ranked topic clusters: connected
//! components become clusters, each carrying the mean scores of its edges,
//! and the top clusters per class survive.

use std::collections::BTreeMap;

use termburst::classify::InfluenceClass;
use termburst::cluster::{frame_clusters, top_clusters};
use termburst::graph::{CoocMatrix, Vocabulary};
use termburst::score::{
    burst_stats, burstiness_frame, popularity, relevance, threshold_adjacency, ScoreWeights,
};

fn main() -> termburst::Result<()> {
    let terms = ["#flood", "bridge", "river", "#match", "goal", "stadium", "ticket", "quiet"];
    let vocab = Vocabulary::from_terms(terms.iter().map(|t| t.to_string()).collect())?;

    // Two frames: a flood story and a sports story burst in frame 1.
    let counts: [&[((u32, u32), u64)]; 2] = [
        &[((0, 1), 1), ((3, 4), 1), ((6, 7), 2)],
        &[
            ((0, 1), 12),
            ((0, 2), 10),
            ((1, 2), 8),
            ((3, 4), 9),
            ((3, 5), 7),
            ((4, 6), 6),
            ((6, 7), 2),
        ],
    ];
    let stack: Vec<CoocMatrix> = counts
        .iter()
        .enumerate()
        .map(|(frame_id, entries)| CoocMatrix {
            frame_id,
            n_terms: vocab.len() as u32,
            doc_count: 40,
            entries: BTreeMap::from_iter(entries.iter().copied()),
        })
        .collect();

    let pops: Vec<_> = stack.iter().map(popularity).collect::<Result<_, _>>()?;
    let stats = burst_stats(&pops)?;
    let burst = burstiness_frame(&pops[1], &stats)?;
    let rel = relevance(&pops[1], &burst, &ScoreWeights::default())?;
    let (adjacency, _) = threshold_adjacency(&rel, 80.0)?;

    let clusters =
        frame_clusters(&adjacency, &pops[1], &burst, &rel, 1, InfluenceClass::Mdi)?;
    println!("{} clusters in frame 1:", clusters.len());
    let ranked = top_clusters(clusters, 3)?;
    for (rank, cluster) in ranked.iter().enumerate() {
        let words: Vec<&str> = cluster.term_ids.iter().map(|&t| vocab.term(t)).collect();
        println!(
            "  #{} score {:+.3} (popularity {:+.3}, burstiness {:+.3}): {}",
            rank + 1,
            cluster.score,
            cluster.popularity,
            cluster.burstiness,
            words.join(" ")
        );
    }
    Ok(())
}
