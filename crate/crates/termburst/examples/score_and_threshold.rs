//! Score a three-frame stack by hand: popularity standardizes counts
//! within each frame, burstiness standardizes each pair across frames,
//! and the percentile cut keeps only the strongest relevance values.

use std::collections::BTreeMap;

use termburst::graph::CoocMatrix;
use termburst::score::{
    burst_stats, burstiness_frame, popularity, relevance, threshold_adjacency, ScoreWeights,
};

fn main() -> termburst::Result<()> {
    // Five terms. Pair (0, 1) hums along at a steady count; pair (2, 3)
    // is quiet until it spikes in the last frame.
    let frame_counts: [&[((u32, u32), u64)]; 3] = [
        &[((0, 1), 6), ((1, 2), 2), ((2, 3), 1)],
        &[((0, 1), 6), ((0, 2), 1), ((2, 3), 1)],
        &[((0, 1), 6), ((1, 4), 2), ((2, 3), 9)],
    ];
    let stack: Vec<CoocMatrix> = frame_counts
        .iter()
        .enumerate()
        .map(|(frame_id, entries)| CoocMatrix {
            frame_id,
            n_terms: 5,
            doc_count: 20,
            entries: BTreeMap::from_iter(entries.iter().copied()),
        })
        .collect();

    let pops: Vec<_> = stack.iter().map(popularity).collect::<Result<_, _>>()?;
    let stats = burst_stats(&pops)?;
    let weights = ScoreWeights::default();

    for (steady, bursty) in [((0u32, 1u32), (2u32, 3u32))] {
        println!("pair {steady:?} is steady, pair {bursty:?} spikes in frame 2:");
        for (frame_id, pop) in pops.iter().enumerate() {
            let burst = burstiness_frame(pop, &stats)?;
            let rel = relevance(pop, &burst, &weights)?;
            for (tag, (i, j)) in [("steady", steady), ("spike", bursty)] {
                println!(
                    "  frame {frame_id} {tag}: popularity {:+.3}  burstiness {:+.3}  relevance {:+.3}",
                    pop.value(i, j),
                    burst.value(i, j),
                    rel.value(i, j),
                );
            }
        }
    }

    let burst_last = burstiness_frame(&pops[2], &stats)?;
    let rel_last = relevance(&pops[2], &burst_last, &weights)?;
    let (adjacency, warnings) = threshold_adjacency(&rel_last, 90.0)?;
    println!(
        "frame 2 at the 90th percentile (threshold {:+.3}): edges {:?}",
        adjacency.threshold_value, adjacency.edges
    );
    for warning in warnings {
        println!("warning: {warning}");
    }
    Ok(())
}
