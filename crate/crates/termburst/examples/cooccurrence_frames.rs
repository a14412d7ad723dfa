//! Slice a corpus into daily frames and count, per frame, how many
//! documents mention each pair of vocabulary terms together.

use std::collections::HashMap;

use termburst::graph::{build_vocabulary, count_cooccurrence, default_origin, partition_frames};
use termburst::ingest::{tokenize_documents, Document};

fn main() -> termburst::Result<()> {
    const DAY: i64 = 86_400;
    let texts: [(&str, i64); 8] = [
        ("storm surge hits the harbor", 0),
        ("harbor closed after the storm", 2_000),
        ("storm damage near the harbor cranes", 50_000),
        ("ferry schedule back to normal", DAY + 1_000),
        ("new ferry line to the island", DAY + 9_000),
        ("island ferry sold out", DAY + 70_000),
        ("storm cleanup at the harbor", 2 * DAY + 500),
        ("harbor cranes running again after the storm", 2 * DAY + 40_000),
    ];
    let docs: Vec<Document> = texts
        .iter()
        .enumerate()
        .map(|(i, (text, offset))| Document {
            id: format!("d{i}"),
            author_id: "a".into(),
            created_at: 1_700_000_000 + offset,
            text: text.to_string(),
            retweet_of_author: None,
            reply_to_author: None,
            url_count: 0,
        })
        .collect();

    let (tokenized, _) = tokenize_documents(&docs);
    let vocab = build_vocabulary(&tokenized, 100)?;
    println!("vocabulary ({} terms): {:?}", vocab.len(), vocab.terms());

    let origin = default_origin(&tokenized).expect("non-empty corpus");
    let frames = partition_frames(&tokenized, 1, origin)?;
    let by_id: HashMap<&str, &_> =
        tokenized.iter().map(|d| (d.doc_id.as_str(), d)).collect();

    for (frame_id, ids) in frames.frames.iter().enumerate() {
        let frame_docs: Vec<_> = ids.iter().map(|id| by_id[id.as_str()]).collect();
        let (counts, warnings) = count_cooccurrence(frame_id, &frame_docs, &vocab);
        println!("frame {frame_id}: {} documents", counts.doc_count);
        for (&(i, j), &count) in &counts.entries {
            println!("  {} + {} -> {count}", vocab.term(i), vocab.term(j));
        }
        for warning in warnings {
            println!("  warning: {warning}");
        }
    }
    Ok(())
}
