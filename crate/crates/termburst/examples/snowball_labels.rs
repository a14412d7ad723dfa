//! Grow account labels from four manual seeds. Each round ranks unlabeled
//! authors by retweet mentions received from the already-labeled set,
//! labels the top batch with the current model, and refits.

use termburst::classify::{
    snowball_label, FitOptions, InfluenceClass, LabelSource, LabeledAccount, SnowballOptions,
};
use termburst::ingest::Document;

fn main() -> termburst::Result<()> {
    let mut docs = Vec::new();
    let mut doc = |author: &str, retweet_of: Option<&str>, reply_to: Option<&str>, urls: u32, text: &str| {
        docs.push(Document {
            id: format!("d{:03}", docs.len()),
            author_id: author.to_string(),
            created_at: 1_700_000_000 + docs.len() as i64,
            text: text.to_string(),
            retweet_of_author: retweet_of.map(str::to_string),
            reply_to_author: reply_to.map(str::to_string),
            url_count: urls,
        });
    };

    // Broadcast-style accounts: links, long posts, no replies.
    for author in ["m-news", "m-desk", "u-wire", "u-blog"] {
        for i in 0..4 {
            doc(author, None, None, 1, &format!("long report number {i} with a linked source and detail after detail"));
        }
    }
    // Conversational accounts: replies, short posts, no links.
    for author in ["i-chat", "i-gab", "u-talk", "u-ping"] {
        for i in 0..4 {
            doc(author, None, Some("someone"), 0, &format!("short reply {i}"));
        }
    }
    // Retweet mentions from the seeds make the unlabeled accounts
    // reachable, at different per-seed rates so every feature varies
    // across the seed set.
    for (seed, target) in [
        ("m-news", "u-wire"),
        ("m-news", "u-wire"),
        ("m-news", "u-blog"),
        ("m-desk", "u-blog"),
        ("i-chat", "u-talk"),
        ("i-chat", "u-talk"),
        ("i-gab", "u-ping"),
    ] {
        doc(seed, Some(target), None, 0, "passing this on");
    }

    let seed = |account: &str, label| LabeledAccount {
        account_id: account.to_string(),
        label,
        source: LabelSource::Manual,
        probability: None,
    };
    let seeds = [
        seed("m-news", InfluenceClass::Mdi),
        seed("m-desk", InfluenceClass::Mdi),
        seed("i-chat", InfluenceClass::Idi),
        seed("i-gab", InfluenceClass::Idi),
    ];

    let opts = SnowballOptions { batch_size: 2, target: 8, fit: FitOptions::default() };
    let outcome = snowball_label(&docs, &seeds, &opts)?;

    println!("labeled {} accounts in {} fit passes", outcome.labels.len(), outcome.fit_passes);
    for account in &outcome.labels {
        let p = account.probability.map(|p| format!(" (p = {p:.3})")).unwrap_or_default();
        println!(
            "{:>7}: {} via {}{p}",
            account.account_id,
            account.label.as_str(),
            account.source.as_str()
        );
    }
    for warning in &outcome.warnings {
        println!("warning: {warning}");
    }
    Ok(())
}
