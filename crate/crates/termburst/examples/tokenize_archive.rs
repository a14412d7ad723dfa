//! Parse a JSONL archive and show what normalization does to each text:
//! URLs and mentions vanish, hashtags survive verbatim, everything else
//! is lowercased, stemmed, and stopword-filtered.

use std::io::Write;

use termburst::ingest::{parse_archive, tokenize_documents};

fn main() -> termburst::Result<()> {
    let lines = [
        r#"{"id":"1","user_id":"ana","created_at":"2025-03-01T09:00:00Z","text":"Breaking: flooding closes the riverside roads https://example.com/x #flood","retweet_of_user":null,"reply_to_user":null,"urls":1}"#,
        r#"{"id":"2","user_id":"bo","created_at":"2025-03-01T09:05:00Z","text":"@ana the bridges are closed too, station flooded #flood","retweet_of_user":null,"reply_to_user":"ana","urls":0}"#,
        r#"{"id":"3","user_id":"cy","created_at":"2025-03-01T10:00:00Z","text":"!!! ... !!!","retweet_of_user":null,"reply_to_user":null,"urls":0}"#,
        r#"not json at all"#,
        r#"{"id":"5","user_id":"di","created_at":"whenever","text":"bad timestamp","retweet_of_user":null,"reply_to_user":null,"urls":0}"#,
    ];
    let path = std::env::temp_dir().join("termburst-example-archive.jsonl");
    let mut file = std::fs::File::create(&path).expect("create temp archive");
    for line in lines {
        writeln!(file, "{line}").expect("write temp archive");
    }

    let scan = parse_archive(&path)?;
    println!("parsed {} documents", scan.documents.len());
    for skip in &scan.skipped {
        println!("skipped line {}: {}", skip.line, skip.reason);
    }

    let (tokenized, dropped) = tokenize_documents(&scan.documents);
    println!("{dropped} document(s) normalized to nothing and were dropped");
    for doc in &tokenized {
        println!("{}: {:?}", doc.doc_id, doc.tokens);
    }
    Ok(())
}
