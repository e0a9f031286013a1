use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context as _;
use cwb_core::classify::train_cooccurrence_embeddings;
use cwb_core::corpus::{fixture, write_jsonl, CodewordTable, RawDocument};

use crate::{user, Context, FixtureCommand};

fn create_parent(path: &Path) -> anyhow::Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| user(format!("cannot create {}: {e}", dir.display()))),
        None => Ok(()),
    }
}

fn write_docs(path: &Path, docs: &[RawDocument]) -> anyhow::Result<()> {
    create_parent(path)?;
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("create {}", path.display()))?);
    write_jsonl(&mut out, docs)?;
    out.flush()?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    create_parent(path)?;
    fs::write(path, text).with_context(|| format!("write {}", path.display()))
}

pub fn run(ctx: &Context, cmd: FixtureCommand) -> anyhow::Result<()> {
    match cmd {
        FixtureCommand::Enron { sentences, out, nouns } => {
            let docs = fixture::email_corpus(sentences, ctx.seed);
            write_docs(&out, &docs)?;
            println!("wrote {} documents to {}", docs.len(), out.display());
            if let Some(path) = nouns {
                let mut text = fixture::replacement_nouns().join("\n");
                text.push('\n');
                write_text(&path, &text)?;
            }
        }
        FixtureCommand::Reddit { general, drug, out, codewords } => {
            let (g, d) = fixture::reddit_comments(general, drug, ctx.seed);
            let docs: Vec<RawDocument> = g.into_iter().chain(d).collect();
            write_docs(&out, &docs)?;
            println!("wrote {} comments to {}", docs.len(), out.display());
            if let Some(path) = codewords {
                let table = CodewordTable::drug_slang();
                let text: String = table.targets().zip(table.codewords()).map(|(t, c)| format!("{t}\t{c}\n")).collect();
                write_text(&path, &text)?;
            }
        }
        FixtureCommand::Embeddings { dim, sentences, out } => {
            if dim == 0 {
                return Err(user("--dim must be positive"));
            }
            let corpus = fixture::background_corpus(sentences, ctx.seed);
            let table = train_cooccurrence_embeddings(&corpus, dim, 2, ctx.seed).map_err(user)?;
            create_parent(&out)?;
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("create {}", out.display()))?);
            table.write_to(&mut w)?;
            w.flush()?;
            println!("wrote {} vectors of dimension {dim} to {}", table.len(), out.display());
        }
    }
    Ok(())
}
