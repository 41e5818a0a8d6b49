//! Writes the synthetic text fixture as ordinary pipeline inputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use jobnet_core::classifier::write_training_csv;
use jobnet_core::synthetic::{text_fixture, TextFixtureSpec};

use crate::error::{CliError, Context};
use crate::io::create;

/// Write editions, word vectors, training data, a lexicon and `config.toml`
/// under `dir`. Returns the config path.
pub fn write_fixture(dir: &Path, seed: u64, jobs_per_edition: usize, bootstrap: usize) -> Result<PathBuf, CliError> {
    let spec = TextFixtureSpec {
        seed,
        jobs_per_edition,
        ..TextFixtureSpec::default()
    };
    let fx = text_fixture(&spec)?;
    let write = |rel: &str, text: &str| -> Result<(), CliError> {
        let p = dir.join(rel);
        let mut w = create(&p)?;
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .context(format!("writing {}", p.display()))
    };

    let mut config = String::from("output_dir = \"out\"\n\n");
    for (year, text) in &fx.editions {
        write(&format!("editions/{year}.txt"), text)?;
        config.push_str(&format!("[[editions]]\nyear = {year}\npath = \"editions/{year}.txt\"\n\n"));
    }
    write("vectors.txt", &fx.embeddings)?;
    write("lexicon.txt", &(fx.lexicon.join("\n") + "\n"))?;
    let training = dir.join("training.csv");
    write_training_csv(&fx.training, create(&training)?).context(format!("writing {}", training.display()))?;

    config.push_str(&format!(
        "[embedding]\npath = \"vectors.txt\"\ndimension = {}\n\n\
         [similarity]\nthreshold = 0.85\nweighting = \"embedding_cosine\"\n\n\
         [classifier]\ntraining = \"training.csv\"\nmode = \"bow\"\nsplit_seed = 42\n\n\
         [polarization]\nbootstrap = {bootstrap}\nseed = 1\n\n\
         [spellcheck]\nlexicon = \"lexicon.txt\"\n\n\
         [sweep]\nthresholds = [0.8, 0.85, 0.9]\n",
        spec.dimension
    ));
    write("config.toml", &config)?;
    eprintln!("synth: wrote {} editions to {}", fx.editions.len(), dir.display());
    Ok(dir.join("config.toml"))
}
