#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use taxolink_core::{build_node_texts, EmbeddingStrategy, HashEmbedder, TaxonomyNode};

pub const HASH_DIM: usize = 32;

pub const OCCUPATIONS: &str = "id,preferredLabel,altLabels,description
2512.1,software developer,\"programmer
coder\",Writes and maintains software.
5120.1,cook,chef,Prepares food.
2330.1,secondary school teacher,,Teaches pupils.
";

pub const SKILLS: &str = "id,preferredLabel,altLabels,description
s-java,Java,\"Java programming
JVM\",The Java language.
s-python,Python,,
s-team,teamwork,\"team work
collaboration\",Working with others.
s-cook,cooking,,Preparing meals.
";

pub const EQF: &str = "qualification,country,eqf_level
Bachelor of Science,GR,6
Master of Science,DE,7
Upper secondary school leaving certificate,IT,4
";

pub const DOCUMENTS: &str = r#"{"id":"d1","title":"software developer","text":"We need a software developer with Java skills."}
{"id":"d2","title":"cook","text":"Our restaurant hires a cook with teamwork."}
{"id":"d3","title":"secondary school teacher","text":"A teacher holding a Master of Science."}
"#;

pub const ANNOTATIONS: &str = r#"{"id":"d1","tokens":[["We","need","a","software","developer","with","Java","skills","."]],"entities":[{"kind":"occupation","sentence":0,"start":3,"end":5,"gold_id":"2512.1"},{"kind":"skill","sentence":0,"start":6,"end":7,"gold_id":"s-java"}]}
{"id":"d2","tokens":[["[CLS]","Our","restaurant","hires","a","cook","with","teamwork","."]],"labels":[["O","O","O","O","O","B-Occupation","O","B-Skill","O"]]}
{"id":"d3","tokens":[["A","teacher","holding","a","Master","of","Science","."]],"entities":[{"kind":"occupation","sentence":0,"start":1,"end":2},{"kind":"qualification","sentence":0,"start":4,"end":7}]}
"#;

pub const GOLD: &str = r#"{"id":"d1","text":"We need a software developer with Java skills.","kind":"occupation","gold":["2512.1"],"gold_spans":[{"tokens":[3,4],"label":"2512.1"}]}
{"id":"d2","text":"Our restaurant hires a cook with teamwork.","kind":"occupation","gold":["5120.1"],"gold_spans":[{"tokens":[4],"label":"5120.1"}]}
{"id":"d3","text":"A teacher holding a Master of Science.","kind":"occupation","gold":["2330.1"],"gold_spans":[{"tokens":[1],"label":"2330.1"}]}
{"id":"d1","text":"We need a software developer with Java skills.","kind":"skill","gold":["s-java"],"gold_spans":[{"tokens":[6],"label":"s-java"}]}
{"id":"d2","text":"Our restaurant hires a cook with teamwork.","kind":"skill","gold":["s-team"],"gold_spans":[{"tokens":[6],"label":"s-team"}]}
{"id":"d3","text":"A teacher holding a Master of Science.","kind":"qualification","gold":["EQF7"],"gold_spans":[{"tokens":[4,5,6],"label":"EQF7"}]}
"#;

/// Every text the fixture runs embed: node texts under all strategies,
/// document texts, titles and annotated mention slices.
pub fn fixture_texts() -> BTreeSet<String> {
    let mut texts = BTreeSet::new();
    for (kind, csv) in [
        (taxolink_core::EntityKind::Occupation, OCCUPATIONS),
        (taxolink_core::EntityKind::Skill, SKILLS),
    ] {
        let set = taxolink::taxonomy_io::read_esco(csv.as_bytes(), kind, "test", Path::new("fixture")).unwrap();
        for node in set.nodes() {
            for s in EmbeddingStrategy::ALL {
                texts.extend(build_node_texts(node, s).into_iter().map(|(_, t)| t));
            }
        }
    }
    for line in EQF.lines().skip(1) {
        let q = line.split(',').next().unwrap();
        let node = TaxonomyNode::qualification("x", q, "", 1);
        texts.extend(
            build_node_texts(&node, EmbeddingStrategy::PreferredLabel)
                .into_iter()
                .map(|(_, t)| t),
        );
    }
    for line in DOCUMENTS.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        texts.insert(v["text"].as_str().unwrap().to_string());
        texts.insert(v["title"].as_str().unwrap().to_string());
    }
    for m in [
        "software developer",
        "Java",
        "cook",
        "teamwork",
        "teacher",
        "Master of Science",
    ] {
        texts.insert(m.to_string());
    }
    texts
}

pub fn replay_file(texts: &BTreeSet<String>) -> String {
    let hash = HashEmbedder::new(HASH_DIM);
    texts
        .iter()
        .map(|t| serde_json::json!({"text": t, "vector": hash.vector_for(t)}).to_string() + "\n")
        .collect()
}

/// A self-contained run directory with data files and `config.toml`.
pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        Self::with_provider("[provider]\ntype = \"replay\"\npath = \"replay.jsonl\"\n")
    }

    pub fn with_provider(provider_section: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, content: &str| fs::write(dir.path().join(name), content).unwrap();
        write("occupations.csv", OCCUPATIONS);
        write("skills.csv", SKILLS);
        write("eqf.csv", EQF);
        write("docs.jsonl", DOCUMENTS);
        write("annotations.jsonl", ANNOTATIONS);
        write("gold.jsonl", GOLD);
        write("replay.jsonl", &replay_file(&fixture_texts()));
        write(
            "config.toml",
            &format!(
                "strategy = \"s1\"\nk = 3\ncache_dir = \"cache\"\n\n[paths]\noccupations = \"occupations.csv\"\n\
                 skills = \"skills.csv\"\nqualifications = \"eqf.csv\"\n\n{provider_section}\n\
                 [labeler]\ntype = \"gold\"\npath = \"annotations.jsonl\"\n"
            ),
        );
        Fixture { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, content).unwrap();
        p
    }

    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    /// Runs the binary with `--config config.toml` in the fixture directory.
    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_taxolink"))
            .current_dir(self.dir.path())
            .env_remove(taxolink::service::ADDRESS_ENV)
            .env_remove("RUST_LOG")
            .arg("--config")
            .arg("config.toml")
            .args(args)
            .output()
            .unwrap()
    }
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstderr:\n{}", o.status.code(), stderr(o));
}
