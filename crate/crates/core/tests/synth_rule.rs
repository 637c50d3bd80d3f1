//! Re-derives every synthetic label from the files on disk with a
//! standalone reader and an undirected BFS, sharing no code with the
//! generator.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;

use graphmatch::synth::{self, SynthConfig};

struct Sentence {
    heads: Vec<usize>, // 0 = root, else 1-based
    deprels: Vec<String>,
    spans: Vec<(usize, usize, String)>, // 1-based inclusive
}

fn read_sentences(text: &str) -> BTreeMap<String, Sentence> {
    let mut out = BTreeMap::new();
    for block in text.split("\n\n") {
        let mut id = None;
        let mut s = Sentence { heads: vec![], deprels: vec![], spans: vec![] };
        for line in block.lines() {
            if let Some(rest) = line.strip_prefix("#id ") {
                id = Some(rest.trim().to_string());
            } else if let Some(rest) = line.strip_prefix("#entities ") {
                let mut it = rest.split_whitespace();
                while let (Some(range), Some(ent)) = (it.next(), it.next()) {
                    let (a, b) = range.split_once(':').unwrap();
                    s.spans.push((a.parse().unwrap(), b.parse().unwrap(), ent.to_string()));
                }
            } else if !line.starts_with('#') && !line.is_empty() {
                let f: Vec<&str> = line.split('\t').collect();
                s.heads.push(f[4].parse().unwrap());
                s.deprels.push(f[5].to_string());
            }
        }
        if let Some(id) = id {
            if id.starts_with('s') {
                out.insert(id, s);
            }
        }
    }
    out
}

fn distances(s: &Sentence, from: usize) -> Vec<usize> {
    let n = s.heads.len();
    let mut adj = vec![Vec::new(); n + 1];
    for (i, &h) in s.heads.iter().enumerate() {
        if h > 0 {
            adj[i + 1].push(h);
            adj[h].push(i + 1);
        }
    }
    let mut d = vec![usize::MAX; n + 1];
    d[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if d[w] == usize::MAX {
                d[w] = d[v] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

#[test]
fn written_labels_follow_the_negation_rule() {
    for seed in [1, 9] {
        let dir = tempfile::tempdir().unwrap();
        synth::generate(&SynthConfig { seed, ..SynthConfig::default() }).unwrap().write(dir.path()).unwrap();

        let mut owners: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for line in fs::read_to_string(dir.path().join(synth::EDGES_FILE)).unwrap().lines() {
            let f: Vec<&str> = line.split('\t').collect();
            owners.entry(f[0].to_string()).or_default().insert(f[2].to_string());
        }
        let sentences = read_sentences(&fs::read_to_string(dir.path().join(synth::PARSES_FILE)).unwrap());

        let mut want: BTreeMap<(String, String), u8> = BTreeMap::new();
        for (id, s) in &sentences {
            let negs: Vec<usize> = (1..=s.deprels.len()).filter(|&t| s.deprels[t - 1] == "neg").collect();
            for (a, b, ent) in &s.spans {
                let negated = negs.iter().any(|&n| {
                    let d = distances(s, n);
                    (*a..=*b).any(|t| d[t] <= 2)
                });
                for c in owners.get(ent).into_iter().flatten() {
                    let slot = want.entry((c.clone(), id.clone())).or_insert(1);
                    if negated {
                        *slot = 0;
                    }
                }
            }
        }

        let mut got: BTreeMap<(String, String), u8> = BTreeMap::new();
        for line in fs::read_to_string(dir.path().join(synth::LABELS_FILE)).unwrap().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let key = (v["concept"].as_str().unwrap().to_string(), v["sentence"].as_str().unwrap().to_string());
            got.insert(key, v["label"].as_u64().unwrap() as u8);
        }
        assert_eq!(got, want, "seed {seed}");
        let pos = got.values().filter(|&&l| l == 1).count();
        assert!(pos > 0 && pos < got.len(), "seed {seed}: both classes present");
    }
}
