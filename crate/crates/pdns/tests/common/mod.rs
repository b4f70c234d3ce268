//! Shared fixtures for integration tests.
//!
//! The heavyweight experiments run against a 943-user / 1682-item /
//! 100k-interaction dataset. If the MovieLens 100k ratings file is available
//! (either at `$PDNS_ML100K` or `data/ml-100k/u.data` relative to the
//! workspace root) it is used directly; otherwise a deterministic surrogate
//! with the same shape is generated: low-rank user/item affinities plus a
//! popularity skew, so ranking models have real structure to learn and hard
//! negative mining has real false negatives to hit.

use std::path::PathBuf;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N_USERS: usize = 943;
pub const N_ITEMS: usize = 1682;
pub const N_INTERACTIONS: usize = 100_000;

fn real_data_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("PDNS_ML100K") {
        let p = PathBuf::from(p);
        if p.is_file() {
            return Some(p);
        }
    }
    let local = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/ml-100k/u.data")
        .canonicalize()
        .ok()?;
    local.is_file().then_some(local)
}

/// `user<TAB>item<TAB>timestamp` lines, one per interaction.
pub fn ml100k_lines() -> &'static [String] {
    static LINES: OnceLock<Vec<String>> = OnceLock::new();
    LINES.get_or_init(|| match real_data_path() {
        Some(path) => load_real(&path),
        None => generate_surrogate(0x9e37_79b9_7f4a_7c15),
    })
}

fn load_real(path: &std::path::Path) -> Vec<String> {
    // u.data rows are `user<TAB>item<TAB>rating<TAB>timestamp`; the rating is
    // dropped (implicit feedback).
    std::fs::read_to_string(path)
        .expect("readable ratings file")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            assert_eq!(f.len(), 4, "unexpected ratings row {l:?}");
            format!("{}\t{}\t{}", f[0], f[1], f[3])
        })
        .collect()
}

fn generate_surrogate(seed: u64) -> Vec<String> {
    let dim = 8usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller, one value per call (the pair's second half is dropped
        // for simplicity; throughput is irrelevant here).
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };

    let user_f: Vec<f64> = (0..N_USERS * dim).map(|_| normal(&mut rng)).collect();
    let item_f: Vec<f64> = (0..N_ITEMS * dim).map(|_| normal(&mut rng)).collect();
    // Zipf-ish popularity over a random item permutation.
    let mut pop_rank: Vec<usize> = (0..N_ITEMS).collect();
    for k in (1..N_ITEMS).rev() {
        let j = rng.random_range(0..=k);
        pop_rank.swap(k, j);
    }
    let mut log_pop = vec![0.0f64; N_ITEMS];
    for (rank, &item) in pop_rank.iter().enumerate() {
        log_pop[item] = -0.9 * ((rank + 1) as f64).ln();
    }

    // Per-user interaction counts: lognormal-ish, clamped to [20, 500],
    // then nudged to sum to exactly N_INTERACTIONS.
    let mut counts: Vec<usize> = (0..N_USERS)
        .map(|_| {
            let x = (4.2 + 0.75 * normal(&mut rng)).exp();
            (x as usize).clamp(20, 500)
        })
        .collect();
    let mut total: isize = counts.iter().sum::<usize>() as isize;
    let mut k = 0usize;
    while total != N_INTERACTIONS as isize {
        let u = k % N_USERS;
        if total < N_INTERACTIONS as isize && counts[u] < N_ITEMS - 1 {
            counts[u] += 1;
            total += 1;
        } else if total > N_INTERACTIONS as isize && counts[u] > 20 {
            counts[u] -= 1;
            total -= 1;
        }
        k += 1;
    }

    // Guarantee every item id appears at least once: pre-assign item i to
    // user i mod N_USERS before affinity-driven selection fills the rest.
    let mut chosen: Vec<Vec<usize>> = vec![Vec::new(); N_USERS];
    for i in 0..N_ITEMS {
        chosen[i % N_USERS].push(i);
    }

    let affinity = |u: usize, i: usize| -> f64 {
        let a = &user_f[u * dim..(u + 1) * dim];
        let b = &item_f[i * dim..(i + 1) * dim];
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        1.1 * dot + log_pop[i]
    };

    let mut lines = Vec::with_capacity(N_INTERACTIONS);
    for u in 0..N_USERS {
        let n_u = counts[u].max(chosen[u].len());
        // Gumbel-top-k = sampling without replacement proportional to
        // exp(affinity); keeps both structure and noise in the histories.
        let mut keyed: Vec<(f64, usize)> = (0..N_ITEMS)
            .filter(|i| !chosen[u].contains(i))
            .map(|i| {
                let g = -(-(rng.random::<f64>().max(1e-12)).ln()).ln();
                (affinity(u, i) + g, i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let need = n_u - chosen[u].len();
        let mut items = chosen[u].clone();
        items.extend(keyed.iter().take(need).map(|&(_, i)| i));

        // Random chronology: shuffle, then timestamps increase per user.
        for k in (1..items.len()).rev() {
            let j = rng.random_range(0..=k);
            items.swap(k, j);
        }
        for (t, &i) in items.iter().enumerate() {
            lines.push(format!("u{u}\ti{i}\t{}", t as i64));
        }
    }
    assert_eq!(lines.len(), N_INTERACTIONS, "surrogate count drifted");
    lines
}

/// Ingested (unsplit) fixture dataset.
pub fn ml100k_dataset() -> pdns::dataset::InteractionDataset {
    pdns::dataset::ingest(ml100k_lines()).expect("fixture ingests")
}

/// Write the fixture to `dir/interactions.tsv` and return the path.
pub fn ml100k_file(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("interactions.tsv");
    if !path.is_file() {
        std::fs::write(&path, ml100k_lines().join("\n")).expect("fixture writes");
    }
    path
}
