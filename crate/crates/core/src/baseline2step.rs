//! Cluster-then-extract comparison system.
//!
//! Posts are embedded as TF-IDF vectors and grouped by a single greedy pass
//! against cluster centroids. Each cluster contributes the post closest to
//! its centroid, so every summary sentence is an input post verbatim.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rougemetrics::limit_words;
use crate::textproc::tokenize;

pub const DEFAULT_THRESHOLD: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    /// Minimum cosine similarity to join an existing cluster.
    pub threshold: f64,
    pub max_clusters: usize,
    pub word_limit: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            max_clusters: 5,
            word_limit: crate::rougemetrics::DEFAULT_WORD_LIMIT,
        }
    }
}

/// Cluster id per post; ids are contiguous from 0 in order of first use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub clusters: usize,
}

impl ClusterAssignment {
    /// Post indices of each cluster, in post order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.clusters];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

type Sparse = BTreeMap<usize, f64>;

/// TF-IDF vectors with smoothed idf `ln((1 + N) / (1 + df)) + 1`.
fn tfidf(posts: &[String]) -> Vec<Sparse> {
    let docs: Vec<Vec<String>> = posts.iter().map(|p| tokenize(p)).collect();
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut df: Vec<usize> = Vec::new();
    let mut counts: Vec<Sparse> = Vec::with_capacity(docs.len());
    for doc in &docs {
        let mut tf = Sparse::new();
        for w in doc {
            let next = ids.len();
            let id = *ids.entry(w.as_str()).or_insert(next);
            if id == df.len() {
                df.push(0);
            }
            *tf.entry(id).or_insert(0.0) += 1.0;
        }
        for &id in tf.keys() {
            df[id] += 1;
        }
        counts.push(tf);
    }
    let n = docs.len() as f64;
    counts
        .into_iter()
        .map(|tf| {
            tf.into_iter()
                .map(|(id, c)| (id, c * (((1.0 + n) / (1.0 + df[id] as f64)).ln() + 1.0)))
                .collect()
        })
        .collect()
}

fn dot(a: &Sparse, b: &Sparse) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().map(|(k, v)| v * large.get(k).copied().unwrap_or(0.0)).sum()
}

fn norm(a: &Sparse) -> f64 {
    a.values().map(|v| v * v).sum::<f64>().sqrt()
}

fn cosine(a: &Sparse, b: &Sparse) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}

fn centroid(vectors: &[Sparse], members: &[usize]) -> Sparse {
    let mut out = Sparse::new();
    for &i in members {
        for (&k, &v) in &vectors[i] {
            *out.entry(k).or_insert(0.0) += v / members.len() as f64;
        }
    }
    out
}

fn assign(vectors: &[Sparse], threshold: f64, max_clusters: usize) -> ClusterAssignment {
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut centroids: Vec<Sparse> = Vec::new();
    let mut labels = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        let best = centroids
            .iter()
            .enumerate()
            .map(|(c, cen)| (c, cosine(v, cen)))
            .fold(None, |acc: Option<(usize, f64)>, (c, s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((c, s)),
            });
        let target = match best {
            Some((c, s)) if s >= threshold || members.len() >= max_clusters => c,
            _ => {
                members.push(Vec::new());
                centroids.push(Sparse::new());
                members.len() - 1
            }
        };
        members[target].push(i);
        centroids[target] = centroid(vectors, &members[target]);
        labels.push(target);
    }
    ClusterAssignment {
        clusters: members.len(),
        labels,
    }
}

/// Greedy single-pass clustering. A post joins the most similar centroid
/// when the cosine reaches `threshold`; otherwise it opens a new cluster,
/// unless `max_clusters` are open, in which case it joins the best one.
pub fn disentangle(posts: &[String], threshold: f64, max_clusters: usize) -> Result<ClusterAssignment> {
    if posts.is_empty() {
        return Err(Error::Data("cannot cluster an empty post list".into()));
    }
    if max_clusters == 0 {
        return Err(Error::Config("max_clusters must be at least 1".into()));
    }
    Ok(assign(&tfidf(posts), threshold, max_clusters))
}

/// Index of the post closest to the centroid of `vectors[members]`;
/// ties go to the earliest.
fn closest(vectors: &[Sparse], members: &[usize]) -> usize {
    let cen = centroid(vectors, members);
    let mut best = (members[0], f64::NEG_INFINITY);
    for &i in members {
        let s = cosine(&vectors[i], &cen);
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// The cluster post most similar to the cluster centroid.
pub fn compress(cluster: &[String]) -> Result<String> {
    if cluster.is_empty() {
        return Err(Error::Data("cannot compress an empty cluster".into()));
    }
    let vectors = tfidf(cluster);
    let all: Vec<usize> = (0..cluster.len()).collect();
    Ok(cluster[closest(&vectors, &all)].clone())
}

/// Clusters, extracts one post per cluster in order of each cluster's first
/// post, then keeps whole sentences while the total stays within
/// `word_limit` words.
pub fn two_step_summarize(posts: &[String], cfg: &BaselineConfig) -> Result<Vec<String>> {
    let assignment = disentangle(posts, cfg.threshold, cfg.max_clusters)?;
    let sentences = assignment
        .members()
        .iter()
        .map(|members| compress(&members.iter().map(|&i| posts[i].clone()).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(limit_words(sentences, cfg.word_limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn identical_posts_form_one_cluster() {
        let a = disentangle(&s(&["red fox runs", "red fox runs", "red fox runs"]), 0.2, 5).unwrap();
        assert_eq!(a.clusters, 1);
        assert_eq!(disentangle(&s(&["solo"]), 0.2, 5).unwrap().clusters, 1);
        assert!(disentangle(&[], 0.2, 5).is_err());
    }

    #[test]
    fn disjoint_vocabularies_split() {
        let posts = s(&["red fox runs", "blue sea waves", "red fox sleeps", "blue sea calm"]);
        let a = disentangle(&posts, 0.2, 5).unwrap();
        assert_eq!(a.clusters, 2);
        assert_eq!(a.labels, vec![0, 1, 0, 1]);
        let out = two_step_summarize(&posts, &BaselineConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn cluster_cap_forces_joins() {
        let posts = s(&["a", "b", "c", "d"]);
        let a = disentangle(&posts, 0.2, 2).unwrap();
        assert_eq!(a.clusters, 2);
        assert_eq!(a.labels.len(), 4);
    }

    #[test]
    fn compress_picks_the_central_post() {
        assert_eq!(compress(&s(&["only one"])).unwrap(), "only one");
        assert_eq!(compress(&s(&["a b", "a b", "c"])).unwrap(), "a b");
        assert_eq!(compress(&s(&["x", "y", "x y", "p", "q", "x y"])).unwrap(), "x y");
        assert!(compress(&[]).is_err());
    }

    #[test]
    fn ties_go_to_the_earliest_post() {
        let posts = s(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(compress(&posts).unwrap(), "a");
    }

    #[test]
    fn word_limit_truncates() {
        let posts = s(&["red fox runs", "blue sea waves"]);
        let zero = BaselineConfig {
            word_limit: 0,
            ..BaselineConfig::default()
        };
        assert!(two_step_summarize(&posts, &zero).unwrap().is_empty());
        let three = BaselineConfig {
            word_limit: 4,
            ..BaselineConfig::default()
        };
        assert_eq!(two_step_summarize(&posts, &three).unwrap(), s(&["red fox runs"]));
    }

    proptest! {
        #[test]
        fn output_is_extractive_and_bounded(
            posts in prop::collection::vec("[a-e]{1,2}( [a-e]{1,2}){0,4}", 1..12),
            cap in 1usize..6,
        ) {
            let cfg = BaselineConfig { max_clusters: cap, ..BaselineConfig::default() };
            let a = disentangle(&posts, cfg.threshold, cap).unwrap();
            prop_assert!(a.clusters <= cap.min(posts.len()));
            prop_assert!(a.labels.iter().all(|&l| l < a.clusters));
            let out = two_step_summarize(&posts, &cfg).unwrap();
            prop_assert_eq!(out.len(), a.clusters);
            prop_assert!(out.iter().all(|o| posts.contains(o)));
            prop_assert_eq!(out, two_step_summarize(&posts, &cfg).unwrap());
        }
    }
}
