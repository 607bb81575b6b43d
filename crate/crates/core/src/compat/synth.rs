//! Synthetic topical clickstreams: pages grouped into clusters that share a
//! topic vocabulary and link mostly among themselves.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::clickstream::{ClickstreamGraph, GraphBuilder};
use crate::error::AnalyzeError;
use crate::text::Lemma;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub clusters: usize,
    pub pages_per_cluster: usize,
    pub page_tokens: usize,
    /// General vocabulary shared by every page.
    pub shared_vocab: usize,
    /// Vocabulary specific to each cluster.
    pub topic_vocab: usize,
    /// Share of a page's tokens drawn from its cluster's topic vocabulary.
    pub topic_share: f64,
    /// Zipf exponent for both vocabularies.
    pub zipf_exponent: f64,
    /// Outlinks per page inside its cluster.
    pub links_in_cluster: usize,
    /// Outlinks per page into other clusters.
    pub links_across: usize,
    /// Click count of a cross-cluster link relative to an in-cluster one.
    pub across_weight: f64,
    pub no_click: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            clusters: 40,
            pages_per_cluster: 25,
            page_tokens: 500,
            shared_vocab: 4000,
            topic_vocab: 400,
            topic_share: 0.35,
            zipf_exponent: 1.0,
            links_in_cluster: 6,
            links_across: 1,
            across_weight: 0.1,
            no_click: 0.3,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub graph: ClickstreamGraph,
    /// Lemma content per page, indexed like the graph.
    pub texts: Vec<Vec<Lemma>>,
    /// Cluster of each page.
    pub cluster_of: Vec<usize>,
}

fn zipf(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-s))).expect("vocabulary is non-empty")
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<SyntheticCorpus, AnalyzeError> {
        if self.clusters == 0 || self.pages_per_cluster == 0 || self.shared_vocab == 0 || self.topic_vocab == 0 {
            return Err(AnalyzeError::Config("synthetic corpus needs pages and vocabulary".into()));
        }
        if !(0.0..=1.0).contains(&self.topic_share) || !(0.0..1.0).contains(&self.no_click) {
            return Err(AnalyzeError::Config(
                "topic share and no-click must be probabilities, no-click below 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.clusters * self.pages_per_cluster;
        // zero-padded so that builder (sorted) order equals generation order
        let width = n.to_string().len();
        let name = |i: usize| format!("p{i:0width$}");
        let shared = zipf(self.shared_vocab, self.zipf_exponent);
        let topic = zipf(self.topic_vocab, self.zipf_exponent);

        let mut texts = Vec::with_capacity(n);
        let mut cluster_of = Vec::with_capacity(n);
        let mut b = GraphBuilder::default();
        for i in 0..n {
            let c = i / self.pages_per_cluster;
            cluster_of.push(c);
            let text: Vec<Lemma> = (0..self.page_tokens)
                .map(|_| {
                    let id = if rng.gen::<f64>() < self.topic_share {
                        format!("t{c}x{}", topic.sample(&mut rng))
                    } else {
                        format!("g{}", shared.sample(&mut rng))
                    };
                    Lemma::new(id).expect("generated ids are lowercase")
                })
                .collect();
            b.page(name(i), text.len());
            b.external(name(i), rng.gen_range(50..500));
            texts.push(text);
        }
        let base: u64 = 100;
        let across = ((base as f64) * self.across_weight).round().max(1.0) as u64;
        for (i, &c) in cluster_of.iter().enumerate() {
            let first = c * self.pages_per_cluster;
            if self.pages_per_cluster > 1 {
                for _ in 0..self.links_in_cluster {
                    let mut j = first + rng.gen_range(0..self.pages_per_cluster);
                    if j == i {
                        j = first + (j - first + 1) % self.pages_per_cluster;
                    }
                    b.transition(name(i), name(j), base + rng.gen_range(0..base));
                }
            }
            if self.clusters > 1 {
                for _ in 0..self.links_across {
                    let other = (c + 1 + rng.gen_range(0..self.clusters - 1)) % self.clusters;
                    let j = other * self.pages_per_cluster + rng.gen_range(0..self.pages_per_cluster);
                    b.transition(name(i), name(j), across);
                }
            }
            if self.links_in_cluster > 0 || self.links_across > 0 {
                b.no_click(name(i), self.no_click);
            }
        }
        Ok(SyntheticCorpus { graph: b.build()?, texts, cluster_of })
    }
}
