use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::coverage::corpus_lemmas;
use crate::error::{AnalyzeError, ParseError};
use crate::text::Lemma;

/// Source values in the graph file that mark arrivals from outside the page
/// set. They add to the target's visit count but are not pages.
pub const EXTERNAL_PREFIXES: [&str; 2] = ["other-", "(external)"];

fn is_external(prev: &str) -> bool {
    EXTERNAL_PREFIXES.iter().any(|p| prev.starts_with(p))
}

/// Page-to-page click counts with per-page stop probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickstreamGraph {
    names: Vec<String>,
    lengths: Vec<usize>,
    visits: Vec<u64>,
    /// Outgoing `(target, count)` lists, sorted by target.
    out: Vec<Vec<(usize, u64)>>,
    no_click: Vec<f64>,
}

impl ClickstreamGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, page: usize) -> &str {
        &self.names[page]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn length(&self, page: usize) -> usize {
        self.lengths[page]
    }

    pub fn visits(&self, page: usize) -> u64 {
        self.visits[page]
    }

    pub fn no_click(&self, page: usize) -> f64 {
        self.no_click[page]
    }

    pub fn outlinks(&self, page: usize) -> &[(usize, u64)] {
        &self.out[page]
    }

    /// Probability of clicking from `from` to `to` on one step.
    pub fn click_probability(&self, from: usize, to: usize) -> f64 {
        let total: u64 = self.out[from].iter().map(|&(_, c)| c).sum();
        let c = self.out[from].iter().find(|&&(t, _)| t == to).map_or(0, |&(_, c)| c);
        if total == 0 {
            0.0
        } else {
            (1.0 - self.no_click[from]) * c as f64 / total as f64
        }
    }
}

/// Collects pages, external arrivals and transitions, then derives visits
/// and stop probabilities.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    lengths: BTreeMap<String, usize>,
    external: HashMap<String, u64>,
    transitions: BTreeMap<(String, String), u64>,
    no_click: HashMap<String, f64>,
}

impl GraphBuilder {
    pub fn page(&mut self, name: impl Into<String>, tokens: usize) -> &mut Self {
        self.lengths.insert(name.into(), tokens);
        self
    }

    pub fn external(&mut self, page: impl Into<String>, count: u64) -> &mut Self {
        *self.external.entry(page.into()).or_default() += count;
        self
    }

    pub fn transition(&mut self, from: impl Into<String>, to: impl Into<String>, count: u64) -> &mut Self {
        *self.transitions.entry((from.into(), to.into())).or_default() += count;
        self
    }

    /// Overrides the derived stop probability.
    pub fn no_click(&mut self, page: impl Into<String>, p: f64) -> &mut Self {
        self.no_click.insert(page.into(), p);
        self
    }

    /// Drops transitions and arrivals that mention pages without a length.
    pub fn retain_known(&mut self) -> usize {
        let before = self.transitions.len() + self.external.len();
        let known = &self.lengths;
        self.transitions.retain(|(a, b), _| known.contains_key(a) && known.contains_key(b));
        self.external.retain(|p, _| known.contains_key(p));
        before - self.transitions.len() - self.external.len()
    }

    /// Visits of a page are all its incoming counts, internal and external.
    /// Without an override, the stop probability is the share of visits that
    /// do not continue through an outlink, and 1 for pages without outlinks.
    pub fn build(&self) -> Result<ClickstreamGraph, AnalyzeError> {
        let names: Vec<String> = self.lengths.keys().cloned().collect();
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let find =
            |n: &str| index.get(n).copied().ok_or_else(|| AnalyzeError::Graph(format!("page {n:?} has no length")));
        let n = names.len();
        let mut visits = vec![0u64; n];
        let mut out: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for (page, &c) in &self.external {
            visits[find(page)?] += c;
        }
        for ((a, b), &c) in &self.transitions {
            let (ia, ib) = (find(a)?, find(b)?);
            if c > 0 {
                out[ia].push((ib, c));
                visits[ib] += c;
            }
        }
        let mut no_click = vec![1.0; n];
        for i in 0..n {
            out[i].sort_unstable();
            let outgoing: u64 = out[i].iter().map(|&(_, c)| c).sum();
            if outgoing > 0 && visits[i] > 0 {
                no_click[i] = visits[i].saturating_sub(outgoing) as f64 / visits[i] as f64;
            }
        }
        for (page, &p) in &self.no_click {
            if !(0.0..=1.0).contains(&p) {
                return Err(AnalyzeError::Graph(format!("no-click probability {p} for {page:?} outside [0, 1]")));
            }
            let i = find(page)?;
            if out[i].is_empty() && p < 1.0 {
                return Err(AnalyzeError::Graph(format!("page {page:?} has no outlinks but no-click {p} < 1")));
            }
            no_click[i] = p;
        }
        Ok(ClickstreamGraph { names, lengths: self.lengths.values().copied().collect(), visits, out, no_click })
    }
}

fn read(path: &Path) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|source| ParseError::Io { path: path.display().to_string(), source })
}

fn line_err(path: &Path, line: usize, message: String) -> ParseError {
    ParseError::Line { path: path.display().to_string(), line, message }
}

/// Reads a graph from `prev<TAB>curr<TAB>count[<TAB>type]` lines and
/// `page<TAB>token_count` lines. A header row is skipped if its count column
/// is not numeric on line 1. Pages without a length are dropped with a
/// warning. Explicit stop probabilities come from `page<TAB>p` lines.
pub fn load_graph(
    graph: &Path,
    lengths: &HashMap<String, usize>,
    no_click: Option<&Path>,
) -> Result<ClickstreamGraph, AnalyzeError> {
    let mut b = GraphBuilder::default();
    for (page, &n) in lengths {
        b.page(page.clone(), n);
    }
    for (i, line) in read(graph)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() < 3 || f.len() > 4 {
            return Err(line_err(graph, i + 1, "expected `prev<TAB>curr<TAB>count`".into()).into());
        }
        let count: u64 = match f[2].trim().parse() {
            Ok(c) => c,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(line_err(graph, i + 1, format!("bad count {:?}", f[2])).into()),
        };
        if is_external(f[0]) {
            b.external(f[1], count);
        } else {
            b.transition(f[0], f[1], count);
        }
    }
    let dropped = b.retain_known();
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows naming pages without a length", graph.display());
    }
    if let Some(path) = no_click {
        for (i, line) in read(path)?.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (page, p) = line
                .split_once('\t')
                .and_then(|(a, p)| Some((a, p.trim().parse::<f64>().ok()?)))
                .ok_or_else(|| line_err(path, i + 1, "expected `page<TAB>probability`".into()))?;
            if lengths.contains_key(page) {
                b.no_click(page, p);
            }
        }
    }
    b.build()
}

/// Reads `page<TAB>token_count` lines.
pub fn load_lengths(path: &Path) -> Result<HashMap<String, usize>, ParseError> {
    let mut out = HashMap::new();
    for (i, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (page, n) = line
            .split_once('\t')
            .and_then(|(a, n)| Some((a, n.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| line_err(path, i + 1, "expected `page<TAB>token_count`".into()))?;
        out.insert(page.to_string(), n);
    }
    Ok(out)
}

/// Loads one text file per page from `dir`; the page name is the file stem.
pub fn load_page_texts(dir: &Path) -> Result<HashMap<String, Vec<Lemma>>, ParseError> {
    let io = |source| ParseError::Io { path: dir.display().to_string(), source };
    let mut out = HashMap::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else {
            continue;
        };
        out.insert(stem, corpus_lemmas(&read(&path)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkConfig {
    /// Tokens per session (N).
    pub session_tokens: usize,
    pub total_tokens: usize,
    pub seed: u64,
    /// Consecutive restarts without new tokens before a session is abandoned.
    pub restart_stall_limit: usize,
    /// Keep every step in [`Walk::steps`].
    pub record_steps: bool,
}

impl WalkConfig {
    pub fn new(session_tokens: usize, total_tokens: usize, seed: u64) -> Result<Self, AnalyzeError> {
        if session_tokens == 0 {
            return Err(AnalyzeError::Config("session tokens must be at least 1".into()));
        }
        if total_tokens < session_tokens {
            return Err(AnalyzeError::Config(format!(
                "total tokens {total_tokens} below session tokens {session_tokens}"
            )));
        }
        Ok(WalkConfig { session_tokens, total_tokens, seed, restart_stall_limit: 1000, record_steps: false })
    }
}

/// Emitted pages, with session boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Walk {
    pub pages: Vec<usize>,
    /// Start offsets into `pages`, one per session.
    pub session_starts: Vec<usize>,
    pub tokens: usize,
    pub stalls: usize,
    /// `(page, Some(next))` for a click, `(page, None)` for a stop. Empty
    /// unless requested.
    pub steps: Vec<(usize, Option<usize>)>,
}

fn pick(rng: &mut ChaCha8Rng, dist: &WeightedIndex<u64>) -> usize {
    dist.sample(rng)
}

/// One session from a fixed start page. Returns emitted pages, their token
/// total and whether the session stalled.
#[allow(clippy::too_many_arguments)]
fn run_session(
    graph: &ClickstreamGraph,
    dists: &[Option<WeightedIndex<u64>>],
    u0: usize,
    n: usize,
    stall_limit: usize,
    rng: &mut ChaCha8Rng,
    emit: &mut Vec<usize>,
    mut steps: Option<&mut Vec<(usize, Option<usize>)>>,
) -> (usize, bool) {
    let mut tokens = graph.lengths[u0];
    emit.push(u0);
    let mut current = u0;
    let mut since_restart = tokens;
    let mut idle_restarts = 0;
    while tokens < n {
        let stop = match &dists[current] {
            None => true,
            Some(_) => rng.gen::<f64>() < graph.no_click[current],
        };
        if stop {
            if let Some(s) = steps.as_deref_mut() {
                s.push((current, None));
            }
            if since_restart == 0 {
                idle_restarts += 1;
                if idle_restarts >= stall_limit {
                    return (tokens, true);
                }
            } else {
                idle_restarts = 0;
            }
            since_restart = 0;
            current = u0;
            continue;
        }
        let next = graph.out[current][pick(rng, dists[current].as_ref().expect("checked above"))].0;
        if let Some(s) = steps.as_deref_mut() {
            s.push((current, Some(next)));
        }
        emit.push(next);
        tokens += graph.lengths[next];
        since_restart += graph.lengths[next];
        current = next;
    }
    (tokens, false)
}

fn outlink_dists(graph: &ClickstreamGraph) -> Vec<Option<WeightedIndex<u64>>> {
    graph.out.iter().map(|o| WeightedIndex::new(o.iter().map(|&(_, c)| c)).ok()).collect()
}

/// A single session from `u0`, emitting until at least `n` tokens.
pub fn simulate_session_from(graph: &ClickstreamGraph, u0: usize, n: usize, seed: u64) -> Walk {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists = outlink_dists(graph);
    let mut pages = Vec::new();
    let (tokens, stalled) = run_session(graph, &dists, u0, n, 1000, &mut rng, &mut pages, None);
    Walk { pages, session_starts: vec![0], tokens, stalls: usize::from(stalled), steps: Vec::new() }
}

/// Browsing sessions until `total_tokens` are emitted. Each session starts at
/// a page drawn in proportion to its visits; each step stops with the page's
/// no-click probability and otherwise follows an outlink in proportion to its
/// count. A stop returns to the start page without emitting it again.
pub fn simulate_sessions(graph: &ClickstreamGraph, cfg: &WalkConfig) -> Result<Walk, AnalyzeError> {
    let starts = WeightedIndex::new(&graph.visits).map_err(|_| AnalyzeError::Graph("no page has any visits".into()))?;
    if graph.lengths.iter().all(|&l| l == 0) {
        return Err(AnalyzeError::Graph("every page is empty".into()));
    }
    let dists = outlink_dists(graph);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut walk = Walk::default();
    let mut consecutive_empty = 0usize;
    while walk.tokens < cfg.total_tokens {
        let u0 = pick(&mut rng, &starts);
        walk.session_starts.push(walk.pages.len());
        let (tokens, stalled) = run_session(
            graph,
            &dists,
            u0,
            cfg.session_tokens,
            cfg.restart_stall_limit.max(1),
            &mut rng,
            &mut walk.pages,
            cfg.record_steps.then_some(&mut walk.steps),
        );
        walk.tokens += tokens;
        walk.stalls += usize::from(stalled);
        consecutive_empty = if tokens == 0 { consecutive_empty + 1 } else { 0 };
        if consecutive_empty > 10_000 {
            return Err(AnalyzeError::Graph("sessions keep producing no tokens".into()));
        }
    }
    Ok(walk)
}

/// Concatenated page texts in visit order, cut at `limit` lemmas.
pub fn session_stream(walk: &Walk, texts: &[Vec<Lemma>], limit: usize) -> Vec<Lemma> {
    let mut out = Vec::with_capacity(limit.min(walk.tokens));
    for &p in &walk.pages {
        if out.len() >= limit {
            break;
        }
        let take = (limit - out.len()).min(texts[p].len());
        out.extend_from_slice(&texts[p][..take]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> ClickstreamGraph {
        let mut b = ClickstreamGraph::builder();
        b.page("A", 100).page("B", 50).transition("A", "B", 100).no_click("A", 0.0);
        b.build().unwrap()
    }

    #[test]
    fn hand_example() {
        let g = ab();
        let a = g.index_of("A").unwrap();
        let w = simulate_session_from(&g, a, 250, 7);
        let names: Vec<&str> = w.pages.iter().map(|&p| g.name(p)).collect();
        assert_eq!(names, vec!["A", "B", "B", "B"]);
        assert_eq!(w.tokens, 250);
    }

    #[test]
    fn single_terminal_page() {
        let mut b = ClickstreamGraph::builder();
        b.page("P", 500).external("P", 3);
        let g = b.build().unwrap();
        assert_eq!(g.no_click(0), 1.0);
        let w = simulate_sessions(&g, &WalkConfig::new(100, 100, 1).unwrap()).unwrap();
        assert_eq!(w.pages, vec![0]);
    }

    #[test]
    fn derived_no_click() {
        let mut b = ClickstreamGraph::builder();
        b.page("A", 10).page("B", 10).page("C", 10);
        b.external("A", 100).transition("A", "B", 30).transition("A", "C", 10).transition("B", "A", 5);
        let g = b.build().unwrap();
        let (a, bb, c) = (0, 1, 2);
        assert_eq!(g.visits(a), 105);
        assert_eq!(g.no_click(a), 65.0 / 105.0);
        assert_eq!(g.no_click(bb), 25.0 / 30.0);
        assert_eq!(g.no_click(c), 1.0);
        for p in 0..3 {
            let total: f64 = (0..3).map(|q| g.click_probability(p, q)).sum::<f64>() + g.no_click(p);
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn builder_errors() {
        let mut b = ClickstreamGraph::builder();
        b.page("A", 1).transition("A", "Z", 3);
        assert!(b.build().is_err());
        assert_eq!(b.retain_known(), 1);
        assert!(b.build().is_ok());
        let mut b = ClickstreamGraph::builder();
        b.page("A", 1).no_click("A", 0.5);
        assert!(b.build().is_err());
    }

    #[test]
    fn stall_ends_session() {
        let mut b = ClickstreamGraph::builder();
        b.page("A", 0).page("B", 0).external("A", 1).transition("A", "B", 1).no_click("A", 0.5);
        let g = b.build().unwrap();
        let w = simulate_session_from(&g, 0, 10, 3);
        assert_eq!(w.stalls, 1);
        assert_eq!(w.tokens, 0);
    }

    #[test]
    fn walks_are_deterministic() {
        let mut b = ClickstreamGraph::builder();
        for p in ["A", "B", "C"] {
            b.page(p, 7).external(p, 5);
        }
        b.transition("A", "B", 3).transition("B", "C", 2).transition("C", "A", 4).transition("A", "C", 1);
        let g = b.build().unwrap();
        let cfg = WalkConfig::new(30, 3000, 42).unwrap();
        let w1 = simulate_sessions(&g, &cfg).unwrap();
        let w2 = simulate_sessions(&g, &cfg).unwrap();
        assert_eq!(w1, w2);
        assert!(w1.tokens >= 3000);
        let other = simulate_sessions(&g, &WalkConfig::new(30, 3000, 43).unwrap()).unwrap();
        assert_ne!(w1.pages, other.pages);
    }

    #[test]
    fn stream_is_truncated() {
        let texts = vec![vec![Lemma::new("a").unwrap(); 3], vec![Lemma::new("b").unwrap(); 3]];
        let w = Walk { pages: vec![0, 1, 0], session_starts: vec![0], tokens: 9, ..Walk::default() };
        let s = session_stream(&w, &texts, 5);
        assert_eq!(s.iter().map(Lemma::as_str).collect::<String>(), "aaabb");
    }

    #[test]
    fn walk_config_validation() {
        assert!(WalkConfig::new(0, 10, 0).is_err());
        assert!(WalkConfig::new(20, 10, 0).is_err());
    }

    #[test]
    fn graph_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = dir.path().join("g.tsv");
        std::fs::write(&g, "prev\tcurr\tn\ttype\nother-search\tA\t10\texternal\nA\tB\t4\tlink\nA\tGhost\t2\tlink\n")
            .unwrap();
        let l = dir.path().join("l.tsv");
        std::fs::write(&l, "A\t100\nB\t50\n").unwrap();
        let lengths = load_lengths(&l).unwrap();
        let graph = load_graph(&g, &lengths, None).unwrap();
        assert_eq!(graph.len(), 2);
        assert_eq!(graph.visits(0), 10);
        assert_eq!(graph.no_click(0), 0.6);
        std::fs::write(&g, "A\tB\tx\nA\tB\ty\n").unwrap();
        assert!(load_graph(&g, &lengths, None).is_err());
    }
}
