//! Text formats: edge files, instance files, weights files and CSV outputs.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SrwError};
use crate::evalkit::MethodResult;
use crate::graph_model::{EdgeType, FeatureTransform, Graph, GraphBuilder, NodeId};
use crate::strength::{EdgeTypeMode, Model, StrengthFamily};
use crate::synthgen::SeedLabels;
use crate::trainer::{RankedCandidate, TrainReport};
use crate::walker::WalkState;

fn parse_err(line: usize, msg: impl Into<String>) -> SrwError {
    SrwError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{}`", s.trim())))
}

fn parse_floats(s: &str, line: usize) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            let v: f64 = parse_num(x, line, "number")?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("non-finite value `{}`", x.trim())))
            }
        })
        .collect()
}

fn parse_ids(s: &str, line: usize) -> Result<Vec<NodeId>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| parse_num(x, line, "node id"))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

// ---- edge files ----

/// Parses an edge file.
///
/// Header lines start with `#`: `#m=<dim>` is required, `#undirected` mirrors
/// every arc and `#n=<count>` reserves isolated trailing nodes. Body lines are
/// `src<TAB>dst<TAB>f1,...,fm`.
pub fn parse_edges(text: &str) -> Result<Graph> {
    let mut dim: Option<usize> = None;
    let mut undirected = false;
    let mut min_nodes = 0;
    let mut arcs: Vec<(usize, NodeId, NodeId, Vec<f64>)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim_end_matches('\r');
        if content.trim().is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('#') {
            let header = header.trim();
            if let Some(m) = header.strip_prefix("m=") {
                dim = Some(parse_num(m, line, "feature count")?);
            } else if let Some(n) = header.strip_prefix("n=") {
                min_nodes = parse_num(n, line, "node count")?;
            } else if header == "undirected" {
                undirected = true;
            }
            // other comment lines are ignored
            continue;
        }
        let m = dim.ok_or_else(|| parse_err(line, "edge line before `#m=` header"))?;
        let fields: Vec<&str> = content.split('\t').collect();
        if fields.len() != 3 && !(m == 0 && fields.len() == 2) {
            return Err(parse_err(
                line,
                format!(
                    "expected src<TAB>dst<TAB>features, got {} fields",
                    fields.len()
                ),
            ));
        }
        let src = parse_num(fields[0], line, "node id")?;
        let dst = parse_num(fields[1], line, "node id")?;
        let feats = parse_floats(fields.get(2).copied().unwrap_or(""), line)?;
        if feats.len() != m {
            return Err(parse_err(
                line,
                format!("expected {m} features, got {}", feats.len()),
            ));
        }
        if src == dst {
            return Err(parse_err(line, format!("self-loop on node {src}")));
        }
        let fresh = seen.insert((src, dst)) & (!undirected || seen.insert((dst, src)));
        if !fresh {
            return Err(parse_err(line, format!("duplicate arc {src}->{dst}")));
        }
        arcs.push((line, src, dst, feats));
    }
    let dim = dim.ok_or_else(|| parse_err(0, "missing `#m=` header"))?;
    let n = arcs
        .iter()
        .map(|&(_, s, d, _)| s.max(d) + 1)
        .max()
        .unwrap_or(0)
        .max(min_nodes);
    let mut b = GraphBuilder::new(n, dim);
    for (line, s, d, f) in &arcs {
        let added = if undirected {
            b.add_edge(*s, *d, f)
        } else {
            b.add_arc(*s, *d, f)
        };
        added.map_err(|e| parse_err(*line, e.to_string()))?;
    }
    b.build()
}

pub fn read_edges(path: &Path) -> Result<Graph> {
    parse_edges(&std::fs::read_to_string(path)?)
}

/// Serializes a graph. With `undirected`, each mirrored pair is written once
/// (from the lower id); the graph must be symmetric with equal features.
pub fn format_edges(graph: &Graph, undirected: bool) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "#m={}", graph.dim()).unwrap();
    writeln!(out, "#n={}", graph.node_count()).unwrap();
    if undirected {
        writeln!(out, "#undirected").unwrap();
    }
    for (u, v, f) in graph.arcs() {
        if undirected {
            let back = graph
                .find_arc(v, u)
                .ok_or_else(|| SrwError::InvalidGraph(format!("arc ({u},{v}) has no mirror")))?;
            if graph.features(back) != f {
                return Err(SrwError::InvalidGraph(format!(
                    "arcs ({u},{v}) and ({v},{u}) carry different features"
                )));
            }
            if u > v {
                continue;
            }
        }
        writeln!(out, "{u}\t{v}\t{}", join(f)).unwrap();
    }
    Ok(out)
}

// ---- instance files ----

/// One line of an instance file, in global node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub line: usize,
    pub seed: NodeId,
    pub destinations: Vec<NodeId>,
    /// `None` when the file omits the column; candidates then come from the
    /// two-hop rule.
    pub nolinks: Option<Vec<NodeId>>,
}

/// Parses `seed<TAB>d1,d2,...[<TAB>l1,l2,...]` lines. `#` lines are comments.
pub fn parse_instances(text: &str) -> Result<Vec<InstanceSpec>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim_end_matches('\r');
        if content.trim().is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(
                line,
                format!("expected 2 or 3 tab-separated fields, got {}", fields.len()),
            ));
        }
        out.push(InstanceSpec {
            line,
            seed: parse_num(fields[0], line, "seed")?,
            destinations: parse_ids(fields[1], line)?,
            nolinks: fields.get(2).map(|f| parse_ids(f, line)).transpose()?,
        });
    }
    Ok(out)
}

pub fn read_instances(path: &Path) -> Result<Vec<InstanceSpec>> {
    parse_instances(&std::fs::read_to_string(path)?)
}

pub fn format_instances(specs: &[SeedLabels]) -> String {
    let mut out = String::new();
    for (seed, d, l) in specs {
        writeln!(out, "{seed}\t{}\t{}", join(d), join(l)).unwrap();
    }
    out
}

// ---- weights files ----

/// A trained model plus the feature pipeline it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsFile {
    pub model: Model,
    /// Whether the common-friends column is appended before the transform.
    pub social_capital: bool,
}

/// Header `key=value` lines followed by one `type=<code> w=...` line per slot.
/// Single-type models use `type=all`.
pub fn format_weights(weights: &WeightsFile) -> String {
    let model = &weights.model;
    let mut out = String::new();
    writeln!(out, "family={}", model.family()).unwrap();
    writeln!(out, "edge_types={}", model.mode()).unwrap();
    writeln!(out, "dim={}", model.dim()).unwrap();
    writeln!(out, "social_capital={}", weights.social_capital).unwrap();
    if let Some(t) = model.transform() {
        writeln!(out, "transform_mean={}", join(&t.mean)).unwrap();
        writeln!(out, "transform_scale={}", join(&t.scale)).unwrap();
        let flags: Vec<u8> = t.degenerate.iter().map(|&d| d as u8).collect();
        writeln!(out, "transform_degenerate={}", join(&flags)).unwrap();
    }
    for slot in 0..model.slots() {
        let label = match model.mode() {
            EdgeTypeMode::Single => "all".to_string(),
            EdgeTypeMode::Hop6 => slot.to_string(),
        };
        writeln!(out, "type={label} w={}", join(model.weights(slot))).unwrap();
    }
    out
}

pub fn parse_weights(text: &str) -> Result<WeightsFile> {
    let mut family: Option<StrengthFamily> = None;
    let mut mode: Option<EdgeTypeMode> = None;
    let mut dim: Option<usize> = None;
    let mut social_capital = false;
    let mut mean = None;
    let mut scale = None;
    let mut degenerate = None;
    let mut slots: Vec<Option<Vec<f64>>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if let Some(rest) = content.strip_prefix("type=") {
            let mode = mode.ok_or_else(|| parse_err(line, "weights before `edge_types=`"))?;
            let (label, w) = rest
                .split_once(char::is_whitespace)
                .ok_or_else(|| parse_err(line, "expected `type=<code> w=...`"))?;
            let w = w
                .trim()
                .strip_prefix("w=")
                .ok_or_else(|| parse_err(line, "expected `w=`"))?;
            let slot = match (mode, label) {
                (EdgeTypeMode::Single, "all") => 0,
                (EdgeTypeMode::Hop6, code) => {
                    let c: usize = parse_num(code, line, "edge type code")?;
                    EdgeType::from_code(c)
                        .ok_or_else(|| parse_err(line, format!("edge type code {c} out of range")))?
                        .code()
                }
                (EdgeTypeMode::Single, other) => {
                    return Err(parse_err(
                        line,
                        format!("single mode expects `type=all`, got `{other}`"),
                    ))
                }
            };
            slots.resize(mode.slots(), None);
            if slots[slot].replace(parse_floats(w, line)?).is_some() {
                return Err(parse_err(
                    line,
                    format!("duplicate weights for type {label}"),
                ));
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected key=value, got `{content}`")))?;
        let bad = |e: SrwError| parse_err(line, e.to_string());
        match key {
            "family" => family = Some(value.parse().map_err(bad)?),
            "edge_types" => mode = Some(value.parse().map_err(bad)?),
            "dim" => dim = Some(parse_num(value, line, "dim")?),
            "social_capital" => social_capital = parse_num(value, line, "boolean")?,
            "transform_mean" => mean = Some(parse_floats(value, line)?),
            "transform_scale" => scale = Some(parse_floats(value, line)?),
            "transform_degenerate" => {
                let flags: Vec<u8> = value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num(s, line, "flag"))
                    .collect::<Result<_>>()?;
                degenerate = Some(flags.into_iter().map(|f| f != 0).collect::<Vec<bool>>());
            }
            other => return Err(parse_err(line, format!("unknown key `{other}`"))),
        }
    }
    let family = family.ok_or_else(|| parse_err(0, "missing `family=`"))?;
    let mode = mode.ok_or_else(|| parse_err(0, "missing `edge_types=`"))?;
    let dim = dim.ok_or_else(|| parse_err(0, "missing `dim=`"))?;
    slots.resize(mode.slots(), None);
    let mut params = Vec::with_capacity(mode.slots() * dim);
    for (slot, w) in slots.into_iter().enumerate() {
        let w = w.ok_or_else(|| parse_err(0, format!("missing weights for slot {slot}")))?;
        if w.len() != dim {
            return Err(parse_err(
                0,
                format!("slot {slot} has {} weights, expected {dim}", w.len()),
            ));
        }
        params.extend(w);
    }
    let transform = match (mean, scale, degenerate) {
        (None, None, None) => None,
        (Some(mean), Some(scale), degenerate) => {
            let degenerate = degenerate.unwrap_or_else(|| vec![false; mean.len()]);
            if scale.len() != mean.len() || degenerate.len() != mean.len() {
                return Err(parse_err(0, "transform columns disagree in length"));
            }
            if mean.len() + 1 != dim {
                return Err(parse_err(0, "transform width does not match dim"));
            }
            Some(FeatureTransform {
                mean,
                scale,
                degenerate,
            })
        }
        _ => return Err(parse_err(0, "incomplete transform")),
    };
    let model = Model::from_params(family, mode, dim, params)?.with_transform(transform);
    Ok(WeightsFile {
        model,
        social_capital,
    })
}

pub fn read_weights(path: &Path) -> Result<WeightsFile> {
    parse_weights(&std::fs::read_to_string(path)?)
}

// ---- CSV outputs ----

pub fn results_csv(methods: &[MethodResult]) -> String {
    let mut out = String::from("method,auc_mean,prec20_mean,n_instances\n");
    for m in methods {
        if m.failure.is_some() {
            writeln!(out, "{},failed,failed,0", m.method).unwrap();
        } else {
            writeln!(
                out,
                "{},{},{},{}",
                m.method,
                m.auc_mean(),
                m.prec_mean(),
                m.n_instances()
            )
            .unwrap();
        }
    }
    out
}

pub fn detail_csv(methods: &[MethodResult]) -> String {
    let mut out = String::from("method,seed,auc,prec20\n");
    for m in methods {
        for r in &m.instances {
            writeln!(out, "{},{},{},{}", m.method, r.seed, r.auc, r.prec_at_k).unwrap();
        }
    }
    out
}

pub fn roc_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (f, t) in points {
        writeln!(out, "{f},{t}").unwrap();
    }
    out
}

/// One row per accepted step of the selected run. `val_auc` is empty when no
/// validation set was tracked.
pub fn report_csv(report: &TrainReport) -> String {
    let mut out = String::from("iter,loss,val_auc\n");
    for (i, f) in report.loss_trajectory.iter().enumerate() {
        match report.val_auc.get(i) {
            Some(a) => writeln!(out, "{i},{f},{a}").unwrap(),
            None => writeln!(out, "{i},{f},").unwrap(),
        }
    }
    out
}

pub fn ranking_tsv(rankings: &[(NodeId, Vec<RankedCandidate>)]) -> String {
    let mut out = String::from("seed\trank\tnode\tscore\n");
    for (seed, ranked) in rankings {
        for (r, c) in ranked.iter().enumerate() {
            writeln!(out, "{seed}\t{}\t{}\t{}", r + 1, c.node, c.score).unwrap();
        }
    }
    out
}

/// Stationary scores and their derivatives, one row per local node, with
/// global ids in the first column.
pub fn walk_csv(global_ids: &[NodeId], state: &WalkState) -> String {
    let mut out = String::from("node,p");
    for k in 0..state.dp.len() {
        write!(out, ",dp_{k}").unwrap();
    }
    out.push('\n');
    for (u, &g) in global_ids.iter().enumerate() {
        write!(out, "{g},{}", state.p[u]).unwrap();
        for d in &state.dp {
            write!(out, ",{}", d[u]).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_round_trip() {
        let text = "#m=2\n#undirected\n0\t1\t0.5,-1\n1\t2\t2,3\n";
        let g = parse_edges(text).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.arc_count(), 4);
        assert_eq!(g.features(g.find_arc(1, 0).unwrap()), &[0.5, -1.0]);
        let again = parse_edges(&format_edges(&g, true).unwrap()).unwrap();
        assert_eq!(again, g);
        let directed = parse_edges(&format_edges(&g, false).unwrap()).unwrap();
        assert_eq!(directed, g);
    }

    #[test]
    fn edge_errors_are_line_numbered() {
        let cases = [
            ("#m=2\n0\t1\t0.5\n", 2),
            ("#m=1\n0\t1\t1\n\n0\tx\t1\n", 4),
            ("#m=1\n3\t3\t1\n", 2),
            ("0\t1\t1\n", 1),
            ("#m=1\n0\t1\t1\n0\t1\t2\n", 3),
            ("#m=1\n0\t1\tnan\n", 2),
        ];
        for (text, want) in cases {
            match parse_edges(text) {
                Err(SrwError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn node_count_header_keeps_isolated_nodes() {
        let g = parse_edges("#m=1\n#n=10\n0\t1\t1\n").unwrap();
        assert_eq!(g.node_count(), 10);
    }

    #[test]
    fn instances_with_and_without_nolinks() {
        let specs = parse_instances("# comment\n3\t4,5\t6,7\n8\t9\n").unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].nolinks, Some(vec![6, 7]));
        assert_eq!(specs[1].destinations, vec![9]);
        assert_eq!(specs[1].nolinks, None);
        assert!(matches!(
            parse_instances("1\n"),
            Err(SrwError::Parse { line: 1, .. })
        ));
        let text = format_instances(&[(3, vec![4, 5], vec![6, 7])]);
        assert_eq!(parse_instances(&text).unwrap()[0].nolinks, Some(vec![6, 7]));
    }

    #[test]
    fn weights_round_trip() {
        let model = Model::from_params(
            StrengthFamily::Exponential,
            EdgeTypeMode::Hop6,
            2,
            (0..12).map(|i| i as f64 * 0.25 - 1.0).collect(),
        )
        .unwrap()
        .with_transform(Some(FeatureTransform {
            mean: vec![0.1],
            scale: vec![2.0],
            degenerate: vec![false],
        }));
        let file = WeightsFile {
            model,
            social_capital: true,
        };
        assert_eq!(parse_weights(&format_weights(&file)).unwrap(), file);

        let single = WeightsFile {
            model: Model::from_params(
                StrengthFamily::Logistic,
                EdgeTypeMode::Single,
                2,
                vec![1.0 / 3.0, -7e-17],
            )
            .unwrap(),
            social_capital: false,
        };
        assert_eq!(parse_weights(&format_weights(&single)).unwrap(), single);
    }

    #[test]
    fn weights_errors() {
        assert!(
            parse_weights("family=logistic\nedge_types=single\ndim=2\ntype=all w=1\n").is_err()
        );
        assert!(parse_weights("family=logistic\nedge_types=hop6\ndim=1\ntype=0 w=1\n").is_err());
        assert!(parse_weights("family=logistic\nedge_types=hop6\ndim=1\ntype=9 w=1\n").is_err());
        assert!(parse_weights("family=cubic\n").is_err());
    }
}
