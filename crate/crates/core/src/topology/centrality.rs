//! Shortest-path betweenness centrality (Brandes).

use std::collections::VecDeque;

use super::{Graph, TopologyError};

/// Unnormalized betweenness: for every unordered pair `{s, t}`, each node
/// strictly between them receives the fraction of `s–t` shortest paths
/// passing through it.
pub fn betweenness_centrality(graph: &Graph) -> Result<Vec<f64>, TopologyError> {
    if !graph.is_connected() {
        return Err(TopologyError::Disconnected);
    }
    let n = graph.node_count();
    let mut score = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        stack.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in graph.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    // Each unordered pair was visited from both ends.
    for x in &mut score {
        *x /= 2.0;
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_middle_scores_one() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(betweenness_centrality(&g).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn complete_graph_scores_zero() {
        let mut edges = vec![];
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((a, b));
            }
        }
        let g = Graph::from_edges(4, &edges);
        assert_eq!(betweenness_centrality(&g).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn star_center_routes_all_leaf_pairs() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(
            betweenness_centrality(&g).unwrap(),
            vec![6.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn disconnected_rejected() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]);
        assert_eq!(betweenness_centrality(&g), Err(TopologyError::Disconnected));
    }
}
