//! Pairwise correlation tables between labeling methods.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use fstlab_core::FstLabel;
use serde::{Deserialize, Serialize};

use crate::correlation::{pearson, LabelVectorPair};
use crate::fisher::fisher_z_compare;
use crate::{ImageId, StatsError};

/// Smallest p-value over all expert pairs for `rho(method, expert)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinPValue {
    pub expert: String,
    pub method: String,
    pub rho: f64,
    pub p: f64,
    /// Expert pair `(x, y)` that produced the minimum.
    pub against: (String, String),
    /// Sample size used for that comparison.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrReport {
    pub methods: Vec<String>,
    /// `None` where the correlation is undefined (too few pairs, constant labels).
    pub rho: Vec<Vec<Option<f64>>>,
    /// Effective pair count after dropping not-applicable labels.
    pub n: Vec<Vec<usize>>,
    pub min_p: Vec<MinPValue>,
}

impl IrrReport {
    /// `methods` keeps its order in the report. Names listed in `experts`
    /// are the reference raters for the Fisher comparisons; at least two are
    /// needed for `min_p` to be populated.
    pub fn compute(
        methods: &[(String, BTreeMap<ImageId, FstLabel>)],
        experts: &[String],
    ) -> Result<IrrReport, StatsError> {
        if methods.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        let m = methods.len();
        let mut rho = vec![vec![None; m]; m];
        let mut n = vec![vec![0; m]; m];
        for i in 0..m {
            for j in i..m {
                let pairs = LabelVectorPair::align(&methods[i].1, &methods[j].1);
                n[i][j] = pairs.n_effective();
                n[j][i] = n[i][j];
                let r = if i == j { Some(1.0) } else { pearson(&pairs).ok() };
                rho[i][j] = r;
                rho[j][i] = r;
            }
        }

        let idx = |name: &str| methods.iter().position(|(m, _)| m == name);
        let expert_idx: Vec<usize> = experts.iter().filter_map(|e| idx(e)).collect();
        let mut expert_pairs = Vec::new();
        for (a, &x) in expert_idx.iter().enumerate() {
            for &y in &expert_idx[a + 1..] {
                if let Some(r) = rho[x][y] {
                    expert_pairs.push((x, y, r));
                }
            }
        }

        let mut min_p = Vec::new();
        for &e in &expert_idx {
            for k in (0..m).filter(|k| !expert_idx.contains(k)) {
                let Some(r) = rho[k][e] else { continue };
                let best = expert_pairs
                    .iter()
                    .filter_map(|&(x, y, r_xy)| {
                        let nn = n[k][e].min(n[x][y]);
                        fisher_z_compare(r, r_xy, nn).ok().map(|c| (c.p_two_sided, x, y, nn))
                    })
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((p, x, y, nn)) = best {
                    min_p.push(MinPValue {
                        expert: methods[e].0.clone(),
                        method: methods[k].0.clone(),
                        rho: r,
                        p,
                        against: (methods[x].0.clone(), methods[y].0.clone()),
                        n: nn,
                    });
                }
            }
        }

        Ok(IrrReport {
            methods: methods.iter().map(|(m, _)| m.clone()).collect(),
            rho,
            n,
            min_p,
        })
    }

    pub fn rho_between(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.methods.iter().position(|m| m == a)?;
        let j = self.methods.iter().position(|m| m == b)?;
        self.rho[i][j]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let w = self.methods.iter().map(|m| m.len()).max().unwrap_or(0).max(6) + 2;
        let mut s = format!("{:w$}", "rho (n)");
        for m in &self.methods {
            let _ = write!(s, "{m:>w$}", w = w + 6);
        }
        s.push('\n');
        for (i, m) in self.methods.iter().enumerate() {
            let _ = write!(s, "{m:w$}");
            for j in 0..self.methods.len() {
                let cell = match self.rho[i][j] {
                    Some(r) => format!("{r:.3} ({})", self.n[i][j]),
                    None => format!("- ({})", self.n[i][j]),
                };
                let _ = write!(s, "{cell:>w$}", w = w + 6);
            }
            s.push('\n');
        }
        if !self.min_p.is_empty() {
            s.push_str("\nmin p (method vs expert, against expert pair)\n");
            for mp in &self.min_p {
                let _ = writeln!(
                    s,
                    "{:w$} {:w$} rho={:.3} p={:.3e} vs {}-{} n={}",
                    mp.method, mp.expert, mp.rho, mp.p, mp.against.0, mp.against.1, mp.n
                );
            }
        }
        s
    }
}
