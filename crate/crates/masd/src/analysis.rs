//! Measurement instruments: discrete mutual information (exact and
//! sampled), the exhaustive bit-flip-game evaluator, and the trajectory
//! statistics used to compare skill sets.
//!
//! Mutual information is reported in bits; training losses elsewhere stay
//! in nats.

use crate::numerics::RngStream;
use crate::{Error, Result};

/// Finite joint law p(z, outcome) with z indexing rows.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    table: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        if table.is_empty() || table[0].is_empty() {
            return Err(Error::Data("empty joint distribution".into()));
        }
        let cols = table[0].len();
        if table.iter().any(|r| r.len() != cols) {
            return Err(Error::Data("ragged joint distribution".into()));
        }
        let mut sum = 0.0;
        for row in &table {
            for &p in row {
                if !(p >= 0.0) {
                    return Err(Error::Data(format!("negative probability {p}")));
                }
                sum += p;
            }
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!("unnormalized distribution, sum {sum}")));
        }
        Ok(Self { table })
    }

    pub fn from_counts(counts: &[Vec<u64>]) -> Result<Self> {
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            return Err(Error::Data("no observations".into()));
        }
        let table = counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / total as f64).collect())
            .collect();
        Self::new(table)
    }

    fn z_marginal(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    fn outcome_marginal(&self) -> Vec<f64> {
        let cols = self.table[0].len();
        let mut out = vec![0.0; cols];
        for row in &self.table {
            for (o, &p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }
}

/// I(Z; outcome) in bits, with 0 log 0 taken as 0.
pub fn mutual_information(dist: &JointDistribution) -> f64 {
    let pz = dist.z_marginal();
    let po = dist.outcome_marginal();
    let mut mi = 0.0;
    for (zi, row) in dist.table.iter().enumerate() {
        for (oi, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (pz[zi] * po[oi])).log2();
            }
        }
    }
    mi
}

/// Entropy of a marginal, in bits.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Exact per-skill mutual information of the one-step bit-flip game.
///
/// `prob_one[i](own, other, z)` is agent i's probability of playing 1
/// given its agent-centric observation (own bit first) and the skill.
/// Enumerates all (z, x, u) combinations with exact probabilities, so it
/// serves as the oracle for any sampled estimate.
pub struct XorMi {
    pub global_bits: f64,
    pub local_bits: [f64; 2],
}

pub fn exact_mi_xor(
    prob_one: [&dyn Fn(u8, u8, usize) -> f64; 2],
    num_skills: usize,
) -> Result<XorMi> {
    if num_skills == 0 {
        return Err(Error::Data("need at least one skill".into()));
    }
    let pz = 1.0 / num_skills as f64;
    let mut joint = vec![vec![0.0f64; 4]; num_skills];
    for z in 0..num_skills {
        for x1 in 0..2u8 {
            for x2 in 0..2u8 {
                let px = 0.25;
                let p1 = prob_one[0](x1, x2, z);
                let p2 = prob_one[1](x2, x1, z);
                for (p, prob) in [(p1, p2)].iter().flat_map(|&(p1, p2)| {
                    (0..2u8).flat_map(move |u1| {
                        (0..2u8).map(move |u2| {
                            let pu1 = if u1 == 1 { p1 } else { 1.0 - p1 };
                            let pu2 = if u2 == 1 { p2 } else { 1.0 - p2 };
                            ((x1 ^ u1, x2 ^ u2), pu1 * pu2)
                        })
                    })
                }) {
                    let (b1, b2) = p;
                    joint[z][(b1 * 2 + b2) as usize] += pz * px * prob;
                }
            }
        }
    }
    let global = mutual_information(&JointDistribution::new(joint.clone())?);

    let mut locals = [0.0; 2];
    for (agent, local) in locals.iter_mut().enumerate() {
        let mut marg = vec![vec![0.0f64; 2]; num_skills];
        for (z, row) in joint.iter().enumerate() {
            for (cell, &prob) in row.iter().enumerate() {
                let bit = if agent == 0 { cell / 2 } else { cell % 2 };
                marg[z][bit] += prob;
            }
        }
        *local = mutual_information(&JointDistribution::new(marg)?);
    }

    // Each single-agent state is a function of the joint state, so the
    // joint can never be less informative than either marginal.
    let max_local = locals[0].max(locals[1]);
    if global + 1e-9 < max_local {
        return Err(Error::Data(format!(
            "chain consistency violated: global {global} < max local {max_local}"
        )));
    }
    Ok(XorMi {
        global_bits: global,
        local_bits: locals,
    })
}

/// Plug-in mutual information from `n` sampled one-step games; the
/// estimator whose bias [`exact_mi_xor`] bounds.
pub fn sampled_mi_xor(
    prob_one: [&dyn Fn(u8, u8, usize) -> f64; 2],
    num_skills: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<XorMi> {
    let mut joint = vec![vec![0u64; 4]; num_skills];
    for _ in 0..n {
        let z = rng.index(num_skills);
        let x1 = u8::from(rng.bernoulli(0.5));
        let x2 = u8::from(rng.bernoulli(0.5));
        let u1 = u8::from(rng.bernoulli(prob_one[0](x1, x2, z)));
        let u2 = u8::from(rng.bernoulli(prob_one[1](x2, x1, z)));
        joint[z][((x1 ^ u1) * 2 + (x2 ^ u2)) as usize] += 1;
    }
    let dist = JointDistribution::from_counts(&joint)?;
    let global = mutual_information(&dist);
    let mut locals = [0.0; 2];
    for (agent, local) in locals.iter_mut().enumerate() {
        let mut marg = vec![vec![0u64; 2]; num_skills];
        for (z, row) in joint.iter().enumerate() {
            for (cell, &c) in row.iter().enumerate() {
                let bit = if agent == 0 { cell / 2 } else { cell % 2 };
                marg[z][bit] += c;
            }
        }
        *local = mutual_information(&JointDistribution::from_counts(&marg)?);
    }
    Ok(XorMi {
        global_bits: global,
        local_bits: locals,
    })
}

/// One evaluated episode: per-agent position sequences under one skill
/// from one initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub run_id: u64,
    pub skill: usize,
    pub init_id: usize,
    pub seed: u64,
    /// positions[agent][step], step 0 is the initial position.
    pub positions: Vec<Vec<[f64; 2]>>,
}

/// Displacement below this is treated as "the agent did not move" when
/// computing headings.
pub const DEGENERATE_DISPLACEMENT: f64 = 1e-9;

/// The two smallest pairwise heading differences (degrees, folded to
/// [0, 180]). Headings come from net displacement (final - initial).
/// Returns None when any agent's net displacement is degenerate.
pub fn trajectory_angles(record: &TrajectoryRecord) -> Option<(f64, f64)> {
    let headings: Option<Vec<f64>> = record
        .positions
        .iter()
        .map(|path| {
            let first = path.first()?;
            let last = path.last()?;
            let dx = last[0] - first[0];
            let dy = last[1] - first[1];
            if (dx * dx + dy * dy).sqrt() < DEGENERATE_DISPLACEMENT {
                None
            } else {
                Some(dy.atan2(dx).to_degrees())
            }
        })
        .collect();
    let headings = headings?;
    if headings.len() < 2 {
        return None;
    }
    let mut angles = Vec::new();
    for i in 0..headings.len() {
        for j in (i + 1)..headings.len() {
            let mut d = (headings[i] - headings[j]).abs() % 360.0;
            if d > 180.0 {
                d = 360.0 - d;
            }
            angles.push(d);
        }
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let second = angles.get(1).copied().unwrap_or(angles[0]);
    Some((angles[0], second))
}

/// The two shortest per-agent arc lengths (sum of step distances).
pub fn trajectory_lengths(record: &TrajectoryRecord) -> (f64, f64) {
    let mut lengths: Vec<f64> = record
        .positions
        .iter()
        .map(|path| {
            path.windows(2)
                .map(|w| {
                    let dx = w[1][0] - w[0][0];
                    let dy = w[1][1] - w[0][1];
                    (dx * dx + dy * dy).sqrt()
                })
                .sum()
        })
        .collect();
    lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let second = lengths.get(1).copied().unwrap_or(lengths[0]);
    (lengths[0], second)
}

/// Spread of agent 0's final position across initial conditions:
/// population standard deviation per coordinate, then the Euclidean norm
/// of the two. One value per skill.
pub fn endpoint_std(records: &[TrajectoryRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Data("endpoint_std needs at least one record".into()));
    }
    let endpoints: Vec<[f64; 2]> = records
        .iter()
        .map(|r| {
            r.positions
                .first()
                .and_then(|p| p.last())
                .copied()
                .ok_or_else(|| Error::Data("record without positions".into()))
        })
        .collect::<Result<_>>()?;
    let n = endpoints.len() as f64;
    let mean = [
        endpoints.iter().map(|p| p[0]).sum::<f64>() / n,
        endpoints.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let var = [
        endpoints.iter().map(|p| (p[0] - mean[0]).powi(2)).sum::<f64>() / n,
        endpoints.iter().map(|p| (p[1] - mean[1]).powi(2)).sum::<f64>() / n,
    ];
    Ok((var[0] + var[1]).sqrt())
}

/// Within/between dispersion ratio of skill-labeled statistic points
/// (ANOVA mean squares, inverted so 0 = perfectly tight clusters and
/// about 1 = no clustering). Dimensions are standardized over the pooled
/// points first; skills with fewer than two points are excluded.
pub fn skill_cluster_score(points: &[(usize, Vec<f64>)]) -> Result<f64> {
    let dim = points
        .first()
        .map(|(_, v)| v.len())
        .ok_or_else(|| Error::Data("no points".into()))?;
    if points.iter().any(|(_, v)| v.len() != dim) {
        return Err(Error::Data("inconsistent point dimensions".into()));
    }

    // Keep only skills with >= 2 points.
    let mut by_skill: Vec<(usize, Vec<&Vec<f64>>)> = Vec::new();
    for (skill, v) in points {
        match by_skill.iter_mut().find(|(s, _)| s == skill) {
            Some((_, vs)) => vs.push(v),
            None => by_skill.push((*skill, vec![v])),
        }
    }
    by_skill.retain(|(_, vs)| vs.len() >= 2);
    let k = by_skill.len();
    if k < 2 {
        return Err(Error::Data("need at least two skills with two points".into()));
    }
    let pooled: Vec<&Vec<f64>> = by_skill.iter().flat_map(|(_, vs)| vs.iter().copied()).collect();
    let n = pooled.len();

    // Standardize each dimension over the pooled points.
    let mut mean = vec![0.0; dim];
    for p in &pooled {
        for (m, &v) in mean.iter_mut().zip(p.iter()) {
            *m += v / n as f64;
        }
    }
    let mut std = vec![0.0; dim];
    for p in &pooled {
        for (s, (&v, &m)) in std.iter_mut().zip(p.iter().zip(&mean)) {
            *s += (v - m) * (v - m) / n as f64;
        }
    }
    for s in &mut std {
        *s = s.sqrt();
        if *s < 1e-12 {
            *s = 1.0; // constant dimension carries no information
        }
    }
    let znorm = |p: &Vec<f64>| -> Vec<f64> {
        p.iter()
            .zip(mean.iter().zip(&std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    };

    let grand: Vec<f64> = {
        let mut g = vec![0.0; dim];
        for p in &pooled {
            for (gi, v) in g.iter_mut().zip(znorm(p)) {
                *gi += v / n as f64;
            }
        }
        g
    };

    let mut within_ss = 0.0;
    let mut between_ss = 0.0;
    for (_, vs) in &by_skill {
        let m = vs.len() as f64;
        let mut centroid = vec![0.0; dim];
        for p in vs {
            for (c, v) in centroid.iter_mut().zip(znorm(p)) {
                *c += v / m;
            }
        }
        for p in vs {
            let zp = znorm(p);
            within_ss += zp
                .iter()
                .zip(&centroid)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        between_ss += m
            * centroid
                .iter()
                .zip(&grand)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>();
    }
    let within_ms = within_ss / (n - k) as f64;
    let between_ms = between_ss / (k - 1) as f64;
    if between_ms < 1e-15 {
        return Err(Error::Data("degenerate between-skill dispersion".into()));
    }
    Ok(within_ms / between_ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mi_independent_and_copy() {
        // Two independent uniform bits.
        let d = JointDistribution::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(mutual_information(&d).abs() < 1e-12);

        // Z = S, one fair bit.
        let d = JointDistribution::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mi_of_table_one_solutions() {
        // Solution A: Z=0 -> (0,1),(1,0); Z=1 -> (1,1),(0,0), uniformly.
        // Outcome order: (0,0), (0,1), (1,0), (1,1).
        let a = JointDistribution::new(vec![
            vec![0.0, 0.25, 0.25, 0.0],
            vec![0.25, 0.0, 0.0, 0.25],
        ])
        .unwrap();
        assert!((mutual_information(&a) - 1.0).abs() < 1e-12);
        // Marginals of each agent's bit under solution A are independent of Z.
        let a1 = JointDistribution::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!(mutual_information(&a1).abs() < 1e-12);

        // Solution B: Z=0 -> (0,0),(0,1); Z=1 -> (1,0),(1,1).
        let b = JointDistribution::new(vec![
            vec![0.25, 0.25, 0.0, 0.0],
            vec![0.0, 0.0, 0.25, 0.25],
        ])
        .unwrap();
        assert!((mutual_information(&b) - 1.0).abs() < 1e-12);
        // Agent 1's bit equals Z exactly.
        let b1 = JointDistribution::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&b1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_rejected() {
        assert!(JointDistribution::new(vec![vec![0.5, 0.25]]).is_err());
        assert!(JointDistribution::new(vec![vec![1.25, -0.25]]).is_err());
    }

    #[test]
    fn mi_bounds_on_random_tables() {
        let mut rng = RngStream::seed_from(3);
        for _ in 0..200 {
            let rows = 2 + rng.index(3);
            let cols = 2 + rng.index(3);
            let mut table = vec![vec![0.0; cols]; rows];
            let mut sum = 0.0;
            for row in &mut table {
                for v in row.iter_mut() {
                    *v = rng.next_f64();
                    sum += *v;
                }
            }
            for row in &mut table {
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
            let d = JointDistribution::new(table).unwrap();
            let mi = mutual_information(&d);
            assert!(mi >= -1e-12);
            let hz = entropy_bits(&d.z_marginal());
            let ho = entropy_bits(&d.outcome_marginal());
            assert!(mi <= hz.min(ho) + 1e-9);
        }
    }

    #[test]
    fn exact_mi_solution_b_policy() {
        // Agent 0 plays so its next bit equals z; agent 1 never acts.
        let p0 = |own: u8, _other: u8, z: usize| -> f64 {
            // u = own ^ z makes own ^ u = z
            if own ^ (z as u8) == 1 {
                1.0
            } else {
                0.0
            }
        };
        let p1 = |_own: u8, _other: u8, _z: usize| -> f64 { 0.0 };
        let mi = exact_mi_xor([&p0, &p1], 2).unwrap();
        assert!((mi.global_bits - 1.0).abs() < 1e-12);
        assert!((mi.local_bits[0] - 1.0).abs() < 1e-12);
        assert!(mi.local_bits[1].abs() < 1e-12);
    }

    #[test]
    fn exact_mi_solution_a_policy() {
        // Agent 0 keeps its bit; agent 1 sets its bit to other ^ !z so the
        // parity of the pair equals !z. Both marginals stay uniform.
        let p0 = |_own: u8, _other: u8, _z: usize| -> f64 { 0.0 };
        let p1 = |own: u8, other: u8, z: usize| -> f64 {
            let target = other ^ (1 - z as u8);
            if own ^ target == 1 {
                1.0
            } else {
                0.0
            }
        };
        let mi = exact_mi_xor([&p0, &p1], 2).unwrap();
        assert!((mi.global_bits - 1.0).abs() < 1e-12);
        assert!(mi.local_bits[0].abs() < 1e-12);
        assert!(mi.local_bits[1].abs() < 1e-12);
    }

    #[test]
    fn exact_mi_uniform_policy_is_zero() {
        let p = |_: u8, _: u8, _: usize| -> f64 { 0.5 };
        let mi = exact_mi_xor([&p, &p], 2).unwrap();
        assert!(mi.global_bits.abs() < 1e-12);
        assert!(mi.local_bits[0].abs() < 1e-12);
        assert!(mi.local_bits[1].abs() < 1e-12);
    }

    #[test]
    fn sampled_mi_tracks_exact() {
        let mut rng = RngStream::seed_from(7);
        // A soft, z-dependent random policy.
        let p0 = |own: u8, other: u8, z: usize| -> f64 {
            0.2 + 0.5 * ((own ^ other) as f64) * 0.5 + 0.2 * z as f64
        };
        let p1 = |own: u8, _other: u8, z: usize| -> f64 {
            0.7 - 0.3 * own as f64 - 0.1 * z as f64
        };
        let exact = exact_mi_xor([&p0, &p1], 2).unwrap();
        let sampled = sampled_mi_xor([&p0, &p1], 2, 100_000, &mut rng).unwrap();
        assert!((exact.global_bits - sampled.global_bits).abs() < 0.02);
        assert!((exact.local_bits[0] - sampled.local_bits[0]).abs() < 0.02);
        assert!((exact.local_bits[1] - sampled.local_bits[1]).abs() < 0.02);
    }

    fn record(paths: Vec<Vec<[f64; 2]>>) -> TrajectoryRecord {
        TrajectoryRecord {
            run_id: 0,
            skill: 0,
            init_id: 0,
            seed: 0,
            positions: paths,
        }
    }

    #[test]
    fn angles_geometry_cases() {
        // Headings 0, 90, 180 degrees.
        let r = record(vec![
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 1.0]],
            vec![[0.0, 0.0], [-1.0, 0.0]],
        ]);
        let (a, b) = trajectory_angles(&r).unwrap();
        assert!((a - 90.0).abs() < 1e-12 && (b - 90.0).abs() < 1e-12);

        // All same heading.
        let r = record(vec![
            vec![[0.0, 0.0], [1.0, 1.0]],
            vec![[0.5, 0.0], [1.5, 1.0]],
            vec![[0.0, 0.5], [1.0, 1.5]],
        ]);
        let (a, b) = trajectory_angles(&r).unwrap();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);

        // Stationary agent flags the record degenerate.
        let r = record(vec![
            vec![[0.0, 0.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [1.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 1.0]],
        ]);
        assert!(trajectory_angles(&r).is_none());
    }

    #[test]
    fn angles_match_bruteforce_on_random_paths() {
        let mut rng = RngStream::seed_from(11);
        for _ in 0..100 {
            let paths: Vec<Vec<[f64; 2]>> = (0..3)
                .map(|_| {
                    (0..5)
                        .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
                        .collect()
                })
                .collect();
            let r = record(paths.clone());
            let Some((a, b)) = trajectory_angles(&r) else {
                continue;
            };
            // Independent recomputation over all pairs.
            let heading = |p: &Vec<[f64; 2]>| -> f64 {
                (p[4][1] - p[0][1]).atan2(p[4][0] - p[0][0]).to_degrees()
            };
            let mut pairwise = Vec::new();
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let mut d = (heading(&paths[i]) - heading(&paths[j])).abs();
                    while d > 360.0 {
                        d -= 360.0;
                    }
                    if d > 180.0 {
                        d = 360.0 - d;
                    }
                    pairwise.push(d);
                }
            }
            pairwise.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert!((a - pairwise[0]).abs() < 1e-9);
            assert!((b - pairwise[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn lengths_cases_and_time_reversal() {
        let r = record(vec![
            vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]],
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0]],
        ]);
        let (a, b) = trajectory_lengths(&r);
        assert_eq!(a, 0.0);
        assert!((b - 1.0).abs() < 1e-12);

        let mut rng = RngStream::seed_from(13);
        let paths: Vec<Vec<[f64; 2]>> = (0..3)
            .map(|_| {
                (0..6)
                    .map(|_| [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)])
                    .collect()
            })
            .collect();
        let fwd = trajectory_lengths(&record(paths.clone()));
        let reversed: Vec<Vec<[f64; 2]>> = paths
            .iter()
            .map(|p| p.iter().rev().copied().collect())
            .collect();
        let rev = trajectory_lengths(&record(reversed));
        assert!((fwd.0 - rev.0).abs() < 1e-12 && (fwd.1 - rev.1).abs() < 1e-12);

        // Independent summation oracle.
        let total = |p: &Vec<[f64; 2]>| -> f64 {
            let mut s = 0.0;
            for k in 1..p.len() {
                s += ((p[k][0] - p[k - 1][0]).powi(2) + (p[k][1] - p[k - 1][1]).powi(2)).sqrt();
            }
            s
        };
        let mut all: Vec<f64> = paths.iter().map(total).collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((fwd.0 - all[0]).abs() < 1e-12 && (fwd.1 - all[1]).abs() < 1e-12);
    }

    #[test]
    fn endpoint_std_cases() {
        let mk = |ends: Vec<[f64; 2]>| -> Vec<TrajectoryRecord> {
            ends.into_iter()
                .map(|e| record(vec![vec![[0.0, 0.0], e]]))
                .collect()
        };
        let same = mk(vec![[0.3, 0.3]; 16]);
        assert!(endpoint_std(&same).unwrap() < 1e-12);

        let halves = mk(vec![
            [1.0, 0.0],
            [-1.0, 0.0],
            [1.0, 0.0],
            [-1.0, 0.0],
        ]);
        assert!((endpoint_std(&halves).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cluster_score_tight_and_shuffled() {
        let mut rng = RngStream::seed_from(17);
        // Perfectly tight: identical points within each skill.
        let mut points = Vec::new();
        for s in 0..4usize {
            let center = vec![s as f64, -(s as f64), 2.0 * s as f64, 1.0];
            for _ in 0..10 {
                points.push((s, center.clone()));
            }
        }
        let score = skill_cluster_score(&points).unwrap();
        assert!(score.abs() < 1e-12, "tight score {score}");

        // Exchangeable labels: ratio near 1.
        let mut cloud: Vec<Vec<f64>> = Vec::new();
        for _ in 0..400 {
            cloud.push((0..4).map(|_| rng.normal(0.0, 1.0)).collect());
        }
        let labeled: Vec<(usize, Vec<f64>)> = cloud
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i % 5, v))
            .collect();
        let score = skill_cluster_score(&labeled).unwrap();
        assert!((score - 1.0).abs() < 0.35, "shuffled score {score}");

        // Single-point skills are excluded, not fatal.
        let mut with_single = labeled.clone();
        with_single.push((99, vec![0.0, 0.0, 0.0, 0.0]));
        assert!(skill_cluster_score(&with_single).is_ok());
    }
}
