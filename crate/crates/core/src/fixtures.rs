//! Deterministic generators for the fixture spaces and towers.
//!
//! Every generator is a closed form in double precision: the same spec and
//! seed always produce bit-identical output. The seed is reserved for
//! randomized sampling; none of the current fixtures use it.

use crate::metric::{FiniteMetricSpace, MetricError};
use crate::tower::{Tower, TowerError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture spec: {0}")]
    SpecInvalid(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleMetric {
    Arc,
    Chord,
}

/// One fixture kind with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum FixtureSpec {
    /// `n` equally spaced points on a circle of the given circumference.
    Circle { n: usize, circumference: f64, metric: CircleMetric },
    /// Vertices of a regular polygon with the given side, Euclidean metric.
    NGon { n: usize, side: f64 },
    /// Planar sample of the closed topologist's sine curve with its
    /// connecting arc; `n` points on the oscillating arm.
    WarsawCircle { n: usize },
    /// Tower of circles under angle doubling: stage `i` has
    /// `m / 2^(depth - i)` points on circumference `2^i * base`; each bond
    /// reduces indices modulo the smaller count. `m` must be divisible by
    /// `2^depth`.
    SolenoidTower { depth: usize, m: usize, base_circumference: f64 },
    /// Metric spheres of a branched tree crossed with a line, sampled at
    /// fixed angles, with radial projection bonds. The tree is a trunk of
    /// the given length splitting into `branches` rays.
    Cat0SphereTower { branches: usize, trunk: f64, radii: Vec<f64>, arcs: usize },
    /// Grid sample of the surface of revolution of the exponential, with
    /// the graph-geodesic metric.
    HornSurface { nx: usize, narcs: usize, x_min: f64, x_max: f64 },
    /// Two cone points over a level-`depth` middle-thirds Cantor set, with
    /// meridian sampling.
    CantorSuspension { depth: usize, heights: usize },
}

#[derive(Debug, Clone)]
pub enum Generated {
    Space(FiniteMetricSpace<f64>),
    Tower(Tower<f64>),
}

impl Generated {
    pub fn into_space(self) -> Option<FiniteMetricSpace<f64>> {
        match self {
            Generated::Space(s) => Some(s),
            Generated::Tower(_) => None,
        }
    }

    pub fn into_tower(self) -> Option<Tower<f64>> {
        match self {
            Generated::Tower(t) => Some(t),
            Generated::Space(_) => None,
        }
    }
}

pub fn generate(spec: &FixtureSpec, _seed: u64) -> Result<Generated, FixtureError> {
    match spec {
        FixtureSpec::Circle { n, circumference, metric } => {
            Ok(Generated::Space(circle(*n, *circumference, *metric)?))
        }
        FixtureSpec::NGon { n, side } => Ok(Generated::Space(ngon(*n, *side)?)),
        FixtureSpec::WarsawCircle { n } => Ok(Generated::Space(warsaw_circle(*n)?)),
        FixtureSpec::SolenoidTower { depth, m, base_circumference } => {
            Ok(Generated::Tower(solenoid_tower(*depth, *m, *base_circumference)?))
        }
        FixtureSpec::Cat0SphereTower { branches, trunk, radii, arcs } => {
            Ok(Generated::Tower(cat0_sphere_tower(*branches, *trunk, radii, *arcs)?))
        }
        FixtureSpec::HornSurface { nx, narcs, x_min, x_max } => {
            Ok(Generated::Space(horn_surface(*nx, *narcs, *x_min, *x_max)?))
        }
        FixtureSpec::CantorSuspension { depth, heights } => {
            Ok(Generated::Space(cantor_suspension(*depth, *heights)?))
        }
    }
}

pub fn circle(
    n: usize,
    circumference: f64,
    metric: CircleMetric,
) -> Result<FiniteMetricSpace<f64>, FixtureError> {
    if n < 3 {
        return Err(FixtureError::SpecInvalid(format!("circle needs n >= 3, got {n}")));
    }
    if circumference <= 0.0 {
        return Err(FixtureError::SpecInvalid("circumference must be positive".into()));
    }
    let mut d = vec![vec![0.0; n]; n];
    let radius = circumference / (2.0 * std::f64::consts::PI);
    for i in 0..n {
        for j in (i + 1)..n {
            let hop = (j - i).min(n - (j - i));
            let dist = match metric {
                CircleMetric::Arc => circumference * hop as f64 / n as f64,
                CircleMetric::Chord => {
                    2.0 * radius * (std::f64::consts::PI * hop as f64 / n as f64).sin()
                }
            };
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    Ok(FiniteMetricSpace::build(&d, None)?)
}

pub fn ngon(n: usize, side: f64) -> Result<FiniteMetricSpace<f64>, FixtureError> {
    if n < 3 {
        return Err(FixtureError::SpecInvalid(format!("polygon needs n >= 3, got {n}")));
    }
    if side <= 0.0 {
        return Err(FixtureError::SpecInvalid("side must be positive".into()));
    }
    let radius = side / (2.0 * (std::f64::consts::PI / n as f64).sin());
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let hop = (j - i).min(n - (j - i));
            let dist = 2.0 * radius * (std::f64::consts::PI * hop as f64 / n as f64).sin();
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    Ok(FiniteMetricSpace::build(&d, None)?)
}

/// The unit square is the 4-gon with side one.
pub fn unit_square() -> FiniteMetricSpace<f64> {
    ngon(4, 1.0).expect("static parameters")
}

fn euclidean_space(points: &[(f64, f64)]) -> Result<FiniteMetricSpace<f64>, FixtureError> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = points[i].0 - points[j].0;
            let dy = points[i].1 - points[j].1;
            let dist = (dx * dx + dy * dy).sqrt();
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    Ok(FiniteMetricSpace::build(&d, None)?)
}

pub fn warsaw_circle(n: usize) -> Result<FiniteMetricSpace<f64>, FixtureError> {
    if n < 16 {
        return Err(FixtureError::SpecInvalid(format!("warsaw circle needs n >= 16, got {n}")));
    }
    // Oscillating arm y = sin(t), x = 1/t for t in [pi/2, t_max]. The
    // parameter speed keeps consecutive samples closer than the bar gap
    // x_min = 1/t_max as long as n exceeds sqrt(2) t_max (t_max - pi/2).
    let t_max = 4.0 * std::f64::consts::PI;
    let needed = (std::f64::consts::SQRT_2 * t_max * (t_max - std::f64::consts::FRAC_PI_2)).ceil();
    let arm = n.max(needed as usize);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for k in 0..=arm {
        let t = std::f64::consts::FRAC_PI_2
            + (t_max - std::f64::consts::FRAC_PI_2) * k as f64 / arm as f64;
        pts.push((1.0 / t, t.sin()));
    }
    // Limit bar x = 0, y in [-1, 1].
    let bar = 21;
    for k in 0..=bar {
        pts.push((0.0, -1.0 + 2.0 * k as f64 / bar as f64));
    }
    // Connecting arc from the arm's start around to the bar's bottom.
    let start = pts[0];
    let corner1 = (start.0, -2.0);
    let corner2 = (0.0, -2.0);
    let arc_step = 0.1;
    let mut walk = |from: (f64, f64), to: (f64, f64), include_end: bool| {
        let len = ((to.0 - from.0).powi(2) + (to.1 - from.1).powi(2)).sqrt();
        let steps = (len / arc_step).ceil() as usize;
        for k in 1..=steps {
            if k == steps && !include_end {
                break;
            }
            let s = k as f64 / steps as f64;
            pts.push((from.0 + s * (to.0 - from.0), from.1 + s * (to.1 - from.1)));
        }
    };
    walk(start, corner1, true);
    walk(corner1, corner2, true);
    walk(corner2, (0.0, -1.0), false);
    euclidean_space(&pts)
}

/// Arc-metric circle allowing the two-point degenerate case, for tower
/// stages produced by repeated halving.
fn arc_circle_stage(n: usize, circumference: f64) -> Result<FiniteMetricSpace<f64>, FixtureError> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let hop = (j - i).min(n - (j - i));
            let dist = circumference * hop as f64 / n as f64;
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    Ok(FiniteMetricSpace::build(&d, None)?)
}

/// Stage `depth` is the finest circle with `m` points; each bond halves the
/// point count and the circumference, reducing indices modulo the smaller
/// count. Fibers are antipodal pairs, so each bond realizes angle doubling
/// as a local isometry of arc metrics.
pub fn solenoid_tower(
    depth: usize,
    m: usize,
    base_circumference: f64,
) -> Result<Tower<f64>, FixtureError> {
    if depth == 0 {
        return Err(FixtureError::SpecInvalid("solenoid tower needs depth >= 1".into()));
    }
    let denom = 1usize << depth;
    if m % denom != 0 || m / denom < 2 || m % 2 != 0 {
        return Err(FixtureError::SpecInvalid(format!(
            "solenoid needs even m divisible by 2^depth with at least 2 points per stage, got m={m}, depth={depth}"
        )));
    }
    let mut stages = Vec::new();
    let mut indices = Vec::new();
    let mut bonds = Vec::new();
    for i in 0..=depth {
        let points = m >> (depth - i);
        let circumference = base_circumference * (1u64 << i) as f64;
        stages.push(arc_circle_stage(points, circumference)?);
        indices.push(circumference);
        if i > 0 {
            let below = m >> (depth - i + 1);
            bonds.push((0..points).map(|j| j % below).collect());
        }
    }
    Ok(Tower::new(indices, stages, bonds)?)
}

pub fn cat0_sphere_tower(
    branches: usize,
    trunk: f64,
    radii: &[f64],
    arcs: usize,
) -> Result<Tower<f64>, FixtureError> {
    if branches < 2 {
        return Err(FixtureError::SpecInvalid("need at least 2 branches".into()));
    }
    if arcs < 8 {
        return Err(FixtureError::SpecInvalid("need at least 8 arcs per semicircle".into()));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
        return Err(FixtureError::SpecInvalid("radii must be strictly increasing and positive".into()));
    }
    if trunk < 0.0 || trunk >= radii[0] {
        return Err(FixtureError::SpecInvalid("trunk must sit inside the smallest radius".into()));
    }
    let mut stages = Vec::new();
    let mut bonds: Vec<Vec<usize>> = Vec::new();
    let mut prev_ids: Option<Vec<usize>> = None;
    for &r in radii {
        // Direction grid: branch b, polar angle k*pi/arcs. Directions whose
        // tree coordinate stays on the trunk are shared by all branches.
        let mut ids: Vec<usize> = vec![usize::MAX; branches * (arcs + 1)];
        let mut trunk_node: Vec<Option<usize>> = vec![None; arcs + 1];
        let mut count = 0usize;
        for b in 0..branches {
            for k in 0..=arcs {
                let idx = b * (arcs + 1) + k;
                let tree_coord = r * (std::f64::consts::PI * k as f64 / arcs as f64).sin();
                if tree_coord <= trunk {
                    if let Some(t) = trunk_node[k] {
                        ids[idx] = t;
                    } else {
                        trunk_node[k] = Some(count);
                        ids[idx] = count;
                        count += 1;
                    }
                } else {
                    ids[idx] = count;
                    count += 1;
                }
            }
        }
        // Semicircle edges; shared trunk nodes merge the sheets.
        let step = r * std::f64::consts::PI / arcs as f64;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for b in 0..branches {
            for k in 0..arcs {
                let u = ids[b * (arcs + 1) + k];
                let v = ids[b * (arcs + 1) + k + 1];
                if u != v {
                    edges.push((u, v, step));
                }
            }
        }
        let space = FiniteMetricSpace::from_graph(count, &edges, None)?;
        stages.push(space);
        if let Some(prev) = prev_ids {
            // Radial projection: same branch and angle at the smaller
            // radius.
            let prev_stage_len = stages[stages.len() - 2].len();
            let mut bond = vec![usize::MAX; count];
            for b in 0..branches {
                for k in 0..=arcs {
                    let up = ids[b * (arcs + 1) + k];
                    let down = prev[b * (arcs + 1) + k];
                    bond[up] = down;
                }
            }
            debug_assert!(bond.iter().all(|&x| x < prev_stage_len));
            bonds.push(bond);
        }
        prev_ids = Some(ids);
    }
    Ok(Tower::new(radii.to_vec(), stages, bonds)?)
}

pub fn horn_surface(
    nx: usize,
    narcs: usize,
    x_min: f64,
    x_max: f64,
) -> Result<FiniteMetricSpace<f64>, FixtureError> {
    if nx < 2 || narcs < 3 {
        return Err(FixtureError::SpecInvalid("horn needs nx >= 2 and narcs >= 3".into()));
    }
    if x_min >= x_max {
        return Err(FixtureError::SpecInvalid("x range must be nonempty".into()));
    }
    let point = |i: usize, j: usize| {
        let x = x_min + (x_max - x_min) * i as f64 / (nx - 1) as f64;
        let r = x.exp();
        let th = 2.0 * std::f64::consts::PI * j as f64 / narcs as f64;
        (x, r * th.cos(), r * th.sin())
    };
    let dist3 = |a: (f64, f64, f64), b: (f64, f64, f64)| {
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2) + (a.2 - b.2).powi(2)).sqrt()
    };
    let id = |i: usize, j: usize| i * narcs + j;
    let mut edges = Vec::new();
    for i in 0..nx {
        for j in 0..narcs {
            if i + 1 < nx {
                edges.push((id(i, j), id(i + 1, j), dist3(point(i, j), point(i + 1, j))));
            }
            edges.push((id(i, j), id(i, (j + 1) % narcs), dist3(point(i, j), point(i, (j + 1) % narcs))));
        }
    }
    Ok(FiniteMetricSpace::from_graph(nx * narcs, &edges, None)?)
}

pub fn cantor_suspension(depth: usize, heights: usize) -> Result<FiniteMetricSpace<f64>, FixtureError> {
    if depth == 0 || depth > 8 {
        return Err(FixtureError::SpecInvalid("cantor depth must be in 1..=8".into()));
    }
    if heights < 3 || heights % 2 == 0 {
        return Err(FixtureError::SpecInvalid("heights must be odd and at least 3".into()));
    }
    // Level-`depth` left endpoints of the middle-thirds construction.
    let mut cantor: Vec<f64> = vec![0.0];
    for level in 1..=depth {
        let offset = 3f64.powi(-(level as i32)) * 2.0;
        let mut next = Vec::with_capacity(cantor.len() * 2);
        for &c in &cantor {
            next.push(c);
            next.push(c + offset);
        }
        cantor = next;
    }
    let meridians = cantor.len();
    // Nodes: (meridian, height level) for interior heights, plus two poles.
    let id = |m: usize, k: usize| m * heights + k;
    let north = meridians * heights;
    let south = north + 1;
    let dh = 2.0 / (heights + 1) as f64;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for m in 0..meridians {
        for k in 0..heights {
            if k + 1 < heights {
                edges.push((id(m, k), id(m, k + 1), dh));
            }
        }
        edges.push((id(m, heights - 1), north, dh));
        edges.push((id(m, 0), south, dh));
    }
    // Cross edges scaled by the distance to the nearer pole.
    for k in 0..heights {
        let h = -1.0 + dh * (k + 1) as f64;
        let width = 1.0 - h.abs();
        for a in 0..meridians {
            for b in (a + 1)..meridians {
                let d = (cantor[a] - cantor[b]).abs() * width;
                if d > 0.0 {
                    edges.push((id(a, k), id(b, k), d));
                }
            }
        }
    }
    Ok(FiniteMetricSpace::from_graph(meridians * heights + 2, &edges, None)?)
}
