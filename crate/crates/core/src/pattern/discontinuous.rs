use std::fmt;
use std::str::FromStr;

use crate::numerics::ode::{integrate, locate_event, Flow, OdeOptions};
use crate::ModelParams;

use super::build::{uniform_grid, ATOL, RTOL};
use super::potential::{potential_spec, turning_points, Potential, PotentialSpec};
use super::{lift, Construction, Junction, Orientation, Pattern, PatternError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Arc of a closed orbit of w″ + h(w) = 0.
    Inner,
    /// Arc of the null-set dynamics w″ − d_g·w + κ₀ = 0, where U = V = 0.
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartSide {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub energy: f64,
    /// Starting turning point of a leading inner segment.
    pub start: Option<StartSide>,
    /// Number of switch-point crossings to pass before leaving the segment.
    pub skip: usize,
}

/// Ordered list of arcs. Text form, one segment per line:
///
/// ```text
/// outer 0.7
/// inner 1.4 skip=0
/// outer 0.7
/// ```
///
/// A leading inner segment may carry `start=low|high`. Every segment but the
/// last ends at its (skip+1)-th crossing of the switch point with the next
/// curve; the last ends at its (skip+1)-th return to z = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPlan {
    pub segments: Vec<SegmentSpec>,
}

impl FromStr for SegmentPlan {
    type Err = PatternError;

    fn from_str(text: &str) -> Result<Self, PatternError> {
        let mut segments = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| PatternError::Plan { line, message };
            let mut parts = body.split_whitespace();
            let kind = match parts.next() {
                Some("inner") => SegmentKind::Inner,
                Some("outer") => SegmentKind::Outer,
                Some(other) => return Err(err(format!("unknown segment kind `{other}`"))),
                None => continue,
            };
            let energy: f64 = parts
                .next()
                .ok_or_else(|| err("missing energy".into()))?
                .parse()
                .map_err(|_| err("energy is not a number".into()))?;
            if !energy.is_finite() {
                return Err(err("energy must be finite".into()));
            }
            let mut spec = SegmentSpec { kind, energy, start: None, skip: 0 };
            for opt in parts {
                match opt.split_once('=') {
                    Some(("start", "low")) => spec.start = Some(StartSide::Low),
                    Some(("start", "high")) => spec.start = Some(StartSide::High),
                    Some(("skip", n)) => spec.skip = n.parse().map_err(|_| err(format!("bad skip `{n}`")))?,
                    _ => return Err(err(format!("unknown option `{opt}`"))),
                }
            }
            if spec.start.is_some() && (kind == SegmentKind::Outer || !segments.is_empty()) {
                return Err(err("start= is only allowed on a leading inner segment".into()));
            }
            segments.push(spec);
        }
        if segments.is_empty() {
            return Err(PatternError::Plan { line: 0, message: "plan has no segments".into() });
        }
        Ok(Self { segments })
    }
}

impl fmt::Display for SegmentPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.segments {
            let kind = if s.kind == SegmentKind::Inner { "inner" } else { "outer" };
            write!(f, "{kind} {:e}", s.energy)?;
            match s.start {
                Some(StartSide::Low) => write!(f, " start=low")?,
                Some(StartSide::High) => write!(f, " start=high")?,
                None => {}
            }
            if s.skip > 0 {
                write!(f, " skip={}", s.skip)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

struct Arc<'a> {
    spec: &'a PotentialSpec,
    seg: SegmentSpec,
}

impl Arc<'_> {
    fn energy_of(&self, w: f64) -> f64 {
        match self.seg.kind {
            SegmentKind::Inner => self.spec.energy(w),
            SegmentKind::Outer => self.spec.outer_energy(w),
        }
    }

    fn accel(&self, w: f64) -> f64 {
        match self.seg.kind {
            SegmentKind::Inner => -self.spec.h(w),
            SegmentKind::Outer => self.spec.d_g * w - self.spec.kappa0,
        }
    }

    fn drift(&self, y: &[f64; 2]) -> f64 {
        match self.seg.kind {
            SegmentKind::Inner => super::build::energy_drift(self.spec, self.seg.energy, y),
            SegmentKind::Outer => (0.5 * y[1] * y[1] + self.energy_of(y[0]) - self.seg.energy).abs(),
        }
    }

    /// z ≥ 0 on this arc's curve at `w`, if the curve reaches `w`.
    fn speed_at(&self, w: f64) -> f64 {
        (2.0 * (self.seg.energy - self.energy_of(w))).max(0.0).sqrt()
    }
}

enum EndRule {
    Level(f64),
    Axis,
}

struct ArcRun {
    end: f64,
    y: [f64; 2],
    samples: Vec<[f64; 2]>,
    drift: f64,
}

const ARC_CAP: f64 = 1e3;

fn run_arc(arc: &Arc, t0: f64, y0: [f64; 2], rule: &EndRule, t_end: Option<f64>, stops: &[f64]) -> Result<Option<ArcRun>, PatternError> {
    let mut opts = OdeOptions::new(RTOL, ATOL);
    opts.h_max = Some(0.05);
    let mut samples = Vec::with_capacity(stops.len());
    let mut next = 0;
    let mut drift: f64 = 0.0;
    let mut count = 0usize;
    let mut found: Option<(f64, [f64; 2])> = None;
    let mut escaped = false;
    let horizon = t_end.unwrap_or(t0 + ARC_CAP);
    let summary = integrate(|_, y: &[f64; 2]| [y[1], arc.accel(y[0])], t0, y0, horizon, stops, &opts, |step| {
        drift = drift.max(arc.drift(&step.y1));
        while next < stops.len() && step.t1 >= stops[next] {
            samples.push(if step.t1 == stops[next] { step.y1 } else { step.at(stops[next]) });
            next += 1;
        }
        if t_end.is_some() {
            return Flow::Continue;
        }
        if step.y1[0] <= 0.0 {
            escaped = true;
            return Flow::Stop;
        }
        let g = |y: &[f64; 2]| match rule {
            EndRule::Level(level) => y[0] - level,
            EndRule::Axis => y[1],
        };
        if let Some(t) = locate_event(step, |_, y| g(y)) {
            if t > t0 + 1e-12 * (1.0 + t0.abs()) {
                if count == arc.seg.skip {
                    found = Some((t, step.at(t)));
                    return Flow::Stop;
                }
                count += 1;
            }
        }
        Flow::Continue
    })?;
    if let Some(end) = t_end {
        return Ok(Some(ArcRun { end, y: summary.y, samples, drift }));
    }
    if escaped {
        return Ok(None);
    }
    Ok(found.map(|(end, y)| ArcRun { end, y, samples, drift }))
}

/// Weak stationary pattern glued from inner and outer phase-plane arcs.
///
/// The returned pattern's `gamma` is the square of the total glued length; the
/// `gamma` stored in `p` is not used.
pub fn build_discontinuous_pattern(p: &ModelParams, plan: &SegmentPlan, n_grid: usize) -> Result<Pattern, PatternError> {
    if n_grid < 64 {
        return Err(PatternError::Grid(format!("n_grid = {n_grid} < 64")));
    }
    let spec = potential_spec(p)?;
    let segs = &plan.segments;
    if segs.is_empty() {
        return Err(PatternError::Plan { line: 0, message: "plan has no segments".into() });
    }
    let arcs: Vec<Arc> = segs.iter().map(|&seg| Arc { spec: &spec, seg }).collect();

    let mut switch = Vec::with_capacity(segs.len());
    for i in 0..segs.len() - 1 {
        let (a, b) = (segs[i], segs[i + 1]);
        let infeasible = |reason: String| PatternError::GluingInfeasible { first: i + 1, second: i + 2, reason };
        let (inner, outer) = match (a.kind, b.kind) {
            (SegmentKind::Inner, SegmentKind::Outer) => (a.energy, b.energy),
            (SegmentKind::Outer, SegmentKind::Inner) => (b.energy, a.energy),
            _ => return Err(infeasible("consecutive segments of the same kind never meet".into())),
        };
        let lvl = turning_points(&spec, inner).map_err(|_| {
            infeasible(format!("inner energy {inner} is outside ({}, {})", spec.h_min, spec.h_max))
        })?;
        let w_star = ((outer - inner) / spec.c_h).exp();
        let gap = inner - spec.energy(w_star);
        if !(w_star > lvl.w1 && w_star < lvl.w2) || gap <= 1e-14 * inner.abs() {
            return Err(infeasible(format!(
                "curves do not intersect: switch point {w_star} lies outside the inner orbit [{}, {}]",
                lvl.w1, lvl.w2
            )));
        }
        switch.push(w_star);
    }

    let first = segs[0];
    let start_w = match first.kind {
        SegmentKind::Outer => {
            let disc = spec.kappa0 * spec.kappa0 - 2.0 * spec.d_g * first.energy;
            if !(first.energy > 0.0 && disc > 0.0) {
                return Err(PatternError::Plan {
                    line: 1,
                    message: format!("outer energy {} does not meet the axis z = 0 in w > 0", first.energy),
                });
            }
            (spec.kappa0 - disc.sqrt()) / spec.d_g
        }
        SegmentKind::Inner => {
            let lvl = turning_points(&spec, first.energy)?;
            match first.start.unwrap_or(StartSide::Low) {
                StartSide::Low => lvl.w1,
                StartSide::High => lvl.w2,
            }
        }
    };

    // First pass: arc lengths and junction states.
    let mut starts = vec![(0.0, [start_w, 0.0])];
    let mut ends = Vec::with_capacity(segs.len());
    let mut junctions_raw = Vec::new();
    let mut drift: f64 = 0.0;
    for (i, arc) in arcs.iter().enumerate() {
        let (t0, y0) = starts[i];
        let rule = if i + 1 < segs.len() { EndRule::Level(switch[i]) } else { EndRule::Axis };
        let run = run_arc(arc, t0, y0, &rule, None, &[])?.ok_or_else(|| PatternError::GluingInfeasible {
            first: i + 1,
            second: (i + 2).min(segs.len()),
            reason: if i + 1 < segs.len() {
                "arc leaves w > 0 before reaching the switch point".into()
            } else {
                "final arc never returns to z = 0".into()
            },
        })?;
        drift = drift.max(run.drift);
        ends.push(run.end);
        if i + 1 < segs.len() {
            let w = run.y[0];
            let z_next = run.y[1].signum() * arcs[i + 1].speed_at(w);
            junctions_raw.push((run.end, w, (run.y[1] - z_next).abs()));
            starts.push((run.end, [w, z_next]));
        }
    }
    let len = *ends.last().unwrap();

    // Second pass: land on every grid node.
    let mut grid = uniform_grid(n_grid);
    let jx: Vec<f64> = junctions_raw.iter().map(|j| j.0 / len).collect();
    grid.retain(|x| jx.iter().all(|j| (x - j).abs() > 1e-9));
    grid.extend(&jx);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut w = vec![0.0; grid.len()];
    let mut z = vec![0.0; grid.len()];
    w[0] = start_w;
    let mut gi = 1;
    for (i, arc) in arcs.iter().enumerate() {
        let (t0, y0) = starts[i];
        let end = ends[i];
        let mut stops = Vec::new();
        let mut j = gi;
        while j < grid.len() && grid[j] * len < end * (1.0 - 1e-15) {
            stops.push(grid[j] * len);
            j += 1;
        }
        stops.push(end);
        let run = run_arc(arc, t0, y0, &EndRule::Axis, Some(end), &stops)?.expect("fixed-horizon run");
        drift = drift.max(run.drift);
        for s in &run.samples {
            w[gi] = s[0];
            z[gi] = s[1];
            gi += 1;
        }
    }
    debug_assert_eq!(gi, grid.len());

    let mut null_set = Vec::new();
    for (i, seg) in segs.iter().enumerate() {
        if seg.kind == SegmentKind::Outer {
            null_set.push((starts[i].0 / len, ends[i] / len));
        }
    }
    let junctions: Vec<Junction> =
        junctions_raw.iter().map(|&(t, w, jump)| Junction { x: t / len, w, z_jump: jump }).collect();
    let wx: Vec<f64> = z.iter().map(|zi| zi * len).collect();
    let (u, v) = lift(p, &grid, &w, &null_set);
    let tiny = 1e-9 * wx.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let signs: Vec<f64> = wx.iter().filter(|d| d.abs() > tiny).map(|d| d.signum()).collect();
    let k = 1 + signs.windows(2).filter(|s| s[0] != s[1]).count();
    let orientation = if signs.first().copied().unwrap_or(1.0) > 0.0 {
        Orientation::IncreasingFirst
    } else {
        Orientation::DecreasingFirst
    };
    let energy = segs.iter().find(|s| s.kind == SegmentKind::Inner).map(|s| turning_points(&spec, s.energy)).transpose()?;
    Ok(Pattern {
        grid,
        w,
        wx,
        u,
        v,
        k,
        orientation,
        gamma: len * len,
        energy,
        continuous: null_set.is_empty(),
        null_set,
        junctions,
        construction: Construction { energy_drift: drift, half_periods: Vec::new(), gamma_reconstructed: len * len },
    })
}
