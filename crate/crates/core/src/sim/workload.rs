//! Per-frame cycle demands: synthetic two-phase normal draws or a recorded trace.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Cycles;

/// Mean and standard deviation of one task's cycle demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demand {
    pub mean: f64,
    pub stddev: f64,
}

impl Demand {
    pub fn new(mean: f64, stddev: f64) -> Self {
        Self { mean, stddev }
    }

    /// `ceil(mean + 3 stddev)`, at least 1.
    pub fn default_wcec(&self) -> Cycles {
        ((self.mean + 3.0 * self.stddev).ceil() as Cycles).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadModel {
    /// Normally distributed demands whose parameters change once.
    TwoPhaseNormal {
        phase1: Vec<Demand>,
        phase2: Vec<Demand>,
        phase1_frames: usize,
        phase2_frames: usize,
        /// Draw bounds per phase; default `ceil(mean + 3 stddev)`.
        wcec_phase1: Option<Vec<Cycles>>,
        wcec_phase2: Option<Vec<Cycles>>,
    },
    /// A fixed demand matrix, replayed identically in every repetition.
    Trace {
        matrix: DemandMatrix,
        /// Frames counted as the first phase; default all of them.
        phase1_frames: Option<usize>,
        /// Default: per-task maximum over the phase's rows.
        wcec_phase1: Option<Vec<Cycles>>,
        wcec_phase2: Option<Vec<Cycles>>,
    },
}

fn check_wcec_list(name: &str, v: &Option<Vec<Cycles>>, n: usize) -> Result<()> {
    if let Some(v) = v {
        if v.len() != n {
            return Err(Error::InvalidWorkload(format!("{name}: expected {n} values, got {}", v.len())));
        }
        if v.contains(&0) {
            return Err(Error::InvalidWorkload(format!("{name}: values must be >= 1")));
        }
    }
    Ok(())
}

impl WorkloadModel {
    pub fn task_count(&self) -> usize {
        match self {
            WorkloadModel::TwoPhaseNormal { phase1, .. } => phase1.len(),
            WorkloadModel::Trace { matrix, .. } => matrix.task_count(),
        }
    }

    pub fn frames(&self) -> usize {
        match self {
            WorkloadModel::TwoPhaseNormal { phase1_frames, phase2_frames, .. } => phase1_frames + phase2_frames,
            WorkloadModel::Trace { matrix, .. } => matrix.frames(),
        }
    }

    pub fn phase1_frames(&self) -> usize {
        match self {
            WorkloadModel::TwoPhaseNormal { phase1_frames, .. } => *phase1_frames,
            WorkloadModel::Trace { matrix, phase1_frames, .. } => phase1_frames.unwrap_or(matrix.frames()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.task_count();
        if n == 0 {
            return Err(Error::InvalidWorkload("no tasks".into()));
        }
        match self {
            WorkloadModel::TwoPhaseNormal {
                phase1,
                phase2,
                phase1_frames,
                phase2_frames,
                wcec_phase1,
                wcec_phase2,
            } => {
                if phase2.len() != n {
                    return Err(Error::InvalidWorkload(format!("phase2: expected {n} tasks, got {}", phase2.len())));
                }
                for (name, list) in [("phase1", phase1), ("phase2", phase2)] {
                    for (k, d) in list.iter().enumerate() {
                        if !(d.mean.is_finite() && d.mean >= 1.0) {
                            return Err(Error::InvalidWorkload(format!("{name}[{k}].mean: must be >= 1")));
                        }
                        if !(d.stddev.is_finite() && d.stddev >= 0.0) {
                            return Err(Error::InvalidWorkload(format!("{name}[{k}].stddev: must be >= 0")));
                        }
                    }
                }
                if phase1_frames + phase2_frames == 0 {
                    return Err(Error::InvalidWorkload("frames: at least one frame required".into()));
                }
                check_wcec_list("wcec_phase1", wcec_phase1, n)?;
                check_wcec_list("wcec_phase2", wcec_phase2, n)?;
                Ok(())
            }
            WorkloadModel::Trace { matrix, phase1_frames, wcec_phase1, wcec_phase2 } => {
                if matrix.frames() == 0 {
                    return Err(Error::InvalidWorkload("trace has no frames".into()));
                }
                if let Some(p) = phase1_frames {
                    if *p > matrix.frames() {
                        return Err(Error::InvalidWorkload(format!(
                            "phase1_frames: {p} exceeds the {} trace frames",
                            matrix.frames()
                        )));
                    }
                }
                check_wcec_list("wcec_phase1", wcec_phase1, n)?;
                check_wcec_list("wcec_phase2", wcec_phase2, n)
            }
        }
    }

    /// WCECs believed at start-up (phase 1).
    pub fn initial_wcecs(&self) -> Vec<Cycles> {
        self.phase_wcecs(0)
    }

    /// True WCECs of the second phase (equal to phase 1 when there is none).
    pub fn final_wcecs(&self) -> Vec<Cycles> {
        if self.phase1_frames() >= self.frames() {
            return self.initial_wcecs();
        }
        self.phase_wcecs(1)
    }

    fn phase_wcecs(&self, phase: usize) -> Vec<Cycles> {
        match self {
            WorkloadModel::TwoPhaseNormal { phase1, phase2, wcec_phase1, wcec_phase2, .. } => {
                let (list, bounds) = if phase == 0 { (phase1, wcec_phase1) } else { (phase2, wcec_phase2) };
                bounds.clone().unwrap_or_else(|| list.iter().map(Demand::default_wcec).collect())
            }
            WorkloadModel::Trace { matrix, wcec_phase1, wcec_phase2, .. } => {
                let bounds = if phase == 0 { wcec_phase1 } else { wcec_phase2 };
                if let Some(b) = bounds {
                    return b.clone();
                }
                let split = self.phase1_frames();
                let rows = if phase == 0 { &matrix.rows[..split] } else { &matrix.rows[split..] };
                let rows = if rows.is_empty() { &matrix.rows[..] } else { rows };
                (0..matrix.task_count()).map(|k| rows.iter().map(|r| r[k]).max().unwrap_or(1)).collect()
            }
        }
    }
}

/// Rows are frames, columns are tasks in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DemandMatrix {
    rows: Vec<Vec<Cycles>>,
}

impl DemandMatrix {
    pub fn new(rows: Vec<Vec<Cycles>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let n = first.len();
            if n == 0 {
                return Err(Error::InvalidWorkload("rows must have at least one task".into()));
            }
            for (i, r) in rows.iter().enumerate() {
                if r.len() != n {
                    return Err(Error::InvalidWorkload(format!("row {i}: expected {n} values, got {}", r.len())));
                }
                if r.contains(&0) {
                    return Err(Error::InvalidWorkload(format!("row {i}: cycle counts must be >= 1")));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<Cycles>] {
        &self.rows
    }

    pub fn row(&self, frame: usize) -> &[Cycles] {
        &self.rows[frame]
    }

    pub fn frames(&self) -> usize {
        self.rows.len()
    }

    pub fn task_count(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Samples of task `k` in frames `range`.
    pub fn column(&self, k: usize, range: std::ops::Range<usize>) -> Vec<Cycles> {
        self.rows[range].iter().map(|r| r[k]).collect()
    }

    /// Parses the trace format: header `task_1,...,task_N`, one integer row
    /// per frame, `#` comment lines.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(true).from_reader(reader);
        let header_err = |line: u64, message: String| Error::TraceParse { line, message };
        let headers = rdr.headers().map_err(|e| header_err(csv_line(&e), e.to_string()))?.clone();
        let header_line = headers.position().map_or(1, |p| p.line());
        if headers.is_empty() {
            return Err(header_err(header_line, "missing header".into()));
        }
        for (k, h) in headers.iter().enumerate() {
            let expect = format!("task_{}", k + 1);
            if h != expect {
                return Err(header_err(header_line, format!("expected column `{expect}`, found `{h}`")));
            }
        }
        let n = headers.len();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| header_err(csv_line(&e), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != n {
                return Err(header_err(line, format!("expected {n} values, got {}", rec.len())));
            }
            let mut row = Vec::with_capacity(n);
            for field in rec.iter() {
                let v: Cycles =
                    field.parse().map_err(|_| header_err(line, format!("`{field}` is not a non-negative integer")))?;
                if v == 0 {
                    return Err(header_err(line, "cycle counts must be >= 1".into()));
                }
                row.push(v);
            }
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.task_count()).map(|k| format!("task_{k}")).collect();
        w.write_record(&header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()
    }
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

/// Seed for repetition `rep` of an experiment seeded with `base`.
pub fn rep_seed(base: u64, rep: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = base.wrapping_add((rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Integer draw from `N(mean, sd)` redrawn until it lands in `[1, max]`.
fn truncated_draw<R: Rng>(d: &Demand, max: Cycles, rng: &mut R) -> Cycles {
    let clamp = |x: f64| (x.round().max(1.0) as Cycles).min(max.max(1));
    if d.stddev == 0.0 {
        return clamp(d.mean);
    }
    let normal = Normal::new(d.mean, d.stddev).expect("validated parameters");
    for _ in 0..10_000 {
        let x = normal.sample(rng).round();
        if x >= 1.0 && x <= max as f64 {
            return x as Cycles;
        }
    }
    clamp(d.mean)
}

/// Materializes the demand matrix. Synthetic models draw from a ChaCha
/// stream seeded with `seed`; traces ignore it.
pub fn generate_workload(model: &WorkloadModel, seed: u64) -> Result<DemandMatrix> {
    model.validate()?;
    match model {
        WorkloadModel::TwoPhaseNormal { phase1, phase2, phase1_frames, phase2_frames, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bounds = [model.phase_wcecs(0), model.phase_wcecs(1)];
            let mut rows = Vec::with_capacity(phase1_frames + phase2_frames);
            for frame in 0..phase1_frames + phase2_frames {
                let phase = usize::from(frame >= *phase1_frames);
                let params = if phase == 0 { phase1 } else { phase2 };
                rows.push(
                    params.iter().zip(&bounds[phase]).map(|(d, &max)| truncated_draw(d, max, &mut rng)).collect(),
                );
            }
            DemandMatrix::new(rows)
        }
        WorkloadModel::Trace { matrix, .. } => Ok(matrix.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(sd: f64) -> WorkloadModel {
        WorkloadModel::TwoPhaseNormal {
            phase1: vec![Demand::new(100.0, sd), Demand::new(50.0, sd)],
            phase2: vec![Demand::new(130.0, sd), Demand::new(50.0, sd)],
            phase1_frames: 30,
            phase2_frames: 10,
            wcec_phase1: None,
            wcec_phase2: None,
        }
    }

    #[test]
    fn zero_stddev_gives_means() {
        let m = generate_workload(&model(0.0), 7).unwrap();
        assert_eq!(m.frames(), 40);
        assert!(m.rows()[..30].iter().all(|r| r == &vec![100, 50]));
        assert!(m.rows()[30..].iter().all(|r| r == &vec![130, 50]));
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = generate_workload(&model(15.0), 11).unwrap();
        let b = generate_workload(&model(15.0), 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_workload(&model(15.0), 12).unwrap());
        let w1 = model(15.0).initial_wcecs();
        let w2 = model(15.0).final_wcecs();
        assert_eq!(w1, vec![145, 95]);
        for (f, r) in a.rows().iter().enumerate() {
            let w = if f < 30 { &w1 } else { &w2 };
            for k in 0..2 {
                assert!(r[k] >= 1 && r[k] <= w[k]);
            }
        }
    }

    #[test]
    fn trace_round_trip() {
        let m = generate_workload(&model(5.0), 3).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("task_1,task_2\n"));
        assert_eq!(DemandMatrix::read_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn trace_comments_and_errors() {
        let ok = "# recorded\ntask_1,task_2\n3,4\n# mid\n5,6\n";
        let m = DemandMatrix::read_csv(ok.as_bytes()).unwrap();
        assert_eq!(m.rows(), &[vec![3, 4], vec![5, 6]]);

        let bad = "task_1,task_2\n3,4\n5,x\n";
        match DemandMatrix::read_csv(bad.as_bytes()) {
            Err(Error::TraceParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let zero = "task_1\n0\n";
        assert!(matches!(DemandMatrix::read_csv(zero.as_bytes()), Err(Error::TraceParse { line: 2, .. })));
        let header = "cpu,task_2\n1,2\n";
        assert!(matches!(DemandMatrix::read_csv(header.as_bytes()), Err(Error::TraceParse { line: 1, .. })));
    }

    #[test]
    fn trace_phase_wcecs() {
        let matrix = DemandMatrix::new(vec![vec![3, 9], vec![5, 2], vec![8, 1]]).unwrap();
        let t = WorkloadModel::Trace { matrix, phase1_frames: Some(2), wcec_phase1: None, wcec_phase2: None };
        assert_eq!(t.initial_wcecs(), vec![5, 9]);
        assert_eq!(t.final_wcecs(), vec![8, 1]);
    }

    #[test]
    fn rep_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|r| rep_seed(42, r)).collect();
        assert_eq!(s.len(), 1000);
    }
}
