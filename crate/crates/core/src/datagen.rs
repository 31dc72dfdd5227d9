//! Experimental datasets: min-max normalised classical tables (Iris ships with
//! the crate) and Trotter-evolved transverse-field Ising snapshots.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::{plus_state, AngleSource, GateOp, StateVector};
use crate::scalar::Real;

const IRIS_CSV: &str = include_str!("../data/iris.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDataset {
    pub feature_names: Vec<String>,
    /// Normalised features, each column spanning exactly `[−1, 1]`.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// Raw `(min, max)` of each column.
    pub feature_ranges: Vec<(f64, f64)>,
}

/// Affine map of every column onto `[−1, 1]`.
pub fn normalize_columns(raw: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<(f64, f64)>)> {
    let d = raw.first().map_or(0, Vec::len);
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for row in raw {
        if row.len() != d {
            return Err(Error::Dimension {
                what: "feature row",
                expected: d,
                got: row.len(),
            });
        }
        for (r, &v) in ranges.iter_mut().zip(row) {
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }
    for (k, &(lo, hi)) in ranges.iter().enumerate() {
        if !(hi > lo) {
            return Err(Error::Data(format!("feature column {k} is constant")));
        }
    }
    let features = raw
        .iter()
        .map(|row| {
            row.iter()
                .zip(&ranges)
                .map(|(&v, &(lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0)
                .collect()
        })
        .collect();
    Ok((features, ranges))
}

/// Reads a CSV with a header row, `d` numeric columns and a trailing label column.
pub fn load_and_normalize<R: Read>(reader: R) -> Result<ClassicalDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Data(
            "classical dataset needs at least one feature column and a label column".into(),
        ));
    }
    let d = header.len() - 1;
    let mut raw = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(d);
        for k in 0..d {
            let field = &rec[k];
            let v: f64 = field.parse().map_err(|_| {
                Error::Data(format!("row {}: column {} is not numeric: '{field}'", line + 1, k + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!("row {}: non-finite value", line + 1)));
            }
            row.push(v);
        }
        raw.push(row);
        labels.push(rec[d].to_string());
    }
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if raw.len() < 2 {
        return Err(Error::Data("need at least two rows".into()));
    }
    let (features, feature_ranges) = normalize_columns(&raw)?;
    Ok(ClassicalDataset {
        feature_names: header.iter().take(d).map(str::to_string).collect(),
        features,
        labels,
        feature_ranges,
    })
}

/// The 150-sample Iris table, normalised.
pub fn iris() -> ClassicalDataset {
    load_and_normalize(IRIS_CSV.as_bytes()).expect("bundled iris table parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CouplingSign {
    Positive,
    Negative,
}

impl CouplingSign {
    pub fn as_str(self) -> &'static str {
        match self {
            CouplingSign::Positive => "positive",
            CouplingSign::Negative => "negative",
        }
    }
}

impl fmt::Display for CouplingSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CouplingSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(CouplingSign::Positive),
            "negative" => Ok(CouplingSign::Negative),
            other => Err(Error::Data(format!("unknown sign label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    pub n_qubits: usize,
    /// Transverse field per site.
    pub h: Vec<f64>,
    /// `((i, j), J_ij)` for every pair `i < j`, in lexicographic order.
    pub couplings: Vec<((usize, usize), f64)>,
    pub sign: CouplingSign,
    pub seed: u64,
}

/// Four-site instance with `h_i = 1` and `J_ij` uniform on `(0, 1)` or `(−1, 0)`.
pub fn sample_couplings(sign: CouplingSign, seed: u64) -> IsingInstance {
    sample_couplings_n(4, sign, seed)
}

pub fn sample_couplings_n(n_qubits: usize, sign: CouplingSign, seed: u64) -> IsingInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut couplings = Vec::with_capacity(n_qubits * (n_qubits.saturating_sub(1)) / 2);
    for i in 0..n_qubits {
        for j in (i + 1)..n_qubits {
            let mut u: f64 = rng.random();
            while u == 0.0 {
                u = rng.random();
            }
            let v = match sign {
                CouplingSign::Positive => u,
                CouplingSign::Negative => -u,
            };
            couplings.push(((i, j), v));
        }
    }
    IsingInstance {
        n_qubits,
        h: vec![1.0; n_qubits],
        couplings,
        sign,
        seed,
    }
}

/// Number of Trotter slices `τ / dt`, which must be integral.
pub fn trotter_steps(tau: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(tau > 0.0) {
        return Err(Error::Config("tau and dt must be positive".into()));
    }
    let steps = (tau / dt).round();
    if (steps * dt - tau).abs() > 1e-9 * tau {
        return Err(Error::Config(format!("tau/dt = {} is not integral", tau / dt)));
    }
    Ok(steps as usize)
}

/// First-order Trotter evolution from `|+⟩^{⊗n}` under
/// `H(t) = (1 − t/τ) Σ h_i X_i + (t/τ) Σ J_ij Z_i Z_j`.
///
/// Slice `m` (0-based) approximates `exp(−i H(m·dt) dt)` by the X factors on every
/// site followed by the ZZ factors on every pair. The state after `s` slices is
/// recorded for each `s` in `snapshot_steps`.
pub fn trotter_evolve<T: Real>(
    instance: &IsingInstance,
    tau: f64,
    dt: f64,
    snapshot_steps: &[usize],
) -> Result<Vec<(usize, StateVector<T>)>> {
    let total = trotter_steps(tau, dt)?;
    if let Some(&bad) = snapshot_steps.iter().find(|&&s| s > total) {
        return Err(Error::Config(format!(
            "snapshot step {bad} beyond the {total} available"
        )));
    }
    let last = snapshot_steps.iter().copied().max().unwrap_or(0);
    let n = instance.n_qubits;
    let x_gates: Vec<GateOp<T>> = (0..n)
        .map(|q| GateOp::rx(q, AngleSource::Fixed(T::zero())))
        .collect::<Result<_>>()?;
    let zz_gates: Vec<GateOp<T>> = instance
        .couplings
        .iter()
        .map(|&((i, j), _)| GateOp::rzz(i, j, AngleSource::Fixed(T::zero())))
        .collect::<Result<_>>()?;

    let mut state = plus_state::<T>(n)?;
    let mut out = Vec::with_capacity(snapshot_steps.len());
    let record = |step: usize, s: &StateVector<T>, out: &mut Vec<(usize, StateVector<T>)>| {
        for &want in snapshot_steps {
            if want == step {
                out.push((step, s.clone()));
            }
        }
    };
    record(0, &state, &mut out);
    for m in 0..last {
        let frac = (m as f64) * dt / tau;
        for (g, &h) in x_gates.iter().zip(&instance.h) {
            state = crate::quantum::apply_gate(&state, g, T::lit(2.0 * (1.0 - frac) * h * dt))?;
        }
        for (g, &(_, j)) in zz_gates.iter().zip(&instance.couplings) {
            state = crate::quantum::apply_gate(&state, g, T::lit(2.0 * frac * j * dt))?;
        }
        record(m + 1, &state, &mut out);
    }
    out.sort_by_key(|(s, _)| *s);
    Ok(out)
}

pub const DEFAULT_TAU: f64 = 40.0;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_SNAPSHOTS: [usize; 4] = [1000, 2000, 3000, 4000];
pub const DEFAULT_SAMPLES_PER_SIGN: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct IsingDataset {
    /// Positive-coupling instances first, then negative ones.
    pub instances: Vec<IsingInstance>,
    /// Trotter step → one state per instance, in instance order.
    pub snapshots: BTreeMap<usize, Vec<StateVector<f64>>>,
    pub tau: f64,
    pub dt: f64,
    pub seed: u64,
}

impl IsingDataset {
    pub fn labels(&self) -> Vec<String> {
        self.instances.iter().map(|i| i.sign.to_string()).collect()
    }
}

pub fn generate_ising(
    samples_per_sign: usize,
    seed: u64,
    tau: f64,
    dt: f64,
    snapshot_steps: &[usize],
) -> Result<IsingDataset> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(2 * samples_per_sign);
    for sign in [CouplingSign::Positive, CouplingSign::Negative] {
        for _ in 0..samples_per_sign {
            instances.push(sample_couplings(sign, master.next_u64()));
        }
    }
    let evolved: Vec<Vec<(usize, StateVector<f64>)>> = instances
        .par_iter()
        .map(|inst| trotter_evolve(inst, tau, dt, snapshot_steps))
        .collect::<Result<_>>()?;
    let mut snapshots: BTreeMap<usize, Vec<StateVector<f64>>> = BTreeMap::new();
    for per_instance in evolved {
        for (step, s) in per_instance {
            snapshots.entry(step).or_default().push(s);
        }
    }
    Ok(IsingDataset {
        instances,
        snapshots,
        tau,
        dt,
        seed,
    })
}

/// One decoded row group of a state file.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub instance_id: usize,
    pub sign: CouplingSign,
    pub step: usize,
    pub state: StateVector<f64>,
}

pub const STATE_HEADER: [&str; 6] = [
    "instance_id",
    "sign_label",
    "snapshot_step",
    "basis_index",
    "amplitude_re",
    "amplitude_im",
];

/// Writes every snapshot as `(instance_id, sign_label, snapshot_step, basis_index, re, im)` rows.
pub fn serialize_states<W: Write>(dataset: &IsingDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(STATE_HEADER)?;
    for (step, states) in &dataset.snapshots {
        for (id, (inst, state)) in dataset.instances.iter().zip(states).enumerate() {
            for (b, a) in state.amplitudes().iter().enumerate() {
                w.write_record(&[
                    id.to_string(),
                    inst.sign.to_string(),
                    step.to_string(),
                    b.to_string(),
                    format!("{:.16e}", a.re),
                    format!("{:.16e}", a.im),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn deserialize_states<R: Read>(reader: R) -> Result<Vec<StateRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(STATE_HEADER.iter().copied()) {
        return Err(Error::Data(format!(
            "state file header must be {}",
            STATE_HEADER.join(",")
        )));
    }
    let parse_usize = |s: &str, what: &str, line: usize| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Data(format!("line {line}: bad {what} '{s}'")))
    };
    let parse_f64 = |s: &str, line: usize| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Data(format!("line {line}: bad amplitude '{s}'")))
    };

    let mut groups: Vec<((usize, usize), CouplingSign, Vec<Complex<f64>>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        if rec.len() != STATE_HEADER.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} columns, got {}",
                STATE_HEADER.len(),
                rec.len()
            )));
        }
        let id = parse_usize(&rec[0], "instance_id", line)?;
        let sign: CouplingSign = rec[1].parse()?;
        let step = parse_usize(&rec[2], "snapshot_step", line)?;
        let basis = parse_usize(&rec[3], "basis_index", line)?;
        let amp = Complex::new(parse_f64(&rec[4], line)?, parse_f64(&rec[5], line)?);
        match groups.last_mut() {
            Some((key, s, amps)) if *key == (step, id) => {
                if *s != sign {
                    return Err(Error::Data(format!("line {line}: sign changes within a state")));
                }
                if basis != amps.len() {
                    return Err(Error::Data(format!(
                        "line {line}: basis index {basis}, expected {}",
                        amps.len()
                    )));
                }
                amps.push(amp);
            }
            _ => {
                if basis != 0 {
                    return Err(Error::Data(format!(
                        "line {line}: state must start at basis index 0"
                    )));
                }
                groups.push(((step, id), sign, vec![amp]));
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = groups[0].2.len();
    groups
        .into_iter()
        .map(|((step, instance_id), sign, amps)| {
            if amps.len() != dim {
                return Err(Error::Data(format!(
                    "instance {instance_id} step {step}: {} amplitudes, expected {dim}",
                    amps.len()
                )));
            }
            Ok(StateRecord {
                instance_id,
                sign,
                step,
                state: StateVector::from_normalized(amps)?,
            })
        })
        .collect()
}

/// States and sign labels of one snapshot, ordered by instance id.
pub fn snapshot_of(records: &[StateRecord], step: usize) -> Result<(Vec<StateVector<f64>>, Vec<String>)> {
    let mut picked: Vec<&StateRecord> = records.iter().filter(|r| r.step == step).collect();
    if picked.is_empty() {
        let mut steps: Vec<usize> = records.iter().map(|r| r.step).collect();
        steps.dedup();
        return Err(Error::Data(format!(
            "snapshot {step} not present (available: {steps:?})"
        )));
    }
    picked.sort_by_key(|r| r.instance_id);
    Ok((
        picked.iter().map(|r| r.state.clone()).collect(),
        picked.iter().map(|r| r.sign.to_string()).collect(),
    ))
}

/// Per-instance metadata: id, sign, seed, fields and couplings.
pub fn serialize_instances<W: Write>(dataset: &IsingDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let first = dataset.instances.first().ok_or(Error::EmptyDataset)?;
    let mut header = vec!["instance_id".to_string(), "sign_label".into(), "seed".into()];
    header.extend((0..first.n_qubits).map(|i| format!("h_{i}")));
    header.extend(first.couplings.iter().map(|((i, j), _)| format!("j_{i}_{j}")));
    w.write_record(&header)?;
    for (id, inst) in dataset.instances.iter().enumerate() {
        let mut row = vec![id.to_string(), inst.sign.to_string(), inst.seed.to_string()];
        row.extend(inst.h.iter().map(|v| format!("{v:.16e}")));
        row.extend(inst.couplings.iter().map(|(_, v)| format!("{v:.16e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::fidelity;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normalisation_endpoints() {
        let (f, r) = normalize_columns(&[vec![0.0], vec![5.0], vec![10.0]]).unwrap();
        assert_eq!(f, vec![vec![-1.0], vec![0.0], vec![1.0]]);
        assert_eq!(r, vec![(0.0, 10.0)]);
        let (g, _) = normalize_columns(&f).unwrap();
        assert_eq!(g, f);
        assert!(normalize_columns(&[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn iris_shape() {
        let d = iris();
        assert_eq!(d.features.len(), 150);
        assert!(d.features.iter().all(|r| r.len() == 4));
        for name in ["setosa", "versicolor", "virginica"] {
            assert_eq!(d.labels.iter().filter(|l| *l == name).count(), 50);
        }
        for k in 0..4 {
            let col: Vec<f64> = d.features.iter().map(|r| r[k]).collect();
            assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), -1.0);
            assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn classical_parse_errors() {
        assert_eq!(load_and_normalize("a,b,label\n".as_bytes()), Err(Error::EmptyDataset));
        assert!(load_and_normalize("a,label\n1,x\nfoo,y\n".as_bytes()).is_err());
    }

    #[test]
    fn coupling_ranges_and_determinism() {
        let p = sample_couplings(CouplingSign::Positive, 3);
        let n = sample_couplings(CouplingSign::Negative, 3);
        assert_eq!(p.couplings.len(), 6);
        assert!(p.couplings.iter().all(|(_, v)| *v > 0.0 && *v < 1.0));
        assert!(n.couplings.iter().all(|(_, v)| *v < 0.0 && *v > -1.0));
        assert_eq!(p, sample_couplings(CouplingSign::Positive, 3));
        assert_eq!(p.h, vec![1.0; 4]);
    }

    #[test]
    fn zero_coupling_stays_plus() {
        let mut inst = sample_couplings(CouplingSign::Positive, 1);
        for c in &mut inst.couplings {
            c.1 = 0.0;
        }
        let steps: Vec<usize> = (0..=4000).step_by(250).collect();
        let snaps = trotter_evolve::<f64>(&inst, 40.0, 0.01, &steps).unwrap();
        let plus = plus_state(4).unwrap();
        for (_, s) in &snaps {
            assert!(fidelity(s, &plus).unwrap() >= 1.0 - 1e-10);
            assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn trotter_rejects_bad_steps() {
        let inst = sample_couplings(CouplingSign::Negative, 1);
        assert!(trotter_evolve::<f64>(&inst, 1.0, 0.3, &[1]).is_err());
        assert!(trotter_evolve::<f64>(&inst, 1.0, 0.1, &[11]).is_err());
    }

    #[test]
    fn state_file_round_trip() {
        let ds = generate_ising(2, 9, 1.0, 0.01, &[50, 100]).unwrap();
        assert_eq!(ds.instances.len(), 4);
        let mut buf = Vec::new();
        serialize_states(&ds, &mut buf).unwrap();
        let recs = deserialize_states(buf.as_slice()).unwrap();
        assert_eq!(recs.len(), 8);
        let (states, labels) = snapshot_of(&recs, 100).unwrap();
        assert_eq!(states, ds.snapshots[&100]);
        assert_eq!(labels, ds.labels());
        assert!(snapshot_of(&recs, 7).is_err());
    }

    #[test]
    fn state_file_errors() {
        let hdr = STATE_HEADER.join(",");
        assert_eq!(deserialize_states(format!("{hdr}\n").as_bytes()), Err(Error::EmptyDataset));
        let bad = format!("{hdr}\n0,positive,1,0,1.0\n");
        assert!(matches!(deserialize_states(bad.as_bytes()), Err(Error::Data(_))));
        let gap = format!("{hdr}\n0,positive,1,0,1.0,0.0\n0,positive,1,2,0.0,0.0\n");
        assert!(matches!(deserialize_states(gap.as_bytes()), Err(Error::Data(_))));
        assert!(deserialize_states("a,b\n1,2\n".as_bytes()).is_err());
    }
}
