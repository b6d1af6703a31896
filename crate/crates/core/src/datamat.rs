//! Trajectories, stacked snapshot matrices and persistency of excitation.
//!
//! A trajectory of length `L` holds `L + 1` states and `L` inputs. Stacking it
//! produces the `(2n + m) × L` matrix whose column `j` is
//! `[x(j); u(j); x(j+1)]`, i.e. rows are partitioned as `X⁻`, `U⁻`, `X⁺`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::subspace::RankPolicy;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Scalar> {
    n: usize,
    m: usize,
    states: Vec<DVector<T>>,
    inputs: Vec<DVector<T>>,
}

impl<T: Scalar> Trajectory<T> {
    /// `states.len()` must be `inputs.len() + 1`, or both lists empty for a
    /// trajectory with no observations yet. `m = 0` encodes an autonomous system.
    pub fn new(n: usize, m: usize, states: Vec<DVector<T>>, inputs: Vec<DVector<T>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("state dimension must be at least 1".into()));
        }
        let empty = states.is_empty() && inputs.is_empty();
        if !empty && states.len() != inputs.len() + 1 {
            return Err(Error::dims("trajectory states (inputs + 1)", inputs.len() + 1, states.len()));
        }
        if let Some(bad) = states.iter().find(|x| x.len() != n) {
            return Err(Error::dims("trajectory state vector", n, bad.len()));
        }
        if let Some(bad) = inputs.iter().find(|u| u.len() != m) {
            return Err(Error::dims("trajectory input vector", m, bad.len()));
        }
        Ok(Self {
            n,
            m,
            states,
            inputs,
        })
    }

    pub fn empty(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, Vec::new(), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_autonomous(&self) -> bool {
        self.m == 0
    }

    /// Number of transitions (= number of inputs).
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn states(&self) -> &[DVector<T>] {
        &self.states
    }

    pub fn inputs(&self) -> &[DVector<T>] {
        &self.inputs
    }

    /// The `k`-th transition `[x(k); u(k); x(k+1)]` (0-based).
    pub fn snapshot(&self, k: usize) -> Option<Snapshot<T>> {
        (k < self.len()).then(|| Snapshot::new(&self.states[k], &self.inputs[k], &self.states[k + 1]))
    }

    pub fn snapshots(&self) -> impl Iterator<Item = Snapshot<T>> + '_ {
        (0..self.len()).map(move |k| self.snapshot(k).expect("index in range"))
    }
}

/// One stacked transition `h = [x(i−1); u(i−1); x(i)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<T: Scalar> {
    n: usize,
    m: usize,
    data: DVector<T>,
}

impl<T: Scalar> Snapshot<T> {
    pub fn new(x_prev: &DVector<T>, u_prev: &DVector<T>, x_next: &DVector<T>) -> Self {
        let (n, m) = (x_prev.len(), u_prev.len());
        let mut data = DVector::zeros(2 * n + m);
        data.rows_mut(0, n).copy_from(x_prev);
        data.rows_mut(n, m).copy_from(u_prev);
        data.rows_mut(n + m, n).copy_from(x_next);
        Self { n, m, data }
    }

    pub fn from_vector(n: usize, m: usize, data: DVector<T>) -> Result<Self> {
        if data.len() != 2 * n + m {
            return Err(Error::dims("snapshot length (2n + m)", 2 * n + m, data.len()));
        }
        Ok(Self { n, m, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<T> {
        &self.data
    }

    pub fn x_prev(&self) -> DVector<T> {
        self.data.rows(0, self.n).into_owned()
    }

    pub fn u_prev(&self) -> DVector<T> {
        self.data.rows(self.n, self.m).into_owned()
    }

    pub fn x_next(&self) -> DVector<T> {
        self.data.rows(self.n + self.m, self.n).into_owned()
    }
}

/// Row-partitioned `[X⁻; U⁻; X⁺]` data matrix with `M = 2n + m` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedData<T: Scalar> {
    n: usize,
    m: usize,
    matrix: DMatrix<T>,
}

impl<T: Scalar> StackedData<T> {
    pub fn stack(traj: &Trajectory<T>) -> Result<Self> {
        if traj.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot stack a trajectory without input samples".into(),
            ));
        }
        let snaps: Vec<_> = traj.snapshots().collect();
        Self::from_snapshots(traj.n(), traj.m(), &snaps)
    }

    pub fn from_snapshots(n: usize, m: usize, snapshots: &[Snapshot<T>]) -> Result<Self> {
        let rows = 2 * n + m;
        if let Some(bad) = snapshots.iter().find(|s| s.len() != rows) {
            return Err(Error::dims("snapshot length (2n + m)", rows, bad.len()));
        }
        let mut matrix = DMatrix::zeros(rows, snapshots.len());
        for (j, s) in snapshots.iter().enumerate() {
            matrix.set_column(j, s.as_vector());
        }
        Ok(Self { n, m, matrix })
    }

    pub fn from_matrix(n: usize, m: usize, matrix: DMatrix<T>) -> Result<Self> {
        if matrix.nrows() != 2 * n + m {
            return Err(Error::dims("stacked data rows (2n + m)", 2 * n + m, matrix.nrows()));
        }
        Ok(Self { n, m, matrix })
    }

    /// Columns of `other` appended after those of `self`.
    pub fn concat(&self, other: &StackedData<T>) -> Result<Self> {
        if (self.n, self.m) != (other.n, other.m) {
            return Err(Error::dims("stacked data concatenation", self.ambient_dim(), other.ambient_dim()));
        }
        let rows = self.ambient_dim();
        let matrix = linalg::hcat(rows, &[&self.matrix, &other.matrix]);
        Ok(Self { matrix, ..*self })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `Λ = n + m`, the rank needed for unique identification.
    pub fn lambda(&self) -> usize {
        self.n + self.m
    }

    /// `M = 2n + m`.
    pub fn ambient_dim(&self) -> usize {
        2 * self.n + self.m
    }

    /// `Ω = n + m + nm − 1`.
    pub fn omega(&self) -> usize {
        (self.n + self.m + self.n * self.m).saturating_sub(1)
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn x_minus(&self) -> DMatrix<T> {
        self.matrix.rows(0, self.n).into_owned()
    }

    pub fn u_minus(&self) -> DMatrix<T> {
        self.matrix.rows(self.n, self.m).into_owned()
    }

    pub fn x_plus(&self) -> DMatrix<T> {
        self.matrix.rows(self.n + self.m, self.n).into_owned()
    }

    /// The `Λ`-row regressor `[X⁻; U⁻]`.
    pub fn regressor(&self) -> DMatrix<T> {
        self.matrix.rows(0, self.lambda()).into_owned()
    }
}

/// Block Hankel matrix of depth `order`; column `j` is `[u(j); …; u(j+order−1)]`.
pub fn hankel<T: Scalar>(inputs: &[DVector<T>], order: usize) -> Result<DMatrix<T>> {
    if order == 0 {
        return Err(Error::InvalidArgument("excitation order must be positive".into()));
    }
    if inputs.len() < order {
        return Err(Error::InvalidArgument(format!(
            "input sequence of length {} is shorter than the excitation order {order}",
            inputs.len()
        )));
    }
    let m = inputs[0].len();
    if let Some(bad) = inputs.iter().find(|u| u.len() != m) {
        return Err(Error::dims("input vector", m, bad.len()));
    }
    let cols = inputs.len() - order + 1;
    let mut h = DMatrix::zeros(m * order, cols);
    for j in 0..cols {
        for d in 0..order {
            h.view_mut((d * m, j), (m, 1)).copy_from(&inputs[j + d]);
        }
    }
    Ok(h)
}

/// Whether `inputs` is persistently exciting of the given order, i.e. its
/// depth-`order` block Hankel matrix has full row rank `m · order`.
pub fn persistency_order<T: Scalar>(inputs: &[DVector<T>], order: usize, policy: &RankPolicy<T>) -> Result<bool> {
    let h = hankel(inputs, order)?;
    if h.nrows() == 0 {
        return Ok(false);
    }
    Ok(linalg::rank(&h, policy) == h.nrows())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    Json,
}

impl TrajectoryFormat {
    /// Chosen from the file extension; anything other than `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

pub fn load_trajectory<T: Scalar>(path: &Path, format: TrajectoryFormat) -> Result<Trajectory<T>> {
    let file = File::open(path)?;
    let origin = path.display().to_string();
    match format {
        TrajectoryFormat::Csv => read_csv(BufReader::new(file), &origin),
        TrajectoryFormat::Json => read_json(BufReader::new(file), &origin),
    }
}

pub fn save_trajectory<T: Scalar>(traj: &Trajectory<T>, path: &Path, format: TrajectoryFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        TrajectoryFormat::Csv => write_csv(traj, &mut w)?,
        TrajectoryFormat::Json => write_json(traj, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// 17 significant digits: enough for a lossless `f64` round trip.
pub(crate) fn fmt_num<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

fn parse_header(header: &csv::StringRecord, origin: &str) -> Result<(usize, usize)> {
    let bad = |message: String| Error::Parse {
        path: origin.to_string(),
        line: 1,
        message,
    };
    let cells: Vec<&str> = header.iter().map(str::trim).collect();
    if cells.first() != Some(&"t") {
        return Err(bad(format!("header must start with `t`, found {:?}", cells.first().unwrap_or(&""))));
    }
    let mut n = 0;
    let mut m = 0;
    for cell in &cells[1..] {
        if m == 0 && *cell == format!("x{}", n + 1) {
            n += 1;
        } else if *cell == format!("u{}", m + 1) {
            m += 1;
        } else {
            return Err(bad(format!(
                "unexpected header column `{cell}`; expected `t, x1..xn, u1..um`"
            )));
        }
    }
    if n == 0 {
        return Err(bad("header declares no state columns".into()));
    }
    Ok((n, m))
}

/// Reads the CSV layout `t, x1..xn, u1..um`; the final row carries the
/// terminal state and leaves the input cells empty.
pub fn read_csv<T: Scalar, R: Read>(reader: R, origin: &str) -> Result<Trajectory<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Format {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    if header.is_empty() || header.iter().all(|c| c.trim().is_empty()) {
        return Err(Error::Format {
            path: origin.to_string(),
            message: "empty file (missing header)".into(),
        });
    }
    let (n, m) = parse_header(header, origin)?;
    let width = 1 + n + m;

    let mut rows: Vec<(u64, Vec<T>, Option<Vec<T>>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        if record.len() != width && record.len() != 1 + n {
            return Err(err(format!("expected {width} cells, found {}", record.len())));
        }
        let cell = |k: usize| -> Result<T> {
            let raw = record.get(k).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .and_then(T::from_f64)
                .ok_or_else(|| err(format!("non-numeric cell `{raw}` in column {}", k + 1)))
        };
        cell(0)?;
        let x = (1..=n).map(cell).collect::<Result<Vec<_>>>()?;
        let input_cells: Vec<&str> = (1 + n..width).map(|k| record.get(k).unwrap_or("")).collect();
        let u = if m > 0 && input_cells.iter().all(|c| c.is_empty()) {
            None
        } else {
            Some((1 + n..width).map(cell).collect::<Result<Vec<_>>>()?)
        };
        rows.push((line, x, u));
    }

    let mut states = Vec::with_capacity(rows.len());
    let mut inputs = Vec::with_capacity(rows.len());
    let last = rows.len().saturating_sub(1);
    for (k, (line, x, u)) in rows.into_iter().enumerate() {
        states.push(DVector::from_vec(x));
        match (k == last, u) {
            (false, Some(u)) => inputs.push(DVector::from_vec(u)),
            (true, None) => {}
            (true, Some(u)) if m == 0 && u.is_empty() => {}
            (true, Some(_)) => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line,
                    message: "final row must leave the input cells empty (terminal state)".into(),
                })
            }
            (false, None) => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line,
                    message: "missing input cells before the final row".into(),
                })
            }
        }
    }
    Trajectory::new(n, m, states, inputs)
}

pub fn write_csv<T: Scalar, W: Write>(traj: &Trajectory<T>, w: &mut W) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.n()).map(|k| format!("x{k}")));
    header.extend((1..=traj.m()).map(|k| format!("u{k}")));
    writeln!(w, "{}", header.join(","))?;
    for (t, x) in traj.states().iter().enumerate() {
        let mut cells = vec![t.to_string()];
        cells.extend(x.iter().map(|&v| fmt_num(v)));
        match traj.inputs().get(t) {
            Some(u) => cells.extend(u.iter().map(|&v| fmt_num(v))),
            None => cells.extend(std::iter::repeat_n(String::new(), traj.m())),
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TrajectoryJson {
    n: usize,
    m: usize,
    states: Vec<Vec<f64>>,
    inputs: Vec<Vec<f64>>,
}

pub fn read_json<T: Scalar, R: Read>(reader: R, origin: &str) -> Result<Trajectory<T>> {
    let raw: TrajectoryJson = serde_json::from_reader(reader).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let convert = |rows: Vec<Vec<f64>>| -> Result<Vec<DVector<T>>> {
        rows.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|v| {
                        T::from_f64(v).ok_or_else(|| Error::Format {
                            path: origin.to_string(),
                            message: format!("value {v} is not representable"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(DVector::from_vec)
            })
            .collect()
    };
    let states = convert(raw.states)?;
    let inputs = convert(raw.inputs)?;
    Trajectory::new(raw.n, raw.m, states, inputs)
}

pub fn write_json<T: Scalar, W: Write>(traj: &Trajectory<T>, w: &mut W) -> Result<()> {
    let rows = |vs: &[DVector<T>]| vs.iter().map(|v| v.iter().map(|x| x.as_f64()).collect()).collect();
    let raw = TrajectoryJson {
        n: traj.n(),
        m: traj.m(),
        states: rows(traj.states()),
        inputs: rows(traj.inputs()),
    };
    serde_json::to_writer_pretty(&mut *w, &raw)?;
    writeln!(w)?;
    Ok(())
}
