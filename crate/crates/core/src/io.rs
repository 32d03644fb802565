//! JSON and CSV formats for games, behaviors, strategies, tallies and the
//! plot data of the payoff region.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::classical::CorrelatedStrategy;
use crate::equilibrium_opt::RegionSample;
use crate::error::{Error, Result};
use crate::experiment::TallyTable;
use crate::game::{cells, Behavior, GameSpec, PayoffPoint, Player, Table};
use crate::npa::HalfPlane;
use crate::quantum::{ComplexOperator, QuantumState, QuantumStrategy, QubitMeasurement};

type Nested4 = Vec<Vec<Vec<Vec<f64>>>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    prior: Vec<Vec<f64>>,
    #[serde(rename = "uA")]
    u_a: Nested4,
    #[serde(rename = "uB")]
    u_b: Nested4,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorFile {
    p: Nested4,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelatedFile {
    weights: Vec<Vec<f64>>,
}

/// One measurement: a real-plane angle, a Bloch vector, or a fixed outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasurementSpec {
    Angle(f64),
    Bloch { bloch: [f64; 3] },
    Constant { constant: usize },
}

impl MeasurementSpec {
    pub fn to_measurement(&self) -> Result<QubitMeasurement<f64>> {
        match self {
            MeasurementSpec::Angle(t) if t.is_finite() => Ok(QubitMeasurement::from_angle(*t)),
            MeasurementSpec::Angle(_) => Err(Error::NonFinite("measurement angle")),
            MeasurementSpec::Bloch { bloch } => QubitMeasurement::from_bloch(*bloch),
            MeasurementSpec::Constant { constant } if *constant < 2 => Ok(QubitMeasurement::constant(*constant)),
            MeasurementSpec::Constant { constant } => Err(Error::InvalidMeasurement(format!(
                "constant outcome must be 0 or 1, got {constant}"
            ))),
        }
    }

    pub fn from_measurement(m: &QubitMeasurement<f64>) -> Self {
        match m.bloch_vector() {
            Some(bloch) => MeasurementSpec::Bloch { bloch },
            // Π⁰ = I means outcome 0 always
            None => MeasurementSpec::Constant {
                constant: if m.rank() == 2 { 0 } else { 1 },
            },
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyFile {
    state: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "A")]
    alice: Vec<MeasurementSpec>,
    #[serde(rename = "B")]
    bob: Vec<MeasurementSpec>,
}

fn fixed<const N: usize, T: Clone>(v: &[T], what: &str) -> Result<[T; N]> {
    if v.len() != N {
        return Err(Error::IncompleteTable(format!(
            "{what} has {} entries, expected {N}",
            v.len()
        )));
    }
    Ok(std::array::from_fn(|i| v[i].clone()))
}

fn matrix2(v: &[Vec<f64>], what: &str) -> Result<[[f64; 2]; 2]> {
    let rows: [Vec<f64>; 2] = fixed(v, what)?;
    Ok([
        fixed(&rows[0], &format!("{what}[0]"))?,
        fixed(&rows[1], &format!("{what}[1]"))?,
    ])
}

fn table4(v: &Nested4, what: &str) -> Result<Table<f64>> {
    let mut out = [[[[0.0; 2]; 2]; 2]; 2];
    let outer: [Vec<Vec<Vec<f64>>>; 2] = fixed(v, what)?;
    for (xa, by_xb) in outer.iter().enumerate() {
        let by_xb: [Vec<Vec<f64>>; 2] = fixed(by_xb, &format!("{what}[{xa}]"))?;
        for (xb, m) in by_xb.iter().enumerate() {
            out[xa][xb] = matrix2(m, &format!("{what}[{xa}][{xb}]"))?;
        }
    }
    Ok(out)
}

fn nested(t: &Table<f64>) -> Nested4 {
    t.iter()
        .map(|a| a.iter().map(|b| b.iter().map(|c| c.to_vec()).collect()).collect())
        .collect()
}

pub fn game_from_json(s: &str) -> Result<GameSpec<f64>> {
    let f: GameFile = serde_json::from_str(s)?;
    GameSpec::new(
        matrix2(&f.prior, "prior")?,
        table4(&f.u_a, "uA")?,
        table4(&f.u_b, "uB")?,
    )
}

pub fn game_to_json(g: &GameSpec<f64>) -> String {
    let f = GameFile {
        prior: g.prior_table().iter().map(|r| r.to_vec()).collect(),
        u_a: nested(g.utility_table(Player::Alice)),
        u_b: nested(g.utility_table(Player::Bob)),
    };
    serde_json::to_string_pretty(&f).expect("plain data serializes")
}

pub fn behavior_from_json(s: &str) -> Result<Behavior<f64>> {
    let f: BehaviorFile = serde_json::from_str(s)?;
    Behavior::new(table4(&f.p, "p")?)
}

pub fn behavior_to_json(b: &Behavior<f64>) -> String {
    serde_json::to_string_pretty(&BehaviorFile { p: nested(b.table()) }).expect("plain data serializes")
}

pub fn correlated_from_json(s: &str) -> Result<CorrelatedStrategy<f64>> {
    let f: CorrelatedFile = serde_json::from_str(s)?;
    let rows: [Vec<f64>; 4] = fixed(&f.weights, "weights")?;
    let mut w = [[0.0; 4]; 4];
    for (i, r) in rows.iter().enumerate() {
        w[i] = fixed(r, &format!("weights[{i}]"))?;
    }
    CorrelatedStrategy::new(w)
}

pub fn correlated_to_json(c: &CorrelatedStrategy<f64>) -> String {
    let f = CorrelatedFile {
        weights: c.weights().iter().map(|r| r.to_vec()).collect(),
    };
    serde_json::to_string_pretty(&f).expect("plain data serializes")
}

pub fn strategy_from_json(s: &str) -> Result<QuantumStrategy<f64>> {
    let f: StrategyFile = serde_json::from_str(s)?;
    let rows: [Vec<[f64; 2]>; 4] = fixed(&f.state, "state")?;
    let mut entries = Vec::with_capacity(4);
    for (i, r) in rows.iter().enumerate() {
        let r: [[f64; 2]; 4] = fixed(r, &format!("state[{i}]"))?;
        entries.push(r.map(|[re, im]| Complex::new(re, im)).to_vec());
    }
    let state = QuantumState::new(ComplexOperator::from_rows(&entries)?)?;
    let a: [MeasurementSpec; 2] = fixed(&f.alice, "A")?;
    let b: [MeasurementSpec; 2] = fixed(&f.bob, "B")?;
    Ok(QuantumStrategy::new(
        state,
        [a[0].to_measurement()?, a[1].to_measurement()?],
        [b[0].to_measurement()?, b[1].to_measurement()?],
    ))
}

pub fn strategy_to_json(m: &QuantumStrategy<f64>) -> String {
    let rho = m.state.density();
    let f = StrategyFile {
        state: (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        let z = rho.get(i, j);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect(),
        alice: m.alice.iter().map(MeasurementSpec::from_measurement).collect(),
        bob: m.bob.iter().map(MeasurementSpec::from_measurement).collect(),
    };
    serde_json::to_string_pretty(&f).expect("plain data serializes")
}

/// Density operator alone, given as a 4×4 array of [re, im] pairs.
pub fn state_from_json(s: &str) -> Result<QuantumState<f64>> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(s)?;
    let rows: [Vec<[f64; 2]>; 4] = fixed(&rows, "state")?;
    let mut entries = Vec::with_capacity(4);
    for (i, r) in rows.iter().enumerate() {
        let r: [[f64; 2]; 4] = fixed(r, &format!("state[{i}]"))?;
        entries.push(r.map(|[re, im]| Complex::new(re, im)).to_vec());
    }
    QuantumState::new(ComplexOperator::from_rows(&entries)?)
}

pub fn load_game(path: &Path) -> Result<GameSpec<f64>> {
    game_from_json(&fs::read_to_string(path)?)
}

pub fn save_game(path: &Path, g: &GameSpec<f64>) -> Result<()> {
    Ok(fs::write(path, game_to_json(g))?)
}

pub fn load_behavior(path: &Path) -> Result<Behavior<f64>> {
    behavior_from_json(&fs::read_to_string(path)?)
}

pub fn save_behavior(path: &Path, b: &Behavior<f64>) -> Result<()> {
    Ok(fs::write(path, behavior_to_json(b))?)
}

pub fn load_strategy(path: &Path) -> Result<QuantumStrategy<f64>> {
    strategy_from_json(&fs::read_to_string(path)?)
}

pub fn save_strategy(path: &Path, m: &QuantumStrategy<f64>) -> Result<()> {
    Ok(fs::write(path, strategy_to_json(m))?)
}

pub fn load_state(path: &Path) -> Result<QuantumState<f64>> {
    state_from_json(&fs::read_to_string(path)?)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::IncompleteTable(format!("CSV: {other:?}")),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TallyRow {
    #[serde(rename = "xA")]
    xa: usize,
    #[serde(rename = "xB")]
    xb: usize,
    #[serde(rename = "yA")]
    ya: usize,
    #[serde(rename = "yB")]
    yb: usize,
    count: u64,
}

/// `xA,xB,yA,yB,count`, one row per cell.
pub fn write_tally_csv<W: Write>(w: W, t: &TallyTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (xa, xb, ya, yb) in cells() {
        out.serialize(TallyRow {
            xa,
            xb,
            ya,
            yb,
            count: t.counts[xa][xb][ya][yb],
        })
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a tally; cells may appear in any order, missing cells are errors.
pub fn read_tally_csv<R: Read>(r: R, seed: u64) -> Result<TallyTable> {
    let mut t = TallyTable::empty(seed);
    let mut seen = [[[[false; 2]; 2]; 2]; 2];
    for row in csv::Reader::from_reader(r).deserialize::<TallyRow>() {
        let row = row.map_err(csv_err)?;
        if row.xa > 1 || row.xb > 1 || row.ya > 1 || row.yb > 1 {
            return Err(Error::IncompleteTable(format!(
                "tally index out of range: {},{},{},{}",
                row.xa, row.xb, row.ya, row.yb
            )));
        }
        t.counts[row.xa][row.xb][row.ya][row.yb] += row.count;
        seen[row.xa][row.xb][row.ya][row.yb] = true;
    }
    if let Some((xa, xb, ya, yb)) = cells().find(|&(a, b, c, d)| !seen[a][b][c][d]) {
        return Err(Error::IncompleteTable(format!("tally row {xa},{xb},{ya},{yb} missing")));
    }
    t.n_runs = t.counts.iter().flatten().flatten().flatten().sum();
    Ok(t)
}

/// `F_A,F_B`, one vertex per line.
pub fn write_points_csv<W: Write>(w: W, points: &[PayoffPoint<f64>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["F_A", "F_B"]).map_err(csv_err)?;
    for p in points {
        out.serialize((p.alice, p.bob)).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// `wA,wB,FA,FB,objective,converged`.
pub fn write_region_samples_csv<W: Write>(w: W, samples: &[RegionSample<f64>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["wA", "wB", "FA", "FB", "objective", "converged"])
        .map_err(csv_err)?;
    for s in samples {
        out.serialize((s.w_a, s.w_b, s.payoffs.alice, s.payoffs.bob, s.objective, s.converged))
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// `wA,wB,bound,level,gap`.
pub fn write_boundary_csv<W: Write>(w: W, planes: &[HalfPlane<f64>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["wA", "wB", "bound", "level", "gap"])
        .map_err(csv_err)?;
    for h in planes {
        out.serialize((h.w_a, h.w_b, h.bound, h.level.to_string(), h.gap))
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// `label,F_A,F_B`.
pub fn write_markers_csv<W: Write>(w: W, markers: &[(String, PayoffPoint<f64>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["label", "F_A", "F_B"]).map_err(csv_err)?;
    for (label, p) in markers {
        out.serialize((label, p.alice, p.bob)).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::standard_game;
    use crate::quantum::fair_strategy;

    #[test]
    fn game_round_trip() {
        let g = standard_game::<f64>();
        assert_eq!(game_from_json(&game_to_json(&g)).unwrap(), g);
    }

    #[test]
    fn game_errors() {
        let bad_prior = r#"{"prior":[[0.5,0.5],[0.5,0.5]],"uA":[[[[0,0],[0,0]],[[0,0],[0,0]]],[[[0,0],[0,0]],[[0,0],[0,0]]]],"uB":[[[[0,0],[0,0]],[[0,0],[0,0]]],[[[0,0],[0,0]],[[0,0],[0,0]]]]}"#;
        let e = game_from_json(bad_prior).unwrap_err();
        assert!(e.to_string().contains("prior not normalized"), "{e}");
        let short = r#"{"prior":[[0.25,0.25],[0.25,0.25]],"uA":[[[[0,0],[0]],[[0,0],[0,0]]],[[[0,0],[0,0]],[[0,0],[0,0]]]],"uB":[]}"#;
        assert!(game_from_json(short)
            .unwrap_err()
            .to_string()
            .contains("incomplete table"));
        assert!(matches!(game_from_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn strategy_round_trip() {
        let m = fair_strategy::<f64>();
        let back = strategy_from_json(&strategy_to_json(&m)).unwrap();
        assert!(back.state.density().max_abs_diff(m.state.density()) < 1e-15);
        for (x, y) in m.alice.iter().chain(&m.bob).zip(back.alice.iter().chain(&back.bob)) {
            assert!(x.projector(0).max_abs_diff(y.projector(0)) < 1e-15);
        }
        // a second pass is a fixed point
        assert_eq!(
            strategy_to_json(&back),
            strategy_to_json(&strategy_from_json(&strategy_to_json(&back)).unwrap())
        );
    }

    #[test]
    fn measurement_forms() {
        let s = r#"{"state":[[[0.5,0],[0,0],[0,0],[0.5,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0.5,0],[0,0],[0,0],[0.5,0]]],
            "A":[0.0,{"bloch":[1,0,0]}],"B":[{"constant":1},0.39269908169872414]}"#;
        let m = strategy_from_json(s).unwrap();
        assert_eq!(m.bob[0].rank(), 0);
        assert_eq!(
            MeasurementSpec::from_measurement(&m.bob[0]),
            MeasurementSpec::Constant { constant: 1 }
        );
        assert_eq!(
            MeasurementSpec::from_measurement(&QubitMeasurement::constant(0)),
            MeasurementSpec::Constant { constant: 0 }
        );
        assert!(strategy_from_json(&s.replace("{\"constant\":1}", "{\"constant\":2}")).is_err());
    }

    #[test]
    fn tally_csv_round_trip() {
        let mut t = TallyTable::empty(0);
        for (i, (xa, xb, ya, yb)) in cells().enumerate() {
            t.counts[xa][xb][ya][yb] = 10 * i as u64 + 1;
        }
        t.n_runs = t.counts.iter().flatten().flatten().flatten().sum();
        let mut buf = Vec::new();
        write_tally_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("xA,xB,yA,yB,count\n"));
        assert_eq!(read_tally_csv(buf.as_slice(), 0).unwrap(), t);
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(read_tally_csv(truncated.as_bytes(), 0).is_err());
    }
}
