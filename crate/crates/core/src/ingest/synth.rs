//! Seeded generator of schema-valid collision and casualty tables with
//! planted logistic effects.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{CasualtyRow, CollisionRecord};
use super::schema::Field;
use crate::math::sigmoid;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub field: Field,
    pub codes: Vec<i64>,
}

impl Condition {
    fn holds(&self, r: &CollisionRecord) -> bool {
        self.codes.contains(&r.get(self.field))
    }
}

/// One additive term of a logistic linear predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// `coef * (value - center) / scale`
    Linear {
        field: Field,
        coef: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Indicator {
        field: Field,
        codes: Vec<i64>,
        coef: f64,
    },
    Interaction {
        first: Condition,
        second: Condition,
        coef: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Term {
    fn eval(&self, r: &CollisionRecord) -> f64 {
        match self {
            Term::Linear { field, coef, center, scale } => coef * (r.get(*field) as f64 - center) / scale,
            Term::Indicator { field, codes, coef } => {
                if codes.contains(&r.get(*field)) {
                    *coef
                } else {
                    0.0
                }
            }
            Term::Interaction { first, second, coef } => {
                if first.holds(r) && second.holds(r) {
                    *coef
                } else {
                    0.0
                }
            }
        }
    }

    pub fn fields(&self) -> Vec<Field> {
        match self {
            Term::Linear { field, .. } | Term::Indicator { field, .. } => vec![*field],
            Term::Interaction { first, second, .. } => vec![first.field, second.field],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub intercept: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
}

impl LogitModel {
    pub fn probability(&self, r: &CollisionRecord) -> f64 {
        sigmoid(self.intercept + self.terms.iter().map(|t| t.eval(r)).sum::<f64>())
    }
}

/// Logistic models for the two planted outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    pub severity: LogitModel,
    pub pedestrian: LogitModel,
}

impl Default for EffectSpec {
    /// Severity rises with speed and darkness; pedestrian involvement falls
    /// with speed and vehicle count.
    fn default() -> Self {
        EffectSpec {
            severity: LogitModel {
                intercept: -3.0,
                terms: vec![
                    Term::Linear { field: Field::SpeedLimit, coef: 1.3, center: 30.0, scale: 10.0 },
                    Term::Indicator { field: Field::LightConditions, codes: vec![4, 5, 6, 7], coef: 2.6 },
                ],
            },
            pedestrian: LogitModel {
                intercept: -0.8,
                terms: vec![
                    Term::Linear { field: Field::SpeedLimit, coef: -0.9, center: 30.0, scale: 10.0 },
                    Term::Linear { field: Field::NumberOfVehicles, coef: -1.2, center: 1.0, scale: 1.0 },
                    Term::Indicator { field: Field::JunctionDetail, codes: vec![0], coef: 0.6 },
                ],
            },
        }
    }
}

impl EffectSpec {
    pub fn null(severity_intercept: f64, pedestrian_intercept: f64) -> Self {
        EffectSpec {
            severity: LogitModel { intercept: severity_intercept, terms: vec![] },
            pedestrian: LogitModel { intercept: pedestrian_intercept, terms: vec![] },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub effects: EffectSpec,
    /// Share of coded cells overwritten with -1 or 99.
    pub invalid_fraction: f64,
    /// Coordinates are drawn uniformly from `[0, extent]²`.
    pub extent: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { effects: EffectSpec::default(), invalid_fraction: 0.05, extent: 100.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub collisions: Vec<CollisionRecord>,
    pub casualties: Vec<CasualtyRow>,
    /// True severity probability per collision, from the clean values.
    pub severity_prob: Vec<f64>,
    pub pedestrian_prob: Vec<f64>,
    pub severe: Vec<u8>,
    pub pedestrian: Vec<u8>,
}

fn marginal(field: Field) -> (&'static [i64], &'static [f64]) {
    use Field::*;
    match field {
        NumberOfVehicles => (&[1, 2, 3, 4, 5, 6], &[30.0, 55.0, 10.0, 3.5, 1.0, 0.5]),
        NumberOfCasualties => (&[1, 2, 3, 4, 5], &[75.0, 17.0, 5.0, 2.0, 1.0]),
        DayOfWeek => (&[1, 2, 3, 4, 5, 6, 7], &[12.0, 14.0, 15.0, 15.0, 15.0, 16.0, 13.0]),
        NearestHour => (
            &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24],
            &[
                1.5, 1.0, 0.8, 0.6, 0.6, 1.0, 2.0, 4.0, 6.0, 5.0, 5.0, 5.5, 6.0, 6.0, 6.5, 7.5, 8.0, 8.5, 7.5, 6.0,
                4.5, 3.5, 3.0, 2.0, 1.0,
            ],
        ),
        RoadType => (&[1, 2, 3, 6, 7, 9], &[7.0, 2.0, 15.0, 72.0, 2.0, 2.0]),
        SpeedLimit => (&[20, 30, 40, 50, 60, 70], &[25.0, 45.0, 8.0, 6.0, 10.0, 6.0]),
        JunctionControl => (&[1, 2, 3, 4], &[1.0, 20.0, 3.0, 76.0]),
        JunctionDetail => (&[0, 1, 2, 3, 5, 6, 7, 8, 9], &[40.0, 8.0, 2.0, 30.0, 2.0, 10.0, 2.0, 3.0, 3.0]),
        LightConditions => (&[1, 4, 5, 6, 7], &[70.0, 20.0, 1.0, 7.0, 2.0]),
        WeatherConditions => (&[1, 2, 3, 4, 5, 6, 7, 8, 9], &[80.0, 12.0, 0.5, 1.5, 1.5, 0.2, 0.8, 2.0, 1.5]),
        RoadSurfaceConditions => (&[1, 2, 3, 4, 5], &[70.0, 27.0, 1.0, 1.5, 0.5]),
        PoliceAttendance => (&[1, 2, 3], &[55.0, 35.0, 10.0]),
        HumanControlCrossing => (&[0, 1, 2], &[98.0, 1.0, 1.0]),
    }
}

fn draw<R: Rng>(rng: &mut R, field: Field) -> i64 {
    let (codes, weights) = marginal(field);
    let dist = WeightedIndex::new(weights).expect("static weights are positive");
    codes[dist.sample(rng)]
}

/// Generates `n` collisions with casualties. Identical `(n, seed, spec)`
/// always yields identical output.
pub fn generate_synthetic(n: usize, seed: u64, spec: &SynthSpec) -> SyntheticData {
    let rows: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, rng::label::SYNTH, i as u64);
            let mut rec = CollisionRecord::new(format!("2023SYN{:07}", i + 1));
            for f in Field::ALL {
                rec.set(f, draw(&mut rng, f));
            }
            rec.x = Some(rng.gen::<f64>() * spec.extent);
            rec.y = Some(rng.gen::<f64>() * spec.extent);

            let p_sev = spec.effects.severity.probability(&rec);
            let p_ped = spec.effects.pedestrian.probability(&rec);
            let severe = u8::from(rng.gen::<f64>() < p_sev);
            let pedestrian = u8::from(rng.gen::<f64>() < p_ped);

            let n_cas = rec.number_of_casualties().max(1) as usize;
            let casualties: Vec<CasualtyRow> = (0..n_cas)
                .map(|k| {
                    let casualty_severity = match (severe, k) {
                        (1, 0) => {
                            if rng.gen::<f64>() < 0.06 {
                                1
                            } else {
                                2
                            }
                        }
                        (1, _) if rng.gen::<f64>() < 0.3 => 2,
                        _ => 3,
                    };
                    let casualty_class = if pedestrian == 1 && k == 0 {
                        3
                    } else if rng.gen::<f64>() < 0.7 {
                        1
                    } else {
                        2
                    };
                    CasualtyRow { collision_id: rec.collision_id.clone(), casualty_class, casualty_severity }
                })
                .collect();

            // Corruption happens after labels are drawn from the clean values.
            for f in Field::ALL {
                if matches!(f, Field::NumberOfVehicles | Field::NumberOfCasualties) {
                    continue;
                }
                if rng.gen::<f64>() < spec.invalid_fraction {
                    rec.set(f, if rng.gen::<bool>() { -1 } else { 99 });
                }
            }
            (rec, casualties, p_sev, p_ped, severe, pedestrian)
        })
        .collect();

    let mut data = SyntheticData {
        collisions: Vec::with_capacity(n),
        casualties: Vec::new(),
        severity_prob: Vec::with_capacity(n),
        pedestrian_prob: Vec::with_capacity(n),
        severe: Vec::with_capacity(n),
        pedestrian: Vec::with_capacity(n),
    };
    for (rec, cas, ps, pp, s, p) in rows {
        data.collisions.push(rec);
        data.casualties.extend(cas);
        data.severity_prob.push(ps);
        data.pedestrian_prob.push(pp);
        data.severe.push(s);
        data.pedestrian.push(p);
    }
    data
}
