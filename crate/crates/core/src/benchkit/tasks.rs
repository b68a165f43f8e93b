use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lightsim::{condition_catalog, ConditionKind, LightCondition};

/// The nine classification tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    NoVariations,
    Intensity,
    Direction,
    Daylight,
    Led,
    DaylightVsLed,
    TempOrDirection,
    TempAndDirection,
    MultiIlluminant,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::NoVariations,
        Task::Intensity,
        Task::Direction,
        Task::Daylight,
        Task::Led,
        Task::DaylightVsLed,
        Task::TempOrDirection,
        Task::TempAndDirection,
        Task::MultiIlluminant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::NoVariations => "no-variations",
            Task::Intensity => "intensity",
            Task::Direction => "direction",
            Task::Daylight => "daylight",
            Task::Led => "led",
            Task::DaylightVsLed => "daylight-vs-led",
            Task::TempOrDirection => "temp-or-direction",
            Task::TempAndDirection => "temp-and-direction",
            Task::MultiIlluminant => "multi-illuminant",
        }
    }

    /// Column heading used in summary tables.
    pub fn title(self) -> &'static str {
        match self {
            Task::NoVariations => "No variations",
            Task::Intensity => "Light intensity",
            Task::Direction => "Light direction",
            Task::Daylight => "Daylight temp.",
            Task::Led => "LED temp.",
            Task::DaylightVsLed => "Daylight vs. LED",
            Task::TempOrDirection => "Temp. or direction",
            Task::TempAndDirection => "Temp. and direction",
            Task::MultiIlluminant => "Multiple illum.",
        }
    }

    /// Whether training and test lighting differ in every subset.
    pub fn varies(self) -> bool {
        self != Task::NoVariations
    }

    /// Difference of the task's scalar lighting parameter between two
    /// conditions: intensity in percent points, temperature in kelvin,
    /// elevation in degrees.
    pub fn delta(self, train: &LightCondition, test: &LightCondition) -> Result<f64> {
        let pair = match self {
            Task::Intensity => (train.intensity * 100.0, test.intensity * 100.0),
            Task::Direction => (train.theta as f64, test.theta as f64),
            Task::Daylight => match (train.cct(), test.cct()) {
                (Some(a), Some(b)) => (a as f64, b as f64),
                _ => return Err(Error::invalid(format!("{train} or {test} has no temperature"))),
            },
            other => return Err(Error::invalid(format!("task `{other}` has no scalar parameter"))),
        };
        Ok((pair.0 - pair.1).abs().round())
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| Error::Unknown {
            kind: "task",
            name: s.to_string(),
        })
    }
}

/// One (train condition, test condition) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Subset {
    pub id: usize,
    pub train: LightCondition,
    pub test: LightCondition,
    /// Parameter difference for tasks with a scalar parameter.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSuite {
    pub task: Task,
    pub subsets: Vec<Subset>,
}

fn ordered_pairs<'a>(
    group: &[&'a LightCondition],
    keep: impl Fn(&LightCondition, &LightCondition) -> bool,
) -> Vec<(&'a LightCondition, &'a LightCondition)> {
    let mut out = Vec::new();
    for a in group {
        for b in group {
            if a.id != b.id && keep(a, b) {
                out.push((*a, *b));
            }
        }
    }
    out
}

/// Builds the nine task suites. Conditions keep the order of `catalog`,
/// which must contain every condition of the built-in catalog.
pub fn build_tasks(catalog: &[LightCondition]) -> Result<Vec<TaskSuite>> {
    let missing: Vec<String> = condition_catalog()
        .into_iter()
        .filter(|c| !catalog.iter().any(|k| k.id == c.id))
        .map(|c| c.id)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Missing(missing));
    }
    let group = |kind: ConditionKind| -> Vec<&LightCondition> { catalog.iter().filter(|c| c.kind == kind).collect() };
    let any = |_: &LightCondition, _: &LightCondition| true;
    let daylight = group(ConditionKind::Daylight);
    let led = group(ConditionKind::Led);
    let mut suites = Vec::with_capacity(9);
    for task in Task::ALL {
        let pairs = match task {
            Task::NoVariations => catalog.iter().map(|c| (c, c)).collect(),
            Task::Intensity => ordered_pairs(&group(ConditionKind::Intensity), any),
            Task::Direction => ordered_pairs(&group(ConditionKind::Direction), any),
            Task::Daylight => ordered_pairs(&daylight, any),
            Task::Led => ordered_pairs(&led, any),
            Task::DaylightVsLed => daylight.iter().flat_map(|d| led.iter().map(move |l| (*d, *l))).collect(),
            Task::TempOrDirection => ordered_pairs(&group(ConditionKind::ColorAndDirection), any),
            Task::TempAndDirection => ordered_pairs(&group(ConditionKind::ColorAndDirection), |a, b| {
                a.illuminant != b.illuminant && a.theta != b.theta
            }),
            Task::MultiIlluminant => ordered_pairs(&group(ConditionKind::MultiIlluminant), any),
        };
        let subsets = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (train, test))| Subset {
                id,
                train: train.clone(),
                test: test.clone(),
                delta: task.delta(train, test).ok(),
            })
            .collect();
        suites.push(TaskSuite { task, subsets });
    }
    Ok(suites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn suites() -> Vec<TaskSuite> {
        build_tasks(&condition_catalog()).unwrap()
    }

    fn has(suite: &TaskSuite, train: &str, test: &str) -> bool {
        suite.subsets.iter().any(|s| s.train.id == train && s.test.id == test)
    }

    #[test]
    fn subset_counts() {
        let counts: Vec<usize> = suites().iter().map(|s| s.subsets.len()).collect();
        assert_eq!(counts, vec![46, 12, 72, 132, 30, 72, 72, 36, 6]);
    }

    #[test]
    fn daylight_pairs_are_ordered() {
        let s = &suites()[3];
        assert!(has(s, "D65", "D95") && has(s, "D95", "D65"));
        assert!(!has(s, "D65", "D65"));
    }

    #[test]
    fn daylight_vs_led_is_one_way() {
        let s = &suites()[5];
        assert!(has(s, "D40", "L27"));
        assert!(!has(s, "L27", "D40"));
    }

    #[test]
    fn temp_and_direction_needs_both_changes() {
        let s = &suites()[7];
        assert!(!has(s, "D65A24", "D65A60"));
        assert!(!has(s, "D65A24", "D95A24"));
        assert!(has(s, "D65A24", "D95A60"));
        assert!(has(&suites()[6], "D65A24", "D65A60"));
    }

    #[test]
    fn incomplete_catalog_names_missing_ids() {
        let cat: Vec<_> = condition_catalog().into_iter().filter(|c| c.id != "D65" && c.id != "I50").collect();
        match build_tasks(&cat) {
            Err(Error::Missing(ids)) => assert_eq!(ids, vec!["I50".to_string(), "D65".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn delta_buckets() {
        let all = suites();
        let deltas = |t: usize| -> BTreeSet<u64> { all[t].subsets.iter().map(|s| s.delta.unwrap() as u64).collect() };
        assert_eq!(deltas(1), BTreeSet::from([25, 50, 75]));
        assert_eq!(deltas(3), (1..=11).map(|i| 500 * i).collect());
        assert!(all[4].subsets.iter().all(|s| s.delta.is_none()));
    }

    #[test]
    fn names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
        }
        assert!("all".parse::<Task>().is_err());
    }
}
