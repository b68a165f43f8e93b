use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::eval::EvalResult;
use super::tasks::Task;
use crate::error::{Error, Result};
use crate::lightsim::find_condition;

/// One line of the long-form results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub descriptor: String,
    pub normalizer: String,
    pub task: String,
    pub subset_id: usize,
    pub train_cond: String,
    pub test_cond: String,
    pub n_test: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub descriptor: String,
    pub normalizer: String,
    pub task: String,
    pub class: u16,
    pub accuracy: f64,
}

fn task_rank(name: &str) -> usize {
    Task::ALL.iter().position(|t| t.name() == name).unwrap_or(usize::MAX)
}

fn sort_key(r: &ResultRow) -> (&str, &str, usize, &str, usize) {
    (&r.descriptor, &r.normalizer, task_rank(&r.task), &r.task, r.subset_id)
}

/// Flattens results to one row per subset, ordered by descriptor,
/// normalizer, task and subset id.
pub fn result_rows(results: &[EvalResult]) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = results
        .iter()
        .flat_map(|r| {
            r.per_subset.iter().map(|s| ResultRow {
                descriptor: r.descriptor.clone(),
                normalizer: r.normalizer.clone(),
                task: r.task.name().to_string(),
                subset_id: s.id,
                train_cond: s.train.clone(),
                test_cond: s.test.clone(),
                n_test: s.n_test,
                accuracy: s.accuracy(),
            })
        })
        .collect();
    rows.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
    rows
}

pub fn class_rows(results: &[EvalResult]) -> Vec<ClassRow> {
    let mut rows: Vec<ClassRow> = results
        .iter()
        .flat_map(|r| {
            r.per_class.iter().map(|(class, acc)| ClassRow {
                descriptor: r.descriptor.clone(),
                normalizer: r.normalizer.clone(),
                task: r.task.name().to_string(),
                class: *class,
                accuracy: *acc,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.descriptor, &a.normalizer, task_rank(&a.task), a.class).cmp(&(
            &b.descriptor,
            &b.normalizer,
            task_rank(&b.task),
            b.class,
        ))
    });
    rows
}

pub fn write_csv<T: Serialize>(rows: &[T], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results_csv(r: impl Read) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Percent average and minimum, as "75.00 (50.00)".
pub fn format_avg_min(avg: f64, min: f64) -> String {
    format!("{:.2} ({:.2})", 100.0 * avg, 100.0 * min)
}

/// Per (descriptor, normalizer, task): mean and minimum subset accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryCell {
    pub avg: f64,
    pub min: f64,
    pub subsets: usize,
}

pub type Summary = BTreeMap<(String, String), BTreeMap<usize, SummaryCell>>;

pub fn summarize(rows: &[ResultRow]) -> Result<Summary> {
    let mut acc: BTreeMap<(String, String), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        let task: Task = r.task.parse()?;
        let rank = task_rank(task.name());
        acc.entry((r.descriptor.clone(), r.normalizer.clone()))
            .or_default()
            .entry(rank)
            .or_default()
            .push(r.accuracy);
    }
    Ok(acc
        .into_iter()
        .map(|(key, tasks)| {
            let cells = tasks
                .into_iter()
                .map(|(t, v)| {
                    let cell = SummaryCell {
                        avg: v.iter().sum::<f64>() / v.len() as f64,
                        min: v.iter().copied().fold(f64::INFINITY, f64::min),
                        subsets: v.len(),
                    };
                    (t, cell)
                })
                .collect();
            (key, cells)
        })
        .collect())
}

/// Pivot with one row per descriptor and normalizer, one "avg (min)"
/// column per task. Tasks absent from the input are left blank.
pub fn summary_table(rows: &[ResultRow]) -> Result<String> {
    let summary = summarize(rows)?;
    let mut header = vec!["Descriptor".to_string(), "Normalizer".to_string()];
    header.extend(Task::ALL.iter().map(|t| t.title().to_string()));
    let mut lines = vec![header];
    for ((desc, norm), cells) in &summary {
        let mut line = vec![desc.clone(), norm.clone()];
        for rank in 0..Task::ALL.len() {
            line.push(cells.get(&rank).map(|c| format_avg_min(c.avg, c.min)).unwrap_or_default());
        }
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len()).map(|i| lines.iter().map(|l| l[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (n, line) in lines.iter().enumerate() {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if n == 0 {
            out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
            out.push('\n');
        }
    }
    Ok(out)
}

/// The summary as CSV: descriptor, normalizer, task, subsets, avg, min.
pub fn summary_csv(rows: &[ResultRow], w: impl Write) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        descriptor: &'a str,
        normalizer: &'a str,
        task: &'static str,
        subsets: usize,
        avg: f64,
        min: f64,
    }
    let summary = summarize(rows)?;
    let mut out = Vec::new();
    for ((desc, norm), cells) in &summary {
        for (rank, c) in cells {
            out.push(Line {
                descriptor: desc,
                normalizer: norm,
                task: Task::ALL[*rank].name(),
                subsets: c.subsets,
                avg: c.avg,
                min: c.min,
            });
        }
    }
    write_csv(&out, w)
}

/// Mean accuracy per parameter difference for one descriptor and normalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaCurve {
    pub descriptor: String,
    pub normalizer: String,
    /// (difference, mean accuracy, subsets), by increasing difference.
    pub points: Vec<(f64, f64, usize)>,
}

/// Groups the subsets of `task` by the absolute difference of their
/// lighting parameter and averages the accuracies in each group.
pub fn delta_curves(rows: &[ResultRow], task: Task) -> Result<Vec<DeltaCurve>> {
    if !matches!(task, Task::Intensity | Task::Daylight | Task::Direction) {
        return Err(Error::invalid(format!("task `{task}` has no scalar parameter")));
    }
    let lookup = |id: &str| {
        find_condition(id).ok_or_else(|| Error::Unknown {
            kind: "condition",
            name: id.to_string(),
        })
    };
    let mut groups: BTreeMap<(String, String), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.task == task.name()) {
        let delta = task.delta(&lookup(&r.train_cond)?, &lookup(&r.test_cond)?)?;
        groups
            .entry((r.descriptor.clone(), r.normalizer.clone()))
            .or_default()
            .entry(delta as u64)
            .or_default()
            .push(r.accuracy);
    }
    Ok(groups
        .into_iter()
        .map(|((descriptor, normalizer), buckets)| DeltaCurve {
            descriptor,
            normalizer,
            points: buckets
                .into_iter()
                .map(|(d, v)| (d as f64, v.iter().sum::<f64>() / v.len() as f64, v.len()))
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchkit::eval::SubsetResult;

    fn result(desc: &str, task: Task, correct: &[usize]) -> EvalResult {
        EvalResult {
            descriptor: desc.into(),
            normalizer: "none".into(),
            task,
            per_subset: correct
                .iter()
                .enumerate()
                .map(|(i, c)| SubsetResult {
                    id: i,
                    train: "I100".into(),
                    test: "I50".into(),
                    n_test: 2,
                    correct: *c,
                })
                .collect(),
            per_class: vec![(0, 0.5), (1, 1.0)],
        }
    }

    #[test]
    fn avg_min_format() {
        let r = result("hist-l", Task::Intensity, &[1, 2]);
        assert_eq!(format_avg_min(r.avg(), r.min()), "75.00 (50.00)");
        let table = summary_table(&result_rows(&[r])).unwrap();
        assert!(table.contains("75.00 (50.00)"));
        assert!(table.lines().next().unwrap().contains("Light intensity"));
    }

    #[test]
    fn rows_are_sorted_and_counted() {
        let results = [
            result("lbp-l", Task::Daylight, &[2, 2, 0]),
            result("hist-l", Task::Direction, &[1]),
            result("hist-l", Task::Intensity, &[0, 2]),
        ];
        let rows = result_rows(&results);
        assert_eq!(rows.len(), 6);
        let keys: Vec<(&str, &str, usize)> = rows.iter().map(|r| (&r.descriptor[..], &r.task[..], r.subset_id)).collect();
        assert_eq!(
            keys,
            vec![
                ("hist-l", "intensity", 0),
                ("hist-l", "intensity", 1),
                ("hist-l", "direction", 0),
                ("lbp-l", "daylight", 0),
                ("lbp-l", "daylight", 1),
                ("lbp-l", "daylight", 2),
            ]
        );
        assert_eq!(class_rows(&results).len(), 6);
    }

    #[test]
    fn csv_round_trip() {
        let rows = result_rows(&[result("hist-l", Task::Intensity, &[1, 2])]);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("descriptor,normalizer,task,subset_id,train_cond,test_cond,n_test,accuracy\n"));
        assert_eq!(read_results_csv(&buf[..]).unwrap(), rows);
    }

    fn row(task: &str, train: &str, test: &str, acc: f64) -> ResultRow {
        ResultRow {
            descriptor: "d".into(),
            normalizer: "none".into(),
            task: task.into(),
            subset_id: 0,
            train_cond: train.into(),
            test_cond: test.into(),
            n_test: 8,
            accuracy: acc,
        }
    }

    #[test]
    fn curves_bucket_by_difference() {
        let rows = vec![
            row("intensity", "I100", "I75", 1.0),
            row("intensity", "I50", "I25", 0.5),
            row("intensity", "I25", "I100", 0.0),
            row("daylight", "D40", "D95", 0.25),
        ];
        let c = delta_curves(&rows, Task::Intensity).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].points, vec![(25.0, 0.75, 2), (75.0, 0.0, 1)]);
        let d = delta_curves(&rows, Task::Daylight).unwrap();
        assert_eq!(d[0].points, vec![(5500.0, 0.25, 1)]);
        assert!(delta_curves(&rows, Task::Led).is_err());
    }
}
