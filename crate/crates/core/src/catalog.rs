//! Seed difference sets, the `.ds` line format, catalog files and report rendering.
//!
//! A `.ds` line is `<group-spec> | <word>, <word>, ...`; blank lines and lines
//! starting with `#` are skipped. A catalog line adds a name and provenance in
//! front and an optional `sdp=yes|no` field at the end:
//! `C8xC2-paper | paper | C8xC2 | 1, x, x^2, x^5, y, x^6*y | sdp=yes`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{develop, has_sdp, verify_difference_set, DifferenceSet};
use crate::error::{Error, Result};
use crate::group::parse_group_at;
use crate::product::{product_ds, GroupingFactor, ProductSpec};
use crate::survey::Survey;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    /// Stated in the source literature.
    Paper,
    /// Computed here from other entries.
    Derived,
    User,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Paper => "paper",
            Provenance::Derived => "derived",
            Provenance::User => "user",
        })
    }
}

impl FromStr for Provenance {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "paper" => Ok(Provenance::Paper),
            "derived" => Ok(Provenance::Derived),
            "user" => Ok(Provenance::User),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub group_spec: String,
    pub members: Vec<String>,
    pub provenance: Provenance,
    /// Result of the triple scan run when the entry was loaded.
    pub sdp_status: bool,
    ds: DifferenceSet,
}

impl CatalogEntry {
    pub fn difference_set(&self) -> &DifferenceSet {
        &self.ds
    }

    /// Parse and verify; every failure is reported as catalog corruption.
    pub fn load(name: &str, group_spec: &str, members: &[String], provenance: Provenance) -> Result<CatalogEntry> {
        let corrupt = |e: Error| Error::CatalogCorruption {
            entry: name.to_string(),
            message: e.to_string(),
        };
        let line = format!("{group_spec} | {}", members.join(", "));
        let ds = parse_ds_line(&line, 1).map_err(corrupt)?;
        Ok(CatalogEntry {
            name: name.to_string(),
            group_spec: group_spec.to_string(),
            members: members.to_vec(),
            provenance,
            sdp_status: has_sdp(&develop(&ds)).holds,
            ds,
        })
    }

    fn derived_product(name: &str, a: &CatalogEntry, b: &CatalogEntry) -> Result<CatalogEntry> {
        let ds = product_ds(&ProductSpec::direct(&a.ds, &b.ds))?;
        CatalogEntry::load(name, ds.group().label(), &ds.member_words(), Provenance::Derived)
    }
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// The seed sets. Each is re-verified here; nothing is trusted from storage.
pub fn builtin_catalog() -> Result<Vec<CatalogEntry>> {
    let c4 = CatalogEntry::load("C4-trivial", "C4", &words(&["1"]), Provenance::Paper)?;
    let c2c2 = CatalogEntry::load("C2xC2-trivial", "C2xC2", &words(&["1"]), Provenance::Paper)?;
    let c8c2 = CatalogEntry::load(
        "C8xC2-paper",
        "C8xC2",
        &words(&["1", "x", "x^2", "x^5", "y", "x^6*y"]),
        Provenance::Paper,
    )?;
    let c2_4 = CatalogEntry::derived_product("C2^4-product", &c2c2, &c2c2)?;
    let c4c4 = CatalogEntry::derived_product("C4xC4-product", &c4, &c4)?;
    Ok(vec![c4, c2c2, c8c2, c2_4, c4c4])
}

pub fn find_entry<'a>(catalog: &'a [CatalogEntry], name: &str) -> Option<&'a CatalogEntry> {
    catalog.iter().find(|e| e.name == name)
}

/// Groups of order 16 known to carry no difference set with the property:
/// `C16` has no (16,6,2) difference set at all (exhaustive search), and the
/// literature rules out `C8xC8` at order 64.
pub const KNOWN_WITHOUT_SDP: [(&str, usize, Provenance); 2] =
    [("C16", 16, Provenance::Derived), ("C8xC8", 64, Provenance::Paper)];

/// Factors for [`crate::product::grouping_report`]: catalog groups with their
/// live status, plus [`KNOWN_WITHOUT_SDP`].
pub fn grouping_factors(catalog: &[CatalogEntry]) -> Vec<GroupingFactor> {
    let mut out: Vec<GroupingFactor> = Vec::new();
    for e in catalog {
        let label = e.ds.group().label().to_string();
        match out.iter_mut().find(|f| f.name == label) {
            Some(f) => f.carries_sdp |= e.sdp_status,
            None => out.push(GroupingFactor {
                name: label,
                order: e.ds.group().order(),
                carries_sdp: e.sdp_status,
            }),
        }
    }
    for (name, order, _) in KNOWN_WITHOUT_SDP {
        if !out.iter().any(|f| f.name == name) {
            out.push(GroupingFactor {
                name: name.to_string(),
                order,
                carries_sdp: false,
            });
        }
    }
    out
}

/// Split `text` at top-level `sep`, returning `(column offset, piece)`.
fn fields(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth = 0i32;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &text[start..]));
    out
}

fn lead(s: &str) -> usize {
    s.len() - s.trim_start().len()
}

fn parse_ds_fields(group: (usize, &str), list: (usize, &str), line: usize) -> Result<DifferenceSet> {
    let (gcol, gtext) = group;
    if gtext.trim().is_empty() {
        return Err(Error::parse(line, gcol + 1, "missing group spec"));
    }
    let g = parse_group_at(gtext.trim(), line, gcol + 1 + lead(gtext))?;
    let (lcol, ltext) = list;
    let mut members = Vec::new();
    for (off, word) in fields(ltext, ',') {
        let col = lcol + off + 1 + lead(word);
        if word.trim().is_empty() {
            return Err(Error::parse(line, col, "empty element word"));
        }
        let e = g.parse_word(word.trim(), line, col)?;
        if members.contains(&e) {
            return Err(Error::parse(line, col, format!("element `{}` listed twice", word.trim())));
        }
        members.push(e);
    }
    verify_difference_set(&g, &members)
}

/// Parse one `<group-spec> | <words>` line (`line` is its 1-based number).
pub fn parse_ds_line(text: &str, line: usize) -> Result<DifferenceSet> {
    let parts = fields(text, '|');
    if parts.len() != 2 {
        let col = parts.get(1).map_or(text.len() + 1, |p| p.0 + p.1.len() + 1);
        return Err(Error::parse(line, col, "expected `<group> | <element>, <element>, ...`"));
    }
    parse_ds_fields(parts[0], parts[1], line)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

pub fn parse_ds_file(text: &str) -> Result<Vec<DifferenceSet>> {
    content_lines(text).map(|(n, l)| parse_ds_line(l, n)).collect()
}

pub fn format_ds_line(ds: &DifferenceSet) -> String {
    format!("{} | {}", ds.group().label(), ds.member_words().join(", "))
}

pub fn format_catalog(entries: &[CatalogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!(
            "{} | {} | {} | {} | sdp={}\n",
            e.name,
            e.provenance,
            e.group_spec,
            e.members.join(", "),
            if e.sdp_status { "yes" } else { "no" }
        ));
    }
    out
}

/// Parse a catalog file. A stored `sdp=` field is compared with the live
/// check and a mismatch is corruption; omitting it is fine.
pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let parts = fields(l, '|');
        if !(4..=5).contains(&parts.len()) {
            return Err(Error::parse(line, 1, "expected `name | provenance | group | elements [| sdp=yes|no]`"));
        }
        let name = parts[0].1.trim();
        let provenance: Provenance = parts[1]
            .1
            .parse()
            .map_err(|m| Error::parse(line, parts[1].0 + 1 + lead(parts[1].1), m))?;
        parse_ds_fields(parts[2], parts[3], line).map_err(|e| match e {
            Error::Parse { .. } | Error::UnknownGenerator { .. } => e,
            other => Error::CatalogCorruption {
                entry: name.to_string(),
                message: other.to_string(),
            },
        })?;
        let members: Vec<String> = fields(parts[3].1, ',').iter().map(|(_, w)| w.trim().to_string()).collect();
        let entry = CatalogEntry::load(name, parts[2].1.trim(), &members, provenance)?;
        if let Some(&(col, stored)) = parts.get(4) {
            let claimed = match stored.trim() {
                "sdp=yes" => true,
                "sdp=no" => false,
                other => return Err(Error::parse(line, col + 1, format!("bad status field `{other}`"))),
            };
            if claimed != entry.sdp_status {
                return Err(Error::CatalogCorruption {
                    entry: name.to_string(),
                    message: format!("stored sdp={} disagrees with the live check", if claimed { "yes" } else { "no" }),
                });
            }
        }
        out.push(entry);
    }
    Ok(out)
}

/// One CSV row of a classification report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class_id: usize,
    pub size: usize,
    pub two_rank: usize,
    pub sdp: bool,
    pub representative_hom_spec: String,
}

/// A rendered-ready classification: CSV rows plus, per class, the distinct
/// images of each acting generator.
#[derive(Clone, Debug, Default)]
pub struct TableReport {
    /// Free-form context lines (inputs and their provenance), printed as `#` comments.
    pub header: Vec<String>,
    pub rows: Vec<ClassRow>,
    pub generator_images: Vec<Vec<(String, Vec<String>)>>,
    pub unresolved: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

pub fn table_report(survey: &Survey, header: Vec<String>) -> TableReport {
    TableReport {
        header,
        rows: survey
            .classes
            .iter()
            .map(|c| ClassRow {
                class_id: c.id,
                size: c.members.len(),
                two_rank: c.two_rank,
                sdp: c.sdp,
                representative_hom_spec: survey.designs[c.representative].phi.spec(),
            })
            .collect(),
        generator_images: survey.classes.iter().map(|c| survey.generator_images(c)).collect(),
        unresolved: survey.unresolved.len(),
    }
}

pub fn emit_report(report: &TableReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if report.rows.is_empty() {
                w.write_record(["class_id", "size", "two_rank", "sdp", "representative_hom_spec"])
                    .map_err(|e| Error::Internal(e.to_string()))?;
            }
            for row in &report.rows {
                w.serialize(row).map_err(|e| Error::Internal(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
        }
        ReportFormat::Text => {
            let mut out = String::new();
            for h in &report.header {
                out.push_str(&format!("# {h}\n"));
            }
            for (k, row) in report.rows.iter().enumerate() {
                out.push_str(&format!(
                    "Design {} | Rank: {} | Total Designs: {} | SDP: {}\n",
                    row.class_id,
                    row.two_rank,
                    row.size,
                    if row.sdp { "yes" } else { "no" }
                ));
                let images = report.generator_images.get(k).map(Vec::as_slice).unwrap_or(&[]);
                let mut product = 1usize;
                for (gen, list) in images {
                    product *= list.len();
                    for (i, img) in list.iter().enumerate() {
                        let tag = if i == 0 { format!("{gen} ->") } else { String::new() };
                        out.push_str(&format!("  {tag:<5} {img}\n"));
                    }
                }
                if !images.is_empty() && product != row.size {
                    out.push_str(&format!("  combinations: {} of {product}\n", row.size));
                }
            }
            if report.unresolved > 0 {
                out.push_str(&format!("# unresolved pairs: {}\n", report.unresolved));
            }
            Ok(out)
        }
    }
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ClassRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::parse(i + 2, 1, e.to_string())))
        .collect()
}

/// Witness sidecar: for each member, the permutations carrying the class
/// representative onto it (`rep[i][j] = member[rows[i]][cols[j]]`), 0-based.
pub fn emit_witnesses(survey: &Survey) -> String {
    let mut out = String::from("# rep[i][j] = member[rows[i]][cols[j]]\n");
    for c in &survey.classes {
        for (m, w) in &c.witnesses {
            out.push_str(&format!(
                "class {} representative {} member {} phi {}\n",
                c.id,
                c.representative,
                m,
                survey.designs[*m].phi.spec()
            ));
            out.push_str(&format!("rows {}\n", join(&w.row_perm)));
            out.push_str(&format!("cols {}\n", join(&w.col_perm)));
        }
    }
    out
}

fn join(p: &[usize]) -> String {
    p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::enumerate_difference_sets;
    use crate::group::parse_group_spec;

    #[test]
    fn builtins_verify_and_carry_status() {
        let cat = builtin_catalog().unwrap();
        let names: Vec<&str> = cat.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["C4-trivial", "C2xC2-trivial", "C8xC2-paper", "C2^4-product", "C4xC4-product"]);
        for e in &cat {
            assert!(e.sdp_status, "{}", e.name);
        }
        assert_eq!(find_entry(&cat, "C8xC2-paper").unwrap().difference_set().params(), (16, 6, 2));
        assert_eq!(find_entry(&cat, "C4xC4-product").unwrap().provenance, Provenance::Derived);
    }

    #[test]
    fn catalog_text_round_trips() {
        let cat = builtin_catalog().unwrap();
        let text = format_catalog(&cat);
        let back = parse_catalog(&text).unwrap();
        assert_eq!(format_catalog(&back), text);
        for (a, b) in cat.iter().zip(&back) {
            assert_eq!(a.difference_set(), b.difference_set());
        }
        // dropping the stored status changes nothing
        let stripped: String = text.lines().map(|l| l.rsplit_once(" | ").unwrap().0.to_string() + "\n").collect();
        assert_eq!(format_catalog(&parse_catalog(&stripped).unwrap()), text);
    }

    #[test]
    fn wrong_stored_status_is_corruption() {
        let err = parse_catalog("t | user | C4 | 1 | sdp=no\n").unwrap_err();
        assert!(matches!(err, Error::CatalogCorruption { ref entry, .. } if entry == "t"));
        let err = parse_catalog("bad | user | C4 | 1, x\n").unwrap_err();
        assert!(matches!(err, Error::CatalogCorruption { .. }));
    }

    #[test]
    fn ds_errors_carry_positions() {
        match parse_ds_line("C8xC2 | 1, q", 3) {
            Err(Error::UnknownGenerator { name, line, column }) => {
                assert_eq!((name.as_str(), line), ("q", 3));
                assert_eq!(column, 12);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_ds_line("C8xC2 | 1, x, x", 1), Err(Error::Parse { column: 15, .. })));
        assert!(matches!(parse_ds_line("C8xC2 1, x", 1), Err(Error::Parse { .. })));
        assert!(matches!(parse_ds_line("C8xC2 | 1, x", 1), Err(Error::NotDifferenceSet { .. })));
        let err = parse_ds_file("# seeds\n\nC4 | 1\nC4 | 1, z\n").unwrap_err();
        assert!(matches!(err, Error::UnknownGenerator { line: 4, .. }));
    }

    #[test]
    fn ds_lines_round_trip_for_every_set() {
        let g = parse_group_spec("C4xC4").unwrap();
        let all = enumerate_difference_sets(&g, 6).unwrap();
        assert!(!all.is_empty());
        let text: String = all.iter().map(|d| format_ds_line(d) + "\n").collect();
        assert_eq!(parse_ds_file(&text).unwrap(), all);
    }

    fn sample_rows() -> Vec<ClassRow> {
        vec![
            ClassRow { class_id: 1, size: 16, two_rank: 10, sdp: true, representative_hom_spec: "x: z->z, w->w".into() },
            ClassRow { class_id: 2, size: 8, two_rank: 11, sdp: false, representative_hom_spec: "x: z->z^3 / y: 1".into() },
        ]
    }

    #[test]
    fn csv_report_round_trips() {
        let report = TableReport { rows: sample_rows(), ..TableReport::default() };
        let csv = emit_report(&report, ReportFormat::Csv).unwrap();
        assert!(csv.starts_with("class_id,size,two_rank,sdp,representative_hom_spec\n"));
        assert_eq!(parse_report_csv(&csv).unwrap(), sample_rows());
        let empty = emit_report(&TableReport::default(), ReportFormat::Csv).unwrap();
        assert_eq!(empty, "class_id,size,two_rank,sdp,representative_hom_spec\n");
        assert!(parse_report_csv(&empty).unwrap().is_empty());
    }

    #[test]
    fn text_report_lists_classes() {
        let report = TableReport {
            header: vec!["N: C8xC2-paper (paper)".into()],
            rows: sample_rows(),
            generator_images: vec![vec![("x".into(), vec!["phi_x(z)=z, phi_x(w)=w".into()])], vec![]],
            unresolved: 0,
        };
        let text = emit_report(&report, ReportFormat::Text).unwrap();
        assert!(text.starts_with("# N: C8xC2-paper (paper)\n"));
        assert!(text.contains("Design 1 | Rank: 10 | Total Designs: 16 | SDP: yes"));
        assert!(text.contains("  x ->  phi_x(z)=z, phi_x(w)=w"));
        assert!(text.contains("combinations: 16 of 1"));
    }

    #[test]
    fn grouping_factors_include_known_negatives() {
        let f = grouping_factors(&builtin_catalog().unwrap());
        let c16 = f.iter().find(|f| f.name == "C16").unwrap();
        assert!(!c16.carries_sdp);
        // the claim behind the C16 entry: no (16,6,2) set exists there at all
        let g = parse_group_spec("C16").unwrap();
        assert!(enumerate_difference_sets(&g, 6).unwrap().is_empty());
        assert!(f.iter().any(|f| f.name == "C8xC8" && !f.carries_sdp));
    }
}
